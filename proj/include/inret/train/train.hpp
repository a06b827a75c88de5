#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "inret/field.hpp"
#include "inret/inr/model.hpp"
#include "inret/shapes/sampling.hpp"

namespace inret {

struct TrainConfig {
  ArchTag arch = ArchTag::hash;
  FunctionTag fn = FunctionTag::sdf;
  int epochs = 10;
  SampleCounts counts;
  double learning_rate = 1e-3;
  /// Cosine decay per epoch from learning_rate to this value; 0 keeps the rate constant.
  double final_learning_rate = 0.0;
  Index batch_size = 4096;
  /// Run seed: minibatch shuffling and grid feature draws.
  std::uint64_t seed = 0;
  /// Point sampling seed; INRs of one shape share it so they see the same coordinates.
  std::uint64_t sample_seed = 0;
  /// Seed of the shared MLP initialization.
  std::uint64_t template_seed = 0;
  double feature_init_sd = 0.01;
  InrConfig inr;

  /// Desk defaults: grid INRs 10 epochs at batch 512, MLP-only INRs 40 epochs at batch 4096.
  static TrainConfig desk(ArchTag arch, FunctionTag fn);
  void validate() const;
};

struct TrainLogEntry {
  int epoch = 0;
  double mean_loss = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  InrModel model;
  std::vector<TrainLogEntry> log;
};

/// Initial MLP shared by every INR of an architecture: identical for equal seeds.
Mlp shared_mlp_template(ArchTag arch, const InrConfig& config, std::uint64_t template_seed);

/// Untrained INR: template MLP plus N(0, sd^2) grid features. Octree voxels
/// are allocated from `structure` by `criterion`.
InrModel initial_inr(ArchTag arch, FunctionTag fn, const TrainConfig& cfg, const BatchField& structure,
                     OctreeCriterion criterion);

/// Per-function loss: SDF squared error, UDF/Occ absolute error (means over the batch).
Var<float> inr_loss(FunctionTag fn, const Var<float>& prediction, const Var<float>& target);

/// Overfits one INR to the oracle's implicit function `cfg.fn`.
TrainResult train_inr(const ShapeOracle& oracle, const TrainConfig& cfg);

/// Trains a `cfg.arch` INR against a black-box source field of function `fn`.
/// Surface points come from tracing the source (32 rays per requested point,
/// hits reused across epochs); a source without hits falls back to uniform
/// sampling with a warning.
TrainResult distill_inr(const BatchField& source, FunctionTag fn, const TrainConfig& cfg);
TrainResult distill_inr(const InrModel& source, ArchTag target, TrainConfig cfg);

/// One JSON object per line: {"epoch", "loss", "seconds"}.
std::string format_train_log(const std::vector<TrainLogEntry>& log);

}  // namespace inret
