#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "inret/convert/trace.hpp"
#include "inret/encoders/training.hpp"
#include "inret/retrieval/hierarchical.hpp"
#include "inret/shapes/manifest.hpp"
#include "inret/train/train.hpp"

namespace inret {

/// Artifact layout of one experiment directory.
struct Workspace {
  std::filesystem::path root;

  std::filesystem::path manifest() const { return root / "manifest.txt"; }
  std::filesystem::path inr(ArchTag arch, FunctionTag fn, const std::string& id) const;
  std::filesystem::path distilled(ArchTag source, ArchTag target, FunctionTag fn, const std::string& id) const;
  std::filesystem::path encoder(const std::string& name) const;
  std::filesystem::path store(const std::string& name) const;
  std::filesystem::path report(const std::string& name) const;
};

/// Derived seed for a named purpose; distinct names give independent streams.
std::uint64_t derive_seed(std::uint64_t seed, const std::string& purpose);

/// Desk INR config for one shape: per-shape run seed, a sample seed shared by
/// every INR of the shape and the run seed as MLP template seed.
TrainConfig inr_train_config(ArchTag arch, FunctionTag fn, const std::string& id, std::uint64_t seed);

struct InrJob {
  std::string id;
  double final_loss = 0.0;
  double seconds = 0.0;
};

/// Trains and saves one INR per shape.
std::vector<InrJob> train_inrs(const std::vector<const ShapeDescriptor*>& shapes, ArchTag arch, FunctionTag fn,
                               const Workspace& ws, std::uint64_t seed, int epochs = 0,
                               const std::string& base_dir = "");

struct DistillJob {
  std::string id;
  double final_loss = 0.0;
  /// Mean |target - source| on 10^4 points drawn 1:2:2 around the true shape.
  double mae = 0.0;
  double seconds = 0.0;
};

/// Mean |a - b| over 10^4 points sampled like INR training data for `oracle`.
double field_mae(const BatchField& a, const BatchField& b, const ShapeOracle& oracle, FunctionTag fn,
                 std::uint64_t seed);

/// Distills the saved `source` INRs of each shape into `target` INRs.
std::vector<DistillJob> distill_inrs(const std::vector<const ShapeDescriptor*>& shapes, ArchTag source,
                                     ArchTag target, FunctionTag fn, const Workspace& ws, std::uint64_t seed,
                                     const std::string& base_dir = "");

struct EncoderJob {
  std::string name;
  ArchTag arch = ArchTag::triplane;
  /// One function trains a single encoder pair; three train the joint set.
  std::vector<FunctionTag> functions = {FunctionTag::sdf, FunctionTag::udf, FunctionTag::occ};
  DecoderMode mode = DecoderMode::unified;
  double lambda = 1.0;
  int lattice_n = 16;
  int epochs = 100;
  std::uint64_t seed = 0;

  void validate() const;
  EncoderTrainConfig train_config() const;
};

/// Trains on the train split INRs saved under `ws` and writes the encoder
/// set and its log.
EncoderTrainResult train_encoder_job(const CorpusManifest& manifest, const Workspace& ws, const EncoderJob& job,
                                     const std::string& base_dir = "");

/// Encodes the given INR files; record ids and categories come from `shapes`.
EmbeddingStore encode_inrs(const EncoderSet& set, const std::vector<const ShapeDescriptor*>& shapes,
                           const std::vector<std::filesystem::path>& inr_paths);

struct EvalCell {
  FunctionTag query = FunctionTag::sdf;
  FunctionTag retrieval = FunctionTag::sdf;
  double map1 = 0.0, map5 = 0.0, map10 = 0.0;
  Prf1 prf;
};

/// Test-split records of the query store against train-split records of the
/// retrieval store.
EvalCell evaluate_pair(const CorpusManifest& manifest, const EmbeddingStore& queries,
                       const EmbeddingStore& retrieval);

/// Keeps the records whose id belongs to `split`.
EmbeddingStore split_store(const EmbeddingStore& store, const CorpusManifest& manifest, Split split);

/// Fine and coarse point clouds of an SDF/UDF INR.
CandidateShape point_cloud_candidate(const InrModel& model, const ShapeDescriptor& shape, const ChamferConfig& cfg);

/// Report line header: config, its hash, Chamfer definition and lattice N.
struct ReportContext {
  std::string subcommand;
  std::string config_json;
  std::uint64_t seed = 0;
  int lattice_n = 16;

  std::string config_hash() const;
};

class ReportWriter {
 public:
  explicit ReportWriter(ReportContext context) : context_(std::move(context)) {}
  /// Adds {"metric", "value", ...labels} plus the context fields.
  void metric(const std::string& name, double value, const std::vector<std::pair<std::string, std::string>>& labels = {});
  std::string text() const;
  void save(const std::filesystem::path& path) const;

 private:
  ReportContext context_;
  std::vector<std::string> lines_;
};

/// Fixed-width table with one row per (query fn, retrieval fn).
std::string format_eval_table(const std::vector<EvalCell>& cells);

}  // namespace inret
