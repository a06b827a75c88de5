#pragma once

#include <array>
#include <vector>

#include "inret/encoders/encoders.hpp"
#include "inret/shapes/sampling.hpp"
#include "inret/tensor/optim.hpp"

namespace inret {

struct EncoderTrainConfig {
  int epochs = 200;
  /// Shapes per optimizer step.
  Index batch_shapes = 8;
  /// Decoder supervision per shape and step (uniform, surface, near-surface).
  SampleCounts points{100, 200, 200};
  AdamConfig optimizer = adamw_config(1e-4, 1e-2);
  double lambda = 1.0;
  DecoderMode mode = DecoderMode::unified;
  FunctionTag decoder_function = FunctionTag::udf;
  std::uint64_t seed = 0;

  void validate() const;
};

/// One training shape: its oracle (ground truth for the decoder) and one INR
/// per implicit function; functions not trained may be null.
struct EncoderTrainItem {
  const ShapeOracle* oracle = nullptr;
  std::array<const InrModel*, 3> inrs{};
};

struct EncoderLogEntry {
  int epoch = 0;
  /// Means over the epoch's steps; loss = reconstruction + lambda * pairwise.
  double loss = 0.0;
  double reconstruction = 0.0;
  double pairwise = 0.0;
  double seconds = 0.0;
};

struct EncoderTrainResult {
  EncoderSet set;
  std::vector<EncoderLogEntry> log;
};

/// Joint training of the sdf/udf/occ encoder pairs and decoder(s):
/// L = sum_i mean|f_phi(x; e_i) - d(x)| + lambda * sum_{i<j} |e_i - e_j|^2.
/// Throws InputError when an item lacks one of the three INRs.
EncoderTrainResult train_encoders(const std::vector<EncoderTrainItem>& items, const EncoderConfig& config,
                                  const EncoderTrainConfig& train);

/// One encoder pair and decoder for INRs of `fn`; the decoder reconstructs
/// `fn` and the pairwise term is absent.
EncoderTrainResult train_encoder_single(const std::vector<EncoderTrainItem>& items, FunctionTag fn,
                                        const EncoderConfig& config, EncoderTrainConfig train);

std::string format_encoder_log(const std::vector<EncoderLogEntry>& log);

}  // namespace inret
