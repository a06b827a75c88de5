#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "inret/encoders/weights.hpp"
#include "inret/features/sampler.hpp"
#include "inret/inr/model.hpp"
#include "inret/io/container.hpp"

namespace inret {

inline constexpr Index kEmbeddingWidth = 1024;

/// Shared per-row network (linear + batch norm + ReLU per layer) followed by
/// an elementwise max over the rows of each item.
class MlpEncoder {
 public:
  MlpEncoder() = default;
  MlpEncoder(Index input_width, const std::vector<Index>& hidden, CounterRng& rng);

  Index input_width() const { return weights.front().value.dim(0); }
  Index output_width() const { return weights.back().value.dim(1); }

  /// `rows` stacks B items of `rows_per_item` rows each; returns B x output.
  Var<float> forward(Tape<float>& tape, const RowMatrixXf& rows, Index rows_per_item, bool training);

  std::vector<Parameter<float>*> parameters();

  std::vector<Parameter<float>> weights, biases, gammas, betas;
  std::vector<BatchNormStats<float>> stats;
};

/// log2(D) stride-2 convolutions with channel doubling, each followed by
/// group norm and ReLU, then a linear layer on the 1^3 result.
class Conv3dEncoder {
 public:
  Conv3dEncoder() = default;
  Conv3dEncoder(Index channels, int side, Index output_width, CounterRng& rng);

  int side() const { return side_; }
  Index channels() const { return kernels.front().value.dim(1); }
  Index output_width() const { return out_weight.value.dim(1); }

  /// `volumes` is B x C x D x D x D; returns B x output.
  Var<float> forward(Tape<float>& tape, const Tensor<float>& volumes);

  std::vector<Parameter<float>*> parameters();

  std::vector<Parameter<float>> kernels, biases, gammas, betas;
  Parameter<float> out_weight, out_bias;

 private:
  int side_ = 0;
};

/// [x, sin(2^k pi x), cos(2^k pi x)] for k < frequencies; 3 + 6 * frequencies columns.
RowMatrixXf positional_encoding(const Coords& x, int frequencies);

/// f_phi(x ++ e) with x positionally encoded inside the first layer, which is
/// split into coordinate and embedding parts so the embedding product is
/// computed once per item.
class ShapeDecoder {
 public:
  ShapeDecoder() = default;
  ShapeDecoder(Index embedding_width, const std::vector<Index>& hidden, int frequencies, FunctionTag fn,
               CounterRng& rng);

  FunctionTag function() const { return fn_; }
  int frequencies() const { return frequencies_; }
  Index input_width() const { return 3 + embed_weight.value.dim(0); }

  /// embeddings B x E; `x` stacks B groups of `points_per_item` coordinates.
  /// Returns (B * points_per_item) x 1.
  Var<float> forward(Tape<float>& tape, const Var<float>& embeddings, const Coords& x, Index points_per_item);

  std::vector<Parameter<float>*> parameters();

  Parameter<float> coord_weight, embed_weight, first_bias;
  std::vector<Parameter<float>> weights, biases;

 private:
  FunctionTag fn_ = FunctionTag::udf;
  int frequencies_ = 0;
};

/// Shapes and widths of one encoder family.
struct EncoderConfig {
  ArchTag arch = ArchTag::triplane;
  Index weight_rows = 0;
  Index weight_width = 0;
  /// Grid feature channels; 0 for MLP-only INRs.
  Index feature_channels = 0;
  int lattice_n = 16;
  std::vector<Index> mlp_hidden;
  Index grid_embedding = 512;
  std::vector<Index> decoder_hidden = {256, 256, 256};
  int decoder_frequencies = 6;

  /// Widths for INRs of `arch` built with `inr`: per-row hidden sizes
  /// 256,256,512,512 for grid INRs and 512,512,1024,1024 for MLP-only INRs.
  static EncoderConfig for_inr(ArchTag arch, const InrConfig& inr, int lattice_n = 16);
  bool grid() const { return feature_channels > 0; }
  void validate() const;
};

/// Encoder inputs of one INR: its weight rows and, for grid INRs, the
/// feature volume on the sampling lattice.
struct EncoderInput {
  FunctionTag fn = FunctionTag::udf;
  RowMatrixXf rows;
  std::optional<Tensor<float>> volume;
};

EncoderInput encoder_input(const InrModel& model, const EncoderConfig& config);

/// Embedding encoders for one implicit function: m over weight rows and, for
/// grid INRs, c over the feature volume. Output is [c; m] or m, 1024 wide.
class EncoderPair {
 public:
  EncoderPair() = default;
  EncoderPair(const EncoderConfig& config, CounterRng& rng);

  /// B x 1024 embeddings. Throws ConfigError when an input does not match the encoder widths.
  Var<float> embed(Tape<float>& tape, const std::vector<const EncoderInput*>& batch, bool training);
  std::vector<Parameter<float>*> parameters();

  MlpEncoder m;
  std::optional<Conv3dEncoder> c;

 private:
  EncoderConfig config_;
};

enum class DecoderMode : std::uint8_t { unified = 0, separate = 1 };

/// Encoder pairs per implicit function with the decoder(s) used to train them.
/// Unified mode has one decoder; separate mode has one per branch.
class EncoderSet {
 public:
  EncoderSet() = default;
  EncoderSet(const EncoderConfig& config, const std::vector<FunctionTag>& branches, DecoderMode mode,
             FunctionTag decoder_function, double lambda, std::uint64_t seed);

  const EncoderConfig& config() const { return config_; }
  DecoderMode mode() const { return mode_; }
  FunctionTag decoder_function() const { return decoder_fn_; }
  double lambda() const { return lambda_; }
  std::vector<FunctionTag> branches() const;

  bool has(FunctionTag fn) const { return pairs_[function_index(fn)].has_value(); }
  EncoderPair& pair(FunctionTag fn);
  const EncoderPair& pair(FunctionTag fn) const;
  ShapeDecoder& decoder(FunctionTag branch);
  const ShapeDecoder& decoder(FunctionTag branch) const;
  /// Function reconstructed by the decoder of `branch`.
  FunctionTag target_function(FunctionTag branch) const;

  std::vector<Parameter<float>*> parameters();

 private:
  EncoderConfig config_;
  DecoderMode mode_ = DecoderMode::unified;
  FunctionTag decoder_fn_ = FunctionTag::udf;
  double lambda_ = 1.0;
  std::array<std::optional<EncoderPair>, 3> pairs_;
  std::array<std::optional<ShapeDecoder>, 3> decoders_;
};

/// Eval-mode embedding of an INR with the pair for its implicit function.
Eigen::VectorXf encode(const EncoderSet& set, const InrModel& model);
Eigen::VectorXf encode(const EncoderSet& set, const EncoderInput& input);

/// Decoder estimate at `x` for an embedding produced by `branch`.
Eigen::VectorXf decode(const EncoderSet& set, const Eigen::VectorXf& embedding, const Coords& x,
                       FunctionTag branch = FunctionTag::udf);

/// Sum of squared L2 distances over all unordered pairs of the given B x E
/// embeddings, averaged over the B rows.
Var<float> pairwise_embedding_loss(const std::vector<Var<float>>& embeddings);

/// INRM container: header architecture = encoder family, function = decoder
/// function; components "m_sdf", "c_sdf", ..., "f_phi" (or "f_phi_sdf", ...)
/// and meta records for lambda, mode, lattice N and widths.
Container encoder_set_container(const EncoderSet& set);
EncoderSet encoder_set_from_container(const Container& c);
void save_encoder_set(const EncoderSet& set, const std::string& path);
EncoderSet load_encoder_set(const std::string& path);

}  // namespace inret
