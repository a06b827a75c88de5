#include "inret/encoders/encoders.hpp"

#include <bit>
#include <cmath>
#include <numbers>

#include "inret/io/binary.hpp"

namespace inret {

namespace {

Parameter<float> uniform_param(const std::string& name, Shape shape, Index fan_in, CounterRng& rng) {
  return Parameter<float>(name, uniform_tensor(std::move(shape), 1.0 / std::sqrt(static_cast<double>(fan_in)), rng));
}

Var<float> bind(Tape<float>& tape, Parameter<float>& p) { return tape.parameter(p); }

}  // namespace

MlpEncoder::MlpEncoder(Index input_width, const std::vector<Index>& hidden, CounterRng& rng) {
  if (input_width < 1 || hidden.empty()) throw ConfigError("MLP encoder needs an input width and at least one layer");
  Index in = input_width;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    const std::string tag = "layer" + std::to_string(i) + ".";
    weights.push_back(uniform_param(tag + "weight", {in, hidden[i]}, in, rng));
    biases.push_back(uniform_param(tag + "bias", {hidden[i]}, in, rng));
    gammas.emplace_back(tag + "gamma", Tensor<float>::constant({hidden[i]}, 1.0f));
    betas.emplace_back(tag + "beta", Tensor<float>::zeros({hidden[i]}));
    stats.emplace_back(hidden[i]);
    in = hidden[i];
  }
}

Var<float> MlpEncoder::forward(Tape<float>& tape, const RowMatrixXf& rows, Index rows_per_item, bool training) {
  if (rows.cols() != input_width())
    throw ConfigError("MLP encoder expects rows of width " + std::to_string(input_width()) + ", got " +
                      std::to_string(rows.cols()));
  if (rows_per_item < 1 || rows.rows() % rows_per_item != 0) throw ShapeError("row count is not a multiple of the item size");
  Var<float> x = tape.input(Tensor<float>::from_matrix(rows));
  for (std::size_t i = 0; i < weights.size(); ++i) {
    x = linear(x, bind(tape, weights[i]), bind(tape, biases[i]));
    x = batch_norm(x, bind(tape, gammas[i]), bind(tape, betas[i]), stats[i], training);
    x = relu(x);
  }
  return max_rows_grouped(x, rows_per_item);
}

std::vector<Parameter<float>*> MlpEncoder::parameters() {
  std::vector<Parameter<float>*> out;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out.push_back(&weights[i]);
    out.push_back(&biases[i]);
    out.push_back(&gammas[i]);
    out.push_back(&betas[i]);
  }
  return out;
}

Conv3dEncoder::Conv3dEncoder(Index channels, int side, Index output_width, CounterRng& rng) : side_(side) {
  if (channels < 1 || side < 2 || !std::has_single_bit(static_cast<unsigned>(side)))
    throw ConfigError("conv encoder needs channels >= 1 and a power-of-two side >= 2, got side " + std::to_string(side));
  Index ch = channels;
  for (int s = 0, d = side; d > 1; ++s, d /= 2) {
    const std::string tag = "stage" + std::to_string(s) + ".";
    const Index co = 2 * ch;
    kernels.push_back(uniform_param(tag + "kernel", {co, ch, 2, 2, 2}, ch * 8, rng));
    biases.push_back(uniform_param(tag + "bias", {co}, ch * 8, rng));
    gammas.emplace_back(tag + "gamma", Tensor<float>::constant({co}, 1.0f));
    betas.emplace_back(tag + "beta", Tensor<float>::zeros({co}));
    ch = co;
  }
  out_weight = uniform_param("out.weight", {ch, output_width}, ch, rng);
  out_bias = uniform_param("out.bias", {output_width}, ch, rng);
}

Var<float> Conv3dEncoder::forward(Tape<float>& tape, const Tensor<float>& volumes) {
  if (volumes.rank() != 5 || volumes.dim(1) != channels() || volumes.dim(2) != side_)
    throw ConfigError("conv encoder expects B x " + std::to_string(channels()) + " x " + std::to_string(side_) +
                      "^3 volumes, got " + shape_string(volumes.shape()));
  const Index b = volumes.dim(0);
  Var<float> x = tape.input(volumes);
  for (std::size_t s = 0; s < kernels.size(); ++s) {
    x = conv3d_down(x, bind(tape, kernels[s]), bind(tape, biases[s]));
    x = group_norm(x, bind(tape, gammas[s]), bind(tape, betas[s]), default_groups(kernels[s].value.dim(0)));
    x = relu(x);
  }
  x = reshape(x, {b, out_weight.value.dim(0)});
  return linear(x, bind(tape, out_weight), bind(tape, out_bias));
}

std::vector<Parameter<float>*> Conv3dEncoder::parameters() {
  std::vector<Parameter<float>*> out;
  for (std::size_t s = 0; s < kernels.size(); ++s) {
    out.push_back(&kernels[s]);
    out.push_back(&biases[s]);
    out.push_back(&gammas[s]);
    out.push_back(&betas[s]);
  }
  out.push_back(&out_weight);
  out.push_back(&out_bias);
  return out;
}

RowMatrixXf positional_encoding(const Coords& x, int frequencies) {
  if (frequencies < 0) throw ConfigError("frequency count must be >= 0");
  RowMatrixXf out(x.rows(), 3 + 6 * frequencies);
  out.leftCols(3) = x.cast<float>();
  for (int k = 0; k < frequencies; ++k) {
    const Eigen::ArrayXXd a = x.array() * (std::ldexp(1.0, k) * std::numbers::pi);
    out.middleCols(3 + 6 * k, 3) = a.sin().cast<float>().matrix();
    out.middleCols(6 + 6 * k, 3) = a.cos().cast<float>().matrix();
  }
  return out;
}

ShapeDecoder::ShapeDecoder(Index embedding_width, const std::vector<Index>& hidden, int frequencies, FunctionTag fn,
                           CounterRng& rng)
    : fn_(fn), frequencies_(frequencies) {
  if (hidden.empty()) throw ConfigError("shape decoder needs at least one hidden layer");
  if (frequencies < 0) throw ConfigError("frequency count must be >= 0");
  const Index coords = 3 + 6 * frequencies;
  coord_weight = uniform_param("coord_weight", {coords, hidden[0]}, coords, rng);
  embed_weight = uniform_param("embed_weight", {embedding_width, hidden[0]}, embedding_width, rng);
  first_bias = uniform_param("first_bias", {hidden[0]}, coords + embedding_width, rng);
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    const Index in = hidden[i], out = i + 1 < hidden.size() ? hidden[i + 1] : 1;
    const std::string tag = "layer" + std::to_string(i + 1) + ".";
    weights.push_back(uniform_param(tag + "weight", {in, out}, in, rng));
    biases.push_back(uniform_param(tag + "bias", {out}, in, rng));
  }
}

Var<float> ShapeDecoder::forward(Tape<float>& tape, const Var<float>& embeddings, const Coords& x, Index points_per_item) {
  const Index b = embeddings.shape()[0];
  if (x.rows() != b * points_per_item) throw ShapeError("decoder coordinates do not match the embedding batch");
  const Var<float> e = repeat_rows(linear(embeddings, bind(tape, embed_weight)), points_per_item);
  const Var<float> c = linear(tape.input(Tensor<float>::from_matrix(positional_encoding(x, frequencies_))),
                             bind(tape, coord_weight), bind(tape, first_bias));
  Var<float> h = relu(add(c, e));
  for (std::size_t i = 0; i < weights.size(); ++i) {
    h = linear(h, bind(tape, weights[i]), bind(tape, biases[i]));
    if (i + 1 < weights.size()) h = relu(h);
  }
  return h;
}

std::vector<Parameter<float>*> ShapeDecoder::parameters() {
  std::vector<Parameter<float>*> out = {&coord_weight, &embed_weight, &first_bias};
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out.push_back(&weights[i]);
    out.push_back(&biases[i]);
  }
  return out;
}

EncoderConfig EncoderConfig::for_inr(ArchTag arch, const InrConfig& inr, int lattice_n) {
  EncoderConfig c;
  c.arch = arch;
  std::tie(c.weight_rows, c.weight_width) = weight_rows_shape(inr.mlp_widths(arch));
  c.feature_channels = arch == ArchTag::mlp ? 0 : inr.grid_feature_width(arch);
  c.lattice_n = lattice_n;
  c.mlp_hidden = arch == ArchTag::mlp ? std::vector<Index>{512, 512, 1024, 1024} : std::vector<Index>{256, 256, 512, 512};
  return c;
}

void EncoderConfig::validate() const {
  if (weight_rows < 1 || weight_width < 1) throw ConfigError("encoder weight-row shape must be positive");
  if (mlp_hidden.empty() || decoder_hidden.empty()) throw ConfigError("encoder and decoder need at least one layer");
  if (decoder_frequencies < 0) throw ConfigError("decoder frequency count must be >= 0");
  if ((arch == ArchTag::mlp) == grid()) throw ConfigError("feature channels must be zero exactly for MLP-only INRs");
  if (lattice_n < 1 || !std::has_single_bit(static_cast<unsigned>(2 * lattice_n)))
    throw ConfigError("lattice N must make 2N a power of two");
  const Index width = mlp_hidden.back() + (grid() ? grid_embedding : 0);
  if (width != kEmbeddingWidth)
    throw ConfigError("embedding width must be " + std::to_string(kEmbeddingWidth) + ", got " + std::to_string(width));
}

EncoderInput encoder_input(const InrModel& model, const EncoderConfig& config) {
  if (model.has_grid() != config.grid())
    throw ConfigError("encoder for " + to_string(config.arch) + " INRs cannot encode a " + to_string(model.arch()) + " INR");
  EncoderInput in;
  in.fn = model.function();
  in.rows = flatten_mlp_weights(model.mlp()).rows;
  if (in.rows.rows() != config.weight_rows || in.rows.cols() != config.weight_width)
    throw ConfigError("INR weight rows are " + std::to_string(in.rows.rows()) + " x " + std::to_string(in.rows.cols()) +
                      ", encoder expects " + std::to_string(config.weight_rows) + " x " + std::to_string(config.weight_width));
  if (config.grid()) {
    in.volume = gather_features(model, sample_coords(config.lattice_n));
    if (in.volume->dim(0) != config.feature_channels)
      throw ConfigError("INR feature width " + std::to_string(in.volume->dim(0)) + " differs from encoder channels " +
                        std::to_string(config.feature_channels));
  }
  return in;
}

EncoderPair::EncoderPair(const EncoderConfig& config, CounterRng& rng) : config_(config) {
  config.validate();
  m = MlpEncoder(config.weight_width, config.mlp_hidden, rng);
  if (config.grid()) c = Conv3dEncoder(config.feature_channels, 2 * config.lattice_n, config.grid_embedding, rng);
}

Var<float> EncoderPair::embed(Tape<float>& tape, const std::vector<const EncoderInput*>& batch, bool training) {
  if (batch.empty()) throw ContractError("cannot embed an empty batch");
  const Index b = static_cast<Index>(batch.size());
  const Index r = config_.weight_rows, w = config_.weight_width;
  RowMatrixXf rows(b * r, w);
  for (Index i = 0; i < b; ++i) {
    const auto& in = *batch[static_cast<std::size_t>(i)];
    if (in.rows.rows() != r || in.rows.cols() != w) throw ConfigError("weight rows do not match the encoder");
    if (in.volume.has_value() != config_.grid()) throw ConfigError("feature volume presence does not match the encoder");
    rows.middleRows(i * r, r) = in.rows;
  }
  Var<float> mv = m.forward(tape, rows, r, training);
  if (!c) return mv;
  const Index d = 2 * config_.lattice_n, ch = config_.feature_channels;
  const Shape one{ch, d, d, d};
  Tensor<float> vol({b, ch, d, d, d});
  const Index each = shape_size(one);
  for (Index i = 0; i < b; ++i) {
    const auto& v = *batch[static_cast<std::size_t>(i)]->volume;
    if (v.shape() != one) throw ConfigError("feature volume " + shape_string(v.shape()) + " does not match " + shape_string(one));
    vol.data().segment(i * each, each) = v.data();
  }
  return concat_cols<float>({c->forward(tape, vol), mv});
}

std::vector<Parameter<float>*> EncoderPair::parameters() {
  auto out = m.parameters();
  if (c)
    for (auto* p : c->parameters()) out.push_back(p);
  return out;
}

EncoderSet::EncoderSet(const EncoderConfig& config, const std::vector<FunctionTag>& branches, DecoderMode mode,
                       FunctionTag decoder_function, double lambda, std::uint64_t seed)
    : config_(config), mode_(mode), decoder_fn_(decoder_function), lambda_(lambda) {
  config.validate();
  if (branches.empty()) throw ConfigError("an encoder set needs at least one implicit function");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  for (FunctionTag fn : kAllFunctions) {
    if (std::find(branches.begin(), branches.end(), fn) == branches.end()) continue;
    CounterRng rng(seed, stable_hash("encoder/" + to_string(fn)));
    pairs_[function_index(fn)].emplace(config, rng);
    if (mode == DecoderMode::separate) {
      CounterRng drng(seed, stable_hash("decoder/" + to_string(fn)));
      decoders_[function_index(fn)].emplace(kEmbeddingWidth, config.decoder_hidden, config.decoder_frequencies, fn, drng);
    }
  }
  if (mode == DecoderMode::unified) {
    CounterRng drng(seed, stable_hash("decoder"));
    decoders_[0].emplace(kEmbeddingWidth, config.decoder_hidden, config.decoder_frequencies, decoder_function, drng);
  }
}

std::vector<FunctionTag> EncoderSet::branches() const {
  std::vector<FunctionTag> out;
  for (FunctionTag fn : kAllFunctions)
    if (has(fn)) out.push_back(fn);
  return out;
}

EncoderPair& EncoderSet::pair(FunctionTag fn) {
  auto& p = pairs_[function_index(fn)];
  if (!p) throw ConfigError("encoder set has no encoders for " + to_string(fn) + " INRs");
  return *p;
}

const EncoderPair& EncoderSet::pair(FunctionTag fn) const { return const_cast<EncoderSet*>(this)->pair(fn); }

ShapeDecoder& EncoderSet::decoder(FunctionTag branch) {
  if (mode_ == DecoderMode::unified) return *decoders_[0];
  auto& d = decoders_[function_index(branch)];
  if (!d) throw ConfigError("encoder set has no decoder for " + to_string(branch));
  return *d;
}

const ShapeDecoder& EncoderSet::decoder(FunctionTag branch) const { return const_cast<EncoderSet*>(this)->decoder(branch); }

FunctionTag EncoderSet::target_function(FunctionTag branch) const {
  return mode_ == DecoderMode::unified ? decoder_fn_ : branch;
}

std::vector<Parameter<float>*> EncoderSet::parameters() {
  std::vector<Parameter<float>*> out;
  for (auto& p : pairs_)
    if (p)
      for (auto* q : p->parameters()) out.push_back(q);
  for (auto& d : decoders_)
    if (d)
      for (auto* q : d->parameters()) out.push_back(q);
  return out;
}

Eigen::VectorXf encode(const EncoderSet& set, const InrModel& model) {
  if (!set.has(model.function()))
    throw ConfigError("encoder set has no encoders for " + to_string(model.function()) + " INRs");
  return encode(set, encoder_input(model, set.config()));
}

Eigen::VectorXf encode(const EncoderSet& set, const EncoderInput& input) {
  auto& pair = const_cast<EncoderPair&>(set.pair(input.fn));
  Tape<float> tape(false);
  const Var<float> e = pair.embed(tape, {&input}, false);
  Eigen::VectorXf out = e.value().data();
  if (!out.allFinite()) throw NumericError("embedding has non-finite entries");
  return out;
}

Eigen::VectorXf decode(const EncoderSet& set, const Eigen::VectorXf& embedding, const Coords& x, FunctionTag branch) {
  if (embedding.size() != kEmbeddingWidth) throw ShapeError("embedding must have 1024 entries");
  require_domain(x);
  auto& dec = const_cast<ShapeDecoder&>(set.decoder(branch));
  const Tensor<float> e(Shape{1, kEmbeddingWidth}, embedding);
  Eigen::VectorXf out(x.rows());
  for (Index start = 0; start < x.rows(); start += kEvalChunk) {
    const Index n = std::min(kEvalChunk, x.rows() - start);
    Tape<float> chunk(false);
    const Var<float> ec = chunk.input(e);
    out.segment(start, n) = dec.forward(chunk, ec, x.middleRows(start, n), n).value().data();
  }
  return out;
}

Var<float> pairwise_embedding_loss(const std::vector<Var<float>>& embeddings) {
  if (embeddings.size() < 2) throw ContractError("pairwise loss needs at least two embeddings");
  const Index b = embeddings.front().shape()[0];
  std::optional<Var<float>> total;
  for (std::size_t i = 0; i < embeddings.size(); ++i)
    for (std::size_t j = i + 1; j < embeddings.size(); ++j) {
      Var<float> term = sum(square(sub(embeddings[i], embeddings[j])));
      total = total ? add(*total, term) : term;
    }
  return scale(*total, 1.0f / static_cast<float>(b));
}

namespace {

void put_component(Container& c, const std::string& tag, const std::vector<Parameter<float>*>& params) {
  for (const auto* p : params) c.add(tag + "." + p->name, p->value);
}

void get_component(const Container& c, const std::string& tag, const std::vector<Parameter<float>*>& params) {
  for (auto* p : params) {
    p->value = c.tensor(tag + "." + p->name, p->value.shape());
    p->zero_grad();
  }
}

void put_list(Container& c, const std::string& name, const std::vector<Index>& v) {
  c.add_meta(name + ".count", static_cast<double>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) c.add_meta(name + "." + std::to_string(i), static_cast<double>(v[i]));
}

std::vector<Index> get_list(const Container& c, const std::string& name) {
  std::vector<Index> v(static_cast<std::size_t>(c.meta(name + ".count")));
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<Index>(c.meta(name + "." + std::to_string(i)));
  return v;
}

std::string decoder_tag(const EncoderSet& set, FunctionTag fn) {
  return set.mode() == DecoderMode::unified ? "f_phi" : "f_phi_" + to_string(fn);
}

}  // namespace

Container encoder_set_container(const EncoderSet& set) {
  auto& s = const_cast<EncoderSet&>(set);
  Container c;
  c.arch = static_cast<std::uint8_t>(set.config().arch);
  c.function = static_cast<std::uint8_t>(set.decoder_function());
  const auto& cfg = set.config();
  c.add_meta("lambda", set.lambda());
  c.add_meta("decoder_mode", static_cast<double>(set.mode()));
  c.add_meta("lattice_n", cfg.lattice_n);
  c.add_meta("weight_rows", static_cast<double>(cfg.weight_rows));
  c.add_meta("weight_width", static_cast<double>(cfg.weight_width));
  c.add_meta("feature_channels", static_cast<double>(cfg.feature_channels));
  c.add_meta("grid_embedding", static_cast<double>(cfg.grid_embedding));
  put_list(c, "mlp_hidden", cfg.mlp_hidden);
  put_list(c, "decoder_hidden", cfg.decoder_hidden);
  c.add_meta("decoder_frequencies", cfg.decoder_frequencies);
  for (FunctionTag fn : kAllFunctions) c.add_meta("branch." + to_string(fn), set.has(fn) ? 1.0 : 0.0);
  for (FunctionTag fn : set.branches()) {
    auto& pair = s.pair(fn);
    const std::string m = "m_" + to_string(fn);
    put_component(c, m, pair.m.parameters());
    for (std::size_t i = 0; i < pair.m.stats.size(); ++i) {
      c.add(m + ".layer" + std::to_string(i) + ".running_mean", pair.m.stats[i].running_mean);
      c.add(m + ".layer" + std::to_string(i) + ".running_var", pair.m.stats[i].running_var);
    }
    if (pair.c) put_component(c, "c_" + to_string(fn), pair.c->parameters());
    if (set.mode() == DecoderMode::separate) put_component(c, decoder_tag(set, fn), s.decoder(fn).parameters());
  }
  if (set.mode() == DecoderMode::unified) put_component(c, "f_phi", s.decoder(set.decoder_function()).parameters());
  return c;
}

EncoderSet encoder_set_from_container(const Container& c) {
  try {
    EncoderConfig cfg;
    cfg.arch = arch_from_byte(c.arch);
    const FunctionTag dec_fn = function_from_byte(c.function);
    cfg.lattice_n = static_cast<int>(c.meta("lattice_n"));
    cfg.weight_rows = static_cast<Index>(c.meta("weight_rows"));
    cfg.weight_width = static_cast<Index>(c.meta("weight_width"));
    cfg.feature_channels = static_cast<Index>(c.meta("feature_channels"));
    cfg.grid_embedding = static_cast<Index>(c.meta("grid_embedding"));
    cfg.mlp_hidden = get_list(c, "mlp_hidden");
    cfg.decoder_hidden = get_list(c, "decoder_hidden");
    cfg.decoder_frequencies = static_cast<int>(c.meta("decoder_frequencies"));
    const double mode = c.meta("decoder_mode");
    if (mode != 0.0 && mode != 1.0) throw FormatError("unknown decoder mode");
    std::vector<FunctionTag> branches;
    for (FunctionTag fn : kAllFunctions)
      if (c.meta("branch." + to_string(fn)) != 0.0) branches.push_back(fn);
    EncoderSet set(cfg, branches, static_cast<DecoderMode>(static_cast<int>(mode)), dec_fn, c.meta("lambda"), 0);
    for (FunctionTag fn : branches) {
      auto& pair = set.pair(fn);
      const std::string m = "m_" + to_string(fn);
      get_component(c, m, pair.m.parameters());
      for (std::size_t i = 0; i < pair.m.stats.size(); ++i) {
        auto& st = pair.m.stats[i];
        st.running_mean = c.tensor(m + ".layer" + std::to_string(i) + ".running_mean", st.running_mean.shape());
        st.running_var = c.tensor(m + ".layer" + std::to_string(i) + ".running_var", st.running_var.shape());
      }
      if (pair.c) get_component(c, "c_" + to_string(fn), pair.c->parameters());
      if (set.mode() == DecoderMode::separate) get_component(c, decoder_tag(set, fn), set.decoder(fn).parameters());
    }
    if (set.mode() == DecoderMode::unified) get_component(c, "f_phi", set.decoder(dec_fn).parameters());
    return set;
  } catch (const ConfigError& e) {
    throw FormatError(std::string("inconsistent encoder checkpoint: ") + e.what());
  } catch (const TagError& e) {
    throw FormatError(std::string("encoder checkpoint header: ") + e.what());
  }
}

void save_encoder_set(const EncoderSet& set, const std::string& path) {
  write_file(path, encoder_set_container(set).serialize());
}

EncoderSet load_encoder_set(const std::string& path) {
  return encoder_set_from_container(Container::deserialize(read_file(path), "encoder checkpoint"));
}

}  // namespace inret
