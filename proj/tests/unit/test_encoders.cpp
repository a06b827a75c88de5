#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "json.hpp"

#include "inret/encoders/training.hpp"
#include "inret/train/train.hpp"

using namespace inret;

namespace {

AnalyticShape sphere(double r) {
  return AnalyticShape("sphere" + std::to_string(r), "sphere", {Primitive{PrimitiveKind::sphere, {r}, {}}});
}

InrModel fresh(ArchTag arch, FunctionTag fn, const AnalyticShape& s, std::uint64_t seed) {
  auto c = TrainConfig::desk(arch, fn);
  c.seed = seed;
  return initial_inr(arch, fn, c, oracle_field(s, FunctionTag::sdf), OctreeCriterion::distance);
}

// Small widths that still meet the 1024 embedding.
EncoderConfig small_config(ArchTag arch) {
  auto c = EncoderConfig::for_inr(arch, TrainConfig::desk(arch, FunctionTag::sdf).inr, 2);
  c.mlp_hidden = arch == ArchTag::mlp ? std::vector<Index>{16, 1024} : std::vector<Index>{16, 512};
  c.decoder_hidden = {16};
  return c;
}

struct Corpus {
  std::vector<AnalyticShape> shapes;
  std::vector<std::array<InrModel, 3>> inrs;

  Corpus(ArchTag arch, int n) {
    for (int i = 0; i < n; ++i) shapes.push_back(sphere(0.3 + 0.1 * i));
    for (int i = 0; i < n; ++i) {
      const auto seed = static_cast<std::uint64_t>(10 + i);
      inrs.push_back({fresh(arch, FunctionTag::sdf, shapes[i], seed), fresh(arch, FunctionTag::udf, shapes[i], seed),
                      fresh(arch, FunctionTag::occ, shapes[i], seed)});
    }
  }

  std::vector<EncoderTrainItem> items() const {
    std::vector<EncoderTrainItem> out;
    for (std::size_t i = 0; i < shapes.size(); ++i)
      out.push_back({&shapes[i], {&inrs[i][0], &inrs[i][1], &inrs[i][2]}});
    return out;
  }
};

EncoderTrainConfig quick_train(int epochs) {
  EncoderTrainConfig t;
  t.epochs = epochs;
  t.batch_shapes = 2;
  t.points = {10, 20, 20};
  t.optimizer.learning_rate = 1e-3;
  return t;
}

}  // namespace

TEST(Weights, GridMlpGives129Square) {
  const auto s = sphere(0.5);
  const auto m = fresh(ArchTag::triplane, FunctionTag::sdf, s, 1);
  const auto w = flatten_mlp_weights(m.mlp());
  ASSERT_EQ(w.rows.rows(), 129);
  ASSERT_EQ(w.rows.cols(), 129);
  const auto& w0 = m.mlp().weights[0].value;
  const auto& b0 = m.mlp().biases[0].value;
  const auto& w1 = m.mlp().weights[1].value;
  const auto& b1 = m.mlp().biases[1].value;
  for (Index o = 0; o < 128; ++o) {
    for (Index i = 0; i < 11; ++i) EXPECT_EQ(w.rows(o, i), w0.matrix()(i, o));
    EXPECT_EQ(w.rows(o, 11), b0.data()[o]);
    for (Index c = 12; c < 129; ++c) EXPECT_EQ(w.rows(o, c), 0.0f);
  }
  for (Index i = 0; i < 128; ++i) EXPECT_EQ(w.rows(128, i), w1.matrix()(i, 0));
  EXPECT_EQ(w.rows(128, 128), b1.data()[0]);
}

TEST(Weights, SirenShape) {
  const auto s = sphere(0.5);
  const auto m = fresh(ArchTag::mlp, FunctionTag::sdf, s, 1);
  const auto w = flatten_mlp_weights(m.mlp());
  EXPECT_EQ(w.rows.rows(), 4 * 64 + 1);
  EXPECT_EQ(w.rows.cols(), 65);
  EXPECT_EQ(weight_rows_shape({3, 64, 64, 64, 64, 1}), (std::pair<Index, Index>{257, 65}));
}

TEST(Weights, ZeroMlpGivesZeroMatrix) {
  const auto s = sphere(0.5);
  auto m = fresh(ArchTag::hash, FunctionTag::sdf, s, 1);
  Mlp mlp = m.mlp();
  for (auto& p : mlp.weights) p.value.data().setZero();
  for (auto& p : mlp.biases) p.value.data().setZero();
  EXPECT_EQ(flatten_mlp_weights(mlp).rows.cwiseAbs().maxCoeff(), 0.0f);
}

TEST(Weights, RoundTrip) {
  const auto s = sphere(0.5);
  for (ArchTag arch : {ArchTag::mlp, ArchTag::octree}) {
    const auto m = fresh(arch, FunctionTag::sdf, s, 2);
    const Mlp back = unflatten_mlp_weights(flatten_mlp_weights(m.mlp()), m.mlp().activation, m.mlp().omega0);
    ASSERT_EQ(back.widths(), m.mlp().widths());
    for (std::size_t l = 0; l < back.layer_count(); ++l) {
      EXPECT_EQ(back.weights[l].value.data(), m.mlp().weights[l].value.data());
      EXPECT_EQ(back.biases[l].value.data(), m.mlp().biases[l].value.data());
    }
  }
}

TEST(Encoder, DefaultConfigs) {
  const auto grid = EncoderConfig::for_inr(ArchTag::triplane, InrConfig{});
  EXPECT_EQ(grid.weight_rows, 129);
  EXPECT_EQ(grid.weight_width, 129);
  EXPECT_EQ(grid.feature_channels, 8);
  EXPECT_EQ(grid.mlp_hidden.back() + grid.grid_embedding, kEmbeddingWidth);
  const auto siren = EncoderConfig::for_inr(ArchTag::mlp, InrConfig{});
  EXPECT_EQ(siren.feature_channels, 0);
  EXPECT_EQ(siren.mlp_hidden.back(), kEmbeddingWidth);
  auto bad = grid;
  bad.grid_embedding = 256;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Encoder, EncodeIsDeterministicAnd1024Wide) {
  const auto s = sphere(0.5);
  const auto m = fresh(ArchTag::triplane, FunctionTag::udf, s, 3);
  const EncoderSet set(small_config(ArchTag::triplane), {FunctionTag::udf}, DecoderMode::unified, FunctionTag::udf, 1.0, 7);
  const auto a = encode(set, m);
  const auto b = encode(set, m);
  ASSERT_EQ(a.size(), kEmbeddingWidth);
  EXPECT_EQ(a, b);
  EXPECT_TRUE(a.allFinite());
}

TEST(Encoder, MismatchedInrThrows) {
  const auto s = sphere(0.5);
  const EncoderSet set(small_config(ArchTag::triplane), {FunctionTag::sdf}, DecoderMode::unified, FunctionTag::udf, 1.0, 7);
  EXPECT_THROW(encode(set, fresh(ArchTag::mlp, FunctionTag::sdf, s, 1)), ConfigError);
  EXPECT_THROW(encode(set, fresh(ArchTag::triplane, FunctionTag::occ, s, 1)), ConfigError);
  auto c = TrainConfig::desk(ArchTag::triplane, FunctionTag::sdf);
  c.inr.grid_hidden = 64;
  const auto narrow = initial_inr(ArchTag::triplane, FunctionTag::sdf, c, oracle_field(s, FunctionTag::sdf),
                                  OctreeCriterion::distance);
  EXPECT_THROW(encode(set, narrow), ConfigError);
}

TEST(Encoder, EvalBatchOrderInvariant) {
  const Corpus corpus(ArchTag::hash, 2);
  EncoderSet set(small_config(ArchTag::hash), {FunctionTag::sdf}, DecoderMode::unified, FunctionTag::udf, 1.0, 4);
  const auto a = encoder_input(corpus.inrs[0][0], set.config());
  const auto b = encoder_input(corpus.inrs[1][0], set.config());
  Tape<float> t1(false), t2(false);
  const auto ab = set.pair(FunctionTag::sdf).embed(t1, {&a, &b}, false).value();
  const auto ba = set.pair(FunctionTag::sdf).embed(t2, {&b, &a}, false).value();
  const Eigen::VectorXf ea = encode(set, a), eb = encode(set, b);
  for (Index j = 0; j < kEmbeddingWidth; ++j) {
    EXPECT_FLOAT_EQ(ab.matrix()(0, j), ba.matrix()(1, j));
    EXPECT_FLOAT_EQ(ab.matrix()(1, j), ba.matrix()(0, j));
    // Batch size changes GEMM blocking, hence the tolerance.
    EXPECT_NEAR(ab.matrix()(0, j), ea[j], 1e-5f * (1 + std::abs(ea[j])));
    EXPECT_NEAR(ab.matrix()(1, j), eb[j], 1e-5f * (1 + std::abs(eb[j])));
  }
}

TEST(Decoder, ZeroEmbeddingIsFinite) {
  const EncoderSet set(small_config(ArchTag::mlp), {FunctionTag::sdf}, DecoderMode::unified, FunctionTag::udf, 1.0, 1);
  CounterRng rng(5, 0);
  const Coords x = sample_uniform(300, rng);
  const auto y = decode(set, Eigen::VectorXf::Zero(kEmbeddingWidth), x);
  ASSERT_EQ(y.size(), 300);
  EXPECT_TRUE(y.allFinite());
  Coords out(1, 3);
  out << 1.5, 0, 0;
  EXPECT_THROW(decode(set, Eigen::VectorXf::Zero(kEmbeddingWidth), out), DomainError);
  EXPECT_THROW(decode(set, Eigen::VectorXf::Zero(10), x), ShapeError);
}

TEST(Decoder, PositionalEncodingLayout) {
  Coords x(1, 3);
  x << 0.25, -0.5, 1.0;
  const auto pe = positional_encoding(x, 2);
  ASSERT_EQ(pe.cols(), 15);
  for (int a = 0; a < 3; ++a) {
    EXPECT_FLOAT_EQ(pe(0, a), static_cast<float>(x(0, a)));
    for (int k = 0; k < 2; ++k) {
      const double w = std::pow(2.0, k) * M_PI * x(0, a);
      EXPECT_FLOAT_EQ(pe(0, 3 + 6 * k + a), static_cast<float>(std::sin(w)));
      EXPECT_FLOAT_EQ(pe(0, 6 + 6 * k + a), static_cast<float>(std::cos(w)));
    }
  }
  EXPECT_EQ(positional_encoding(x, 0).cols(), 3);
  EXPECT_THROW(positional_encoding(x, -1), ConfigError);
}

TEST(Decoder, SplitFirstLayerMatchesConcatenatedInput) {
  const EncoderSet set(small_config(ArchTag::mlp), {FunctionTag::sdf}, DecoderMode::unified, FunctionTag::udf, 1.0, 1);
  const auto& d = set.decoder(FunctionTag::sdf);
  const int f = d.frequencies();
  EXPECT_EQ(f, 6);
  EXPECT_EQ(d.input_width(), 3 + kEmbeddingWidth);
  CounterRng rng(6, 0);
  const Coords x = sample_uniform(5, rng);
  Eigen::VectorXf e(kEmbeddingWidth);
  for (Index j = 0; j < kEmbeddingWidth; ++j) e[j] = static_cast<float>(rng.normal());
  const auto got = decode(set, e, x);
  // Plain MLP on [encode(x), e] with the first-layer weights stacked.
  const Index cw = 3 + 6 * f;
  Eigen::MatrixXf w0(cw + kEmbeddingWidth, d.coord_weight.value.dim(1));
  w0 << d.coord_weight.value.matrix(), d.embed_weight.value.matrix();
  for (Index r = 0; r < 5; ++r) {
    Eigen::RowVectorXf in(cw + kEmbeddingWidth);
    for (int a = 0; a < 3; ++a) {
      in[a] = static_cast<float>(x(r, a));
      for (int k = 0; k < f; ++k) {
        in[3 + 6 * k + a] = static_cast<float>(std::sin(std::ldexp(M_PI, k) * x(r, a)));
        in[6 + 6 * k + a] = static_cast<float>(std::cos(std::ldexp(M_PI, k) * x(r, a)));
      }
    }
    in.tail(kEmbeddingWidth) = e.transpose();
    Eigen::RowVectorXf h = (in * w0 + d.first_bias.value.data().transpose()).cwiseMax(0.0f);
    for (std::size_t l = 0; l < d.weights.size(); ++l) {
      h = h * d.weights[l].value.matrix() + d.biases[l].value.data().transpose();
      if (l + 1 < d.weights.size()) h = h.cwiseMax(0.0f);
    }
    EXPECT_NEAR(got[r], h[0], 1e-4f * (1.0f + std::abs(h[0])));
  }
}

TEST(Pairwise, ZeroForEqualEmbeddings) {
  Tape<float> tape;
  Tensor<float> e({3, 8});
  e.data().setRandom();
  const auto a = tape.input(e), b = tape.input(e), c = tape.input(e);
  EXPECT_EQ(pairwise_embedding_loss({a, b, c}).value()[0], 0.0f);
}

TEST(Pairwise, MatchesBruteForce) {
  Tape<float> tape;
  CounterRng rng(9, 0);
  std::vector<Tensor<float>> es;
  std::vector<Var<float>> vars;
  for (int k = 0; k < 3; ++k) {
    Tensor<float> e({4, 6});
    for (Index i = 0; i < e.size(); ++i) e.data()[i] = static_cast<float>(rng.normal());
    es.push_back(e);
    vars.push_back(tape.input(e));
  }
  double expect = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      for (Index r = 0; r < 4; ++r)
        for (Index c = 0; c < 6; ++c) {
          const double d = es[i].matrix()(r, c) - es[j].matrix()(r, c);
          expect += d * d;
        }
  expect /= 4;
  EXPECT_NEAR(pairwise_embedding_loss(vars).value()[0], expect, 1e-4 * expect);
  EXPECT_THROW(pairwise_embedding_loss({vars[0]}), ContractError);
}

TEST(EncoderSetLayout, DecoderModes) {
  const auto cfg = small_config(ArchTag::mlp);
  const std::vector<FunctionTag> all{FunctionTag::sdf, FunctionTag::udf, FunctionTag::occ};
  const EncoderSet unified(cfg, all, DecoderMode::unified, FunctionTag::occ, 1.0, 0);
  const EncoderSet separate(cfg, all, DecoderMode::separate, FunctionTag::udf, 1.0, 0);
  for (FunctionTag fn : all) {
    EXPECT_EQ(unified.target_function(fn), FunctionTag::occ);
    EXPECT_EQ(&unified.decoder(fn), &unified.decoder(FunctionTag::sdf));
    EXPECT_EQ(separate.target_function(fn), fn);
    EXPECT_EQ(separate.decoder(fn).function(), fn);
  }
  EXPECT_NE(&separate.decoder(FunctionTag::sdf), &separate.decoder(FunctionTag::udf));
  // Branches start from independent weights.
  EXPECT_NE(unified.pair(FunctionTag::sdf).m.weights[0].value.data(), unified.pair(FunctionTag::udf).m.weights[0].value.data());
  EXPECT_THROW(EncoderSet(cfg, {}, DecoderMode::unified, FunctionTag::udf, 1.0, 0), ConfigError);
  EXPECT_THROW(EncoderSet(cfg, all, DecoderMode::unified, FunctionTag::udf, -1.0, 0), ConfigError);
}

TEST(EncoderTraining, ConfigValidation) {
  EncoderTrainConfig t;
  EXPECT_NO_THROW(t.validate());
  EXPECT_EQ(t.points.total(), 500);
  t.epochs = 0;
  EXPECT_THROW(t.validate(), ConfigError);
  t = {};
  t.lambda = -0.1;
  EXPECT_THROW(t.validate(), ConfigError);
}

TEST(EncoderTraining, MissingInrThrows) {
  const Corpus corpus(ArchTag::mlp, 2);
  auto items = corpus.items();
  items[1].inrs[2] = nullptr;
  EXPECT_THROW(train_encoders(items, small_config(ArchTag::mlp), quick_train(1)), InputError);
  std::swap(items[0].inrs[0], items[0].inrs[1]);
  items[1].inrs[2] = &corpus.inrs[1][2];
  EXPECT_THROW(train_encoders(items, small_config(ArchTag::mlp), quick_train(1)), InputError);
  // Single-function training needs only its own INR.
  items = corpus.items();
  items[0].inrs[1] = items[0].inrs[2] = nullptr;
  EXPECT_NO_THROW(train_encoder_single(items, FunctionTag::sdf, small_config(ArchTag::mlp), quick_train(1)));
}

TEST(EncoderTraining, LossIsReconstructionPlusLambdaPairwise) {
  const Corpus corpus(ArchTag::triplane, 3);
  auto t = quick_train(2);
  t.lambda = 0.25;
  const auto r = train_encoders(corpus.items(), small_config(ArchTag::triplane), t);
  ASSERT_EQ(r.log.size(), 2u);
  for (const auto& e : r.log) {
    EXPECT_GT(e.pairwise, 0.0);
    EXPECT_NEAR(e.loss, e.reconstruction + 0.25 * e.pairwise, 1e-5 * (1 + e.loss));
  }
  EXPECT_EQ(r.set.branches().size(), 3u);
  EXPECT_DOUBLE_EQ(r.set.lambda(), 0.25);
}

TEST(EncoderTraining, SingleFunctionDeterministicAndLearns) {
  const Corpus corpus(ArchTag::hash, 4);
  const auto t = quick_train(25);
  const auto cfg = small_config(ArchTag::hash);
  auto a = train_encoder_single(corpus.items(), FunctionTag::occ, cfg, t);
  auto b = train_encoder_single(corpus.items(), FunctionTag::occ, cfg, t);
  EXPECT_EQ(a.set.target_function(FunctionTag::occ), FunctionTag::occ);
  EXPECT_EQ(a.set.branches(), std::vector<FunctionTag>{FunctionTag::occ});
  for (const auto& e : a.log) EXPECT_EQ(e.pairwise, 0.0);
  EXPECT_LT(a.log.back().loss, 0.7 * a.log.front().loss);
  EXPECT_EQ(encode(a.set, corpus.inrs[0][2]), encode(b.set, corpus.inrs[0][2]));
}

TEST(EncoderTraining, LogIsJsonLines) {
  const std::string s = format_encoder_log({{1, 0.5, 0.25, 0.125, 2.0}, {2, 0.25, 0.125, 0.0625, 1.0}});
  const auto nl = s.find('\n');
  ASSERT_NE(nl, std::string::npos);
  const auto j = nlohmann::json::parse(s.substr(0, nl));
  EXPECT_EQ(j["epoch"], 1);
  EXPECT_EQ(j["loss"], 0.5);
  EXPECT_EQ(j["reconstruction"], 0.25);
  EXPECT_EQ(j["pairwise"], 0.125);
  EXPECT_EQ(j["seconds"], 2.0);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 2);
}

TEST(EncoderCheckpoint, RoundTripPreservesEmbeddings) {
  const Corpus corpus(ArchTag::octree, 2);
  auto t = quick_train(2);
  t.mode = DecoderMode::separate;
  t.lambda = 0.5;
  const auto r = train_encoders(corpus.items(), small_config(ArchTag::octree), t);
  const auto path = (std::filesystem::temp_directory_path() / "inret_encoder_roundtrip.inrm").string();
  save_encoder_set(r.set, path);
  const EncoderSet back = load_encoder_set(path);
  std::remove(path.c_str());
  EXPECT_EQ(back.mode(), DecoderMode::separate);
  EXPECT_DOUBLE_EQ(back.lambda(), 0.5);
  EXPECT_EQ(back.config().lattice_n, 2);
  EXPECT_EQ(back.config().decoder_frequencies, 6);
  EXPECT_EQ(back.config().mlp_hidden, r.set.config().mlp_hidden);
  EXPECT_EQ(back.branches().size(), 3u);
  CounterRng rng(2, 0);
  const Coords x = sample_uniform(50, rng);
  for (int f = 0; f < 3; ++f) {
    const auto& m = corpus.inrs[0][static_cast<std::size_t>(f)];
    const auto e = encode(r.set, m);
    EXPECT_EQ(e, encode(back, m));
    EXPECT_EQ(decode(r.set, e, x, m.function()), decode(back, e, x, m.function()));
  }
}

TEST(EncoderCheckpoint, RejectsCorruptBytes) {
  const EncoderSet set(small_config(ArchTag::mlp), {FunctionTag::udf}, DecoderMode::unified, FunctionTag::udf, 1.0, 0);
  auto bytes = encoder_set_container(set).serialize();
  bytes.resize(bytes.size() - 3);
  EXPECT_THROW(Container::deserialize(bytes, "encoder"), FormatError);
}
