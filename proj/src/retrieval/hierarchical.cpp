#include "inret/retrieval/hierarchical.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>

#include "inret/inr/mlp.hpp"
#include "inret/tensor/ops.hpp"
#include "inret/tensor/optim.hpp"

namespace inret {

void ClassifierConfig::validate() const {
  if (hidden < 1 || epochs < 1 || batch < 1) throw ConfigError("classifier hidden width, epochs and batch must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("classifier learning rate must be positive");
}

Eigen::VectorXf Classifier::logits(const Eigen::VectorXf& embedding) const {
  if (embedding.size() != mean.size()) throw ShapeError("classifier expects 1024-entry embeddings");
  const Eigen::RowVectorXf x = ((embedding - mean).array() * inv_std.array()).matrix().transpose();
  const Eigen::RowVectorXf h = (x * w1.value.matrix() + b1.value.data().transpose()).cwiseMax(0.0f);
  return (h * w2.value.matrix() + b2.value.data().transpose()).transpose();
}

std::string Classifier::predict(const Eigen::VectorXf& embedding) const {
  const Eigen::VectorXf z = logits(embedding);
  Index best = 0;
  for (Index i = 1; i < z.size(); ++i)
    if (z[i] > z[best]) best = i;
  return categories_[static_cast<std::size_t>(best)];
}

Classifier train_classifier(const EmbeddingStore& store, const ClassifierConfig& cfg) {
  cfg.validate();
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < store.size(); ++i) by_class[store.records()[i].category].push_back(i);
  if (by_class.size() < 2) throw InputError("classifier needs at least two categories");

  Classifier c;
  for (const auto& [cat, members] : by_class) c.categories_.push_back(cat);
  const Index n = static_cast<Index>(store.size()), d = kStoredEmbeddingWidth;
  const Index k = static_cast<Index>(c.categories_.size());
  RowMatrixXf x(n, d);
  std::vector<int> label(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    x.row(static_cast<Index>(i)) = store.records()[i].embedding.transpose();
    label[i] = static_cast<int>(std::find(c.categories_.begin(), c.categories_.end(), store.records()[i].category) -
                                c.categories_.begin());
  }
  c.mean = x.colwise().mean().transpose();
  const Eigen::VectorXf sd = ((x.rowwise() - c.mean.transpose()).array().square().colwise().mean()).sqrt().transpose();
  c.inv_std = sd.unaryExpr([](float s) { return s > 1e-6f ? 1.0f / s : 1.0f; });
  const RowMatrixXf z = ((x.rowwise() - c.mean.transpose()).array().rowwise() * c.inv_std.transpose().array()).matrix();

  CounterRng init(cfg.seed, stable_hash("classifier/init"));
  c.w1 = Parameter<float>("w1", uniform_tensor({d, cfg.hidden}, 1.0 / std::sqrt(static_cast<double>(d)), init));
  c.b1 = Parameter<float>("b1", uniform_tensor({cfg.hidden}, 1.0 / std::sqrt(static_cast<double>(d)), init));
  c.w2 = Parameter<float>("w2", uniform_tensor({cfg.hidden, k}, 1.0 / std::sqrt(static_cast<double>(cfg.hidden)), init));
  c.b2 = Parameter<float>("b2", uniform_tensor({k}, 1.0 / std::sqrt(static_cast<double>(cfg.hidden)), init));
  AdamConfig ac;
  ac.learning_rate = cfg.learning_rate;
  Adam<float> opt({&c.w1, &c.b1, &c.w2, &c.b2}, ac);

  CounterRng rng(cfg.seed, stable_hash("classifier/train"));
  std::vector<std::size_t> order(store.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t first = 0; first < order.size(); first += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t last = std::min(order.size(), first + static_cast<std::size_t>(cfg.batch));
      Tensor<float> xb({static_cast<Index>(last - first), d});
      std::vector<int> yb;
      for (std::size_t s = first; s < last; ++s) {
        const std::size_t i = order[s];
        const auto& mates = by_class[c.categories_[static_cast<std::size_t>(label[i])]];
        const std::size_t j = mates[rng.below(mates.size())];
        const float a = static_cast<float>(rng.uniform());
        xb.matrix().row(static_cast<Index>(s - first)) =
            a * z.row(static_cast<Index>(i)) + (1.0f - a) * z.row(static_cast<Index>(j));
        yb.push_back(label[i]);
      }
      Tape<float> tape;
      const auto h = relu(linear(tape.input(xb), tape.parameter(c.w1), tape.parameter(c.b1)));
      const auto loss = softmax_cross_entropy(linear(h, tape.parameter(c.w2), tape.parameter(c.b2)), yb);
      if (!std::isfinite(loss.value()[0])) throw NumericError("non-finite classifier loss");
      opt.zero_grad();
      tape.backward(loss);
      opt.step();
    }
  }
  return c;
}

void ChamferConfig::validate() const {
  if (coarse < 1 || fine < 1) throw ConfigError("Chamfer point counts must be >= 1");
  if (coarse >= fine) throw ConfigError("coarse Chamfer count must be below the fine count");
  if (reference != 0 && reference < fine) throw ConfigError("reference Chamfer count must be 0 or >= the fine count");
  if (!(filter_multiplier >= 1.0)) throw ConfigError("filter multiplier must be >= 1");
}

namespace {

bool better(double d, const std::string& id, double best, const std::string& best_id) {
  return d < best || (d == best && id < best_id);
}

}  // namespace

HierarchicalResult hierarchical_retrieve(const Eigen::VectorXf& embedding, const Coords& coarse, const Coords& fine,
                                         const std::vector<CandidateShape>& candidates, const Classifier& classifier,
                                         const ChamferConfig& cfg, const std::string& exclude) {
  cfg.validate();
  HierarchicalResult out;
  out.category = classifier.predict(embedding);
  std::vector<std::pair<const CandidateShape*, double>> pool;
  double min_coarse = std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) {
    if (c.category != out.category || c.id == exclude) continue;
    const double d = chamfer(coarse, c.coarse);
    ++out.coarse_evaluations;
    pool.emplace_back(&c, d);
    min_coarse = std::min(min_coarse, d);
  }
  if (pool.empty()) throw ClassificationError("no candidates in predicted category '" + out.category + "'");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [c, d] : pool) {
    if (d > cfg.filter_multiplier * min_coarse) continue;
    const double f = chamfer(fine, c->fine);
    ++out.fine_evaluations;
    if (better(f, c->id, best, out.id)) {
      best = f;
      out.id = c->id;
    }
  }
  return out;
}

HierarchicalResult naive_chamfer_retrieve(const Coords& fine, const std::vector<CandidateShape>& candidates,
                                          const std::string& exclude) {
  HierarchicalResult out;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) {
    if (c.id == exclude) continue;
    const double f = chamfer(fine, c.fine);
    ++out.fine_evaluations;
    if (better(f, c.id, best, out.id)) {
      best = f;
      out.id = c.id;
      out.category = c.category;
    }
  }
  if (out.id.empty()) throw EmptyStoreError("no Chamfer candidates");
  return out;
}

}  // namespace inret
