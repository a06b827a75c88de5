#include "inret/encoders/training.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace inret {

void EncoderTrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("encoder training needs at least one epoch");
  if (batch_shapes < 1) throw ConfigError("encoder batch must hold at least one shape");
  if (points.total() < 1) throw ConfigError("decoder supervision needs at least one point");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (!(optimizer.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
}

namespace {

std::uint64_t point_seed(std::uint64_t seed, int epoch, std::size_t item) {
  return CounterRng(seed, stable_hash("decoder-points/" + std::to_string(epoch) + "/" + std::to_string(item))).next_u64();
}

EncoderTrainResult run(const std::vector<EncoderTrainItem>& items, const std::vector<FunctionTag>& branches,
                       const EncoderConfig& config, const EncoderTrainConfig& train) {
  using clock = std::chrono::steady_clock;
  train.validate();
  if (items.empty()) throw InputError("encoder training needs at least one shape");

  std::vector<std::array<EncoderInput, 3>> inputs(items.size());
  for (std::size_t k = 0; k < items.size(); ++k) {
    const auto& item = items[k];
    if (!item.oracle) throw InputError("training shape " + std::to_string(k) + " has no oracle");
    for (FunctionTag fn : branches) {
      const InrModel* inr = item.inrs[function_index(fn)];
      if (!inr) throw InputError("shape '" + item.oracle->id() + "' lacks a " + to_string(fn) + " INR");
      if (inr->function() != fn)
        throw InputError("shape '" + item.oracle->id() + "': INR in the " + to_string(fn) + " slot is " +
                         to_string(inr->function()));
      inputs[k][function_index(fn)] = encoder_input(*inr, config);
    }
  }

  EncoderTrainResult result{
      EncoderSet(config, branches, train.mode, train.decoder_function, train.lambda, train.seed), {}};
  EncoderSet& set = result.set;
  Adam<float> opt(set.parameters(), train.optimizer);
  CounterRng order_rng(train.seed, stable_hash("encoder-shuffle"));
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const Index p = train.points.total();

  std::vector<FunctionTag> targets;
  for (FunctionTag fn : branches)
    if (std::find(targets.begin(), targets.end(), set.target_function(fn)) == targets.end())
      targets.push_back(set.target_function(fn));

  for (int epoch = 0; epoch < train.epochs; ++epoch) {
    const auto start = clock::now();
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[order_rng.below(i)]);
    double sum_loss = 0, sum_rec = 0, sum_pair = 0;
    int steps = 0;
    for (std::size_t first = 0; first < order.size(); first += static_cast<std::size_t>(train.batch_shapes)) {
      const std::size_t last = std::min(order.size(), first + static_cast<std::size_t>(train.batch_shapes));
      const Index b = static_cast<Index>(last - first);
      Coords x(b * p, 3);
      std::array<Tensor<float>, 3> truth;
      for (FunctionTag tf : targets) truth[function_index(tf)] = Tensor<float>({b * p, 1});
      for (std::size_t s = first; s < last; ++s) {
        const std::size_t k = order[s];
        const ShapeOracle& oracle = *items[k].oracle;
        const Index row = static_cast<Index>(s - first) * p;
        const PointBatch pb = sample_training_points(oracle, targets.front(), train.points, point_seed(train.seed, epoch, k));
        x.middleRows(row, p) = pb.coords;
        for (FunctionTag tf : targets) {
          const Eigen::VectorXd v = tf == targets.front() ? pb.values : oracle.eval(tf, pb.coords);
          truth[function_index(tf)].data().segment(row, p) = v.cast<float>();
        }
      }

      Tape<float> tape;
      std::vector<Var<float>> embeddings;
      std::optional<Var<float>> rec;
      for (FunctionTag fn : branches) {
        std::vector<const EncoderInput*> batch;
        for (std::size_t s = first; s < last; ++s) batch.push_back(&inputs[order[s]][function_index(fn)]);
        const Var<float> e = set.pair(fn).embed(tape, batch, true);
        embeddings.push_back(e);
        const Var<float> pred = set.decoder(fn).forward(tape, e, x, p);
        const Var<float> target = tape.input(truth[function_index(set.target_function(fn))]);
        const Var<float> term = mean(abs(sub(pred, target)));
        rec = rec ? add(*rec, term) : term;
      }
      Var<float> loss = *rec;
      double pair_value = 0.0;
      if (embeddings.size() > 1) {
        const Var<float> pair = pairwise_embedding_loss(embeddings);
        pair_value = pair.value()[0];
        if (train.lambda > 0.0) loss = add(loss, scale(pair, static_cast<float>(train.lambda)));
      }
      const double loss_value = loss.value()[0];
      if (!std::isfinite(loss_value))
        throw NumericError("non-finite encoder loss at epoch " + std::to_string(epoch + 1));
      opt.zero_grad();
      tape.backward(loss);
      opt.step();
      sum_loss += loss_value;
      sum_rec += rec->value()[0];
      sum_pair += pair_value;
      ++steps;
    }
    const double secs = std::chrono::duration<double>(clock::now() - start).count();
    result.log.push_back({epoch + 1, sum_loss / steps, sum_rec / steps, sum_pair / steps, secs});
  }
  return result;
}

}  // namespace

EncoderTrainResult train_encoders(const std::vector<EncoderTrainItem>& items, const EncoderConfig& config,
                                  const EncoderTrainConfig& train) {
  return run(items, {FunctionTag::sdf, FunctionTag::udf, FunctionTag::occ}, config, train);
}

EncoderTrainResult train_encoder_single(const std::vector<EncoderTrainItem>& items, FunctionTag fn,
                                        const EncoderConfig& config, EncoderTrainConfig train) {
  train.mode = DecoderMode::unified;
  train.decoder_function = fn;
  train.lambda = 0.0;
  return run(items, {fn}, config, train);
}

std::string format_encoder_log(const std::vector<EncoderLogEntry>& log) {
  std::ostringstream out;
  for (const auto& e : log) {
    nlohmann::json j = {{"epoch", e.epoch},
                        {"loss", e.loss},
                        {"reconstruction", e.reconstruction},
                        {"pairwise", e.pairwise},
                        {"seconds", e.seconds}};
    out << j.dump() << '\n';
  }
  return out.str();
}

}  // namespace inret
