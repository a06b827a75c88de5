#include "inret/train/train.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "inret/convert/trace.hpp"
#include "inret/log.hpp"
#include "inret/tensor/optim.hpp"

namespace inret {

TrainConfig TrainConfig::desk(ArchTag arch, FunctionTag fn) {
  TrainConfig c;
  c.arch = arch;
  c.fn = fn;
  c.epochs = arch == ArchTag::mlp ? 40 : 10;
  c.batch_size = arch == ArchTag::mlp ? 4096 : 512;
  if (arch == ArchTag::mlp) c.final_learning_rate = 1e-4;
  return c;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(final_learning_rate >= 0.0)) throw ConfigError("final learning rate must be >= 0");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (counts.total() < 1) throw ConfigError("an epoch needs at least one point");
}

Mlp shared_mlp_template(ArchTag arch, const InrConfig& config, std::uint64_t template_seed) {
  CounterRng rng(template_seed, stable_hash("mlp-template/" + to_string(arch)));
  const auto widths = config.mlp_widths(arch);
  return arch == ArchTag::mlp ? make_siren(widths, config.siren_omega0, rng) : make_relu_mlp(widths, rng);
}

InrModel initial_inr(ArchTag arch, FunctionTag fn, const TrainConfig& cfg, const BatchField& structure,
                     OctreeCriterion criterion) {
  std::optional<FeatureGrid> grid;
  switch (arch) {
    case ArchTag::mlp: break;
    case ArchTag::octree: grid = OctreeGrid::build(structure, cfg.inr.octree, criterion); break;
    case ArchTag::triplane: grid = TriplaneGrid(cfg.inr.triplane); break;
    case ArchTag::hash: grid = HashGrid(cfg.inr.hash); break;
  }
  if (grid) {
    CounterRng rng(cfg.seed, stable_hash("grid-init"));
    init_grid_features(*grid, rng, cfg.feature_init_sd);
  }
  return InrModel(arch, fn, cfg.inr, shared_mlp_template(arch, cfg.inr, cfg.template_seed), std::move(grid));
}

Var<float> inr_loss(FunctionTag fn, const Var<float>& prediction, const Var<float>& target) {
  const Var<float> diff = sub(prediction, target);
  return fn == FunctionTag::sdf ? mean(square(diff)) : mean(abs(diff));
}

namespace {

std::uint64_t epoch_seed(std::uint64_t sample_seed, int epoch) {
  return CounterRng(sample_seed, static_cast<std::uint64_t>(epoch) + 1).next_u64();
}

using BatchSource = std::function<PointBatch(int epoch)>;

TrainResult fit(InrModel model, const BatchSource& source, const TrainConfig& cfg) {
  using clock = std::chrono::steady_clock;
  auto params = model.parameters();
  AdamConfig adam;
  adam.learning_rate = cfg.learning_rate;
  Adam<float> opt(params, adam);
  CounterRng shuffle_rng(cfg.seed, stable_hash("shuffle"));
  TrainResult result{InrModel(), {}};
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto start = clock::now();
    if (cfg.final_learning_rate > 0.0 && cfg.epochs > 1) {
      const double t = static_cast<double>(epoch) / static_cast<double>(cfg.epochs - 1);
      opt.set_learning_rate(cfg.final_learning_rate +
                            0.5 * (cfg.learning_rate - cfg.final_learning_rate) * (1.0 + std::cos(std::numbers::pi * t)));
    }
    const PointBatch batch = source(epoch);
    std::vector<Index> order(static_cast<std::size_t>(batch.size()));
    std::iota(order.begin(), order.end(), Index{0});
    shuffle_rng.shuffle(std::span<Index>(order));
    double loss_sum = 0.0;
    for (Index begin = 0; begin < batch.size(); begin += cfg.batch_size) {
      const Index n = std::min(cfg.batch_size, batch.size() - begin);
      Coords x(n, 3);
      Tensor<float> target({n, 1});
      for (Index r = 0; r < n; ++r) {
        const Index src = order[static_cast<std::size_t>(begin + r)];
        x.row(r) = batch.coords.row(src);
        target[r] = static_cast<float>(batch.values[src]);
      }
      opt.zero_grad();
      Tape<float> tape;
      const Var<float> loss = inr_loss(cfg.fn, model.forward(tape, x), tape.input(std::move(target)));
      const double value = loss.value()[0];
      if (!std::isfinite(value)) {
        throw NumericError("non-finite INR loss at epoch " + std::to_string(epoch + 1) + ", batch offset " +
                           std::to_string(begin) + " (" + to_string(cfg.arch) + "/" + to_string(cfg.fn) + ")");
      }
      tape.backward(loss);
      opt.step();
      loss_sum += value * static_cast<double>(n);
    }
    const double seconds = std::chrono::duration<double>(clock::now() - start).count();
    result.log.push_back({epoch + 1, loss_sum / static_cast<double>(batch.size()), seconds});
  }
  result.model = std::move(model);
  return result;
}

}  // namespace

TrainResult train_inr(const ShapeOracle& oracle, const TrainConfig& cfg) {
  cfg.validate();
  InrModel model = initial_inr(cfg.arch, cfg.fn, cfg, oracle_field(oracle, FunctionTag::sdf), OctreeCriterion::distance);
  return fit(std::move(model),
             [&](int epoch) { return sample_training_points(oracle, cfg.fn, cfg.counts, epoch_seed(cfg.sample_seed, epoch)); },
             cfg);
}

TrainResult distill_inr(const BatchField& source, FunctionTag fn, const TrainConfig& cfg) {
  cfg.validate();
  // Pool of traced zero-level points, reused across epochs.
  const Index wanted = std::max<Index>(1, std::min<Index>(2048, cfg.counts.surface + cfg.counts.near_surface));
  std::vector<Point3> pool;
  {
    CounterRng ray_rng(cfg.sample_seed, stable_hash("distill-rays"));
    TraceConfig tc;
    std::vector<Ray> rays;
    for (Index i = 0; i < 32 * wanted; ++i) rays.push_back(random_ray(ray_rng));
    for (const auto& h : trace_rays(source, trace_mode(fn), rays, tc))
      if (h.hit) pool.push_back(h.point);
  }
  SampleCounts counts = cfg.counts;
  if (pool.empty()) {
    warn("distillation source has no zero crossing; falling back to uniform-only sampling");
    counts = {cfg.counts.total(), 0, 0};
  }
  const OctreeCriterion criterion =
      fn == FunctionTag::occ ? OctreeCriterion::sign_change : OctreeCriterion::distance_or_sign_change;
  InrModel model = initial_inr(cfg.arch, fn, cfg, source, criterion);
  auto surface = [&pool](CounterRng& rng) { return pool[static_cast<std::size_t>(rng.below(pool.size()))]; };
  return fit(std::move(model),
             [&](int epoch) {
               PointBatch b = sample_coordinates(surface, counts, epoch_seed(cfg.sample_seed, epoch));
               b.values = source(b.coords);
               return b;
             },
             cfg);
}

TrainResult distill_inr(const InrModel& source, ArchTag target, TrainConfig cfg) {
  cfg.arch = target;
  cfg.fn = source.function();
  return distill_inr(model_field(source), source.function(), cfg);
}

std::string format_train_log(const std::vector<TrainLogEntry>& log) {
  std::ostringstream out;
  for (const auto& e : log) {
    nlohmann::json j = {{"epoch", e.epoch}, {"loss", e.mean_loss}, {"seconds", e.seconds}};
    out << j.dump() << '\n';
  }
  return out.str();
}

}  // namespace inret
