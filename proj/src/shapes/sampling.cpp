#include "inret/shapes/sampling.hpp"

#include <cmath>

namespace inret {

Point3 clamp_to_domain(const Point3& x) { return x.cwiseMax(-1.0).cwiseMin(1.0); }

Coords sample_uniform(Index n, CounterRng& rng) {
  Coords c(n, 3);
  for (Index i = 0; i < n; ++i)
    for (int a = 0; a < 3; ++a) c(i, a) = rng.uniform(-1.0, 1.0);
  return c;
}

PointBatch sample_coordinates(const std::function<Point3(CounterRng&)>& surface, const SampleCounts& counts,
                              std::uint64_t seed) {
  if (counts.uniform < 0 || counts.surface < 0 || counts.near_surface < 0)
    throw ContractError("sample counts must be non-negative");
  CounterRng uniform_rng(seed, 1), surface_rng(seed, 2), offset_rng(seed, 3);
  PointBatch batch;
  batch.coords.resize(counts.total(), 3);
  batch.kinds.reserve(static_cast<std::size_t>(counts.total()));
  Index row = 0;
  batch.coords.topRows(counts.uniform) = sample_uniform(counts.uniform, uniform_rng);
  batch.kinds.insert(batch.kinds.end(), static_cast<std::size_t>(counts.uniform), PointKind::uniform);
  row = counts.uniform;
  for (Index i = 0; i < counts.surface; ++i, ++row) {
    batch.coords.row(row) = surface(surface_rng).transpose();
    batch.kinds.push_back(PointKind::surface);
  }
  const double sigma = std::sqrt(kNearSurfaceVariance);
  for (Index i = 0; i < counts.near_surface; ++i, ++row) {
    Point3 p = surface(surface_rng);
    for (int a = 0; a < 3; ++a) p[a] += sigma * offset_rng.normal();
    batch.coords.row(row) = clamp_to_domain(p).transpose();
    batch.kinds.push_back(PointKind::near_surface);
  }
  return batch;
}

PointBatch sample_training_points(const ShapeOracle& oracle, FunctionTag fn, const SampleCounts& counts,
                                  std::uint64_t seed) {
  PointBatch batch =
      sample_coordinates([&oracle](CounterRng& rng) { return oracle.sample_surface(rng); }, counts, seed);
  batch.values = oracle.eval(fn, batch.coords);
  return batch;
}

}  // namespace inret
