#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "inret/shapes/oracle.hpp"

namespace inret {

enum class PointKind : std::uint8_t { uniform = 0, surface = 1, near_surface = 2 };

/// Coordinates in the domain with implicit-function values.
struct PointBatch {
  Coords coords;
  Eigen::VectorXd values;
  std::vector<PointKind> kinds;

  Index size() const { return coords.rows(); }
};

struct SampleCounts {
  Index uniform = 4096;
  Index surface = 8192;
  Index near_surface = 8192;

  Index total() const { return uniform + surface + near_surface; }
};

/// Variance of the Gaussian offset applied to near-surface points.
inline constexpr double kNearSurfaceVariance = 0.015;

/// Coordinates only (values unset). Surface points come from `surface`,
/// which is called once per required surface point.
PointBatch sample_coordinates(const std::function<Point3(CounterRng&)>& surface, const SampleCounts& counts,
                              std::uint64_t seed);

PointBatch sample_training_points(const ShapeOracle& oracle, FunctionTag fn, const SampleCounts& counts,
                                  std::uint64_t seed);

/// Uniform i.i.d. points in the domain.
Coords sample_uniform(Index n, CounterRng& rng);

/// Clamp each coordinate to [-1, 1].
Point3 clamp_to_domain(const Point3& x);

}  // namespace inret
