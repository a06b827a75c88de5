#pragma once

#include <algorithm>

namespace inret {

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

/// UDF from SDF: relu(s) + relu(-s).
inline double udf_from_sdf(double s) { return relu(s) + relu(-s); }

/// Occupancy from SDF: -1 inside, +1 outside or on the surface.
inline double occ_from_sdf(double s) { return s >= 0.0 ? 1.0 : -1.0; }

/// Two-layer ReLU construction h1 - h2 - h3 + h4 with h1 = relu(s),
/// h2 = relu(-s), h3 = relu(h1 - 1), h4 = relu(h2 - 1).
/// The result is clamp(s, -1, 1): it equals the sign only when |s| >= 1.
inline double occ_via_relu_network(double s) {
  const double h1 = relu(s);
  const double h2 = relu(-s);
  const double h3 = relu(h1 - 1.0);
  const double h4 = relu(h2 - 1.0);
  return h1 - h2 - h3 + h4;
}

}  // namespace inret
