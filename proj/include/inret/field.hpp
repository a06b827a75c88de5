#pragma once

#include <functional>

#include "inret/shapes/oracle.hpp"

namespace inret {

/// Batched scalar field over the domain: P x 3 coordinates -> P values.
using BatchField = std::function<Eigen::VectorXd(const Coords&)>;

inline BatchField oracle_field(const ShapeOracle& oracle, FunctionTag fn) {
  return [&oracle, fn](const Coords& x) { return oracle.eval(fn, x); };
}

}  // namespace inret
