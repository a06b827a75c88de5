#pragma once

#include <vector>

#include "inret/inr/model.hpp"

namespace inret {

/// (2N)^3 points with per-axis values -1 + (2i + 1) / (2N), x fastest, then y, then z.
struct SampleLattice {
  int n = 16;
  std::vector<double> axis;
  Coords coords;

  int side() const { return 2 * n; }
};

SampleLattice sample_coords(int n);

/// Grid features on the lattice as a C x D x D x D tensor with spatial index
/// (z, y, x). Channels are the architecture's combined feature width.
Tensor<float> gather_features(const InrModel& model, const SampleLattice& lattice);

/// D^3 x C rows in lattice order <-> C x D x D x D volume.
RowMatrixXf volume_to_rows(const Tensor<float>& volume);
Tensor<float> rows_to_volume(const RowMatrixXf& rows, int side);

}  // namespace inret
