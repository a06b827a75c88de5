#include "inret/features/sampler.hpp"

#include <bit>

namespace inret {

SampleLattice sample_coords(int n) {
  if (n < 1 || !std::has_single_bit(static_cast<unsigned>(2 * n)))
    throw ConfigError("lattice half-resolution N must make 2N a power of two, got " + std::to_string(n));
  SampleLattice l;
  l.n = n;
  const int d = 2 * n;
  for (int i = 0; i < d; ++i) l.axis.push_back(-1.0 + (2.0 * i + 1.0) / d);
  l.coords.resize(static_cast<Index>(d) * d * d, 3);
  Index row = 0;
  for (int k = 0; k < d; ++k)
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < d; ++i, ++row) l.coords.row(row) << l.axis[i], l.axis[j], l.axis[k];
  return l;
}

RowMatrixXf volume_to_rows(const Tensor<float>& volume) {
  if (volume.rank() != 4) throw ShapeError("feature volume must be C x D x D x D");
  return volume.matrix().transpose();
}

Tensor<float> rows_to_volume(const RowMatrixXf& rows, int side) {
  const Index vox = static_cast<Index>(side) * side * side;
  if (rows.rows() != vox) throw ShapeError("row count does not match the lattice volume");
  Tensor<float> v({rows.cols(), side, side, side});
  v.matrix() = rows.transpose();
  return v;
}

Tensor<float> gather_features(const InrModel& model, const SampleLattice& lattice) {
  if (!model.has_grid()) throw TagError("feature volumes need a grid INR, got " + to_string(model.arch()));
  return rows_to_volume(model.grid_features(lattice.coords), lattice.side());
}

}  // namespace inret
