#include "inret/inr/grids.hpp"

#include <bit>
#include <cmath>

namespace inret {

namespace {

// Trilinear weight of corner (dx, dy, dz) for fractional offsets f.
inline double corner_weight(const double f[3], int dx, int dy, int dz) {
  return (dx ? f[0] : 1.0 - f[0]) * (dy ? f[1] : 1.0 - f[1]) * (dz ? f[2] : 1.0 - f[2]);
}

Tensor<float> zero_table(Index rows, Index width) { return Tensor<float>::zeros({rows, width}); }

}  // namespace

// ---------------------------------------------------------------- octree

OctreeGrid OctreeGrid::build(const BatchField& field, const OctreeConfig& config, OctreeCriterion criterion) {
  const bool distance = criterion != OctreeCriterion::sign_change;
  const bool sign_change = criterion != OctreeCriterion::distance;
  if (config.levels < 1 || config.first_feature_level < 1 || config.first_feature_level > config.levels)
    throw ConfigError("octree levels must satisfy 1 <= first feature level <= levels");
  std::vector<std::vector<std::uint8_t>> occupancy;
  // Distance criterion alone: children are only considered below allocated
  // parents. Sign changes can appear below unallocated parents, so that mode
  // scans every voxel of every level.
  std::vector<Eigen::Vector3i> candidates;
  for (int k = 0; k < 2; ++k)
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 2; ++i) candidates.emplace_back(i, j, k);

  for (int level = 1; level <= config.levels; ++level) {
    const int res = resolution(level);
    const double h = 2.0 / res;
    const double diag = std::sqrt(3.0) * h;
    if (sign_change) {
      candidates.clear();
      for (int k = 0; k < res; ++k)
        for (int j = 0; j < res; ++j)
          for (int i = 0; i < res; ++i) candidates.emplace_back(i, j, k);
    }
    const auto n = static_cast<Index>(candidates.size());
    Eigen::VectorXd vc;
    if (distance && n) {
      Coords centers(n, 3);
      for (Index c = 0; c < n; ++c)
        for (int a = 0; a < 3; ++a) centers(c, a) = -1.0 + (candidates[c][a] + 0.5) * h;
      vc = field(centers);
    }
    Eigen::VectorXd vk;
    const int cr = res + 1;
    if (sign_change) {
      Coords corners(static_cast<Index>(cr) * cr * cr, 3);
      for (int k = 0, row = 0; k < cr; ++k)
        for (int j = 0; j < cr; ++j)
          for (int i = 0; i < cr; ++i, ++row) corners.row(row) << -1.0 + i * h, -1.0 + j * h, -1.0 + k * h;
      vk = field(corners);
    }
    std::vector<std::uint8_t> occ(static_cast<std::size_t>(res) * res * res, 0);
    std::vector<Eigen::Vector3i> next;
    for (Index c = 0; c < n; ++c) {
      const auto& v = candidates[c];
      bool keep = distance && std::abs(vc[c]) < diag;
      if (!keep && sign_change) {
        double lo = vk[(static_cast<Index>(v.z()) * cr + v.y()) * cr + v.x()], hi = lo;
        for (int q = 1; q < 8; ++q) {
          const double val = vk[(static_cast<Index>(v.z() + (q >> 2)) * cr + v.y() + ((q >> 1) & 1)) * cr + v.x() + (q & 1)];
          lo = std::min(lo, val);
          hi = std::max(hi, val);
        }
        keep = lo < 0.0 && hi >= 0.0;
      }
      if (!keep) continue;
      occ[(static_cast<std::size_t>(v.z()) * res + v.y()) * res + v.x()] = 1;
      if (level < config.levels)
        for (int q = 0; q < 8; ++q) next.emplace_back(2 * v.x() + (q & 1), 2 * v.y() + ((q >> 1) & 1), 2 * v.z() + ((q >> 2) & 1));
    }
    occupancy.push_back(std::move(occ));
    candidates = std::move(next);
  }
  return from_occupancy(config, std::move(occupancy));
}

OctreeGrid OctreeGrid::from_occupancy(const OctreeConfig& config, std::vector<std::vector<std::uint8_t>> occupancy) {
  if (static_cast<int>(occupancy.size()) != config.levels) throw FormatError("octree occupancy level count mismatch");
  OctreeGrid g;
  g.config_ = config;
  std::int32_t next_slot = 0;
  for (int level = 1; level <= config.levels; ++level) {
    const int res = resolution(level);
    auto& occ = occupancy[level - 1];
    if (occ.size() != static_cast<std::size_t>(res) * res * res) throw FormatError("octree occupancy size mismatch");
    if (level < config.first_feature_level) continue;
    const int cr = res + 1;
    std::vector<std::int32_t> slots(static_cast<std::size_t>(cr) * cr * cr, -1);
    for (int k = 0; k < res; ++k)
      for (int j = 0; j < res; ++j)
        for (int i = 0; i < res; ++i) {
          if (!occ[(static_cast<std::size_t>(k) * res + j) * res + i]) continue;
          for (int q = 0; q < 8; ++q) {
            auto& s = slots[(static_cast<std::size_t>(k + ((q >> 2) & 1)) * cr + j + ((q >> 1) & 1)) * cr + i + (q & 1)];
            if (s < 0) s = next_slot++;
          }
        }
    g.slots_.push_back(std::move(slots));
  }
  g.occupancy_ = std::move(occupancy);
  g.table = Parameter<float>("grid.table", zero_table(next_slot, config.width));
  return g;
}

bool OctreeGrid::voxel_present(int level, int i, int j, int k) const {
  const int res = resolution(level);
  if (i < 0 || j < 0 || k < 0 || i >= res || j >= res || k >= res) return false;
  return occupancy_.at(level - 1)[(static_cast<std::size_t>(k) * res + j) * res + i] != 0;
}

std::int32_t OctreeGrid::corner_slot(int level, int i, int j, int k) const {
  if (level < config_.first_feature_level || level > config_.levels) return -1;
  const int cr = resolution(level) + 1;
  if (i < 0 || j < 0 || k < 0 || i >= cr || j >= cr || k >= cr) return -1;
  return slots_[level - config_.first_feature_level][(static_cast<std::size_t>(k) * cr + j) * cr + i];
}

GridTaps OctreeGrid::locate(const Coords& x) const {
  const int nl = config_.levels - config_.first_feature_level + 1;
  GridTaps taps{IndexMatrix::Constant(x.rows(), 8 * nl, -1), RowMatrix<float>::Zero(x.rows(), 8 * nl)};
  for (Index r = 0; r < x.rows(); ++r) {
    for (int l = 0; l < nl; ++l) {
      const int level = config_.first_feature_level + l;
      const int res = resolution(level);
      int c[3];
      double f[3];
      for (int a = 0; a < 3; ++a) grid_cell(x(r, a), res, c[a], f[a]);
      if (!voxel_present(level, c[0], c[1], c[2])) continue;
      for (int q = 0; q < 8; ++q) {
        const int dx = q & 1, dy = (q >> 1) & 1, dz = (q >> 2) & 1;
        taps.index(r, 8 * l + q) = corner_slot(level, c[0] + dx, c[1] + dy, c[2] + dz);
        taps.weight(r, 8 * l + q) = static_cast<float>(corner_weight(f, dx, dy, dz));
      }
    }
  }
  return taps;
}

Eigen::VectorXf OctreeGrid::interp(const Point3& x, int level) const {
  Eigen::VectorXf out = Eigen::VectorXf::Zero(config_.width);
  if (level < config_.first_feature_level || level > config_.levels) return out;
  const int res = resolution(level);
  int c[3];
  double f[3];
  for (int a = 0; a < 3; ++a) grid_cell(x[a], res, c[a], f[a]);
  if (!voxel_present(level, c[0], c[1], c[2])) return out;
  for (int q = 0; q < 8; ++q) {
    const int dx = q & 1, dy = (q >> 1) & 1, dz = (q >> 2) & 1;
    const auto s = corner_slot(level, c[0] + dx, c[1] + dy, c[2] + dz);
    out += static_cast<float>(corner_weight(f, dx, dy, dz)) * table.value.matrix().row(s).transpose();
  }
  return out;
}

Var<float> OctreeGrid::interpolate(const std::vector<Var<float>>& tables, const Coords& x) const {
  const GridTaps taps = locate(x);
  return gather_weighted(tables.at(0), taps.index, taps.weight);
}

// -------------------------------------------------------------- triplane

TriplaneGrid::TriplaneGrid(const TriplaneConfig& config) : config_(config) {
  if (config.resolution < 2) throw ConfigError("triplane resolution must be at least 2");
  const Index r = config.resolution;
  table = Parameter<float>("grid.table", zero_table(3 * r * r, config.width));
}

Index TriplaneGrid::node(int plane, int u, int v) const {
  const Index r = config_.resolution;
  return plane * r * r + static_cast<Index>(v) * r + u;
}

GridTaps TriplaneGrid::locate(const Coords& x) const {
  static constexpr int kAxes[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  const int cells = config_.resolution - 1;
  GridTaps taps{IndexMatrix(x.rows(), 12), RowMatrix<float>(x.rows(), 12)};
  for (Index r = 0; r < x.rows(); ++r)
    for (int p = 0; p < 3; ++p) {
      int cu, cv;
      double fu, fv;
      grid_cell(x(r, kAxes[p][0]), cells, cu, fu);
      grid_cell(x(r, kAxes[p][1]), cells, cv, fv);
      for (int q = 0; q < 4; ++q) {
        const int du = q & 1, dv = q >> 1;
        taps.index(r, 4 * p + q) = static_cast<std::int32_t>(node(p, cu + du, cv + dv));
        taps.weight(r, 4 * p + q) = static_cast<float>((du ? fu : 1.0 - fu) * (dv ? fv : 1.0 - fv));
      }
    }
  return taps;
}

Eigen::VectorXf TriplaneGrid::interp(const Point3& x) const {
  Coords c(1, 3);
  c.row(0) = x.transpose();
  const GridTaps taps = locate(c);
  Eigen::VectorXf out = Eigen::VectorXf::Zero(config_.width);
  for (int k = 0; k < 12; ++k) out += taps.weight(0, k) * table.value.matrix().row(taps.index(0, k)).transpose();
  return out;
}

Var<float> TriplaneGrid::interpolate(const std::vector<Var<float>>& tables, const Coords& x) const {
  const GridTaps taps = locate(x);
  return gather_weighted(tables.at(0), taps.index, taps.weight);
}

// ------------------------------------------------------------------ hash

HashGrid::HashGrid(const HashConfig& config) : config_(config) {
  if (config.levels < 1 || config.min_resolution < 1 || config.max_resolution < config.min_resolution)
    throw ConfigError("hash grid needs levels >= 1 and 1 <= min resolution <= max resolution");
  if (config.log2_table_size < 1 || config.log2_table_size > 30) throw ConfigError("hash table size out of range");
  const double growth = config.levels > 1 ? std::pow(static_cast<double>(config.max_resolution) / config.min_resolution,
                                                     1.0 / (config.levels - 1))
                                          : 1.0;
  const std::uint64_t cap = std::uint64_t{1} << config.log2_table_size;
  for (int l = 0; l < config.levels; ++l) {
    const int res = static_cast<int>(std::lround(config.min_resolution * std::pow(growth, l)));
    if (!resolutions_.empty() && res <= resolutions_.back()) throw ConfigError("hash level resolutions must increase");
    resolutions_.push_back(res);
    const std::uint64_t corners = static_cast<std::uint64_t>(res + 1) * (res + 1) * (res + 1);
    const auto size = static_cast<Index>(std::min(std::bit_ceil(corners), cap));
    table_sizes_.push_back(size);
    tables.emplace_back("grid.level" + std::to_string(l), zero_table(size, config.width));
  }
}

bool HashGrid::dense(int level) const {
  const auto cr = static_cast<Index>(resolutions_.at(level) + 1);
  return cr * cr * cr <= table_sizes_.at(level);
}

std::uint32_t HashGrid::hash_index(int level, int x, int y, int z) const {
  if (dense(level)) {
    const auto cr = static_cast<std::uint32_t>(resolutions_[level] + 1);
    return static_cast<std::uint32_t>(x) + cr * (static_cast<std::uint32_t>(y) + cr * static_cast<std::uint32_t>(z));
  }
  const std::uint32_t h = (static_cast<std::uint32_t>(x) * kPrimes[0]) ^ (static_cast<std::uint32_t>(y) * kPrimes[1]) ^
                          (static_cast<std::uint32_t>(z) * kPrimes[2]);
  return h & static_cast<std::uint32_t>(table_sizes_[level] - 1);
}

GridTaps HashGrid::locate(const Coords& x, int level) const {
  const int res = resolutions_.at(level);
  GridTaps taps{IndexMatrix(x.rows(), 8), RowMatrix<float>(x.rows(), 8)};
  for (Index r = 0; r < x.rows(); ++r) {
    int c[3];
    double f[3];
    for (int a = 0; a < 3; ++a) grid_cell(x(r, a), res, c[a], f[a]);
    for (int q = 0; q < 8; ++q) {
      const int dx = q & 1, dy = (q >> 1) & 1, dz = (q >> 2) & 1;
      taps.index(r, q) = static_cast<std::int32_t>(hash_index(level, c[0] + dx, c[1] + dy, c[2] + dz));
      taps.weight(r, q) = static_cast<float>(corner_weight(f, dx, dy, dz));
    }
  }
  return taps;
}

Eigen::VectorXf HashGrid::interp(const Point3& x) const {
  Coords c(1, 3);
  c.row(0) = x.transpose();
  Eigen::VectorXf out = Eigen::VectorXf::Zero(feature_width());
  for (int l = 0; l < config_.levels; ++l) {
    const GridTaps taps = locate(c, l);
    for (int k = 0; k < 8; ++k)
      out.segment(l * config_.width, config_.width) +=
          taps.weight(0, k) * tables[l].value.matrix().row(taps.index(0, k)).transpose();
  }
  return out;
}

std::vector<Parameter<float>*> HashGrid::parameters() {
  std::vector<Parameter<float>*> out;
  for (auto& t : tables) out.push_back(&t);
  return out;
}

std::vector<const Parameter<float>*> HashGrid::parameters() const {
  std::vector<const Parameter<float>*> out;
  for (const auto& t : tables) out.push_back(&t);
  return out;
}

Var<float> HashGrid::interpolate(const std::vector<Var<float>>& bound, const Coords& x) const {
  std::vector<Var<float>> levels;
  for (int l = 0; l < config_.levels; ++l) {
    const GridTaps taps = locate(x, l);
    levels.push_back(gather_weighted(bound.at(l), taps.index, taps.weight));
  }
  return concat_cols(levels);
}

void init_grid_features(FeatureGrid& grid, CounterRng& rng, double sd) {
  std::visit(
      [&](auto& g) {
        for (auto* p : g.parameters())
          for (Index i = 0; i < p->value.size(); ++i) p->value[i] = static_cast<float>(rng.normal(0.0, sd));
      },
      grid);
}

}  // namespace inret
