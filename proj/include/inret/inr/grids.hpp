#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <variant>
#include <vector>

#include "inret/field.hpp"
#include "inret/tensor/ops.hpp"

namespace inret {

/// Corner indices and interpolation weights for a batch of points (B x K).
struct GridTaps {
  IndexMatrix index;
  RowMatrix<float> weight;
};

/// Maps a domain coordinate to [0, res]: returns the lower cell index in
/// [0, res-1] and the fractional offset in [0, 1].
inline void grid_cell(double x, int res, int& cell, double& frac) {
  const double pos = (x + 1.0) * 0.5 * res;
  int c = static_cast<int>(std::floor(pos));
  c = std::clamp(c, 0, res - 1);
  cell = c;
  frac = pos - c;
}

/// Voxel allocation rule: |f(center)| < cell diagonal, corner sign change, or either.
enum class OctreeCriterion { distance, sign_change, distance_or_sign_change };

struct OctreeConfig {
  int levels = 6;
  int first_feature_level = 3;
  Index width = 8;
};

/// Sparse voxel octree. Level l has 2^l cells per axis; levels from
/// `first_feature_level` store features at the corners of allocated voxels.
/// Per-point features of all feature levels are summed.
class OctreeGrid {
 public:
  OctreeGrid() = default;

  /// Allocates voxels by `criterion`. Features start at zero.
  static OctreeGrid build(const BatchField& field, const OctreeConfig& config, OctreeCriterion criterion);
  /// Rebuilds slot maps from per-level occupancy (level 1 first).
  static OctreeGrid from_occupancy(const OctreeConfig& config, std::vector<std::vector<std::uint8_t>> occupancy);

  const OctreeConfig& config() const { return config_; }
  Index feature_width() const { return config_.width; }
  static int resolution(int level) { return 1 << level; }

  bool voxel_present(int level, int i, int j, int k) const;
  /// Table row of a corner at a feature level, or -1 when absent.
  std::int32_t corner_slot(int level, int i, int j, int k) const;
  /// Occupancy flags for level l (1-based), x fastest.
  const std::vector<std::uint8_t>& occupancy(int level) const { return occupancy_.at(level - 1); }
  Index slot_count() const { return table.value.rows(); }

  /// K = 8 taps per feature level, levels in ascending order.
  GridTaps locate(const Coords& x) const;
  /// Trilinear feature of a single level, zero when the voxel is absent.
  Eigen::VectorXf interp(const Point3& x, int level) const;

  std::vector<Parameter<float>*> parameters() { return {&table}; }
  std::vector<const Parameter<float>*> parameters() const { return {&table}; }
  Var<float> interpolate(const std::vector<Var<float>>& tables, const Coords& x) const;

  Parameter<float> table;

 private:
  OctreeConfig config_;
  std::vector<std::vector<std::uint8_t>> occupancy_;
  std::vector<std::vector<std::int32_t>> slots_;  // per feature level, (res+1)^3
};

struct TriplaneConfig {
  int resolution = 64;
  Index width = 8;
};

/// Three axis-aligned feature planes (XY, XZ, YZ) of resolution R x R whose
/// nodes span [-1, 1]. Features of the three planes are summed.
class TriplaneGrid {
 public:
  TriplaneGrid() = default;
  explicit TriplaneGrid(const TriplaneConfig& config);

  const TriplaneConfig& config() const { return config_; }
  Index feature_width() const { return config_.width; }
  /// Table row of node (u, v) on plane p (0 = XY, 1 = XZ, 2 = YZ).
  Index node(int plane, int u, int v) const;

  /// K = 12 taps: 4 bilinear corners per plane.
  GridTaps locate(const Coords& x) const;
  Eigen::VectorXf interp(const Point3& x) const;

  std::vector<Parameter<float>*> parameters() { return {&table}; }
  std::vector<const Parameter<float>*> parameters() const { return {&table}; }
  Var<float> interpolate(const std::vector<Var<float>>& tables, const Coords& x) const;

  Parameter<float> table;

 private:
  TriplaneConfig config_;
};

struct HashConfig {
  int levels = 4;
  int min_resolution = 16;
  int max_resolution = 512;
  int log2_table_size = 19;
  Index width = 2;
};

/// Multiresolution hash grid. Per-level trilinear features are concatenated
/// in ascending resolution order.
class HashGrid {
 public:
  static constexpr std::array<std::uint32_t, 3> kPrimes = {1u, 2654435761u, 805459861u};

  HashGrid() = default;
  explicit HashGrid(const HashConfig& config);

  const HashConfig& config() const { return config_; }
  Index feature_width() const { return config_.width * config_.levels; }
  int resolution(int level) const { return resolutions_.at(level); }
  Index table_size(int level) const { return table_sizes_.at(level); }
  bool dense(int level) const;

  /// Table slot of an integer corner; dense x-fastest when the level's
  /// (res+1)^3 corners fit in the table, otherwise the XOR prime hash.
  std::uint32_t hash_index(int level, int x, int y, int z) const;

  /// 8 taps for one level.
  GridTaps locate(const Coords& x, int level) const;
  Eigen::VectorXf interp(const Point3& x) const;

  std::vector<Parameter<float>*> parameters();
  std::vector<const Parameter<float>*> parameters() const;
  Var<float> interpolate(const std::vector<Var<float>>& tables, const Coords& x) const;

  std::vector<Parameter<float>> tables;

 private:
  HashConfig config_;
  std::vector<int> resolutions_;
  std::vector<Index> table_sizes_;
};

using FeatureGrid = std::variant<OctreeGrid, TriplaneGrid, HashGrid>;

/// Fills every grid table with N(0, sd^2) draws.
void init_grid_features(FeatureGrid& grid, CounterRng& rng, double sd = 0.01);

}  // namespace inret
