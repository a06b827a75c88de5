#pragma once

#include <optional>

#include "inret/inr/grids.hpp"
#include "inret/inr/mlp.hpp"
#include "inret/tags.hpp"

namespace inret {

/// Architecture hyperparameters shared by every INR of a corpus.
struct InrConfig {
  /// SIREN hidden layers and width.
  int siren_layers = 4;
  Index siren_hidden = 64;
  float siren_omega0 = 30.0f;
  /// Hidden width of the single-hidden-layer MLP behind a grid.
  Index grid_hidden = 128;
  OctreeConfig octree;
  TriplaneConfig triplane;
  HashConfig hash;

  /// Widths of the MLP for an architecture (input first).
  std::vector<Index> mlp_widths(ArchTag arch) const;
  Index grid_feature_width(ArchTag arch) const;
};

/// One INR: f(x) = MLP(z(x) ++ x) for grid architectures, SIREN(x) otherwise.
class InrModel {
 public:
  InrModel() = default;
  InrModel(ArchTag arch, FunctionTag fn, InrConfig config, Mlp mlp, std::optional<FeatureGrid> grid);

  ArchTag arch() const { return arch_; }
  FunctionTag function() const { return fn_; }
  const InrConfig& config() const { return config_; }
  const Mlp& mlp() const { return mlp_; }
  Mlp& mlp() { return mlp_; }
  bool has_grid() const { return grid_.has_value(); }
  const FeatureGrid& grid() const;
  FeatureGrid& grid();

  /// Pure batched evaluation. Throws DomainError for coordinates outside the domain.
  Eigen::VectorXf eval(const Coords& x) const;
  /// Differentiable forward pass (B x 1) on a recording tape; gradients flow
  /// into this model's parameters.
  Var<float> forward(Tape<float>& tape, const Coords& x);
  /// Grid feature z(x) (B x width) on a non-recording tape.
  RowMatrixXf grid_features(const Coords& x) const;

  std::vector<Parameter<float>*> parameters();
  std::vector<const Parameter<float>*> parameters() const;
  std::vector<Parameter<float>*> grid_parameters();

 private:
  template <typename Bind>
  Var<float> forward_impl(Tape<float>& tape, const Coords& x, Bind&& bind) const;

  ArchTag arch_ = ArchTag::mlp;
  FunctionTag fn_ = FunctionTag::sdf;
  InrConfig config_;
  Mlp mlp_;
  std::optional<FeatureGrid> grid_;
};

/// Rows evaluated per chunk in InrModel::eval.
inline constexpr Index kEvalChunk = 8192;

void require_domain(const Coords& x);
BatchField model_field(const InrModel& model);

}  // namespace inret
