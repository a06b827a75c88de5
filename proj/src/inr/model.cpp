#include "inret/inr/model.hpp"

namespace inret {

std::vector<Index> InrConfig::mlp_widths(ArchTag arch) const {
  if (arch == ArchTag::mlp) {
    std::vector<Index> w{3};
    for (int i = 0; i < siren_layers; ++i) w.push_back(siren_hidden);
    w.push_back(1);
    return w;
  }
  return {grid_feature_width(arch) + 3, grid_hidden, 1};
}

Index InrConfig::grid_feature_width(ArchTag arch) const {
  switch (arch) {
    case ArchTag::mlp: return 0;
    case ArchTag::octree: return octree.width;
    case ArchTag::triplane: return triplane.width;
    case ArchTag::hash: return hash.width * hash.levels;
  }
  throw TagError("invalid architecture tag");
}

InrModel::InrModel(ArchTag arch, FunctionTag fn, InrConfig config, Mlp mlp, std::optional<FeatureGrid> grid)
    : arch_(arch), fn_(fn), config_(std::move(config)), mlp_(std::move(mlp)), grid_(std::move(grid)) {
  if ((arch_ == ArchTag::mlp) == grid_.has_value())
    throw ContractError("an MLP-only INR has no grid and every grid INR has one");
  if (grid_) {
    const bool match = (arch_ == ArchTag::octree && std::holds_alternative<OctreeGrid>(*grid_)) ||
                       (arch_ == ArchTag::triplane && std::holds_alternative<TriplaneGrid>(*grid_)) ||
                       (arch_ == ArchTag::hash && std::holds_alternative<HashGrid>(*grid_));
    if (!match) throw ContractError("grid type does not match architecture " + to_string(arch_));
  }
  if (mlp_.widths() != config_.mlp_widths(arch_)) throw ShapeError("MLP widths do not match the INR configuration");
}

const FeatureGrid& InrModel::grid() const {
  if (!grid_) throw ContractError("MLP-only INR has no feature grid");
  return *grid_;
}

FeatureGrid& InrModel::grid() {
  if (!grid_) throw ContractError("MLP-only INR has no feature grid");
  return *grid_;
}

void require_domain(const Coords& x) {
  for (Index r = 0; r < x.rows(); ++r) inret::require_domain(Point3(x.row(r).transpose()));
}

template <typename Bind>
Var<float> InrModel::forward_impl(Tape<float>& tape, const Coords& x, Bind&& bind) const {
  std::vector<Var<float>> mlp_params;
  for (std::size_t i = 0; i < mlp_.weights.size(); ++i) {
    mlp_params.push_back(bind(mlp_.weights[i]));
    mlp_params.push_back(bind(mlp_.biases[i]));
  }
  Var<float> coords = tape.input(Tensor<float>::from_matrix(x.cast<float>()));
  if (!grid_) return mlp_.forward(coords, mlp_params);
  const Var<float> z = std::visit(
      [&](const auto& g) {
        std::vector<Var<float>> tables;
        for (const auto* p : g.parameters()) tables.push_back(bind(*p));
        return g.interpolate(tables, x);
      },
      *grid_);
  return mlp_.forward(concat_cols(std::vector<Var<float>>{z, coords}), mlp_params);
}

Eigen::VectorXf InrModel::eval(const Coords& x) const {
  require_domain(x);
  Eigen::VectorXf out(x.rows());
  for (Index start = 0; start < x.rows(); start += kEvalChunk) {
    const Index n = std::min(kEvalChunk, x.rows() - start);
    Tape<float> tape(false);
    const Var<float> y =
        forward_impl(tape, x.middleRows(start, n), [&](const Parameter<float>& p) { return tape.constant_ref(p.value); });
    out.segment(start, n) = y.value().data();
  }
  return out;
}

Var<float> InrModel::forward(Tape<float>& tape, const Coords& x) {
  require_domain(x);
  // Parameters are owned by this (non-const) model; the binder only reads them.
  return forward_impl(tape, x, [&](const Parameter<float>& p) {
    return tape.parameter(const_cast<Parameter<float>&>(p));
  });
}

RowMatrixXf InrModel::grid_features(const Coords& x) const {
  const FeatureGrid& g = grid();
  RowMatrixXf out(x.rows(), config_.grid_feature_width(arch_));
  for (Index start = 0; start < x.rows(); start += kEvalChunk) {
    const Index n = std::min(kEvalChunk, x.rows() - start);
    Tape<float> tape(false);
    const Var<float> z = std::visit(
        [&](const auto& grid) {
          std::vector<Var<float>> tables;
          for (const auto* p : grid.parameters()) tables.push_back(tape.constant_ref(p->value));
          return grid.interpolate(tables, x.middleRows(start, n));
        },
        g);
    out.middleRows(start, n) = z.value().matrix();
  }
  return out;
}

std::vector<Parameter<float>*> InrModel::parameters() {
  auto out = mlp_.parameters();
  for (auto* p : grid_parameters()) out.push_back(p);
  return out;
}

std::vector<const Parameter<float>*> InrModel::parameters() const {
  std::vector<const Parameter<float>*> out;
  for (std::size_t i = 0; i < mlp_.weights.size(); ++i) {
    out.push_back(&mlp_.weights[i]);
    out.push_back(&mlp_.biases[i]);
  }
  if (grid_) std::visit([&](const auto& g) { for (const auto* p : g.parameters()) out.push_back(p); }, *grid_);
  return out;
}

std::vector<Parameter<float>*> InrModel::grid_parameters() {
  if (!grid_) return {};
  return std::visit([](auto& g) { return g.parameters(); }, *grid_);
}

BatchField model_field(const InrModel& model) {
  return [&model](const Coords& x) -> Eigen::VectorXd { return model.eval(x).cast<double>(); };
}

}  // namespace inret
