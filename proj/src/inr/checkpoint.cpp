#include "inret/inr/checkpoint.hpp"

#include "inret/io/binary.hpp"
#include "inret/io/container.hpp"

namespace inret {

namespace {

std::vector<std::pair<std::string, double>> meta_entries(const InrConfig& c, const Mlp& mlp) {
  return {{"siren_layers", c.siren_layers},
          {"siren_hidden", static_cast<double>(c.siren_hidden)},
          {"siren_omega0", c.siren_omega0},
          {"grid_hidden", static_cast<double>(c.grid_hidden)},
          {"activation", static_cast<double>(mlp.activation)},
          {"omega0", mlp.omega0},
          {"octree.levels", c.octree.levels},
          {"octree.first_feature_level", c.octree.first_feature_level},
          {"octree.width", static_cast<double>(c.octree.width)},
          {"triplane.resolution", c.triplane.resolution},
          {"triplane.width", static_cast<double>(c.triplane.width)},
          {"hash.levels", c.hash.levels},
          {"hash.min_resolution", c.hash.min_resolution},
          {"hash.max_resolution", c.hash.max_resolution},
          {"hash.log2_table_size", c.hash.log2_table_size},
          {"hash.width", static_cast<double>(c.hash.width)}};
}

}  // namespace

std::vector<std::uint8_t> serialize_inr(const InrModel& model) {
  Container c;
  c.arch = static_cast<std::uint8_t>(model.arch());
  c.function = static_cast<std::uint8_t>(model.function());
  for (const auto& [name, value] : meta_entries(model.config(), model.mlp())) c.add_meta(name, value);
  for (const auto* p : model.parameters()) c.add(p->name, p->value);
  if (model.has_grid()) {
    if (const auto* oct = std::get_if<OctreeGrid>(&model.grid()))
      for (int l = 1; l <= oct->config().levels; ++l) c.add_bitmask("grid.occupancy." + std::to_string(l), oct->occupancy(l));
  }
  return c.serialize();
}

InrModel deserialize_inr(const std::vector<std::uint8_t>& bytes) {
  const Container c = Container::deserialize(bytes, "INRM checkpoint");
  ArchTag arch;
  FunctionTag fn;
  try {
    arch = arch_from_byte(c.arch);
    fn = function_from_byte(c.function);
  } catch (const TagError& e) {
    throw FormatError(std::string("INRM header: ") + e.what());
  }
  auto meta = [&](const std::string& name) { return c.meta(name); };
  auto load_into = [&](Parameter<float>& p) {
    p.value = c.tensor(p.name, p.value.shape());
    p.zero_grad();
  };

  InrConfig cfg;
  cfg.siren_layers = static_cast<int>(meta("siren_layers"));
  cfg.siren_hidden = static_cast<Index>(meta("siren_hidden"));
  cfg.siren_omega0 = static_cast<float>(meta("siren_omega0"));
  cfg.grid_hidden = static_cast<Index>(meta("grid_hidden"));
  cfg.octree.levels = static_cast<int>(meta("octree.levels"));
  cfg.octree.first_feature_level = static_cast<int>(meta("octree.first_feature_level"));
  cfg.octree.width = static_cast<Index>(meta("octree.width"));
  cfg.triplane.resolution = static_cast<int>(meta("triplane.resolution"));
  cfg.triplane.width = static_cast<Index>(meta("triplane.width"));
  cfg.hash.levels = static_cast<int>(meta("hash.levels"));
  cfg.hash.min_resolution = static_cast<int>(meta("hash.min_resolution"));
  cfg.hash.max_resolution = static_cast<int>(meta("hash.max_resolution"));
  cfg.hash.log2_table_size = static_cast<int>(meta("hash.log2_table_size"));
  cfg.hash.width = static_cast<Index>(meta("hash.width"));

  Mlp mlp;
  mlp.activation = static_cast<Activation>(static_cast<int>(meta("activation")));
  mlp.omega0 = static_cast<float>(meta("omega0"));
  const auto widths = cfg.mlp_widths(arch);
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    mlp.weights.emplace_back("mlp." + std::to_string(i) + ".weight", Tensor<float>::zeros({widths[i], widths[i + 1]}));
    mlp.biases.emplace_back("mlp." + std::to_string(i) + ".bias", Tensor<float>::zeros({widths[i + 1]}));
    load_into(mlp.weights.back());
    load_into(mlp.biases.back());
  }

  std::optional<FeatureGrid> grid;
  try {
    switch (arch) {
      case ArchTag::mlp: break;
      case ArchTag::octree: {
        std::vector<std::vector<std::uint8_t>> occ;
        for (int l = 1; l <= cfg.octree.levels; ++l) occ.push_back(c.get("grid.occupancy." + std::to_string(l)).bits);
        grid = OctreeGrid::from_occupancy(cfg.octree, std::move(occ));
        break;
      }
      case ArchTag::triplane: grid = TriplaneGrid(cfg.triplane); break;
      case ArchTag::hash: grid = HashGrid(cfg.hash); break;
    }
  } catch (const ConfigError& e) {
    throw FormatError(std::string("INRM grid configuration: ") + e.what());
  }
  if (grid) std::visit([&](auto& g) { for (auto* p : g.parameters()) load_into(*p); }, *grid);
  try {
    return InrModel(arch, fn, cfg, std::move(mlp), std::move(grid));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("inconsistent INRM checkpoint: ") + e.what());
  }
}

void save_inr(const InrModel& model, const std::string& path) { write_file(path, serialize_inr(model)); }

InrModel load_inr(const std::string& path) { return deserialize_inr(read_file(path)); }

}  // namespace inret
