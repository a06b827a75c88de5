#include "inret/shapes/manifest.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace inret {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<double> parse_numbers(const std::string& value, const std::string& source, int line) {
  std::vector<double> out;
  std::istringstream in(value);
  std::string tok;
  while (in >> tok) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      throw ParseError(source, line, "not a number: '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

std::string format_number(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

}  // namespace

std::vector<std::string> CorpusManifest::categories() const {
  std::vector<std::string> out;
  for (const auto& s : shapes)
    if (std::find(out.begin(), out.end(), s.category) == out.end()) out.push_back(s.category);
  return out;
}

std::vector<const ShapeDescriptor*> CorpusManifest::split(Split which) const {
  std::vector<const ShapeDescriptor*> out;
  for (const auto& s : shapes)
    if (s.split == which) out.push_back(&s);
  return out;
}

const ShapeDescriptor& CorpusManifest::find(const std::string& id) const {
  for (const auto& s : shapes)
    if (s.id == id) return s;
  throw InputError("no shape with id '" + id + "'");
}

void CorpusManifest::require_both_splits() const {
  for (const auto& c : categories()) {
    bool train = false, test = false;
    for (const auto& s : shapes) {
      if (s.category != c) continue;
      (s.split == Split::train ? train : test) = true;
    }
    if (!train || !test) throw InputError("category '" + c + "' is missing from the train or test split");
  }
}

CorpusSpec CorpusSpec::desk_default() {
  CorpusSpec spec;
  spec.categories = {{PrimitiveKind::sphere, "sphere"},
                     {PrimitiveKind::box, "box"},
                     {PrimitiveKind::torus, "torus"},
                     {PrimitiveKind::capsule, "capsule"}};
  return spec;
}

CorpusManifest generate_corpus(const CorpusSpec& spec, std::uint64_t seed) {
  if (spec.train_per_category < 0 || spec.train_per_category > spec.instances_per_category)
    throw ConfigError("train count must lie in [0, instances per category]");
  CorpusManifest manifest;
  for (std::size_t c = 0; c < spec.categories.size(); ++c) {
    const auto& cat = spec.categories[c];
    CounterRng rng(seed, stable_hash(cat.name));
    for (int i = 0; i < spec.instances_per_category; ++i) {
      Primitive p;
      p.kind = cat.kind;
      switch (cat.kind) {
        case PrimitiveKind::sphere: p.params = {rng.uniform(0.35, 0.6)}; break;
        case PrimitiveKind::box:
          p.params = {rng.uniform(0.25, 0.55), rng.uniform(0.25, 0.55), rng.uniform(0.25, 0.55)};
          break;
        case PrimitiveKind::torus: p.params = {rng.uniform(0.45, 0.6), rng.uniform(0.12, 0.22)}; break;
        case PrimitiveKind::capsule: p.params = {rng.uniform(0.25, 0.45), rng.uniform(0.2, 0.3)}; break;
      }
      for (int a = 0; a < 3; ++a)
        p.transform.translation[a] = rng.uniform(-spec.translation_jitter, spec.translation_jitter);
      ShapeDescriptor d;
      std::ostringstream id;
      id << cat.name << '_' << std::setw(3) << std::setfill('0') << i;
      d.id = id.str();
      d.category = cat.name;
      d.members = {p};
      d.split = i < spec.train_per_category ? Split::train : Split::test;
      d.seed = rng.next_u64() >> 11;
      manifest.shapes.push_back(std::move(d));
    }
  }
  return manifest;
}

CorpusManifest parse_manifest(const std::string& text, const std::string& source) {
  CorpusManifest manifest;
  std::set<std::string> ids;
  std::istringstream in(text);
  std::string raw;
  int line = 0, block_line = 0;
  ShapeDescriptor* current = nullptr;

  auto finish = [&]() {
    if (!current) return;
    if (current->id.empty()) throw ParseError(source, block_line, "shape block without id");
    if (current->category.empty()) throw ParseError(source, block_line, "shape '" + current->id + "' has no category");
    if (current->members.empty() == current->mesh.empty())
      throw ParseError(source, block_line, "shape '" + current->id + "' needs primitives or a mesh, not both");
    for (const auto& m : current->members)
      if (static_cast<int>(m.params.size()) != primitive_param_count(m.kind))
        throw ParseError(source, block_line,
                         "shape '" + current->id + "': " + to_string(m.kind) + " takes " +
                             std::to_string(primitive_param_count(m.kind)) + " parameters");
    if (current->members.size() > 4) throw ParseError(source, block_line, "at most 4 primitives per shape");
  };

  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty() || s[0] == '#') continue;
    if (s == "[shape]") {
      finish();
      manifest.shapes.emplace_back();
      current = &manifest.shapes.back();
      block_line = line;
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ParseError(source, line, "expected key=value, got '" + s + "'");
    if (!current) throw ParseError(source, line, "entry outside a [shape] block");
    const std::string key = trim(s.substr(0, eq)), value = trim(s.substr(eq + 1));
    if (key == "id") {
      if (value.empty()) throw ParseError(source, line, "empty id");
      if (!ids.insert(value).second) throw ParseError(source, line, "duplicate id '" + value + "'");
      current->id = value;
    } else if (key == "category") {
      current->category = value;
    } else if (key == "primitive") {
      Primitive p;
      try {
        p.kind = parse_primitive(value);
      } catch (const InputError& e) {
        throw ParseError(source, line, e.what());
      }
      current->members.push_back(p);
    } else if (key == "params" || key == "transform") {
      if (current->members.empty()) throw ParseError(source, line, key + " before primitive");
      auto nums = parse_numbers(value, source, line);
      auto& member = current->members.back();
      if (key == "params") {
        for (double v : nums)
          if (!(v > 0.0)) throw ParseError(source, line, "primitive parameters must be positive");
        member.params = std::move(nums);
      } else {
        if (nums.size() != 7) throw ParseError(source, line, "transform needs tx ty tz rx ry rz scale");
        if (!(nums[6] > 0.0)) throw ParseError(source, line, "transform scale must be positive");
        member.transform =
            Transform::from_euler({nums[0], nums[1], nums[2]}, {nums[3], nums[4], nums[5]}, nums[6]);
      }
    } else if (key == "mesh") {
      current->mesh = value;
    } else if (key == "split") {
      if (value == "train") current->split = Split::train;
      else if (value == "test") current->split = Split::test;
      else throw ParseError(source, line, "split must be train or test");
    } else if (key == "seed") {
      std::uint64_t v = 0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc() || ptr != value.data() + value.size()) throw ParseError(source, line, "bad seed");
      current->seed = v;
    } else {
      throw ParseError(source, line, "unknown key '" + key + "'");
    }
  }
  finish();
  return manifest;
}

CorpusManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open manifest " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_manifest(text.str(), path);
}

std::string format_manifest(const CorpusManifest& manifest) {
  std::ostringstream out;
  for (const auto& s : manifest.shapes) {
    out << "[shape]\n";
    out << "id=" << s.id << "\ncategory=" << s.category << "\n";
    out << "split=" << (s.split == Split::train ? "train" : "test") << "\nseed=" << s.seed << "\n";
    if (!s.mesh.empty()) out << "mesh=" << s.mesh << "\n";
    for (const auto& m : s.members) {
      out << "primitive=" << to_string(m.kind) << "\nparams=";
      for (std::size_t i = 0; i < m.params.size(); ++i) out << (i ? " " : "") << format_number(m.params[i]);
      const Point3& e = m.transform.euler;
      const Point3& t = m.transform.translation;
      out << "\ntransform=" << format_number(t.x()) << ' ' << format_number(t.y()) << ' ' << format_number(t.z())
          << ' ' << format_number(e.x()) << ' ' << format_number(e.y()) << ' ' << format_number(e.z()) << ' '
          << format_number(m.transform.scale) << "\n";
    }
    out << "\n";
  }
  return out.str();
}

void save_manifest(const CorpusManifest& manifest, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write manifest " + path);
  out << format_manifest(manifest);
}

std::unique_ptr<ShapeOracle> make_oracle(const ShapeDescriptor& shape, const std::string& base_dir) {
  if (!shape.mesh.empty()) {
    std::filesystem::path p(shape.mesh);
    if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
    return load_obj(p.string(), shape.id, shape.category);
  }
  return std::make_unique<AnalyticShape>(shape.id, shape.category, shape.members);
}

}  // namespace inret
