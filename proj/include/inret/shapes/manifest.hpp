#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "inret/shapes/oracle.hpp"

namespace inret {

enum class Split { train, test };

struct ShapeDescriptor {
  std::string id;
  std::string category;
  std::vector<Primitive> members;
  /// Optional OBJ path; when set the shape uses the mesh oracle.
  std::string mesh;
  Split split = Split::train;
  std::uint64_t seed = 0;
};

struct CorpusManifest {
  std::vector<ShapeDescriptor> shapes;

  std::vector<std::string> categories() const;
  std::vector<const ShapeDescriptor*> split(Split s) const;
  const ShapeDescriptor& find(const std::string& id) const;
  /// Throws InputError unless every category has shapes in both splits.
  void require_both_splits() const;
};

struct CategorySpec {
  PrimitiveKind kind;
  std::string name;
};

struct CorpusSpec {
  std::vector<CategorySpec> categories;
  int instances_per_category = 10;
  int train_per_category = 7;
  /// Maximum translation jitter per axis.
  double translation_jitter = 0.05;

  /// sphere, box, torus, capsule.
  static CorpusSpec desk_default();
};

/// Procedural corpus: axis-aligned primitives with jittered sizes and small
/// translations, all inside the domain with margin >= 0.05.
CorpusManifest generate_corpus(const CorpusSpec& spec, std::uint64_t seed);

CorpusManifest parse_manifest(const std::string& text, const std::string& source = "<manifest>");
CorpusManifest load_manifest(const std::string& path);
std::string format_manifest(const CorpusManifest& manifest);
void save_manifest(const CorpusManifest& manifest, const std::string& path);

/// Builds the oracle for a descriptor. Relative mesh paths resolve against `base_dir`.
std::unique_ptr<ShapeOracle> make_oracle(const ShapeDescriptor& shape, const std::string& base_dir = "");

}  // namespace inret
