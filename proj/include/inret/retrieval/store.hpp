#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "inret/tags.hpp"

namespace inret {

inline constexpr std::uint16_t kInrsVersion = 1;
inline constexpr Eigen::Index kStoredEmbeddingWidth = 1024;

struct EmbeddingRecord {
  std::string id;
  std::string category;
  FunctionTag fn = FunctionTag::sdf;
  ArchTag arch = ArchTag::triplane;
  Eigen::VectorXf embedding;
};

/// id -> category.
using Labels = std::unordered_map<std::string, std::string>;

/// Embeddings in insertion order with unique ids.
class EmbeddingStore {
 public:
  /// Throws InputError on a duplicate id or an embedding that is not 1024
  /// long, NumericError when it is non-finite or all zero.
  void add(EmbeddingRecord record);

  const std::vector<EmbeddingRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  bool contains(const std::string& id) const { return index_.count(id) > 0; }
  const EmbeddingRecord& find(const std::string& id) const;

  Labels labels() const;

 private:
  std::vector<EmbeddingRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// "INRS", u16 version, u32 count, then per record: u16-prefixed id and
/// category, fn u8, arch u8, 1024 little-endian f32.
std::vector<std::uint8_t> serialize_store(const EmbeddingStore& store);
EmbeddingStore deserialize_store(const std::vector<std::uint8_t>& bytes, const std::string& what = "store");
void save_store(const EmbeddingStore& store, const std::string& path);
EmbeddingStore load_store(const std::string& path);

}  // namespace inret
