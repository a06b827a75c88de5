#include "inret/retrieval/store.hpp"

#include "inret/io/binary.hpp"

namespace inret {

void EmbeddingStore::add(EmbeddingRecord record) {
  if (record.id.empty()) throw InputError("embedding record needs an id");
  if (contains(record.id)) throw InputError("duplicate shape id '" + record.id + "' in store");
  if (record.embedding.size() != kStoredEmbeddingWidth)
    throw InputError("embedding of '" + record.id + "' has " + std::to_string(record.embedding.size()) +
                     " entries, expected " + std::to_string(kStoredEmbeddingWidth));
  if (!record.embedding.allFinite()) throw NumericError("embedding of '" + record.id + "' is not finite");
  if (record.embedding.isZero(0.0f)) throw NumericError("embedding of '" + record.id + "' is all zero");
  index_.emplace(record.id, records_.size());
  records_.push_back(std::move(record));
}

const EmbeddingRecord& EmbeddingStore::find(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw InputError("no embedding with id '" + id + "'");
  return records_[it->second];
}

Labels EmbeddingStore::labels() const {
  Labels out;
  for (const auto& r : records_) out.emplace(r.id, r.category);
  return out;
}

std::vector<std::uint8_t> serialize_store(const EmbeddingStore& store) {
  BinaryWriter w;
  w.bytes("INRS", 4);
  w.u16(kInrsVersion);
  w.u32(static_cast<std::uint32_t>(store.size()));
  for (const auto& r : store.records()) {
    w.str16(r.id);
    w.str16(r.category);
    w.u8(static_cast<std::uint8_t>(r.fn));
    w.u8(static_cast<std::uint8_t>(r.arch));
    for (Eigen::Index i = 0; i < r.embedding.size(); ++i) w.f32(r.embedding[i]);
  }
  return w.take();
}

EmbeddingStore deserialize_store(const std::vector<std::uint8_t>& bytes, const std::string& what) {
  BinaryReader r(bytes, what);
  char magic[4];
  r.bytes(magic, 4);
  if (std::string(magic, 4) != "INRS") throw FormatError(what + ": bad magic");
  const std::uint16_t version = r.u16();
  if (version != kInrsVersion) throw FormatError(what + ": unsupported INRS version " + std::to_string(version));
  const std::uint32_t count = r.u32();
  EmbeddingStore store;
  for (std::uint32_t k = 0; k < count; ++k) {
    EmbeddingRecord rec;
    rec.id = r.str16();
    rec.category = r.str16();
    try {
      rec.fn = function_from_byte(r.u8());
      rec.arch = arch_from_byte(r.u8());
    } catch (const TagError& e) {
      throw FormatError(what + ": record " + std::to_string(k) + ": " + e.what());
    }
    rec.embedding.resize(kStoredEmbeddingWidth);
    for (Eigen::Index i = 0; i < kStoredEmbeddingWidth; ++i) rec.embedding[i] = r.f32();
    try {
      store.add(std::move(rec));
    } catch (const std::exception& e) {
      throw FormatError(what + ": record " + std::to_string(k) + ": " + e.what());
    }
  }
  if (r.remaining() != 0) throw FormatError(what + ": " + std::to_string(r.remaining()) + " trailing bytes");
  return store;
}

void save_store(const EmbeddingStore& store, const std::string& path) { write_file(path, serialize_store(store)); }

EmbeddingStore load_store(const std::string& path) { return deserialize_store(read_file(path), path); }

}  // namespace inret
