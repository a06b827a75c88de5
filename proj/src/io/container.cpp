#include "inret/io/container.hpp"

#include "inret/io/binary.hpp"

namespace inret {

void Container::push(const std::string& name, Record rec) {
  if (!index_.emplace(name, records_.size()).second) throw FormatError("duplicate record '" + name + "'");
  records_.emplace_back(name, std::move(rec));
}

void Container::add(const std::string& name, const Tensor<float>& value) {
  Record rec;
  rec.dims = value.shape();
  rec.floats.assign(value.ptr(), value.ptr() + value.size());
  push(name, std::move(rec));
}

void Container::add_meta(const std::string& name, double value) {
  add("meta." + name, Tensor<float>::constant({1}, static_cast<float>(value)));
}

void Container::add_bitmask(const std::string& name, const std::vector<std::uint8_t>& flags) {
  Record rec;
  rec.dtype = RecordType::bitmask;
  rec.dims = {static_cast<Index>(flags.size())};
  rec.bits = flags;
  push(name, std::move(rec));
}

const Record& Container::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw FormatError("INRM container lacks record '" + name + "'");
  return records_[it->second].second;
}

Tensor<float> Container::tensor(const std::string& name) const {
  const Record& rec = get(name);
  if (rec.dtype != RecordType::f32) throw FormatError("record '" + name + "' is not f32");
  Tensor<float> t(rec.dims);
  for (Index k = 0; k < t.size(); ++k) t[k] = rec.floats[static_cast<std::size_t>(k)];
  return t;
}

Tensor<float> Container::tensor(const std::string& name, const Shape& shape) const {
  Tensor<float> t = tensor(name);
  if (t.shape() != shape)
    throw FormatError("record '" + name + "' has shape " + shape_string(t.shape()) + ", expected " +
                      shape_string(shape));
  return t;
}

double Container::meta(const std::string& name) const {
  const Record& rec = get("meta." + name);
  if (rec.dtype != RecordType::f32 || rec.floats.size() != 1) throw FormatError("meta record '" + name + "' is not a scalar");
  return static_cast<double>(rec.floats[0]);
}

std::vector<std::uint8_t> Container::serialize() const {
  BinaryWriter w;
  w.bytes("INRM", 4);
  w.u16(kInrmVersion);
  w.u8(arch);
  w.u8(function);
  w.u32(static_cast<std::uint32_t>(records_.size()));
  for (const auto& [name, rec] : records_) {
    w.str16(name);
    w.u8(static_cast<std::uint8_t>(rec.dtype));
    w.u8(static_cast<std::uint8_t>(rec.dims.size()));
    for (Index d : rec.dims) w.u32(static_cast<std::uint32_t>(d));
    if (rec.dtype == RecordType::f32) {
      for (float v : rec.floats) w.f32(v);
    } else {
      std::vector<std::uint8_t> packed((rec.bits.size() + 7) / 8, 0);
      for (std::size_t i = 0; i < rec.bits.size(); ++i)
        if (rec.bits[i]) packed[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
      w.bytes(packed.data(), packed.size());
    }
  }
  return w.take();
}

Container Container::deserialize(const std::vector<std::uint8_t>& bytes, const std::string& what) {
  BinaryReader r(bytes, what);
  char magic[4];
  r.bytes(magic, 4);
  if (std::string(magic, 4) != "INRM") throw FormatError(what + ": bad magic");
  const std::uint16_t version = r.u16();
  if (version != kInrmVersion) throw FormatError(what + ": unsupported INRM version " + std::to_string(version));
  Container c;
  c.arch = r.u8();
  c.function = r.u8();
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str16();
    Record rec;
    const std::uint8_t dtype = r.u8();
    if (dtype > 1) throw FormatError("record '" + name + "' has unknown dtype " + std::to_string(dtype));
    rec.dtype = static_cast<RecordType>(dtype);
    const std::uint8_t rank = r.u8();
    for (int d = 0; d < rank; ++d) rec.dims.push_back(r.u32());
    const Index n = shape_size(rec.dims);
    if (rec.dtype == RecordType::f32) {
      if (static_cast<std::size_t>(n) * 4 > r.remaining()) throw FormatError("record '" + name + "' is truncated");
      rec.floats.resize(static_cast<std::size_t>(n));
      for (auto& v : rec.floats) v = r.f32();
    } else {
      std::vector<std::uint8_t> packed((static_cast<std::size_t>(n) + 7) / 8);
      r.bytes(packed.data(), packed.size());
      rec.bits.resize(static_cast<std::size_t>(n));
      for (std::size_t k = 0; k < rec.bits.size(); ++k) rec.bits[k] = (packed[k / 8] >> (k % 8)) & 1u;
    }
    c.push(name, std::move(rec));
  }
  if (r.remaining() != 0) throw FormatError(what + ": trailing bytes after records");
  return c;
}

}  // namespace inret
