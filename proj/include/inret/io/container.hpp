#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "inret/tensor/tensor.hpp"

namespace inret {

inline constexpr std::uint16_t kInrmVersion = 1;

enum class RecordType : std::uint8_t { f32 = 0, bitmask = 1 };

struct Record {
  RecordType dtype = RecordType::f32;
  Shape dims;
  std::vector<float> floats;
  /// One byte per flag after decoding.
  std::vector<std::uint8_t> bits;
};

/// Named-record INRM container (little endian):
///   "INRM" | u16 version | u8 architecture | u8 function | u32 record count
///   record: u16 name length | name | u8 dtype (0 = f32, 1 = u8 bitmask) |
///           u8 rank | u32 dims[rank] | payload
/// f32 payloads are row-major. Bitmask payloads pack prod(dims) bits, least
/// significant bit first. Scalars are stored as "meta.*" records.
class Container {
 public:
  std::uint8_t arch = 0;
  std::uint8_t function = 0;

  void add(const std::string& name, const Tensor<float>& value);
  void add_meta(const std::string& name, double value);
  void add_bitmask(const std::string& name, const std::vector<std::uint8_t>& flags);

  bool has(const std::string& name) const { return index_.count(name) != 0; }
  const Record& get(const std::string& name) const;
  Tensor<float> tensor(const std::string& name) const;
  /// Tensor record that must have `shape`.
  Tensor<float> tensor(const std::string& name, const Shape& shape) const;
  double meta(const std::string& name) const;
  const std::vector<std::pair<std::string, Record>>& records() const { return records_; }

  std::vector<std::uint8_t> serialize() const;
  /// Throws FormatError on bad magic, version, truncation, duplicates or trailing bytes.
  static Container deserialize(const std::vector<std::uint8_t>& bytes, const std::string& what);

 private:
  void push(const std::string& name, Record rec);

  std::vector<std::pair<std::string, Record>> records_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace inret
