#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "inret/errors.hpp"

namespace inret {

/// Implicit function represented by an INR. Values are stable on disk.
enum class FunctionTag : std::uint8_t { sdf = 0, udf = 1, occ = 2 };

/// INR architecture. Values are stable on disk.
enum class ArchTag : std::uint8_t { mlp = 0, octree = 1, triplane = 2, hash = 3 };

inline constexpr std::array<FunctionTag, 3> kAllFunctions = {FunctionTag::sdf, FunctionTag::udf, FunctionTag::occ};
inline constexpr std::array<ArchTag, 4> kAllArchs = {ArchTag::mlp, ArchTag::octree, ArchTag::triplane, ArchTag::hash};

inline std::string to_string(FunctionTag f) {
  switch (f) {
    case FunctionTag::sdf: return "sdf";
    case FunctionTag::udf: return "udf";
    case FunctionTag::occ: return "occ";
  }
  throw TagError("invalid function tag " + std::to_string(static_cast<int>(f)));
}

inline std::string to_string(ArchTag a) {
  switch (a) {
    case ArchTag::mlp: return "mlp";
    case ArchTag::octree: return "octree";
    case ArchTag::triplane: return "triplane";
    case ArchTag::hash: return "hash";
  }
  throw TagError("invalid architecture tag " + std::to_string(static_cast<int>(a)));
}

inline FunctionTag parse_function(std::string_view s) {
  for (auto f : kAllFunctions)
    if (to_string(f) == s) return f;
  throw TagError("unknown implicit function '" + std::string(s) + "'");
}

inline ArchTag parse_arch(std::string_view s) {
  for (auto a : kAllArchs)
    if (to_string(a) == s) return a;
  throw TagError("unknown architecture '" + std::string(s) + "'");
}

inline FunctionTag function_from_byte(std::uint8_t b) {
  if (b > 2) throw TagError("invalid function tag byte " + std::to_string(b));
  return static_cast<FunctionTag>(b);
}

inline ArchTag arch_from_byte(std::uint8_t b) {
  if (b > 3) throw TagError("invalid architecture tag byte " + std::to_string(b));
  return static_cast<ArchTag>(b);
}

inline int function_index(FunctionTag f) { return static_cast<int>(f); }

}  // namespace inret
