#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "inret/inr/model.hpp"
#include "inret/io/container.hpp"

namespace inret {

/// INR checkpoint in the INRM container (see io/container.hpp): MLP and grid
/// tensors by parameter name, hyperparameters as "meta.*" records, octree
/// occupancy as "grid.occupancy.{level}" bitmasks.
std::vector<std::uint8_t> serialize_inr(const InrModel& model);
InrModel deserialize_inr(const std::vector<std::uint8_t>& bytes);

void save_inr(const InrModel& model, const std::string& path);
InrModel load_inr(const std::string& path);

}  // namespace inret
