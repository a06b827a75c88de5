#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace inret {

/// Parsed command line of one subcommand. Unused fields keep their defaults.
struct RunConfig {
  std::string subcommand;
  std::string manifest;
  std::string out;
  std::string store;
  std::vector<std::string> stores;
  std::string query_store;
  std::string encoder;
  std::string inr;
  std::string query;
  std::string name;
  std::uint64_t seed = 0;
  std::string arch = "triplane";
  std::string target_arch = "hash";
  std::string source_arch;
  std::string fn = "sdf";
  std::string functions = "all";
  std::string mode = "unified";
  std::string split = "all";
  double lambda = 1.0;
  int lattice_n = 16;
  int k = 10;
  bool exclude_self = false;
  int epochs = 0;
  int instances = 10;
  int train_instances = 7;
  int points = 4096;
  int views = 12;
  int resolution = 224;

  /// Paths the subcommand reads.
  std::vector<std::string> inputs() const;
  /// Throws ConfigError on an unknown subcommand, a missing input path or an
  /// out-of-range value.
  void validate() const;
  /// Canonical JSON of the fields the subcommand uses; hashed into reports.
  std::string to_json() const;
};

}  // namespace inret
