#include "inret/pipeline/run_config.hpp"

#include <algorithm>
#include <filesystem>
#include <map>

#include "json.hpp"

#include "inret/errors.hpp"
#include "inret/tags.hpp"

namespace inret {

namespace {

const std::map<std::string, std::vector<std::string>>& fields() {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"corpus-gen", {"out", "seed", "instances", "train_instances"}},
      {"train-inr", {"manifest", "out", "seed", "arch", "fn", "split", "epochs"}},
      {"distill", {"manifest", "out", "seed", "arch", "target_arch", "fn", "split"}},
      {"train-encoders",
       {"manifest", "out", "seed", "arch", "functions", "mode", "lambda", "lattice_n", "epochs", "name"}},
      {"encode", {"manifest", "out", "arch", "source_arch", "fn", "encoder", "store", "split"}},
      {"retrieve", {"out", "store", "query_store", "query", "k", "exclude_self"}},
      {"eval", {"manifest", "out", "stores"}},
      {"export-pointcloud", {"inr", "out", "seed", "points"}},
      {"export-views", {"inr", "out", "views", "resolution"}},
  };
  return table;
}

}  // namespace

std::vector<std::string> RunConfig::inputs() const {
  if (subcommand == "train-inr" || subcommand == "distill" || subcommand == "train-encoders") return {manifest};
  if (subcommand == "encode") return {manifest, encoder};
  if (subcommand == "retrieve") {
    std::vector<std::string> in{store};
    if (!query_store.empty()) in.push_back(query_store);
    return in;
  }
  if (subcommand == "eval") {
    std::vector<std::string> in{manifest};
    in.insert(in.end(), stores.begin(), stores.end());
    return in;
  }
  if (subcommand == "export-pointcloud" || subcommand == "export-views") return {inr};
  return {};
}

void RunConfig::validate() const {
  if (!fields().count(subcommand)) throw ConfigError("unknown subcommand '" + subcommand + "'");
  for (const auto& path : inputs()) {
    if (path.empty()) throw ConfigError(subcommand + ": missing input path");
    if (!std::filesystem::exists(path)) throw ConfigError(subcommand + ": no such file '" + path + "'");
  }
  if (out.empty()) throw ConfigError(subcommand + ": --out is required");
  try {
    parse_arch(arch);
    parse_arch(target_arch);
    if (!source_arch.empty()) parse_arch(source_arch);
    parse_function(fn);
    if (functions != "all") parse_function(functions);
  } catch (const TagError& e) {
    throw ConfigError(e.what());
  }
  if (mode != "unified" && mode != "separate") throw ConfigError("--mode must be unified or separate");
  if (split != "all" && split != "train" && split != "test") throw ConfigError("--split must be all, train or test");
  if (!(lambda >= 0.0)) throw ConfigError("--lambda must be >= 0");
  if (lattice_n < 1) throw ConfigError("--lattice-n must be >= 1");
  if (k < 1) throw ConfigError("--k must be >= 1");
  if (epochs < 0) throw ConfigError("--epochs must be >= 0");
  if (instances < 2 || train_instances < 1 || train_instances >= instances)
    throw ConfigError("need 1 <= --train < --instances");
  if (points < 1 || views < 1 || resolution < 1) throw ConfigError("--points, --views and --resolution must be >= 1");
  if (subcommand == "eval" && (stores.empty() || stores.size() > 3)) throw ConfigError("eval takes one to three --store");
  if (subcommand == "retrieve" && query.empty()) throw ConfigError("retrieve needs --query");
}

std::string RunConfig::to_json() const {
  const nlohmann::ordered_json all = {
      {"subcommand", subcommand}, {"manifest", manifest},   {"out", out},
      {"store", store},           {"stores", stores},       {"query_store", query_store},
      {"encoder", encoder},       {"inr", inr},             {"query", query},
      {"name", name},             {"seed", seed},           {"arch", arch},
      {"target_arch", target_arch}, {"source_arch", source_arch}, {"fn", fn},
      {"functions", functions},   {"mode", mode},           {"split", split},
      {"lambda", lambda},         {"lattice_n", lattice_n}, {"k", k},
      {"exclude_self", exclude_self}, {"epochs", epochs},   {"instances", instances},
      {"train_instances", train_instances}, {"points", points}, {"views", views},
      {"resolution", resolution}};
  nlohmann::ordered_json j;
  j["subcommand"] = subcommand;
  const auto it = fields().find(subcommand);
  if (it != fields().end())
    for (const auto& key : it->second) j[key] = all.at(key);
  return j.dump();
}

}  // namespace inret
