#include "inret/pipeline/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <sstream>

#include "json.hpp"

#include "inret/inr/checkpoint.hpp"
#include "inret/retrieval/metrics.hpp"

namespace inret {

namespace fs = std::filesystem;

namespace {

using clock_type = std::chrono::steady_clock;

double since(clock_type::time_point start) {
  return std::chrono::duration<double>(clock_type::now() - start).count();
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

}  // namespace

fs::path Workspace::inr(ArchTag arch, FunctionTag fn, const std::string& id) const {
  return root / "inrs" / to_string(arch) / to_string(fn) / (id + ".inrm");
}

fs::path Workspace::distilled(ArchTag source, ArchTag target, FunctionTag fn, const std::string& id) const {
  return root / "distilled" / (to_string(source) + "-" + to_string(target)) / to_string(fn) / (id + ".inrm");
}

fs::path Workspace::encoder(const std::string& name) const { return root / "encoders" / (name + ".inrm"); }
fs::path Workspace::store(const std::string& name) const { return root / "stores" / (name + ".inrs"); }
fs::path Workspace::report(const std::string& name) const { return root / "reports" / (name + ".jsonl"); }

std::uint64_t derive_seed(std::uint64_t seed, const std::string& purpose) {
  return CounterRng(seed, stable_hash(purpose)).next_u64();
}

TrainConfig inr_train_config(ArchTag arch, FunctionTag fn, const std::string& id, std::uint64_t seed) {
  TrainConfig cfg = TrainConfig::desk(arch, fn);
  cfg.seed = derive_seed(seed, "inr/" + id + "/" + to_string(fn));
  cfg.sample_seed = derive_seed(seed, "points/" + id);
  cfg.template_seed = seed;
  return cfg;
}

std::vector<InrJob> train_inrs(const std::vector<const ShapeDescriptor*>& shapes, ArchTag arch, FunctionTag fn,
                               const Workspace& ws, std::uint64_t seed, int epochs, const std::string& base_dir) {
  std::vector<InrJob> jobs;
  for (const ShapeDescriptor* shape : shapes) {
    const auto start = clock_type::now();
    TrainConfig cfg = inr_train_config(arch, fn, shape->id, seed);
    if (epochs > 0) cfg.epochs = epochs;
    const auto oracle = make_oracle(*shape, base_dir);
    const TrainResult r = train_inr(*oracle, cfg);
    const fs::path out = ws.inr(arch, fn, shape->id);
    ensure_parent(out);
    save_inr(r.model, out.string());
    jobs.push_back({shape->id, r.log.back().mean_loss, since(start)});
  }
  return jobs;
}

double field_mae(const BatchField& a, const BatchField& b, const ShapeOracle& oracle, FunctionTag fn,
                 std::uint64_t seed) {
  const PointBatch pts = sample_training_points(oracle, fn, SampleCounts{2000, 4000, 4000}, seed);
  return (a(pts.coords) - b(pts.coords)).cwiseAbs().mean();
}

std::vector<DistillJob> distill_inrs(const std::vector<const ShapeDescriptor*>& shapes, ArchTag source,
                                     ArchTag target, FunctionTag fn, const Workspace& ws, std::uint64_t seed,
                                     const std::string& base_dir) {
  std::vector<DistillJob> jobs;
  for (const ShapeDescriptor* shape : shapes) {
    const auto start = clock_type::now();
    const InrModel src = load_inr(ws.inr(source, fn, shape->id).string());
    if (src.function() != fn)
      throw TagError("'" + shape->id + "': expected a " + to_string(fn) + " INR, found " + to_string(src.function()));
    // Seeds of a native INR of this shape: same MLP template and feature init.
    const TrainConfig cfg = inr_train_config(target, fn, shape->id, seed);
    const TrainResult r = distill_inr(src, target, cfg);
    const fs::path out = ws.distilled(source, target, fn, shape->id);
    ensure_parent(out);
    save_inr(r.model, out.string());
    const auto oracle = make_oracle(*shape, base_dir);
    const double mae = field_mae(model_field(r.model), model_field(src), *oracle, fn,
                                 derive_seed(seed, "distill-eval/" + shape->id));
    jobs.push_back({shape->id, r.log.back().mean_loss, mae, since(start)});
  }
  return jobs;
}

void EncoderJob::validate() const {
  if (name.empty()) throw ConfigError("encoder job needs a name");
  if (functions.size() != 1 && functions.size() != 3)
    throw ConfigError("encoder job trains one function or all three");
  if (lattice_n < 1) throw ConfigError("lattice N must be >= 1");
  train_config().validate();
}

EncoderTrainConfig EncoderJob::train_config() const {
  EncoderTrainConfig t;
  t.epochs = epochs;
  t.lambda = lambda;
  t.mode = mode;
  t.seed = seed;
  return t;
}

EncoderTrainResult train_encoder_job(const CorpusManifest& manifest, const Workspace& ws, const EncoderJob& job,
                                     const std::string& base_dir) {
  job.validate();
  const auto shapes = manifest.split(Split::train);
  if (shapes.empty()) throw InputError("manifest has no training shapes");
  std::vector<std::unique_ptr<ShapeOracle>> oracles;
  std::vector<std::array<InrModel, 3>> inrs(shapes.size());
  std::vector<EncoderTrainItem> items;
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    oracles.push_back(make_oracle(*shapes[k], base_dir));
    EncoderTrainItem item{oracles.back().get(), {}};
    for (FunctionTag fn : job.functions) {
      InrModel& m = inrs[k][function_index(fn)];
      m = load_inr(ws.inr(job.arch, fn, shapes[k]->id).string());
      if (m.arch() != job.arch)
        throw TagError("'" + shapes[k]->id + "': expected a " + to_string(job.arch) + " INR, found " +
                       to_string(m.arch()));
      item.inrs[function_index(fn)] = &m;
    }
    items.push_back(item);
  }
  const EncoderConfig config =
      EncoderConfig::for_inr(job.arch, TrainConfig::desk(job.arch, job.functions.front()).inr, job.lattice_n);
  EncoderTrainResult r = job.functions.size() == 1
                             ? train_encoder_single(items, job.functions.front(), config, job.train_config())
                             : train_encoders(items, config, job.train_config());
  const fs::path out = ws.encoder(job.name);
  ensure_parent(out);
  save_encoder_set(r.set, out.string());
  return r;
}

EmbeddingStore encode_inrs(const EncoderSet& set, const std::vector<const ShapeDescriptor*>& shapes,
                           const std::vector<fs::path>& inr_paths) {
  if (shapes.size() != inr_paths.size()) throw ContractError("one INR path per shape expected");
  EmbeddingStore store;
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    const InrModel m = load_inr(inr_paths[k].string());
    if (!set.has(m.function()))
      throw TagError("encoder set has no " + to_string(m.function()) + " branch for " + inr_paths[k].string());
    store.add({shapes[k]->id, shapes[k]->category, m.function(), m.arch(), encode(set, m)});
  }
  return store;
}

EmbeddingStore split_store(const EmbeddingStore& store, const CorpusManifest& manifest, Split split) {
  EmbeddingStore out;
  for (const EmbeddingRecord& r : store.records())
    if (manifest.find(r.id).split == split) out.add(r);
  return out;
}

EvalCell evaluate_pair(const CorpusManifest& manifest, const EmbeddingStore& queries,
                       const EmbeddingStore& retrieval) {
  const EmbeddingStore q = split_store(queries, manifest, Split::test);
  const EmbeddingStore r = split_store(retrieval, manifest, Split::train);
  if (q.empty()) throw InputError("query store holds no test-split shapes");
  std::vector<RetrievalResult> results;
  for (const EmbeddingRecord& rec : q.records()) results.push_back(retrieve_topk(rec.embedding, r, 10, rec.id));
  Labels labels;
  for (const ShapeDescriptor& s : manifest.shapes) labels[s.id] = s.category;
  EvalCell cell;
  cell.query = q.records().front().fn;
  cell.retrieval = r.records().front().fn;
  cell.map1 = map_at_k(results, labels, 1);
  cell.map5 = map_at_k(results, labels, 5);
  cell.map10 = map_at_k(results, labels, 10);
  cell.prf = prf1_at_10(results, labels);
  return cell;
}

CandidateShape point_cloud_candidate(const InrModel& model, const ShapeDescriptor& shape, const ChamferConfig& cfg) {
  cfg.validate();
  const TraceConfig trace;
  CandidateShape c;
  c.id = shape.id;
  c.category = shape.category;
  c.fine = sample_point_cloud(model, cfg.fine, trace, derive_seed(cfg.seed, "fine/" + shape.id));
  c.coarse = sample_point_cloud(model, cfg.coarse, trace, derive_seed(cfg.seed, "coarse/" + shape.id));
  return c;
}

std::string ReportContext::config_hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(stable_hash(config_json)));
  return buf;
}

void ReportWriter::metric(const std::string& name, double value,
                          const std::vector<std::pair<std::string, std::string>>& labels) {
  nlohmann::ordered_json j;
  j["subcommand"] = context_.subcommand;
  j["metric"] = name;
  for (const auto& [k, v] : labels) j[k] = v;
  j["value"] = value;
  j["config_hash"] = context_.config_hash();
  j["seed"] = context_.seed;
  j["lattice_n"] = context_.lattice_n;
  j["chamfer"] = kChamferDefinition;
  lines_.push_back(j.dump());
}

std::string ReportWriter::text() const {
  nlohmann::ordered_json head;
  head["subcommand"] = context_.subcommand;
  head["config"] = nlohmann::ordered_json::parse(context_.config_json);
  head["config_hash"] = context_.config_hash();
  head["seed"] = context_.seed;
  head["lattice_n"] = context_.lattice_n;
  head["chamfer"] = kChamferDefinition;
  std::string out = head.dump() + "\n";
  for (const auto& line : lines_) out += line + "\n";
  return out;
}

void ReportWriter::save(const fs::path& path) const {
  ensure_parent(path);
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << text();
  if (!out) throw InputError("failed writing " + path.string());
}

std::string format_eval_table(const std::vector<EvalCell>& cells) {
  std::ostringstream out;
  out << std::left << std::setw(7) << "query" << std::setw(11) << "retrieval" << std::right << std::setw(8)
      << "mAP@1" << std::setw(8) << "mAP@5" << std::setw(8) << "mAP@10" << std::setw(8) << "P@10" << std::setw(8)
      << "R@10" << std::setw(8) << "F1@10" << '\n';
  out << std::fixed << std::setprecision(3);
  for (const EvalCell& c : cells)
    out << std::left << std::setw(7) << to_string(c.query) << std::setw(11) << to_string(c.retrieval) << std::right
        << std::setw(8) << c.map1 << std::setw(8) << c.map5 << std::setw(8) << c.map10 << std::setw(8)
        << c.prf.precision << std::setw(8) << c.prf.recall << std::setw(8) << c.prf.f1 << '\n';
  return out.str();
}

}  // namespace inret
