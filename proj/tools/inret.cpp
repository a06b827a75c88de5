#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"

#include "inret/convert/trace.hpp"
#include "inret/inr/checkpoint.hpp"
#include "inret/log.hpp"
#include "inret/pipeline/pipeline.hpp"
#include "inret/pipeline/run_config.hpp"
#include "inret/retrieval/metrics.hpp"

using namespace inret;
namespace fs = std::filesystem;

namespace {

std::vector<const ShapeDescriptor*> select(const CorpusManifest& manifest, const std::string& split) {
  if (split == "train") return manifest.split(Split::train);
  if (split == "test") return manifest.split(Split::test);
  std::vector<const ShapeDescriptor*> all;
  for (const auto& s : manifest.shapes) all.push_back(&s);
  return all;
}

std::string base_dir(const RunConfig& rc) { return fs::path(rc.manifest).parent_path().string(); }

ReportWriter report(const RunConfig& rc) { return ReportWriter({rc.subcommand, rc.to_json(), rc.seed, rc.lattice_n}); }

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

void corpus_gen(const RunConfig& rc) {
  CorpusSpec spec = CorpusSpec::desk_default();
  spec.instances_per_category = rc.instances;
  spec.train_per_category = rc.train_instances;
  const CorpusManifest manifest = generate_corpus(spec, rc.seed);
  const Workspace ws{rc.out};
  fs::create_directories(ws.root);
  save_manifest(manifest, ws.manifest().string());
  ReportWriter rep = report(rc);
  std::cout << std::left << std::setw(10) << "category" << std::right << std::setw(7) << "train" << std::setw(7)
            << "test" << '\n';
  for (const auto& cat : manifest.categories()) {
    int train = 0, test = 0;
    for (const auto& s : manifest.shapes)
      if (s.category == cat) ++(s.split == Split::train ? train : test);
    rep.metric("train_shapes", train, {{"category", cat}});
    rep.metric("test_shapes", test, {{"category", cat}});
    std::cout << std::left << std::setw(10) << cat << std::right << std::setw(7) << train << std::setw(7) << test
              << '\n';
  }
  rep.save(ws.report("corpus-gen"));
  std::cout << "manifest: " << ws.manifest().string() << '\n';
}

void train_inr_cmd(const RunConfig& rc) {
  const CorpusManifest manifest = load_manifest(rc.manifest);
  const Workspace ws{rc.out};
  const ArchTag arch = parse_arch(rc.arch);
  const FunctionTag fn = parse_function(rc.fn);
  ReportWriter rep = report(rc);
  std::cout << std::left << std::setw(16) << "shape" << std::right << std::setw(12) << "loss" << std::setw(10)
            << "seconds" << '\n';
  for (const auto& job : train_inrs(select(manifest, rc.split), arch, fn, ws, rc.seed, rc.epochs, base_dir(rc))) {
    rep.metric("final_loss", job.final_loss, {{"id", job.id}});
    rep.metric("seconds", job.seconds, {{"id", job.id}});
    std::cout << std::left << std::setw(16) << job.id << std::right << std::setw(12) << fmt(job.final_loss, 6)
              << std::setw(10) << fmt(job.seconds, 2) << '\n';
  }
  rep.save(ws.report("train-inr-" + rc.arch + "-" + rc.fn));
}

void distill_cmd(const RunConfig& rc) {
  const CorpusManifest manifest = load_manifest(rc.manifest);
  const Workspace ws{rc.out};
  ReportWriter rep = report(rc);
  std::cout << std::left << std::setw(16) << "shape" << std::right << std::setw(12) << "mae" << std::setw(10)
            << "seconds" << '\n';
  for (const auto& job : distill_inrs(select(manifest, rc.split), parse_arch(rc.arch), parse_arch(rc.target_arch),
                                      parse_function(rc.fn), ws, rc.seed, base_dir(rc))) {
    rep.metric("mae_vs_source", job.mae, {{"id", job.id}});
    rep.metric("final_loss", job.final_loss, {{"id", job.id}});
    std::cout << std::left << std::setw(16) << job.id << std::right << std::setw(12) << fmt(job.mae, 6)
              << std::setw(10) << fmt(job.seconds, 2) << '\n';
  }
  rep.save(ws.report("distill-" + rc.arch + "-" + rc.target_arch + "-" + rc.fn));
}

void train_encoders_cmd(const RunConfig& rc) {
  const CorpusManifest manifest = load_manifest(rc.manifest);
  const Workspace ws{rc.out};
  EncoderJob job;
  job.arch = parse_arch(rc.arch);
  if (rc.functions != "all") job.functions = {parse_function(rc.functions)};
  job.name = rc.name.empty() ? rc.arch + "-" + rc.functions : rc.name;
  job.mode = rc.mode == "separate" ? DecoderMode::separate : DecoderMode::unified;
  job.lambda = rc.lambda;
  job.lattice_n = rc.lattice_n;
  if (rc.epochs > 0) job.epochs = rc.epochs;
  job.seed = rc.seed;
  const EncoderTrainResult r = train_encoder_job(manifest, ws, job, base_dir(rc));
  ReportWriter rep = report(rc);
  for (const auto& e : r.log) {
    const std::vector<std::pair<std::string, std::string>> at{{"epoch", std::to_string(e.epoch)}};
    rep.metric("loss", e.loss, at);
    rep.metric("reconstruction", e.reconstruction, at);
    rep.metric("pairwise", e.pairwise, at);
  }
  rep.save(ws.report("train-encoders-" + job.name));
  const auto& last = r.log.back();
  std::cout << std::left << std::setw(8) << "epoch" << std::right << std::setw(12) << "loss" << std::setw(16)
            << "reconstruction" << std::setw(12) << "pairwise" << '\n'
            << std::left << std::setw(8) << last.epoch << std::right << std::setw(12) << fmt(last.loss, 6)
            << std::setw(16) << fmt(last.reconstruction, 6) << std::setw(12) << fmt(last.pairwise, 6) << '\n'
            << "encoder: " << ws.encoder(job.name).string() << '\n';
}

void encode_cmd(const RunConfig& rc) {
  if (rc.store.empty()) throw ConfigError("encode needs --store");
  const CorpusManifest manifest = load_manifest(rc.manifest);
  const Workspace ws{rc.out};
  const ArchTag arch = parse_arch(rc.arch);
  const FunctionTag fn = parse_function(rc.fn);
  const EncoderSet set = load_encoder_set(rc.encoder);
  if (set.config().arch != arch)
    throw TagError("encoder is for " + to_string(set.config().arch) + " INRs, not " + rc.arch);
  const auto shapes = select(manifest, rc.split);
  std::vector<fs::path> paths;
  for (const auto* s : shapes)
    paths.push_back(rc.source_arch.empty() ? ws.inr(arch, fn, s->id)
                                           : ws.distilled(parse_arch(rc.source_arch), arch, fn, s->id));
  const EmbeddingStore store = encode_inrs(set, shapes, paths);
  if (fs::path(rc.store).has_parent_path()) fs::create_directories(fs::path(rc.store).parent_path());
  save_store(store, rc.store);
  ReportWriter rep = report(rc);
  rep.metric("records", static_cast<double>(store.size()));
  rep.save(ws.report("encode-" + fs::path(rc.store).stem().string()));
  std::cout << "records: " << store.size() << "\nstore: " << rc.store << '\n';
}

void retrieve_cmd(const RunConfig& rc) {
  const EmbeddingStore store = load_store(rc.store);
  const EmbeddingStore queries = rc.query_store.empty() ? store : load_store(rc.query_store);
  const EmbeddingRecord& q = queries.find(rc.query);
  const RetrievalResult r = retrieve_topk(q.embedding, store, rc.k, q.id, rc.exclude_self);
  ReportWriter rep = report(rc);
  std::cout << std::left << std::setw(6) << "rank" << std::setw(16) << "id" << std::setw(10) << "category"
            << std::right << std::setw(10) << "score" << '\n';
  const Labels labels = store.labels();
  for (std::size_t i = 0; i < r.hits.size(); ++i) {
    const auto& h = r.hits[i];
    rep.metric("score", h.score, {{"query", q.id}, {"rank", std::to_string(i + 1)}, {"id", h.id}});
    std::cout << std::left << std::setw(6) << i + 1 << std::setw(16) << h.id << std::setw(10) << labels.at(h.id)
              << std::right << std::setw(10) << fmt(h.score) << '\n';
  }
  rep.save(Workspace{rc.out}.report("retrieve-" + q.id));
}

void eval_cmd(const RunConfig& rc) {
  const CorpusManifest manifest = load_manifest(rc.manifest);
  std::vector<EmbeddingStore> stores;
  for (const auto& path : rc.stores) {
    stores.push_back(load_store(path));
    const EmbeddingStore& s = stores.back();
    if (s.empty()) throw EmptyStoreError("store " + path + " is empty");
    for (const auto& rec : s.records())
      if (rec.fn != s.records().front().fn) throw InputError("store " + path + " mixes implicit functions");
  }
  std::vector<EvalCell> cells;
  for (const auto& q : stores)
    for (const auto& r : stores) cells.push_back(evaluate_pair(manifest, q, r));
  ReportWriter rep = report(rc);
  for (const auto& c : cells) {
    const std::vector<std::pair<std::string, std::string>> at{{"query_fn", to_string(c.query)},
                                                             {"retrieval_fn", to_string(c.retrieval)}};
    rep.metric("mAP@1", c.map1, at);
    rep.metric("mAP@5", c.map5, at);
    rep.metric("mAP@10", c.map10, at);
    rep.metric("P@10", c.prf.precision, at);
    rep.metric("R@10", c.prf.recall, at);
    rep.metric("F1@10", c.prf.f1, at);
  }
  rep.save(Workspace{rc.out}.report("eval"));
  std::cout << format_eval_table(cells);
}

void export_pointcloud_cmd(const RunConfig& rc) {
  const InrModel model = load_inr(rc.inr);
  const Coords pts = model.function() == FunctionTag::occ
                         ? occ_surface_points(model, 128, rc.points)
                         : sample_point_cloud(model, rc.points, TraceConfig{}, rc.seed);
  const fs::path out(rc.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_ply(out.string(), pts);
  ReportWriter rep = report(rc);
  rep.metric("points", static_cast<double>(pts.rows()));
  rep.save(fs::path(rc.out + ".report.jsonl"));
  std::cout << "points: " << pts.rows() << "\nply: " << rc.out << '\n';
}

void export_views_cmd(const RunConfig& rc) {
  const InrModel model = load_inr(rc.inr);
  ViewConfig view;
  view.views = rc.views;
  view.resolution = rc.resolution;
  const auto maps = render_depth_views(model, view, TraceConfig{});
  fs::create_directories(rc.out);
  ReportWriter rep = report(rc);
  for (std::size_t i = 0; i < maps.size(); ++i) {
    std::ostringstream name;
    name << "view_" << std::setw(2) << std::setfill('0') << i << ".pgm";
    write_depth_pgm((fs::path(rc.out) / name.str()).string(), maps[i]);
    const double hits = static_cast<double>((maps[i].array() < std::numeric_limits<double>::infinity()).count());
    rep.metric("foreground_fraction", hits / static_cast<double>(maps[i].size()), {{"view", std::to_string(i)}});
  }
  rep.save(Workspace{rc.out}.report("export-views"));
  std::cout << "views: " << maps.size() << "\ndir: " << rc.out << '\n';
}

void dispatch(const RunConfig& rc) {
  if (rc.subcommand == "corpus-gen") corpus_gen(rc);
  else if (rc.subcommand == "train-inr") train_inr_cmd(rc);
  else if (rc.subcommand == "distill") distill_cmd(rc);
  else if (rc.subcommand == "train-encoders") train_encoders_cmd(rc);
  else if (rc.subcommand == "encode") encode_cmd(rc);
  else if (rc.subcommand == "retrieve") retrieve_cmd(rc);
  else if (rc.subcommand == "eval") eval_cmd(rc);
  else if (rc.subcommand == "export-pointcloud") export_pointcloud_cmd(rc);
  else if (rc.subcommand == "export-views") export_views_cmd(rc);
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig rc;
  CLI::App app{"Train INRs, embed them and retrieve shapes"};
  app.require_subcommand(1, 1);
  const std::vector<std::string> archs{"mlp", "octree", "triplane", "hash"};
  const std::vector<std::string> fns{"sdf", "udf", "occ"};
  const std::vector<std::string> splits{"all", "train", "test"};

  auto out = [&](CLI::App* c, const std::string& what) { c->add_option("--out", rc.out, what)->required(); };
  auto seed = [&](CLI::App* c) { c->add_option("--seed", rc.seed, "Run seed")->capture_default_str(); };
  auto manifest = [&](CLI::App* c) { c->add_option("--manifest", rc.manifest, "Corpus manifest")->required(); };
  auto arch = [&](CLI::App* c) {
    c->add_option("--arch", rc.arch, "INR architecture")->check(CLI::IsMember(archs))->capture_default_str();
  };
  auto fn = [&](CLI::App* c) {
    c->add_option("--fn", rc.fn, "Implicit function")->check(CLI::IsMember(fns))->capture_default_str();
  };
  std::map<CLI::App*, std::pair<CLI::Option*, std::string>> split_defaults;
  auto split = [&](CLI::App* c, const std::string& def) {
    auto* opt = c->add_option("--split", rc.split, "Shapes to process (default " + def + ")")
                    ->check(CLI::IsMember(splits));
    split_defaults[c] = {opt, def};
  };

  auto* gen = app.add_subcommand("corpus-gen", "Generate the procedural corpus manifest");
  out(gen, "Workspace directory");
  seed(gen);
  gen->add_option("--instances", rc.instances, "Shapes per category")->capture_default_str();
  gen->add_option("--train", rc.train_instances, "Training shapes per category")->capture_default_str();

  auto* tinr = app.add_subcommand("train-inr", "Overfit one INR per shape");
  manifest(tinr);
  out(tinr, "Workspace directory");
  seed(tinr);
  arch(tinr);
  fn(tinr);
  tinr->add_option("--epochs", rc.epochs, "Override the desk epoch count");
  split(tinr, "all");

  auto* dist = app.add_subcommand("distill", "Distill saved INRs into another architecture");
  manifest(dist);
  out(dist, "Workspace directory");
  seed(dist);
  dist->add_option("--arch", rc.arch, "Source architecture")->check(CLI::IsMember(archs))->capture_default_str();
  dist->add_option("--to", rc.target_arch, "Target architecture")->check(CLI::IsMember(archs))->capture_default_str();
  fn(dist);
  split(dist, "test");

  auto* tenc = app.add_subcommand("train-encoders", "Train embedding encoders on the train split");
  manifest(tenc);
  out(tenc, "Workspace directory");
  seed(tenc);
  arch(tenc);
  tenc->add_option("--fn", rc.functions, "One implicit function, or all for the joint set")
      ->check(CLI::IsMember({"all", "sdf", "udf", "occ"}))
      ->capture_default_str();
  tenc->add_option("--lambda", rc.lambda, "Pairwise embedding weight")->capture_default_str();
  tenc->add_option("--mode", rc.mode, "Decoder mode")->check(CLI::IsMember({"unified", "separate"}))->capture_default_str();
  tenc->add_option("--lattice-n", rc.lattice_n, "Feature sampling lattice N")->capture_default_str();
  tenc->add_option("--epochs", rc.epochs, "Override the epoch count");
  tenc->add_option("--name", rc.name, "Encoder name (default {arch}-{fn})");

  auto* enc = app.add_subcommand("encode", "Embed saved INRs into a store");
  manifest(enc);
  out(enc, "Workspace directory");
  arch(enc);
  fn(enc);
  enc->add_option("--encoder", rc.encoder, "Encoder checkpoint")->required();
  enc->add_option("--store", rc.store, "Output store")->required();
  enc->add_option("--source", rc.source_arch, "Encode INRs distilled from this architecture")
      ->check(CLI::IsMember(archs));
  split(enc, "all");

  auto* ret = app.add_subcommand("retrieve", "Top-k cosine retrieval");
  out(ret, "Workspace directory for the report");
  ret->add_option("--store", rc.store, "Store to search")->required();
  ret->add_option("--query-store", rc.query_store, "Store holding the query (default --store)");
  ret->add_option("--query", rc.query, "Query shape id")->required();
  ret->add_option("--k", rc.k, "Results")->capture_default_str();
  ret->add_flag("--exclude-self", rc.exclude_self, "Skip the record with the query id");

  auto* ev = app.add_subcommand("eval", "mAP@1/5/10 and P/R/F1@10 per (query fn, retrieval fn)");
  manifest(ev);
  out(ev, "Workspace directory for the report");
  ev->add_option("--store", rc.stores, "Store per implicit function")->required();

  auto* pc = app.add_subcommand("export-pointcloud", "Surface point cloud of an INR as PLY");
  pc->add_option("--inr", rc.inr, "INR checkpoint")->required();
  out(pc, "PLY path");
  seed(pc);
  pc->add_option("--points", rc.points, "Point count")->capture_default_str();

  auto* vw = app.add_subcommand("export-views", "Depth views of an INR as 16-bit PGM");
  vw->add_option("--inr", rc.inr, "INR checkpoint")->required();
  out(vw, "Output directory");
  vw->add_option("--views", rc.views, "View count")->capture_default_str();
  vw->add_option("--resolution", rc.resolution, "Pixels per side")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  }
  CLI::App* sub = app.get_subcommands().front();
  rc.subcommand = sub->get_name();
  if (auto it = split_defaults.find(sub); it != split_defaults.end() && it->second.first->count() == 0)
    rc.split = it->second.second;

  set_warning_handler([](const std::string& m) { std::cerr << "warning: " << m << '\n'; });
  try {
    rc.validate();
    dispatch(rc);
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
