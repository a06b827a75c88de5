// Acceptance run: one PASS/FAIL line per criterion. Arguments select
// criteria (e.g. "1 2 9"); none runs all. "--work DIR" sets the workspace.
#include <algorithm>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "inret/convert/trace.hpp"
#include "inret/inr/checkpoint.hpp"
#include "inret/io/binary.hpp"
#include "inret/pipeline/pipeline.hpp"
#include "inret/retrieval/hierarchical.hpp"
#include "inret/shapes/relations.hpp"
#include "../support/gradcheck.hpp"
#include "../support/retrieval_oracles.hpp"

using namespace inret;
namespace fs = std::filesystem;

namespace {

using clock_type = std::chrono::steady_clock;

double since(clock_type::time_point t) { return std::chrono::duration<double>(clock_type::now() - t).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v, int precision = 3) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

void progress(const std::string& m) { std::cerr << "[acceptance] " << m << std::endl; }

AnalyticShape sphere(double r) { return AnalyticShape("sphere", "sphere", {Primitive{PrimitiveKind::sphere, {r}, {}}}); }

Outcome gradients() {
  const auto start = clock_type::now();
  double worst = 0.0;
  std::string worst_op;
  const auto cases = testing::gradient_cases();
  for (const auto& c : cases)
    for (std::uint64_t inst = 0; inst < 100; ++inst) {
      const double e = c.run(1000 + inst);
      if (e > worst) {
        worst = e;
        worst_op = c.name;
      }
    }
  const double secs = since(start);
  return {worst < 1e-4 && secs < 60.0, std::to_string(cases.size()) + " ops x 100 instances, worst rel err " +
                                            num(worst) + " (" + worst_op + "), " + num(secs) + " s"};
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

Outcome identities() {
  const CorpusManifest corpus = generate_corpus(CorpusSpec::desk_default(), 0);
  CounterRng rng(2, 0);
  long udf_bad = 0, clamp_bad = 0, sign_bad = 0, sign_checked = 0, points = 0;
  for (const auto& d : corpus.shapes) {
    const auto oracle = make_oracle(d);
    const Coords x = sample_uniform(10000, rng);
    for (Index i = 0; i < x.rows(); ++i) {
      const Point3 p = x.row(i).transpose();
      const double s = oracle->sdf(p);
      const double udf = oracle->udf(p);
      udf_bad += !same_bits(udf, std::max(s, 0.0) + std::max(-s, 0.0));
      // Scaled copies reach |s| >= 1, which the unit domain never does.
      for (double t : {s, 4.0 * s, 1.0 / (s == 0.0 ? 1.0 : s)}) {
        const double v = occ_via_relu_network(t);
        clamp_bad += !same_bits(v, std::clamp(t, -1.0, 1.0));
        if (std::abs(t) >= 1.0) {
          ++sign_checked;
          sign_bad += v != (t > 0.0 ? 1.0 : -1.0);
        }
      }
      ++points;
    }
  }
  return {udf_bad == 0 && clamp_bad == 0 && sign_bad == 0 && sign_checked > 0,
          std::to_string(points) + " points: udf mismatches " + std::to_string(udf_bad) + ", clamp mismatches " +
              std::to_string(clamp_bad) + ", sign mismatches " + std::to_string(sign_bad) + " of " +
              std::to_string(sign_checked)};
}

Outcome sphere_fidelity(double max_pipeline_inr_seconds) {
  const auto s = sphere(0.5);
  const auto start = clock_type::now();
  const TrainResult r = train_inr(s, TrainConfig::desk(ArchTag::hash, FunctionTag::sdf));
  const double secs = since(start);
  const PointBatch near = sample_training_points(s, FunctionTag::sdf, SampleCounts{0, 0, 10000}, 77);
  Eigen::VectorXd truth(near.coords.rows());
  for (Index i = 0; i < truth.size(); ++i) truth[i] = near.coords.row(i).norm() - 0.5;
  const double mae = (model_field(r.model)(near.coords) - truth).cwiseAbs().mean();
  const double slowest = std::max(secs, max_pipeline_inr_seconds);
  std::string detail = "hash SDF sphere near-surface MAE " + num(mae) + " in " + num(secs) + " s";
  if (max_pipeline_inr_seconds > 0) detail += ", slowest corpus INR " + num(max_pipeline_inr_seconds) + " s";
  return {mae < 5e-3 && slowest < 60.0, detail};
}

Outcome metric_oracles() {
  CounterRng rng(9, 0);
  int bad_topk = 0, bad_map = 0, bad_prf = 0, bad_chamfer = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const auto s = testing::random_store(rng, 60, 4);
    const auto& self = s.records()[rng.below(60)];
    const bool exclude = inst % 2 == 0;
    const Eigen::VectorXf q = inst % 3 == 0 ? self.embedding : testing::random_embedding(rng);
    const auto k = static_cast<Index>(1 + rng.below(12));
    const auto got = retrieve_topk(q, s, k, self.id, exclude);
    const auto want = testing::oracle_topk(q, s, static_cast<std::size_t>(k), exclude ? self.id : "");
    bool ok = got.hits.size() == want.size();
    for (std::size_t i = 0; ok && i < want.size(); ++i)
      ok = got.hits[i].id == want[i] &&
           std::abs(got.hits[i].score - testing::oracle_cosine(q, s.find(want[i]).embedding)) <= 1e-12;
    bad_topk += !ok;
  }
  for (int inst = 0; inst < 50; ++inst) {
    const auto s = testing::random_store(rng, 30, 3);
    const auto labels = s.labels();
    std::vector<RetrievalResult> results;
    for (std::size_t q = 0; q < 6; ++q)
      results.push_back(retrieve_topk(s.records()[q].embedding, s, 10, s.records()[q].id, true));
    for (Index k : {1, 5, 10})
      bad_map += map_at_k(results, labels, k) != testing::oracle_map(results, labels, static_cast<std::size_t>(k));
    const Prf1 got = prf1_at_10(results, labels), want = testing::oracle_prf1(results, labels);
    bad_prf += got.precision != want.precision || got.recall != want.recall || got.f1 != want.f1;
  }
  for (int inst = 0; inst < 50; ++inst) {
    const Coords a = testing::random_cloud(rng, 1 + static_cast<Index>(rng.below(40)));
    const Coords b = inst % 5 == 0 ? a : testing::random_cloud(rng, 1 + static_cast<Index>(rng.below(40)));
    bad_chamfer += chamfer(a, b) != testing::oracle_chamfer(a, b);
  }
  return {bad_topk + bad_map + bad_prf + bad_chamfer == 0,
          "mismatches over 50 instances each: top-k " + std::to_string(bad_topk) + ", mAP@k " +
              std::to_string(bad_map) + ", P/R/F1@10 " + std::to_string(bad_prf) + ", Chamfer " +
              std::to_string(bad_chamfer)};
}

Outcome tracing_and_determinism(const fs::path& work) {
  const auto s = sphere(0.5);
  const TraceConfig cfg;
  const Coords sdf_pts = sample_point_cloud(oracle_field(s, FunctionTag::sdf), FunctionTag::sdf, 2048, cfg, 3);
  const Coords udf_pts = sample_point_cloud(oracle_field(s, FunctionTag::udf), FunctionTag::udf, 2048, cfg, 3);
  const double sdf_err = (sdf_pts.rowwise().norm().array() - 0.5).abs().maxCoeff();
  const double udf_err = (udf_pts.rowwise().norm().array() - 0.5).abs().maxCoeff();

  // Two complete runs of a small corpus into separate workspaces.
  CorpusSpec spec = CorpusSpec::desk_default();
  spec.instances_per_category = 3;
  spec.train_per_category = 2;
  const CorpusManifest m = generate_corpus(spec, 4);
  std::vector<const ShapeDescriptor*> all;
  for (const auto& d : m.shapes) all.push_back(&d);
  std::vector<std::vector<std::uint8_t>> inr_bytes, store_bytes, cloud_bytes;
  for (int run = 0; run < 2; ++run) {
    const Workspace ws{work / ("determinism_" + std::to_string(run))};
    fs::remove_all(ws.root);
    EncoderJob job;
    job.name = "det";
    job.functions = {FunctionTag::sdf};
    job.epochs = 2;
    job.seed = 4;
    train_inrs(all, ArchTag::triplane, FunctionTag::sdf, ws, 4, 2);
    const EncoderTrainResult r = train_encoder_job(m, ws, job);
    std::vector<fs::path> paths;
    for (const auto* d : all) paths.push_back(ws.inr(ArchTag::triplane, FunctionTag::sdf, d->id));
    fs::create_directories(ws.store("det").parent_path());
    save_store(encode_inrs(r.set, all, paths), ws.store("det").string());
    const InrModel first = load_inr(paths.front().string());
    write_ply((ws.root / "cloud.ply").string(), sample_point_cloud(first, 512, cfg, 11));
    inr_bytes.push_back(read_file(paths.back().string()));
    store_bytes.push_back(read_file(ws.store("det").string()));
    cloud_bytes.push_back(read_file((ws.root / "cloud.ply").string()));
  }
  const bool same = inr_bytes[0] == inr_bytes[1] && store_bytes[0] == store_bytes[1] && cloud_bytes[0] == cloud_bytes[1];
  return {sdf_err < 1e-3 && udf_err < 2e-3 && same,
          "sphere tracing max radius error " + num(sdf_err) + ", damped UDF " + num(udf_err) +
              ", INR/store/point-cloud files identical across runs: " + (same ? "yes" : "no")};
}

// Criteria 4-8 share one run over the desk corpus.
struct DeskRun {
  std::map<int, Outcome> outcomes;
  double seconds = 0.0;
  double max_inr_seconds = 0.0;
};

EmbeddingStore encode_all(const EncoderSet& set, const CorpusManifest& m, const Workspace& ws, ArchTag arch,
                          FunctionTag fn) {
  std::vector<const ShapeDescriptor*> shapes;
  std::vector<fs::path> paths;
  for (const auto& d : m.shapes) {
    shapes.push_back(&d);
    paths.push_back(ws.inr(arch, fn, d.id));
  }
  return encode_inrs(set, shapes, paths);
}

std::string top1(const Eigen::VectorXf& q, const EmbeddingStore& store) { return retrieve_topk(q, store, 1).hits[0].id; }

DeskRun desk(const fs::path& work) {
  DeskRun out;
  const auto start = clock_type::now();
  const std::uint64_t seed = 0;
  const Workspace ws{work / "desk"};
  fs::remove_all(ws.root);
  const CorpusManifest m = generate_corpus(CorpusSpec::desk_default(), seed);
  fs::create_directories(ws.root);
  save_manifest(m, ws.manifest().string());
  std::vector<const ShapeDescriptor*> all;
  for (const auto& d : m.shapes) all.push_back(&d);
  const auto test = m.split(Split::test);

  auto note_inrs = [&](const std::vector<InrJob>& jobs) {
    for (const auto& j : jobs) out.max_inr_seconds = std::max(out.max_inr_seconds, j.seconds);
  };
  for (ArchTag arch : kAllArchs) {
    const auto t = clock_type::now();
    note_inrs(train_inrs(all, arch, FunctionTag::sdf, ws, seed));
    progress(to_string(arch) + " sdf INRs: " + num(since(t)) + " s");
  }
  for (FunctionTag fn : {FunctionTag::udf, FunctionTag::occ}) note_inrs(train_inrs(all, ArchTag::triplane, fn, ws, seed));

  // 4: one single-function encoder per architecture.
  std::map<ArchTag, EncoderSet> same_sets;
  std::map<ArchTag, EmbeddingStore> same_stores;
  std::map<ArchTag, double> same_map;
  for (ArchTag arch : kAllArchs) {
    const auto t = clock_type::now();
    EncoderJob job;
    job.name = "same-" + to_string(arch);
    job.arch = arch;
    job.functions = {FunctionTag::sdf};
    job.lambda = 0.0;
    job.seed = seed;
    same_sets[arch] = train_encoder_job(m, ws, job).set;
    same_stores[arch] = encode_all(same_sets[arch], m, ws, arch, FunctionTag::sdf);
    same_map[arch] = evaluate_pair(m, same_stores[arch], same_stores[arch]).map1;
    progress(to_string(arch) + " encoder: mAP@1 " + num(same_map[arch]) + ", " + num(since(t)) + " s");
  }
  const double grid_mean = (same_map[ArchTag::octree] + same_map[ArchTag::triplane] + same_map[ArchTag::hash]) / 3.0;
  const bool grids_ok = same_map[ArchTag::octree] >= 0.9 && same_map[ArchTag::triplane] >= 0.9 &&
                        same_map[ArchTag::hash] >= 0.9;
  const bool mlp_ok = std::abs(same_map[ArchTag::mlp] - grid_mean) <= 0.15;

  // 5 and 6: joint triplane sets without regularization, with L2, with L2 and the unified decoder.
  struct Variant {
    std::string name;
    DecoderMode mode;
    double lambda;
  };
  const std::vector<Variant> variants = {{"no-reg", DecoderMode::separate, 0.0},
                                         {"l2", DecoderMode::separate, 1.0},
                                         {"l2-unified", DecoderMode::unified, 1.0}};
  std::vector<std::array<std::array<double, 3>, 3>> tables;
  std::vector<double> off_diag;
  for (const auto& v : variants) {
    const auto t = clock_type::now();
    EncoderJob job;
    job.name = "joint-" + v.name;
    job.mode = v.mode;
    job.lambda = v.lambda;
    job.seed = seed;
    const EncoderSet set = train_encoder_job(m, ws, job).set;
    std::array<EmbeddingStore, 3> stores;
    fs::create_directories(ws.store(job.name).parent_path());
    for (FunctionTag fn : kAllFunctions) {
      stores[function_index(fn)] = encode_all(set, m, ws, ArchTag::triplane, fn);
      save_store(stores[function_index(fn)], ws.store(job.name + "-" + to_string(fn)).string());
    }
    std::array<std::array<double, 3>, 3> table{};
    double off = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        table[a][b] = evaluate_pair(m, stores[a], stores[b]).map1;
        if (a != b) off += table[a][b] / 6.0;
      }
    tables.push_back(table);
    off_diag.push_back(off);
    progress(v.name + ": cross-function mAP@1 " + num(off) + ", " + num(since(t)) + " s");
  }
  const double same_fn = same_map[ArchTag::triplane];
  const bool order_ok = off_diag[0] < off_diag[1] && off_diag[1] < off_diag[2] && off_diag[0] < 0.5 &&
                        std::abs(same_fn - off_diag[2]) <= 0.10;
  double lo = 1.0, hi = 0.0;
  std::string cells;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      lo = std::min(lo, tables[2][a][b]);
      hi = std::max(hi, tables[2][a][b]);
      cells += (cells.empty() ? "" : " ") + num(tables[2][a][b], 2);
    }

  // 7: MLP -> hash distillation of the test shapes.
  const auto t7 = clock_type::now();
  const auto distilled = distill_inrs(test, ArchTag::mlp, ArchTag::hash, FunctionTag::sdf, ws, seed);
  double worst_mae = 0.0;
  for (const auto& j : distilled) worst_mae = std::max(worst_mae, j.mae);
  std::vector<fs::path> distilled_paths;
  for (const auto* d : test) distilled_paths.push_back(ws.distilled(ArchTag::mlp, ArchTag::hash, FunctionTag::sdf, d->id));
  const EmbeddingStore dstore = encode_inrs(same_sets[ArchTag::hash], test, distilled_paths);
  const EmbeddingStore hash_train = split_store(same_stores[ArchTag::hash], m, Split::train);
  int agree = 0;
  for (const auto* d : test)
    agree += top1(dstore.find(d->id).embedding, hash_train) ==
             top1(same_stores[ArchTag::hash].find(d->id).embedding, hash_train);
  const double agreement = agree / static_cast<double>(test.size());
  progress("distillation: " + num(since(t7)) + " s");

  // 8: hierarchical Chamfer on triplane SDF point clouds.
  const auto t8 = clock_type::now();
  const EmbeddingStore& tri = same_stores[ArchTag::triplane];
  const EmbeddingStore tri_train = split_store(tri, m, Split::train);
  ClassifierConfig ccfg;
  ccfg.seed = seed;
  const Classifier classifier = train_classifier(tri_train, ccfg);
  ChamferConfig chcfg;
  chcfg.seed = seed;
  std::map<std::string, CandidateShape> clouds;
  for (const auto* d : all)
    clouds[d->id] = point_cloud_candidate(load_inr(ws.inr(ArchTag::triplane, FunctionTag::sdf, d->id).string()), *d, chcfg);
  std::vector<CandidateShape> candidates;
  std::vector<std::string> candidate_ids, query_ids;
  for (const auto* d : m.split(Split::train)) {
    candidates.push_back(clouds[d->id]);
    candidate_ids.push_back(d->id);
  }
  int agree8 = 0, savings_checked = 0, savings_ok = 0, fine_total = 0, naive_total = 0;
  std::map<std::string, std::string> hier_top;
  for (const auto* d : test) {
    query_ids.push_back(d->id);
    const CandidateShape& q = clouds[d->id];
    const HierarchicalResult h =
        hierarchical_retrieve(tri.find(d->id).embedding, q.coarse, q.fine, candidates, classifier, chcfg);
    const HierarchicalResult n = naive_chamfer_retrieve(q.fine, candidates);
    hier_top[d->id] = h.id;
    agree8 += h.id == n.id;
    fine_total += h.fine_evaluations;
    naive_total += n.fine_evaluations;
    if (h.fine_evaluations < h.coarse_evaluations) {
      ++savings_checked;
      savings_ok += h.fine_evaluations < n.fine_evaluations;
    }
  }
  Labels labels;
  for (const auto& d : m.shapes) labels[d.id] = d.category;
  std::map<std::pair<std::string, std::string>, double> cd_cache;
  auto distance = [&](const std::string& a, const std::string& b) {
    auto key = std::make_pair(a, b);
    auto it = cd_cache.find(key);
    if (it != cd_cache.end()) return it->second;
    return cd_cache[key] = chamfer(clouds[a].fine, clouds[b].fine);
  };
  const RetrievalFn by_embedding = [&](const std::string& id) { return top1(tri.find(id).embedding, tri_train); };
  const RetrievalFn by_hierarchy = [&](const std::string& id) { return hier_top.at(id); };
  const double ac_e = category_accuracy(query_ids, by_embedding, labels);
  const double acc_e = category_chamfer_accuracy(query_ids, by_embedding, labels, candidate_ids, distance);
  const double ac_h = category_accuracy(query_ids, by_hierarchy, labels);
  const double acc_h = category_chamfer_accuracy(query_ids, by_hierarchy, labels, candidate_ids, distance);
  progress("hierarchical Chamfer: " + num(since(t8)) + " s");

  out.seconds = since(start);
  out.outcomes[4] = {grids_ok && mlp_ok && out.seconds < 1800.0,
                     "mAP@1 octree " + num(same_map[ArchTag::octree]) + ", triplane " +
                         num(same_map[ArchTag::triplane]) + ", hash " + num(same_map[ArchTag::hash]) + ", mlp " +
                         num(same_map[ArchTag::mlp]) + " (grid mean " + num(grid_mean) + "); pipeline " +
                         num(out.seconds, 4) + " s"};
  out.outcomes[5] = {order_ok, "cross-function mAP@1 no-reg " + num(off_diag[0]) + ", L2 " + num(off_diag[1]) +
                                   ", L2+unified " + num(off_diag[2]) + ", same-function " + num(same_fn)};
  out.outcomes[6] = {hi - lo <= 0.15, "L2+unified cells [" + cells + "], spread " + num(hi - lo)};
  out.outcomes[7] = {worst_mae < 1e-2 && agreement >= 0.8,
                     "worst distilled MAE vs source " + num(worst_mae) + ", top-1 agreement with native hash " +
                         num(agreement) + " over " + std::to_string(test.size()) + " queries"};
  out.outcomes[8] = {agree8 == static_cast<int>(test.size()) && savings_ok == savings_checked && acc_e <= ac_e &&
                         acc_h <= ac_h,
                     "hierarchical = naive top-1 on " + std::to_string(agree8) + "/" + std::to_string(test.size()) +
                         ", fewer fine evaluations on " + std::to_string(savings_ok) + "/" +
                         std::to_string(savings_checked) + " queries the coarse filter pruned (" + std::to_string(fine_total) +
                         " fine evaluations vs " + std::to_string(naive_total) + " naive), A_C " + num(ac_e) + " A_CC " +
                         num(acc_e) + " (embedding), A_C " + num(ac_h) + " A_CC " + num(acc_h) + " (hierarchical)"};
  return out;
}

const char* kNames[] = {"",
                        "gradient correctness",
                        "implicit-function identities",
                        "INR fidelity",
                        "same-function retrieval",
                        "regularization ordering",
                        "cross-function symmetry",
                        "distillation",
                        "hierarchical Chamfer",
                        "metric oracles",
                        "tracing and determinism"};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  fs::path work = fs::temp_directory_path() / "inret_acceptance";
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--work" && i + 1 < argc) {
      work = argv[++i];
      continue;
    }
    wanted.insert(std::stoi(argv[i]));
  }
  if (wanted.empty())
    for (int c = 1; c <= 10; ++c) wanted.insert(c);
  fs::create_directories(work);

  std::map<int, Outcome> results;
  auto guarded = [&](int c, const std::function<Outcome()>& f) {
    if (!wanted.count(c)) return;
    try {
      results[c] = f();
    } catch (const std::exception& e) {
      results[c] = {false, std::string("exception: ") + e.what()};
    }
  };
  double max_inr_seconds = 0.0;
  if (wanted.count(4) || wanted.count(5) || wanted.count(6) || wanted.count(7) || wanted.count(8)) {
    try {
      DeskRun run = desk(work);
      max_inr_seconds = run.max_inr_seconds;
      for (auto& [c, o] : run.outcomes)
        if (wanted.count(c)) results[c] = o;
    } catch (const std::exception& e) {
      for (int c = 4; c <= 8; ++c)
        if (wanted.count(c)) results[c] = {false, std::string("exception: ") + e.what()};
    }
  }
  guarded(1, gradients);
  guarded(2, identities);
  guarded(3, [&] { return sphere_fidelity(max_inr_seconds); });
  guarded(9, metric_oracles);
  guarded(10, [&] { return tracing_and_determinism(work); });

  int failed = 0;
  for (const auto& [c, o] : results) {
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c << " (" << kNames[c] << "): " << o.detail << '\n';
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
