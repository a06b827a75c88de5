#include "inret/retrieval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace inret {

namespace {

const std::string& label_of(const Labels& labels, const std::string& id) {
  const auto it = labels.find(id);
  if (it == labels.end()) throw InputError("shape '" + id + "' has no category label");
  return it->second;
}

}  // namespace

double cosine_similarity(const Eigen::VectorXf& a, const Eigen::VectorXf& b) {
  if (a.size() != b.size()) throw ShapeError("cosine of vectors with different lengths");
  const Eigen::VectorXd x = a.cast<double>(), y = b.cast<double>();
  const double nx = x.norm(), ny = y.norm();
  if (nx == 0.0 || ny == 0.0) return 0.0;
  return x.dot(y) / (nx * ny);
}

RetrievalResult retrieve_topk(const Eigen::VectorXf& query, const EmbeddingStore& store, Index k,
                              const std::string& query_id, bool exclude_self) {
  if (k < 1) throw ContractError("k must be >= 1");
  if (query.size() != kStoredEmbeddingWidth) throw ShapeError("query embedding must have 1024 entries");
  if (!query.allFinite() || query.isZero(0.0f)) throw NumericError("query embedding must be finite and nonzero");
  RetrievalResult out;
  out.query_id = query_id;
  out.k = k;
  for (const auto& r : store.records()) {
    if (exclude_self && r.id == query_id) continue;
    out.hits.push_back({r.id, cosine_similarity(query, r.embedding)});
  }
  if (out.hits.empty()) throw EmptyStoreError("no retrieval candidates" + std::string(store.empty() ? " (empty store)" : ""));
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(k), out.hits.size());
  std::partial_sort(out.hits.begin(), out.hits.begin() + static_cast<std::ptrdiff_t>(n), out.hits.end(),
                    [](const RetrievalHit& a, const RetrievalHit& b) {
                      return a.score != b.score ? a.score > b.score : a.id < b.id;
                    });
  out.hits.resize(n);
  return out;
}

double map_at_k(const std::vector<RetrievalResult>& results, const Labels& labels, Index k) {
  if (k < 1) throw ContractError("k must be >= 1");
  if (results.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& r : results) {
    const auto& cat = label_of(labels, r.query_id);
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(k), r.hits.size());
    for (std::size_t i = 0; i < n; ++i)
      if (label_of(labels, r.hits[i].id) == cat) {
        ++hits;
        break;
      }
  }
  return static_cast<double>(hits) / static_cast<double>(results.size());
}

Prf1 prf1_at_10(const std::vector<RetrievalResult>& results, const Labels& labels) {
  Prf1 out;
  if (results.empty()) return out;
  std::unordered_map<std::string, std::size_t> class_size;
  for (const auto& [id, cat] : labels) ++class_size[cat];
  for (const auto& r : results) {
    if (r.hits.size() < 10) throw ContractError("P/R/F1@10 needs 10 hits for query '" + r.query_id + "'");
    const auto& cat = label_of(labels, r.query_id);
    int relevant = 0;
    for (std::size_t i = 0; i < 10; ++i) relevant += label_of(labels, r.hits[i].id) == cat;
    const double p = relevant / 10.0;
    const std::size_t others = class_size[cat] - 1;
    const double rc = others == 0 ? 0.0 : relevant / static_cast<double>(others);
    out.precision += p;
    out.recall += rc;
    out.f1 += p + rc > 0.0 ? 2.0 * p * rc / (p + rc) : 0.0;
  }
  const auto n = static_cast<double>(results.size());
  out.precision /= n;
  out.recall /= n;
  out.f1 /= n;
  return out;
}

namespace {

double directed(const Coords& p, const Coords& q) {
  double total = 0.0;
  for (Index i = 0; i < p.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < q.rows(); ++j) {
      const double dx = p(i, 0) - q(j, 0), dy = p(i, 1) - q(j, 1), dz = p(i, 2) - q(j, 2);
      best = std::min(best, dx * dx + dy * dy + dz * dz);
    }
    total += std::sqrt(best);
  }
  return total / static_cast<double>(p.rows());
}

}  // namespace

double chamfer(const Coords& p, const Coords& q) {
  if (p.rows() == 0 || q.rows() == 0) throw InputError("Chamfer distance of an empty point set");
  return directed(p, q) + directed(q, p);
}

double category_accuracy(const std::vector<std::string>& queries, const RetrievalFn& retrieve, const Labels& labels) {
  if (queries.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& q : queries) correct += label_of(labels, retrieve(q)) == label_of(labels, q);
  return static_cast<double>(correct) / static_cast<double>(queries.size());
}

double category_chamfer_accuracy(const std::vector<std::string>& queries, const RetrievalFn& retrieve,
                                 const Labels& labels, const std::vector<std::string>& candidates,
                                 const std::function<double(const std::string&, const std::string&)>& distance) {
  if (queries.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& q : queries) {
    const auto& cat = label_of(labels, q);
    const std::string got = retrieve(q);
    if (label_of(labels, got) != cat) continue;
    std::string best;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) {
      if (c == q || label_of(labels, c) != cat) continue;
      const double d = distance(q, c);
      if (d < best_d || (d == best_d && c < best)) {
        best_d = d;
        best = c;
      }
    }
    correct += got == best;
  }
  return static_cast<double>(correct) / static_cast<double>(queries.size());
}

}  // namespace inret
