#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "inret/retrieval/metrics.hpp"
#include "inret/tensor/random.hpp"

namespace inret::testing {

inline Eigen::VectorXf random_embedding(CounterRng& rng) {
  Eigen::VectorXf e(kStoredEmbeddingWidth);
  for (Index i = 0; i < e.size(); ++i) e[i] = static_cast<float>(rng.normal());
  return e;
}

inline EmbeddingRecord record(const std::string& id, const std::string& cat, Eigen::VectorXf e) {
  return {id, cat, FunctionTag::udf, ArchTag::hash, std::move(e)};
}

inline std::string id_of(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "s%03d", i);
  return buf;
}

// Random store of n records over `cats` categories; every fifth record repeats
// an earlier embedding so exact ties occur.
inline EmbeddingStore random_store(CounterRng& rng, int n, int cats) {
  EmbeddingStore s;
  std::vector<Eigen::VectorXf> made;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXf e = (i % 5 == 4) ? made[rng.below(made.size())] : random_embedding(rng);
    made.push_back(e);
    s.add(record(id_of(i), "c" + std::to_string(rng.below(static_cast<std::uint64_t>(cats))), e));
  }
  return s;
}

inline double oracle_cosine(const Eigen::VectorXf& a, const Eigen::VectorXf& b) {
  double ab = 0, aa = 0, bb = 0;
  for (Index i = 0; i < a.size(); ++i) {
    ab += double(a[i]) * double(b[i]);
    aa += double(a[i]) * double(a[i]);
    bb += double(b[i]) * double(b[i]);
  }
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

// Full scan, full sort.
inline std::vector<std::string> oracle_topk(const Eigen::VectorXf& q, const EmbeddingStore& s, std::size_t k,
                                     const std::string& skip) {
  std::vector<std::pair<double, std::string>> all;
  for (const auto& r : s.records())
    if (r.id != skip) all.emplace_back(oracle_cosine(q, r.embedding), r.id);
  // Scores within 1e-12 are treated as the tie they are meant to be.
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (std::abs(a.first - b.first) > 1e-12) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < std::min(k, all.size()); ++i) ids.push_back(all[i].second);
  return ids;
}

inline double oracle_chamfer(const Coords& p, const Coords& q) {
  auto one_way = [](const Coords& a, const Coords& b) {
    double sum = 0;
    for (Index i = 0; i < a.rows(); ++i) {
      double m = 1e300;
      for (Index j = 0; j < b.rows(); ++j) {
        const double dx = a(i, 0) - b(j, 0), dy = a(i, 1) - b(j, 1), dz = a(i, 2) - b(j, 2);
        m = std::min(m, std::sqrt(dx * dx + dy * dy + dz * dz));
      }
      sum += m;
    }
    return sum / static_cast<double>(a.rows());
  };
  return one_way(p, q) + one_way(q, p);
}

inline Coords random_cloud(CounterRng& rng, Index n) {
  Coords c(n, 3);
  for (Index i = 0; i < n; ++i)
    for (int a = 0; a < 3; ++a) c(i, a) = rng.uniform(-1, 1);
  return c;
}

// Fraction of queries with a same-category id among the first k, by enumeration.
inline double oracle_map(const std::vector<RetrievalResult>& results, const Labels& labels, std::size_t k) {
  int hit = 0;
  for (const auto& r : results) {
    bool any = false;
    for (std::size_t i = 0; i < k && i < r.hits.size(); ++i) any = any || labels.at(r.hits[i].id) == labels.at(r.query_id);
    hit += any;
  }
  return hit / static_cast<double>(results.size());
}

// Macro P/R/F1 over the first 10 hits; class size counts every labeled shape.
inline Prf1 oracle_prf1(const std::vector<RetrievalResult>& results, const Labels& labels) {
  double ps = 0, rs = 0, fs = 0;
  for (const auto& r : results) {
    const auto& cat = labels.at(r.query_id);
    int size = 0;
    for (const auto& [id, c] : labels) size += c == cat;
    int rel = 0;
    for (int i = 0; i < 10; ++i) rel += labels.at(r.hits[static_cast<std::size_t>(i)].id) == cat;
    const double p = rel / 10.0, rc = size > 1 ? double(rel) / (size - 1) : 0.0;
    ps += p;
    rs += rc;
    fs += p + rc > 0 ? 2 * p * rc / (p + rc) : 0.0;
  }
  const double n = static_cast<double>(results.size());
  return {ps / n, rs / n, fs / n};
}

}  // namespace inret::testing
