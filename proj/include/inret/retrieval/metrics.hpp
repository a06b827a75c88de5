#pragma once

#include <functional>
#include <string>
#include <vector>

#include "inret/retrieval/store.hpp"
#include "inret/shapes/oracle.hpp"

namespace inret {

struct RetrievalHit {
  std::string id;
  double score = 0.0;
};

struct RetrievalResult {
  std::string query_id;
  Index k = 0;
  /// Non-increasing scores; equal scores in ascending id order.
  std::vector<RetrievalHit> hits;
};

/// Cosine similarity accumulated in double; 0 when either vector is zero.
double cosine_similarity(const Eigen::VectorXf& a, const Eigen::VectorXf& b);

/// Top-k records by cosine similarity to `query` (fewer when the store is
/// smaller). With `exclude_self` the record whose id equals `query_id` is
/// skipped. Throws EmptyStoreError when no candidate remains.
RetrievalResult retrieve_topk(const Eigen::VectorXf& query, const EmbeddingStore& store, Index k,
                              const std::string& query_id = "", bool exclude_self = false);

/// Fraction of queries with at least one same-category hit among their first k.
double map_at_k(const std::vector<RetrievalResult>& results, const Labels& labels, Index k);

struct Prf1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Macro-averaged precision, recall and F1 over the first 10 hits of each
/// query. Recall divides by (class size - 1), the class size counting every
/// labeled shape of the query's category.
Prf1 prf1_at_10(const std::vector<RetrievalResult>& results, const Labels& labels);

/// mean_p min_q |p - q| + mean_q min_p |q - p| (Euclidean, not squared).
double chamfer(const Coords& p, const Coords& q);

inline constexpr const char* kChamferDefinition = "mean_p min_q |p-q|_2 + mean_q min_p |q-p|_2";

using RetrievalFn = std::function<std::string(const std::string& query_id)>;

/// A_C: fraction of queries whose top-1 retrieval shares their category.
double category_accuracy(const std::vector<std::string>& queries, const RetrievalFn& retrieve, const Labels& labels);

/// A_CC: a query counts only when its top-1 retrieval is the same-category
/// candidate (query excluded) with the smallest `distance`; ties go to the
/// smaller id.
double category_chamfer_accuracy(const std::vector<std::string>& queries, const RetrievalFn& retrieve,
                                 const Labels& labels, const std::vector<std::string>& candidates,
                                 const std::function<double(const std::string&, const std::string&)>& distance);

}  // namespace inret
