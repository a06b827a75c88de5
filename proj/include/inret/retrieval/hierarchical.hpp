#pragma once

#include <string>
#include <vector>

#include "inret/retrieval/metrics.hpp"
#include "inret/tensor/tape.hpp"

namespace inret {

struct ClassifierConfig {
  Index hidden = 256;
  int epochs = 200;
  Index batch = 16;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;

  void validate() const;
};

/// 1024 -> hidden -> categories MLP on standardized embeddings.
class Classifier {
 public:
  const std::vector<std::string>& categories() const { return categories_; }
  Eigen::VectorXf logits(const Eigen::VectorXf& embedding) const;
  /// Highest logit; ties go to the earlier (alphabetically smaller) category.
  std::string predict(const Eigen::VectorXf& embedding) const;

  Parameter<float> w1, b1, w2, b2;
  Eigen::VectorXf mean, inv_std;

 private:
  friend Classifier train_classifier(const EmbeddingStore& store, const ClassifierConfig& cfg);
  std::vector<std::string> categories_;
};

/// Trains on frozen store embeddings with same-class mixing: each sample is
/// a e_i + (1 - a) e_j for a random same-class e_j and a ~ U(0, 1).
/// Throws InputError when the store holds fewer than two categories.
Classifier train_classifier(const EmbeddingStore& store, const ClassifierConfig& cfg = {});

struct ChamferConfig {
  Index coarse = 128;
  Index fine = 4096;
  /// Optional reference count; 0 disables it.
  Index reference = 0;
  double filter_multiplier = 3.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct CandidateShape {
  std::string id;
  std::string category;
  Coords coarse;
  Coords fine;
};

struct HierarchicalResult {
  std::string id;
  std::string category;
  int coarse_evaluations = 0;
  int fine_evaluations = 0;
};

/// Classify, coarse Chamfer against the predicted category, keep candidates
/// within filter_multiplier x the smallest coarse distance, fine Chamfer on
/// the survivors. Candidates whose id equals `exclude` are skipped. Throws
/// ClassificationError when the predicted category has no candidate.
HierarchicalResult hierarchical_retrieve(const Eigen::VectorXf& embedding, const Coords& coarse, const Coords& fine,
                                         const std::vector<CandidateShape>& candidates, const Classifier& classifier,
                                         const ChamferConfig& cfg, const std::string& exclude = "");

/// Fine Chamfer against every candidate.
HierarchicalResult naive_chamfer_retrieve(const Coords& fine, const std::vector<CandidateShape>& candidates,
                                          const std::string& exclude = "");

}  // namespace inret
