#pragma once

// Set-based model similarity (Jaccard, Tversky) and per-model precision/recall.

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "setmlvis/detection_matcher.hpp"

namespace setmlvis {

/// Element sets are ascending, duplicate-free cluster ids.
using Membership = std::vector<ClusterId>;

/// |A n B| / |A u B|; two empty sets are identical (1).
double jaccard(std::span<const ClusterId> a, std::span<const ClusterId> b);

/// General Tversky index |X n Y| / (|X n Y| + alpha |X - Y| + beta |Y - X|).
/// alpha = beta = 1 is Jaccard. A zero denominator yields 1.
double tversky(std::span<const ClusterId> x, std::span<const ClusterId> y, double alpha,
               double beta);

/// Share of `contained`'s elements also held by `container`
/// (Tversky with x = contained, alpha = 1, beta = 0). Empty `contained` yields 1.
double tversky_containment(std::span<const ClusterId> contained,
                           std::span<const ClusterId> container);

/// memberships[m] = clusters whose signature contains model m.
std::vector<Membership> memberships(std::span<const AgreementCluster> clusters,
                                    std::size_t model_count);

struct SimilarityMatrix {
  std::vector<std::string> models;
  std::vector<std::vector<double>> values;
};

SimilarityMatrix jaccard_matrix(std::span<const Membership> members,
                                std::span<const std::string> models);
SimilarityMatrix jaccard_matrix(const SetArtifact& a, const EvalParams& p);

struct ModelScore {
  std::string model_id;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0;
  double recall = 0;
};

class MetricsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-model greedy evaluation of the confidence-filtered detections at
/// p.eval_iou. Throws MetricsError when the artifact has no ground truth.
std::vector<ModelScore> model_scores(const SetArtifact& a, const EvalParams& p);

}  // namespace setmlvis
