#include "setmlvis/comparison_metrics.hpp"

#include <algorithm>
#include <iterator>

namespace setmlvis {

namespace {

std::size_t intersection_size(std::span<const ClusterId> a, std::span<const ClusterId> b) {
  std::size_t n = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) ++i;
    else if (*j < *i) ++j;
    else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

}  // namespace

double tversky(std::span<const ClusterId> x, std::span<const ClusterId> y, double alpha,
               double beta) {
  const auto common = static_cast<double>(intersection_size(x, y));
  const double only_x = static_cast<double>(x.size()) - common;
  const double only_y = static_cast<double>(y.size()) - common;
  const double denom = common + alpha * only_x + beta * only_y;
  if (denom == 0) return 1.0;
  return common / denom;
}

double jaccard(std::span<const ClusterId> a, std::span<const ClusterId> b) {
  const std::size_t common = intersection_size(a, b);
  const std::size_t uni = a.size() + b.size() - common;
  if (uni == 0) return 1.0;
  return static_cast<double>(common) / static_cast<double>(uni);
}

double tversky_containment(std::span<const ClusterId> contained,
                           std::span<const ClusterId> container) {
  return tversky(contained, container, 1.0, 0.0);
}

std::vector<Membership> memberships(std::span<const AgreementCluster> clusters,
                                    std::size_t model_count) {
  std::vector<Membership> out(model_count);
  for (const auto& c : clusters)
    for (ModelIndex m : c.signature.models())
      if (m < model_count) out[m].push_back(c.id);
  for (auto& m : out) std::sort(m.begin(), m.end());
  return out;
}

SimilarityMatrix jaccard_matrix(std::span<const Membership> members,
                                std::span<const std::string> models) {
  SimilarityMatrix s;
  s.models.assign(models.begin(), models.end());
  const std::size_t n = models.size();
  s.values.assign(n, std::vector<double>(n, 1.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      s.values[i][j] = s.values[j][i] = jaccard(members[i], members[j]);
  return s;
}

SimilarityMatrix jaccard_matrix(const SetArtifact& a, const EvalParams& p) {
  const ClusteredView view = recluster(a, p);
  const auto members = memberships(view.clusters, a.raw.models.size());
  return jaccard_matrix(members, a.raw.models);
}

std::vector<ModelScore> model_scores(const SetArtifact& a, const EvalParams& p) {
  if (a.raw.ground_truth.empty()) throw MetricsError("scores require ground truth");
  const auto surviving = filter_detections(a.raw.detections, p);
  std::vector<ModelScore> out;
  for (ModelIndex m = 0; m < a.raw.models.size(); ++m) {
    std::vector<Detection> mine;
    std::copy_if(surviving.begin(), surviving.end(), std::back_inserter(mine),
                 [&](const Detection& d) { return d.model == m; });
    const ModelEvaluation ev = evaluate_model(m, mine, a.raw.ground_truth, p.eval_iou);
    ModelScore s{a.raw.models[m], ev.tp, ev.fp, ev.fn, 0.0, 0.0};
    if (ev.tp + ev.fp > 0) s.precision = static_cast<double>(ev.tp) / static_cast<double>(ev.tp + ev.fp);
    if (ev.tp + ev.fn > 0) s.recall = static_cast<double>(ev.tp) / static_cast<double>(ev.tp + ev.fn);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace setmlvis
