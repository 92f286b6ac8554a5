#include "setmlvis/intersection_query.hpp"

#include <algorithm>

namespace setmlvis {

std::vector<IntersectionBar> aggregate(std::span<const AgreementCluster> clusters,
                                       std::span<const ClusterStatus> statuses) {
  if (statuses.size() != clusters.size())
    throw std::invalid_argument("aggregate: statuses must cover all clusters");
  std::map<Signature, IntersectionBar> by_signature;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    IntersectionBar& bar = by_signature[clusters[i].signature];
    bar.signature = clusters[i].signature;
    bar.cluster_ids.push_back(clusters[i].id);
    if (statuses[i].status == MatchStatus::TruePositive) ++bar.tp_count;
    else ++bar.fp_count;
  }
  std::vector<IntersectionBar> bars;
  bars.reserve(by_signature.size());
  for (auto& [sig, bar] : by_signature) {
    std::sort(bar.cluster_ids.begin(), bar.cluster_ids.end());
    bars.push_back(std::move(bar));
  }
  // by_signature already yields ascending signatures.
  std::stable_sort(bars.begin(), bars.end(), [](const IntersectionBar& l, const IntersectionBar& r) {
    return l.total() > r.total();
  });
  return bars;
}

std::vector<ClusterId> query(const QuerySpec& spec, std::size_t model_count,
                             std::span<const AgreementCluster> clusters,
                             std::span<const ClusterStatus> statuses) {
  if (spec.states.size() != model_count)
    throw QueryError("query must give a state for each of the " + std::to_string(model_count) +
                     " models");
  if (statuses.size() != clusters.size())
    throw std::invalid_argument("query: statuses must cover all clusters");

  std::vector<ModelIndex> include, exclude;
  for (ModelIndex m = 0; m < spec.states.size(); ++m) {
    if (spec.states[m] == ModelState::Include) include.push_back(m);
    if (spec.states[m] == ModelState::Exclude) exclude.push_back(m);
  }

  std::vector<ClusterId> out;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    const Signature& sig = clusters[i].signature;
    if (!std::all_of(include.begin(), include.end(), [&](ModelIndex m) { return sig.contains(m); }))
      continue;
    if (std::any_of(exclude.begin(), exclude.end(), [&](ModelIndex m) { return sig.contains(m); }))
      continue;
    const bool tp = statuses[i].status == MatchStatus::TruePositive;
    if (spec.status == StatusFilter::TPOnly && !tp) continue;
    if (spec.status == StatusFilter::FPOnly && tp) continue;
    out.push_back(clusters[i].id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool parse_status_filter(const std::string& s, StatusFilter& out) {
  if (s == "all") out = StatusFilter::All;
  else if (s == "tp") out = StatusFilter::TPOnly;
  else if (s == "fp") out = StatusFilter::FPOnly;
  else return false;
  return true;
}

const char* to_string(StatusFilter f) {
  switch (f) {
    case StatusFilter::All: return "all";
    case StatusFilter::TPOnly: return "tp";
    case StatusFilter::FPOnly: return "fp";
  }
  return "all";
}

const char* to_string(MatchStatus s) {
  return s == MatchStatus::TruePositive ? "tp" : "fp";
}

}  // namespace setmlvis
