#pragma once

// Test-only reference implementations. These deliberately avoid the library's
// code paths: IOU by cell decomposition, clustering by materializing and
// sorting all pairs and relabeling explicit member lists.

#include <algorithm>
#include <map>
#include <set>
#include <tuple>
#include <vector>

#include "setmlvis/detection_matcher.hpp"

namespace oracle {

using namespace setmlvis;

/// Intersection and union areas by splitting the plane along every box edge
/// and summing the cells covered by one or both boxes.
inline std::pair<double, double> cell_areas(const BoundingBox& a, const BoundingBox& b) {
  std::vector<double> xs{a.x, a.x + a.w, b.x, b.x + b.w};
  std::vector<double> ys{a.y, a.y + a.h, b.y, b.y + b.h};
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  auto inside = [](const BoundingBox& r, double cx, double cy) {
    return cx > r.x && cx < r.x + r.w && cy > r.y && cy < r.y + r.h;
  };
  double inter = 0, uni = 0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double w = xs[i + 1] - xs[i];
      const double h = ys[j + 1] - ys[j];
      if (w <= 0 || h <= 0) continue;
      const double cx = (xs[i] + xs[i + 1]) / 2, cy = (ys[j] + ys[j + 1]) / 2;
      const bool in_a = inside(a, cx, cy), in_b = inside(b, cx, cy);
      if (in_a || in_b) uni += w * h;
      if (in_a && in_b) inter += w * h;
    }
  }
  return {inter, uni};
}

inline double area_iou(const BoundingBox& a, const BoundingBox& b) {
  auto [inter, uni] = cell_areas(a, b);
  return uni > 0 ? inter / uni : 0.0;
}

struct NaiveCluster {
  ImageIndex image = 0;
  std::vector<DetectionId> members;  // ascending model
  std::vector<ModelIndex> models;    // ascending

  friend bool operator==(const NaiveCluster&, const NaiveCluster&) = default;
};

/// Reference greedy clustering over the surviving detections.
inline std::vector<NaiveCluster> naive_clusters(const std::vector<Detection>& dets, double set_iou) {
  struct Pair {
    double iou;
    ModelIndex ma;
    std::uint32_t a;
    ModelIndex mb;
    std::uint32_t b;
    std::size_t ia, ib;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    for (std::size_t j = 0; j < dets.size(); ++j) {
      if (i == j) continue;
      const Detection& p = dets[i];
      const Detection& q = dets[j];
      if (p.image != q.image || p.model >= q.model) continue;  // each unordered pair once, low model first
      const double v = area_iou(p.box, q.box);
      if (v >= set_iou) pairs.push_back({v, p.model, raw(p.id), q.model, raw(q.id), i, j});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& l, const Pair& r) {
    return std::make_tuple(-l.iou, l.ma, l.a, l.mb, l.b) <
           std::make_tuple(-r.iou, r.ma, r.a, r.mb, r.b);
  });

  std::vector<std::size_t> label(dets.size());
  std::vector<std::set<std::size_t>> members(dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    label[i] = i;
    members[i] = {i};
  }
  for (const Pair& p : pairs) {
    const std::size_t la = label[p.ia], lb = label[p.ib];
    if (la == lb) continue;
    std::set<ModelIndex> ma, mb;
    for (auto k : members[la]) ma.insert(dets[k].model);
    for (auto k : members[lb]) mb.insert(dets[k].model);
    bool overlap = false;
    for (auto m : ma) overlap = overlap || mb.count(m);
    if (overlap) continue;
    for (auto k : members[lb]) {
      label[k] = la;
      members[la].insert(k);
    }
    members[lb].clear();
  }

  std::vector<std::pair<std::uint32_t, NaiveCluster>> out;
  for (std::size_t l = 0; l < dets.size(); ++l) {
    if (members[l].empty()) continue;
    std::vector<std::size_t> ks(members[l].begin(), members[l].end());
    std::sort(ks.begin(), ks.end(), [&](auto x, auto y) { return dets[x].model < dets[y].model; });
    NaiveCluster c;
    c.image = dets[ks.front()].image;
    std::uint32_t lowest = raw(dets[ks.front()].id);
    for (auto k : ks) {
      c.members.push_back(dets[k].id);
      c.models.push_back(dets[k].model);
      lowest = std::min(lowest, raw(dets[k].id));
    }
    out.emplace_back(lowest, std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
  std::vector<NaiveCluster> result;
  for (auto& [_, c] : out) result.push_back(std::move(c));
  return result;
}

inline std::vector<NaiveCluster> as_naive(const std::vector<AgreementCluster>& clusters) {
  std::vector<NaiveCluster> out;
  for (const auto& c : clusters) out.push_back({c.image, c.members, c.signature.models()});
  return out;
}

/// Reference UpSet tally: signature -> (tp, fp, ids).
struct Tally {
  std::size_t tp = 0, fp = 0;
  std::vector<ClusterId> ids;
};
inline std::map<std::vector<ModelIndex>, Tally> tally(const std::vector<AgreementCluster>& clusters,
                                                      const std::vector<ClusterStatus>& statuses) {
  std::map<std::vector<ModelIndex>, Tally> out;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    auto& t = out[clusters[i].signature.models()];
    (statuses[i].status == MatchStatus::TruePositive ? t.tp : t.fp)++;
    t.ids.push_back(clusters[i].id);
  }
  return out;
}

/// Brute-force set counting for Jaccard from cluster lists.
inline double count_jaccard(const std::vector<AgreementCluster>& clusters, ModelIndex a,
                            ModelIndex b) {
  std::size_t both = 0, either = 0;
  for (const auto& c : clusters) {
    const bool ha = std::count(c.signature.models().begin(), c.signature.models().end(), a) > 0;
    const bool hb = std::count(c.signature.models().begin(), c.signature.models().end(), b) > 0;
    both += ha && hb;
    either += ha || hb;
  }
  return either == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(either);
}

}  // namespace oracle
