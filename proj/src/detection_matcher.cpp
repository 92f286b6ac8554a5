#include "setmlvis/detection_matcher.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

namespace setmlvis {

Signature::Signature(std::vector<ModelIndex> models) : models_(std::move(models)) {
  std::sort(models_.begin(), models_.end());
  models_.erase(std::unique(models_.begin(), models_.end()), models_.end());
}

bool Signature::contains(ModelIndex m) const {
  return std::binary_search(models_.begin(), models_.end(), m);
}

std::string Signature::label(std::span<const std::string> names) const {
  std::string out;
  for (ModelIndex m : models_) {
    if (!out.empty()) out += '+';
    out += m < names.size() ? names[m] : "#" + std::to_string(m);
  }
  return out;
}

std::string EvalParams::check() const {
  if (!(eval_iou > 0.0 && eval_iou <= 1.0)) return "eval_iou must be in (0, 1]";
  if (!(conf_min >= 0.0 && conf_min <= 1.0)) return "conf_min must be in [0, 1]";
  if (!(conf_max >= 0.0 && conf_max <= 1.0)) return "conf_max must be in [0, 1]";
  if (conf_min > conf_max) return "conf_min must not exceed conf_max";
  return {};
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double iy = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  if (ix <= 0 || iy <= 0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<Detection> filter_detections(std::span<const Detection> detections,
                                         const EvalParams& p) {
  std::vector<Detection> out;
  out.reserve(detections.size());
  for (const auto& d : detections)
    if (d.confidence >= p.conf_min && d.confidence <= p.conf_max) out.push_back(d);
  return out;
}

std::vector<Edge> compute_edges(const RawDataset& d, double set_iou) {
  std::unordered_map<ImageIndex, std::vector<const Detection*>> by_image;
  for (const auto& det : d.detections) by_image[det.image].push_back(&det);

  struct Keyed {
    Edge edge;
    ModelIndex ma, mb;
  };
  std::vector<Keyed> found;
  for (auto& [image, dets] : by_image) {
    for (std::size_t i = 0; i < dets.size(); ++i) {
      for (std::size_t j = i + 1; j < dets.size(); ++j) {
        const Detection* p = dets[i];
        const Detection* q = dets[j];
        if (p->model == q->model) continue;
        const double v = iou(p->box, q->box);
        if (v < set_iou) continue;
        if (std::pair(q->model, raw(q->id)) < std::pair(p->model, raw(p->id))) std::swap(p, q);
        found.push_back(Keyed{Edge{p->id, q->id, v}, p->model, q->model});
      }
    }
  }
  std::sort(found.begin(), found.end(), [](const Keyed& l, const Keyed& r) {
    if (l.edge.iou != r.edge.iou) return l.edge.iou > r.edge.iou;
    return std::tuple(l.ma, raw(l.edge.a), l.mb, raw(l.edge.b)) <
           std::tuple(r.ma, raw(r.edge.a), r.mb, raw(r.edge.b));
  });
  std::vector<Edge> out;
  out.reserve(found.size());
  for (const auto& k : found) out.push_back(k.edge);
  return out;
}

namespace {

// Union-find whose roots carry the model bitmask of their component.
class ModelUnionFind {
 public:
  ModelUnionFind(std::span<const Detection> dets, std::size_t words)
      : parent_(dets.size()), size_(dets.size(), 1), words_(words), masks_(dets.size() * words) {
    std::iota(parent_.begin(), parent_.end(), std::uint32_t{0});
    for (std::size_t i = 0; i < dets.size(); ++i)
      masks_[i * words_ + dets[i].model / 64] |= std::uint64_t{1} << (dets[i].model % 64);
  }

  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // Merges when the two components share no model.
  void merge_if_disjoint(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    for (std::size_t w = 0; w < words_; ++w)
      if (masks_[a * words_ + w] & masks_[b * words_ + w]) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    for (std::size_t w = 0; w < words_; ++w) masks_[a * words_ + w] |= masks_[b * words_ + w];
  }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> size_;
  std::size_t words_;
  std::vector<std::uint64_t> masks_;
};

}  // namespace

std::vector<AgreementCluster> generate_clusters(std::span<const Detection> detections,
                                                std::span<const Edge> edges, double set_iou) {
  ModelIndex max_model = 0;
  std::unordered_map<std::uint32_t, std::uint32_t> local;
  local.reserve(detections.size() * 2);
  for (std::size_t i = 0; i < detections.size(); ++i) {
    local.emplace(raw(detections[i].id), static_cast<std::uint32_t>(i));
    max_model = std::max(max_model, detections[i].model);
  }

  ModelUnionFind uf(detections, max_model / 64 + 1);
  for (const Edge& e : edges) {
    if (e.iou < set_iou) continue;
    auto ia = local.find(raw(e.a));
    auto ib = local.find(raw(e.b));
    if (ia == local.end() || ib == local.end()) continue;
    uf.merge_if_disjoint(ia->second, ib->second);
  }

  std::unordered_map<std::uint32_t, std::size_t> slot_of_root;
  std::vector<std::vector<std::uint32_t>> groups;
  for (std::uint32_t i = 0; i < detections.size(); ++i) {
    auto [it, inserted] = slot_of_root.emplace(uf.find(i), groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(i);
  }

  std::vector<AgreementCluster> clusters;
  clusters.reserve(groups.size());
  for (auto& g : groups) {
    std::sort(g.begin(), g.end(), [&](std::uint32_t l, std::uint32_t r) {
      return detections[l].model < detections[r].model;
    });
    AgreementCluster c;
    c.image = detections[g.front()].image;
    std::vector<ModelIndex> models;
    for (std::uint32_t i : g) {
      c.members.push_back(detections[i].id);
      models.push_back(detections[i].model);
    }
    c.signature = Signature(std::move(models));
    clusters.push_back(std::move(c));
  }

  auto lowest = [](const AgreementCluster& c) {
    std::uint32_t m = raw(c.members.front());
    for (DetectionId id : c.members) m = std::min(m, raw(id));
    return m;
  };
  std::vector<std::pair<std::uint32_t, std::size_t>> order;
  order.reserve(clusters.size());
  for (std::size_t i = 0; i < clusters.size(); ++i) order.emplace_back(lowest(clusters[i]), i);
  std::sort(order.begin(), order.end());

  std::vector<AgreementCluster> out;
  out.reserve(clusters.size());
  for (auto [_, i] : order) {
    clusters[i].id = ClusterId{static_cast<std::uint32_t>(out.size())};
    out.push_back(std::move(clusters[i]));
  }
  return out;
}

namespace {

using GtByImage = std::unordered_map<ImageIndex, std::vector<std::size_t>>;

GtByImage index_gt(std::span<const GroundTruthObject> gt) {
  GtByImage out;
  for (std::size_t i = 0; i < gt.size(); ++i) out[gt[i].image].push_back(i);
  return out;
}

struct Claim {
  std::optional<std::size_t> gt;
  double iou = 0;
};

// Best-IOU unclaimed ground truth on the box's image; ties keep the earlier object.
Claim best_unclaimed(const Detection& det, std::span<const GroundTruthObject> gt,
                     const GtByImage& by_image, const std::vector<bool>& claimed) {
  Claim best;
  auto it = by_image.find(det.image);
  if (it == by_image.end()) return best;
  for (std::size_t g : it->second) {
    if (claimed[g]) continue;
    const double v = iou(det.box, gt[g].box);
    if (!best.gt || v > best.iou) best = Claim{g, v};
  }
  return best;
}

bool more_confident(const Detection& l, const Detection& r) {
  if (l.confidence != r.confidence) return l.confidence > r.confidence;
  if (l.model != r.model) return l.model < r.model;
  return raw(l.id) < raw(r.id);
}

}  // namespace

std::vector<ClusterStatus> evaluate_clusters(std::span<const AgreementCluster> clusters,
                                             std::span<const Detection> detections,
                                             std::span<const GroundTruthObject> gt,
                                             const EvalParams& p) {
  std::unordered_map<std::uint32_t, const Detection*> by_id;
  by_id.reserve(detections.size() * 2);
  for (const auto& d : detections) by_id.emplace(raw(d.id), &d);

  std::vector<const Detection*> rep(clusters.size());
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    for (DetectionId m : clusters[i].members) {
      const Detection* d = by_id.at(raw(m));
      if (!rep[i] || more_confident(*d, *rep[i])) rep[i] = d;
    }
  }

  std::vector<std::size_t> order(clusters.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return rep[l]->confidence > rep[r]->confidence;
  });

  const GtByImage gt_index = index_gt(gt);
  std::vector<bool> claimed(gt.size(), false);
  std::vector<ClusterStatus> out(clusters.size());
  for (std::size_t i : order) {
    ClusterStatus& s = out[i];
    s.cluster = clusters[i].id;
    s.representative = rep[i]->id;
    Claim c = best_unclaimed(*rep[i], gt, gt_index, claimed);
    if (c.gt && c.iou >= p.eval_iou) {
      claimed[*c.gt] = true;
      s.status = MatchStatus::TruePositive;
      s.matched_gt = gt[*c.gt].id;
      s.match_iou = c.iou;
    }
  }
  return out;
}

ModelEvaluation evaluate_model(ModelIndex model, std::span<const Detection> detections,
                               std::span<const GroundTruthObject> gt, double eval_iou) {
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return more_confident(detections[l], detections[r]);
  });

  const GtByImage gt_index = index_gt(gt);
  std::vector<bool> claimed(gt.size(), false);
  ModelEvaluation ev;
  ev.statuses.resize(detections.size());
  for (std::size_t i : order) {
    const Detection& d = detections[i];
    DetectionStatus& s = ev.statuses[i];
    s.detection = d.id;
    if (d.model != model) throw std::invalid_argument("evaluate_model: detection from another model");
    Claim c = best_unclaimed(d, gt, gt_index, claimed);
    if (c.gt && c.iou >= eval_iou) {
      claimed[*c.gt] = true;
      s.status = MatchStatus::TruePositive;
      s.matched_gt = gt[*c.gt].id;
      s.match_iou = c.iou;
      ++ev.tp;
    } else {
      ++ev.fp;
    }
  }
  ev.fn = static_cast<std::size_t>(std::count(claimed.begin(), claimed.end(), false));
  return ev;
}

const Detection* ClusteredView::find_detection(DetectionId id) const {
  auto it = std::lower_bound(surviving.begin(), surviving.end(), raw(id),
                             [](const Detection& d, std::uint32_t v) { return raw(d.id) < v; });
  if (it == surviving.end() || it->id != id) return nullptr;
  return &*it;
}

ClusteredView recluster(const SetArtifact& a, const EvalParams& p) {
  ClusteredView v;
  v.surviving = filter_detections(a.raw.detections, p);
  if (!std::is_sorted(v.surviving.begin(), v.surviving.end(),
                      [](const Detection& l, const Detection& r) { return raw(l.id) < raw(r.id); })) {
    std::sort(v.surviving.begin(), v.surviving.end(),
              [](const Detection& l, const Detection& r) { return raw(l.id) < raw(r.id); });
  }
  v.clusters = generate_clusters(v.surviving, a.edges, a.set_iou);
  v.statuses = evaluate_clusters(v.clusters, v.surviving, a.raw.ground_truth, p);
  return v;
}

}  // namespace setmlvis
