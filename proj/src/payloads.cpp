#include "setmlvis/payloads.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <unordered_map>

namespace setmlvis::api {

namespace {

bool parse_ratio(const std::string& text, double& out) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc{} && ptr == end && std::isfinite(out);
}

json box_json(const BoundingBox& b) { return json::array({b.x, b.y, b.w, b.h}); }

json signature_json(const SetArtifact& a, const Signature& s) {
  json names = json::array();
  for (ModelIndex m : s.models()) names.push_back(a.raw.models.at(m));
  return names;
}

json ids_json(const std::vector<ClusterId>& ids) {
  json out = json::array();
  for (ClusterId id : ids) out.push_back(raw(id));
  return out;
}

}  // namespace

std::string parse_eval_params(const ParamLookup& lookup, const EvalParams& defaults,
                              EvalParams& out) {
  out = defaults;
  struct Field {
    const char* name;
    double* target;
  };
  for (Field f : {Field{"eval_iou", &out.eval_iou}, Field{"conf_min", &out.conf_min},
                  Field{"conf_max", &out.conf_max}}) {
    if (auto v = lookup(f.name)) {
      if (!parse_ratio(*v, *f.target)) return std::string(f.name) + " is not a number";
    }
  }
  return out.check();
}

std::string make_query_spec(const SetArtifact& a, const std::vector<std::string>& include,
                            const std::vector<std::string>& exclude,
                            const std::vector<std::string>& neutral, QuerySpec& out) {
  const std::size_t n = a.raw.models.size();
  out.states.assign(n, ModelState::Neutral);
  std::vector<bool> seen(n, false);
  struct Group {
    const std::vector<std::string>* names;
    ModelState state;
  };
  for (Group g : {Group{&include, ModelState::Include}, Group{&exclude, ModelState::Exclude},
                  Group{&neutral, ModelState::Neutral}}) {
    for (const auto& name : *g.names) {
      ModelIndex m = 0;
      if (!a.raw.find_model(name, m)) return "unknown model '" + name + "'";
      if (seen[m]) return "model '" + name + "' given more than one state";
      seen[m] = true;
      out.states[m] = g.state;
    }
  }
  return {};
}

std::string parse_query_body(const json& body, const SetArtifact& a, const EvalParams& defaults,
                             QuerySpec& out) {
  if (!body.is_object()) return "query body must be an object";
  std::vector<std::string> lists[3];
  const char* keys[3] = {"include", "exclude", "neutral"};
  for (int k = 0; k < 3; ++k) {
    auto it = body.find(keys[k]);
    if (it == body.end()) continue;
    if (!it->is_array()) return std::string(keys[k]) + " must be a list of model ids";
    for (const auto& v : *it) {
      if (!v.is_string()) return std::string(keys[k]) + " must be a list of model ids";
      lists[k].push_back(v.get<std::string>());
    }
  }
  if (auto reason = make_query_spec(a, lists[0], lists[1], lists[2], out); !reason.empty())
    return reason;

  out.status = StatusFilter::All;
  if (auto it = body.find("status"); it != body.end()) {
    if (!it->is_string() || !parse_status_filter(it->get<std::string>(), out.status))
      return "status must be one of all, tp, fp";
  }
  out.params = defaults;
  struct Field {
    const char* name;
    double* target;
  };
  for (Field f : {Field{"eval_iou", &out.params.eval_iou}, Field{"conf_min", &out.params.conf_min},
                  Field{"conf_max", &out.params.conf_max}}) {
    auto it = body.find(f.name);
    if (it == body.end()) continue;
    if (!it->is_number()) return std::string(f.name) + " is not a number";
    *f.target = it->get<double>();
  }
  return out.params.check();
}

json params_json(const EvalParams& p) {
  return {{"eval_iou", p.eval_iou}, {"conf_min", p.conf_min}, {"conf_max", p.conf_max}};
}

json meta(const SetArtifact& a) {
  return {{"format_version", kArtifactFormatVersion},
          {"models", a.raw.models},
          {"object_class", a.raw.object_class},
          {"set_iou", a.set_iou},
          {"counts",
           {{"images", a.raw.images.size()},
            {"detections", a.raw.detections.size()},
            {"ground_truth", a.raw.ground_truth.size()},
            {"edges", a.edges.size()}}},
          {"build",
           {{"tool_version", a.build.tool_version},
            {"timestamp", a.build.timestamp},
            {"source_folder", a.build.source_folder}}}};
}

json intersections(const SetArtifact& a, const EvalParams& p,
                   const std::vector<IntersectionBar>& bars) {
  json list = json::array();
  std::size_t total = 0;
  for (const auto& b : bars) {
    total += b.total();
    list.push_back({{"signature", signature_json(a, b.signature)},
                    {"tp", b.tp_count},
                    {"fp", b.fp_count},
                    {"total", b.total()},
                    {"cluster_ids", ids_json(b.cluster_ids)}});
  }
  return {{"params", params_json(p)}, {"total_clusters", total}, {"bars", std::move(list)}};
}

json cluster_detail(const SetArtifact& a, const ClusteredView& view, ClusterId id) {
  const AgreementCluster& c = view.clusters.at(raw(id));
  const ClusterStatus& s = view.statuses.at(raw(id));
  json members = json::array();
  for (DetectionId m : c.members) {
    const Detection* d = view.find_detection(m);
    members.push_back({{"detection_id", raw(m)},
                       {"model", a.raw.models.at(d->model)},
                       {"bbox", box_json(d->box)},
                       {"confidence", d->confidence}});
  }
  json out = {{"cluster_id", raw(c.id)},
              {"image_id", a.raw.image_name(c.image)},
              {"signature", signature_json(a, c.signature)},
              {"members", std::move(members)},
              {"status", to_string(s.status)},
              {"representative", raw(s.representative)},
              {"matched_gt", nullptr},
              {"match_iou", nullptr}};
  if (s.matched_gt) {
    const auto& gts = a.raw.ground_truth;
    const GroundTruthObject& g = *std::find_if(
        gts.begin(), gts.end(), [&](const GroundTruthObject& o) { return o.id == *s.matched_gt; });
    out["matched_gt"] = {{"gt_id", raw(g.id)}, {"bbox", box_json(g.box)}};
    out["match_iou"] = *s.match_iou;
  }
  return out;
}

json query_result(const SetArtifact& a, const ClusteredView& view, const QuerySpec& spec,
                  const std::vector<ClusterId>& ids) {
  json states = json::object();
  for (ModelIndex m = 0; m < spec.states.size(); ++m) {
    const char* s = spec.states[m] == ModelState::Include   ? "include"
                    : spec.states[m] == ModelState::Exclude ? "exclude"
                                                            : "neutral";
    states[a.raw.models.at(m)] = s;
  }
  json clusters = json::array();
  for (ClusterId id : ids) clusters.push_back(cluster_detail(a, view, id));
  return {{"params", params_json(spec.params)},
          {"states", std::move(states)},
          {"status", to_string(spec.status)},
          {"cluster_ids", ids_json(ids)},
          {"clusters", std::move(clusters)}};
}

json annotations(const SetArtifact& a, const ClusteredView& view, const EvalParams& p,
                 ImageIndex image) {
  std::unordered_map<std::uint32_t, std::size_t> cluster_of;
  std::unordered_map<std::uint32_t, std::size_t> gt_claimed_by;
  for (std::size_t i = 0; i < view.clusters.size(); ++i) {
    if (view.clusters[i].image != image) continue;
    for (DetectionId m : view.clusters[i].members) cluster_of[raw(m)] = i;
    if (view.statuses[i].matched_gt) gt_claimed_by[raw(*view.statuses[i].matched_gt)] = i;
  }
  json dets = json::array();
  for (const auto& d : a.raw.detections) {
    if (d.image != image) continue;
    json j = {{"detection_id", raw(d.id)},
              {"model", a.raw.models.at(d.model)},
              {"bbox", box_json(d.box)},
              {"confidence", d.confidence},
              {"in_range", d.confidence >= p.conf_min && d.confidence <= p.conf_max},
              {"cluster_id", nullptr},
              {"status", nullptr}};
    if (auto it = cluster_of.find(raw(d.id)); it != cluster_of.end()) {
      j["cluster_id"] = raw(view.clusters[it->second].id);
      j["status"] = to_string(view.statuses[it->second].status);
    }
    dets.push_back(std::move(j));
  }
  json gts = json::array();
  for (const auto& g : a.raw.ground_truth) {
    if (g.image != image) continue;
    json j = {{"gt_id", raw(g.id)}, {"bbox", box_json(g.box)}, {"claimed_by", nullptr}};
    if (auto it = gt_claimed_by.find(raw(g.id)); it != gt_claimed_by.end())
      j["claimed_by"] = raw(view.clusters[it->second].id);
    gts.push_back(std::move(j));
  }
  const ImageInfo& im = a.raw.images.at(image);
  return {{"image_id", im.image_id},
          {"file", im.file},
          {"width", im.width},
          {"height", im.height},
          {"params", params_json(p)},
          {"detections", std::move(dets)},
          {"ground_truth", std::move(gts)}};
}

json metrics(const SetArtifact& a, const EvalParams& p, const std::vector<ModelScore>& scores,
             const SimilarityMatrix& matrix) {
  json rows = json::array();
  for (const auto& s : scores) {
    rows.push_back({{"model", s.model_id},
                    {"tp", s.tp},
                    {"fp", s.fp},
                    {"fn", s.fn},
                    {"precision", s.precision},
                    {"recall", s.recall}});
  }
  return {{"params", params_json(p)},
          {"models", a.raw.models},
          {"scores", std::move(rows)},
          {"jaccard", matrix.values}};
}

json tags(const TagMap& t) {
  json out = json::object();
  for (const auto& [tag, ids] : t) out[tag] = ids;
  return out;
}

json agreement_groups(const std::vector<std::string>& models,
                      const std::vector<generic::AgreementGroup>& groups) {
  json list = json::array();
  for (const auto& g : groups) {
    json sig = json::array();
    for (ModelIndex m : g.signature.models()) sig.push_back(models.at(m));
    json j = {{"item_id", g.item_id}, {"signature", std::move(sig)}};
    if (const auto* label = std::get_if<std::string>(&g.consensus)) {
      j["label"] = *label;
    } else if (const auto* r = std::get_if<generic::RegressionSummary>(&g.consensus)) {
      j["min"] = r->min;
      j["max"] = r->max;
      j["mean"] = r->mean;
    } else if (const auto* c = std::get_if<generic::ClusterLabelPair>(&g.consensus)) {
      j["clusters"] = {c->a, c->b};
    }
    if (g.correctness) j["correct"] = *g.correctness == MatchStatus::TruePositive;
    list.push_back(std::move(j));
  }
  return {{"models", models}, {"groups", std::move(list)}};
}

json intersections_for(const SetArtifact& a, const EvalParams& p) {
  const ClusteredView view = recluster(a, p);
  return intersections(a, p, aggregate(view.clusters, view.statuses));
}

json query_for(const SetArtifact& a, const QuerySpec& spec) {
  const ClusteredView view = recluster(a, spec.params);
  const auto ids = query(spec, a.raw.models.size(), view.clusters, view.statuses);
  return query_result(a, view, spec, ids);
}

json metrics_for(const SetArtifact& a, const EvalParams& p) {
  const ClusteredView view = recluster(a, p);
  const auto members = memberships(view.clusters, a.raw.models.size());
  return metrics(a, p, model_scores(a, p), jaccard_matrix(members, a.raw.models));
}

json error_body(const std::string& reason) { return {{"error", "bad_request"}, {"reason", reason}}; }

}  // namespace setmlvis::api
