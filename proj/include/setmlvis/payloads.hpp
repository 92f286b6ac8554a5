#pragma once

// Canonical JSON documents shared by the HTTP service and the headless CLI.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "setmlvis/artifact.hpp"
#include "setmlvis/comparison_metrics.hpp"
#include "setmlvis/generic_matchers.hpp"
#include "setmlvis/intersection_query.hpp"

namespace setmlvis::api {

using nlohmann::json;

/// Returns the value of a named request parameter, if supplied.
using ParamLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Reads eval_iou / conf_min / conf_max over `defaults`. Returns an error
/// reason for unparsable or out-of-range values; never clamps.
std::string parse_eval_params(const ParamLookup& lookup, const EvalParams& defaults,
                              EvalParams& out);

/// Body of POST /api/query: {include, exclude, neutral, status, eval_iou,
/// conf_min, conf_max}. Unlisted models are Neutral.
std::string parse_query_body(const json& body, const SetArtifact& a, const EvalParams& defaults,
                             QuerySpec& out);

/// Builds a QuerySpec from model-name lists; returns an error reason on an
/// unknown model or a model given two states.
std::string make_query_spec(const SetArtifact& a, const std::vector<std::string>& include,
                            const std::vector<std::string>& exclude,
                            const std::vector<std::string>& neutral, QuerySpec& out);

json params_json(const EvalParams& p);
json meta(const SetArtifact& a);
json intersections(const SetArtifact& a, const EvalParams& p,
                   const std::vector<IntersectionBar>& bars);
json cluster_detail(const SetArtifact& a, const ClusteredView& view, ClusterId id);
json query_result(const SetArtifact& a, const ClusteredView& view, const QuerySpec& spec,
                  const std::vector<ClusterId>& ids);
json annotations(const SetArtifact& a, const ClusteredView& view, const EvalParams& p,
                 ImageIndex image);
json metrics(const SetArtifact& a, const EvalParams& p, const std::vector<ModelScore>& scores,
             const SimilarityMatrix& matrix);
json tags(const TagMap& t);
json agreement_groups(const std::vector<std::string>& models,
                      const std::vector<generic::AgreementGroup>& groups);

/// Whole read pipelines over an artifact, used by both front ends.
json intersections_for(const SetArtifact& a, const EvalParams& p);
json query_for(const SetArtifact& a, const QuerySpec& spec);
json metrics_for(const SetArtifact& a, const EvalParams& p);

json error_body(const std::string& reason);

}  // namespace setmlvis::api
