#pragma once

// Cross-model detection matching: IOU, confidence filtering, greedy
// agreement clustering and ground-truth evaluation.

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "setmlvis/artifact.hpp"
#include "setmlvis/ingest.hpp"

namespace setmlvis {

enum class ClusterId : std::uint32_t {};
constexpr std::uint32_t raw(ClusterId id) { return static_cast<std::uint32_t>(id); }

/// Models present in an agreement set, strictly ascending in canonical order.
class Signature {
 public:
  Signature() = default;
  /// Sorts and deduplicates.
  explicit Signature(std::vector<ModelIndex> models);

  const std::vector<ModelIndex>& models() const { return models_; }
  std::size_t size() const { return models_.size(); }
  bool empty() const { return models_.empty(); }
  bool contains(ModelIndex m) const;

  /// "modelA+modelB" using the supplied model names.
  std::string label(std::span<const std::string> names) const;

  friend bool operator==(const Signature&, const Signature&) = default;
  friend auto operator<=>(const Signature&, const Signature&) = default;

 private:
  std::vector<ModelIndex> models_;
};

struct AgreementCluster {
  ClusterId id{};
  ImageIndex image = 0;
  std::vector<DetectionId> members;  // ascending model order
  Signature signature;

  friend bool operator==(const AgreementCluster&, const AgreementCluster&) = default;
};

enum class MatchStatus { TruePositive, FalsePositive };

struct ClusterStatus {
  ClusterId cluster{};
  MatchStatus status = MatchStatus::FalsePositive;
  DetectionId representative{};
  std::optional<GtId> matched_gt;
  std::optional<double> match_iou;

  friend bool operator==(const ClusterStatus&, const ClusterStatus&) = default;
};

/// Interactive evaluation criteria.
struct EvalParams {
  double eval_iou = 0.5;
  double conf_min = 0.7;
  double conf_max = 1.0;

  /// Empty when legal, otherwise a reason naming the offending field.
  std::string check() const;
};

double iou(const BoundingBox& a, const BoundingBox& b);

/// Detections with conf_min <= confidence <= conf_max, order preserved.
std::vector<Detection> filter_detections(std::span<const Detection> detections,
                                         const EvalParams& p);

/// All cross-model same-image pairs with iou >= set_iou in canonical order:
/// descending IOU, then (model of a, a, model of b, b) ascending.
std::vector<Edge> compute_edges(const RawDataset& d, double set_iou);

/// Greedy agreement clustering. Edges are visited in the given (canonical)
/// order; edges below `set_iou` or touching a detection absent from
/// `detections` are skipped. Two clusters merge only when their signatures
/// are disjoint. Cluster ids ascend with each cluster's lowest member id.
std::vector<AgreementCluster> generate_clusters(std::span<const Detection> detections,
                                                std::span<const Edge> edges, double set_iou);

/// Cluster-level TP/FP. The representative is the highest-confidence member;
/// clusters claim ground truth in descending representative confidence and
/// each ground-truth object validates at most one cluster. Statuses are
/// returned in the same order as `clusters`.
std::vector<ClusterStatus> evaluate_clusters(std::span<const AgreementCluster> clusters,
                                             std::span<const Detection> detections,
                                             std::span<const GroundTruthObject> gt,
                                             const EvalParams& p);

struct DetectionStatus {
  DetectionId detection{};
  MatchStatus status = MatchStatus::FalsePositive;
  std::optional<GtId> matched_gt;
  std::optional<double> match_iou;
};

struct ModelEvaluation {
  std::vector<DetectionStatus> statuses;  // same order as the input detections
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

/// Single-model greedy matching; `detections` must all belong to `model`.
ModelEvaluation evaluate_model(ModelIndex model, std::span<const Detection> detections,
                               std::span<const GroundTruthObject> gt, double eval_iou);

/// One slider position worth of engine output over an artifact.
struct ClusteredView {
  std::vector<Detection> surviving;
  std::vector<AgreementCluster> clusters;  // indexed by ClusterId
  std::vector<ClusterStatus> statuses;     // parallel to clusters

  const Detection* find_detection(DetectionId id) const;
};

/// filter -> cluster (at the artifact's set_iou, from cached edges) -> evaluate.
ClusteredView recluster(const SetArtifact& a, const EvalParams& p);

}  // namespace setmlvis
