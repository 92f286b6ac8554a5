#pragma once

// Agreement sets for prediction tasks without bounding boxes.

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "setmlvis/detection_matcher.hpp"

namespace setmlvis::generic {

/// Complete prediction matrix: every model predicts every item.
/// `labels[item][model]` for classification, `values[item][model]` for regression.
struct PredictionTable {
  std::vector<std::string> models;
  std::vector<std::string> items;
  std::vector<std::vector<std::string>> labels;
  std::vector<std::vector<double>> values;
};

struct RegressionSummary {
  double min = 0;
  double max = 0;
  double mean = 0;

  friend bool operator==(const RegressionSummary&, const RegressionSummary&) = default;
};

/// Matched cluster labels of a two-model alignment: (label in A, label in B).
struct ClusterLabelPair {
  std::string a;
  std::string b;

  friend bool operator==(const ClusterLabelPair&, const ClusterLabelPair&) = default;
};

using Consensus = std::variant<std::string, RegressionSummary, ClusterLabelPair>;

struct AgreementGroup {
  std::string item_id;
  Signature signature;
  Consensus consensus;
  std::optional<MatchStatus> correctness;

  friend bool operator==(const AgreementGroup&, const AgreementGroup&) = default;
};

class MatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One prediction record as read from a tabular file.
struct LabeledPrediction {
  std::string model_id;
  std::string item_id;
  std::string label;
};

/// Builds the complete model x item label matrix. Models and items keep
/// first-appearance order. Throws MatchError ("criterion 2 violated") when a
/// (model, item) cell is missing and on duplicate cells.
PredictionTable make_label_table(std::span<const LabeledPrediction> records);
/// Same, parsing every label as a real number.
PredictionTable make_value_table(std::span<const LabeledPrediction> records);

/// Per item, models partition by identical label; groups ordered by their
/// lowest model index. With `truth` (item_id -> label) each group is TP iff
/// its label equals the item's true label.
std::vector<AgreementGroup> match_classification(
    const PredictionTable& table, const std::map<std::string, std::string>* truth = nullptr);

/// Chain-linkage grouping of one item's per-model values: sorted ascending
/// (equal values by model index), consecutive gaps <= epsilon link.
std::vector<AgreementGroup> match_regression(const std::string& item_id,
                                             std::span<const double> values_by_model,
                                             double epsilon);
/// Applies match_regression to every item of the table.
std::vector<AgreementGroup> match_regression(const PredictionTable& table, double epsilon);

/// item_id -> cluster label.
using ClusterLabels = std::map<std::string, std::string>;

struct ClusterAlignment {
  /// Label of A -> matched label of B; labels left unmatched are absent.
  std::map<std::string, std::string> mapping;
  /// Per item: {A,B} when the mapped labels coincide, otherwise {A} and {B}.
  std::vector<AgreementGroup> groups;
};

/// Maximum-overlap one-to-one label assignment over the contingency matrix.
/// Model index 0 is `a`, 1 is `b`. Throws MatchError when the item sets differ.
ClusterAlignment align_clusterings(const ClusterLabels& a, const ClusterLabels& b);

/// Maximum-weight assignment on a rectangular matrix; result[row] is the
/// assigned column or -1. Rows/columns beyond the smaller dimension stay
/// unassigned.
std::vector<int> max_weight_assignment(const std::vector<std::vector<long long>>& weight);

/// CSV with a header `model_id,item_id,<kind>` where `<kind>` is one of
/// `label`, `value`, `cluster`.
std::vector<LabeledPrediction> read_prediction_csv(const std::filesystem::path& path);
/// CSV with a header `item_id,label`.
std::map<std::string, std::string> read_truth_csv(const std::filesystem::path& path);

}  // namespace setmlvis::generic
