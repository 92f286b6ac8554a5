#pragma once

// Loads and validates model predictions plus ground truth for one object class.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace setmlvis {

/// Position of a model in the canonical (lexicographic file name) order.
using ModelIndex = std::uint32_t;
/// Position of an image in RawDataset::images.
using ImageIndex = std::uint32_t;

enum class DetectionId : std::uint32_t {};
enum class GtId : std::uint32_t {};

constexpr std::uint32_t raw(DetectionId id) { return static_cast<std::uint32_t>(id); }
constexpr std::uint32_t raw(GtId id) { return static_cast<std::uint32_t>(id); }

/// Axis-aligned box in pixels, top-left origin.
struct BoundingBox {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;

  double area() const { return w * h; }
  bool valid() const;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct Detection {
  DetectionId id{};
  ModelIndex model = 0;
  ImageIndex image = 0;
  BoundingBox box;
  std::string class_label;
  double confidence = 0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct GroundTruthObject {
  GtId id{};
  ImageIndex image = 0;
  BoundingBox box;
  std::string class_label;

  friend bool operator==(const GroundTruthObject&, const GroundTruthObject&) = default;
};

struct ImageInfo {
  std::string image_id;
  std::string file;
  int width = 0;
  int height = 0;

  friend bool operator==(const ImageInfo&, const ImageInfo&) = default;
};

struct RawDataset {
  std::vector<std::string> models;
  std::vector<ImageInfo> images;
  std::vector<Detection> detections;
  std::vector<GroundTruthObject> ground_truth;
  std::string object_class;

  /// Number of detection / ground-truth records discarded by the class filter.
  std::size_t dropped_detections = 0;
  std::size_t dropped_ground_truth = 0;

  const std::string& model_name(ModelIndex m) const { return models.at(m); }
  const std::string& image_name(ImageIndex i) const { return images.at(i).image_id; }

  /// Index lookups; return false when the name is unknown.
  bool find_model(const std::string& name, ModelIndex& out) const;
  bool find_image(const std::string& image_id, ImageIndex& out) const;

  friend bool operator==(const RawDataset&, const RawDataset&) = default;
};

/// Raised for any problem with the input folder: missing files, malformed
/// records, fewer than two models, unknown images, degenerate boxes.
class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kGroundTruthFile = "groundtruth.json";
inline constexpr const char* kImageIndexFile = "images.json";

/// Reads the `<model_id>.json` prediction files and `groundtruth.json` from
/// `root` (plus `images.json` when present), keeping only `object_class` records.
///
/// Models are ordered by file name. Detection ids are assigned densely in
/// (model order, file order); ground-truth ids in file order. Without an
/// image index, images are registered in order of first appearance
/// (ground truth first, then models in canonical order).
RawDataset load_dataset(const std::filesystem::path& root, const std::string& object_class);

struct Violation {
  std::string subject;  // e.g. "modelA/17" or "gt/3"
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
};

ValidationReport validate_dataset(const RawDataset& d);

}  // namespace setmlvis
