#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "setmlvis/ingest.hpp"

namespace setmlvis {

inline constexpr int kArtifactFormatVersion = 1;
inline constexpr const char* kToolVersion = "setmlvis 1.0.0";

/// Cross-model, same-image detection pair whose IOU cleared the set threshold.
/// `a` always belongs to the model with the lower canonical index.
struct Edge {
  DetectionId a{};
  DetectionId b{};
  double iou = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct BuildMetadata {
  std::string tool_version;
  std::string timestamp;  // ISO-8601 UTC
  std::string source_folder;

  friend bool operator==(const BuildMetadata&, const BuildMetadata&) = default;
};

struct SetArtifact {
  RawDataset raw;
  double set_iou = 0.3;
  std::vector<Edge> edges;
  BuildMetadata build;

  friend bool operator==(const SetArtifact&, const SetArtifact&) = default;
};

class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Canonical serialized form. write_artifact writes exactly these bytes.
std::string serialize_artifact(const SetArtifact& a);
SetArtifact parse_artifact(const std::string& text);

void write_artifact(const SetArtifact& a, const std::filesystem::path& path);
SetArtifact load_artifact(const std::filesystem::path& path);

/// Writes `contents` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ, or SOURCE_DATE_EPOCH when set.
std::string build_timestamp();

}  // namespace setmlvis
