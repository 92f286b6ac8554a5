#pragma once

// UpSet-style aggregation and tri-state queries over agreement clusters.

#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "setmlvis/detection_matcher.hpp"

namespace setmlvis {

struct IntersectionBar {
  Signature signature;
  std::size_t tp_count = 0;
  std::size_t fp_count = 0;
  std::vector<ClusterId> cluster_ids;  // ascending

  std::size_t total() const { return cluster_ids.size(); }

  friend bool operator==(const IntersectionBar&, const IntersectionBar&) = default;
};

/// One bar per distinct signature; a cluster counts only under its exact
/// signature. Sorted by descending total, then ascending signature.
/// `statuses` must be parallel to `clusters`.
std::vector<IntersectionBar> aggregate(std::span<const AgreementCluster> clusters,
                                       std::span<const ClusterStatus> statuses);

enum class ModelState { Neutral, Include, Exclude };
enum class StatusFilter { All, TPOnly, FPOnly };

struct QuerySpec {
  std::vector<ModelState> states;  // one per artifact model
  StatusFilter status = StatusFilter::All;
  EvalParams params;

  static QuerySpec all_neutral(std::size_t model_count) {
    return QuerySpec{std::vector<ModelState>(model_count, ModelState::Neutral), StatusFilter::All,
                     {}};
  }
};

class QueryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Clusters whose signature holds every Include model and no Exclude model,
/// filtered by status. Ascending cluster ids. Throws QueryError when the
/// `spec.states` does not cover `model_count` models.
std::vector<ClusterId> query(const QuerySpec& spec, std::size_t model_count,
                             std::span<const AgreementCluster> clusters,
                             std::span<const ClusterStatus> statuses);

bool parse_status_filter(const std::string& s, StatusFilter& out);
const char* to_string(StatusFilter f);
const char* to_string(MatchStatus s);

class TagError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// tag name -> image ids.
using TagMap = std::map<std::string, std::set<std::string>>;

/// Image tags for one artifact. Writers are serialized; readers get a
/// consistent snapshot.
class TagStore {
 public:
  explicit TagStore(std::vector<ImageInfo> images);

  /// Idempotent union of `image_ids` into `tag`. Throws TagError on an empty
  /// tag name or an unknown image id; on error nothing is applied.
  void assign(const std::string& tag, std::span<const std::string> image_ids);

  TagMap snapshot() const;
  bool dirty() const;
  void mark_clean();

  /// Export document {tag: [{image_id, file}]}, tags and images sorted.
  std::string export_document() const;
  void export_to(const std::filesystem::path& path) const;

  /// Replaces the tag map with the contents of an export document.
  void import_document(const std::string& text);
  void load_from(const std::filesystem::path& path);

 private:
  std::string document_locked() const;

  std::map<std::string, std::string> files_;  // image id -> file
  mutable std::shared_mutex mu_;
  TagMap tags_;
  bool dirty_ = false;
};

/// Sidecar tag file beside an artifact: "<artifact>.tags.json".
std::filesystem::path tag_sidecar_path(const std::filesystem::path& artifact);

}  // namespace setmlvis
