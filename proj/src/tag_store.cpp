#include "setmlvis/artifact.hpp"
#include "setmlvis/intersection_query.hpp"

#include "json.hpp"

namespace setmlvis {

using nlohmann::json;

TagStore::TagStore(std::vector<ImageInfo> images) {
  for (auto& im : images) files_.emplace(std::move(im.image_id), std::move(im.file));
}

void TagStore::assign(const std::string& tag, std::span<const std::string> image_ids) {
  if (tag.empty()) throw TagError("tag name must be non-empty");
  for (const auto& id : image_ids)
    if (!files_.count(id)) throw TagError("unknown image_id '" + id + "'");
  std::unique_lock lock(mu_);
  auto& set = tags_[tag];
  for (const auto& id : image_ids) set.insert(id);
  dirty_ = true;
}

TagMap TagStore::snapshot() const {
  std::shared_lock lock(mu_);
  return tags_;
}

bool TagStore::dirty() const {
  std::shared_lock lock(mu_);
  return dirty_;
}

void TagStore::mark_clean() {
  std::unique_lock lock(mu_);
  dirty_ = false;
}

std::string TagStore::document_locked() const {
  json doc = json::object();
  for (const auto& [tag, ids] : tags_) {
    json list = json::array();
    for (const auto& id : ids) list.push_back({{"image_id", id}, {"file", files_.at(id)}});
    doc[tag] = std::move(list);
  }
  return doc.dump(1) + "\n";
}

std::string TagStore::export_document() const {
  std::shared_lock lock(mu_);
  return document_locked();
}

void TagStore::export_to(const std::filesystem::path& path) const {
  std::shared_lock lock(mu_);
  write_file_atomic(path, document_locked());
}

void TagStore::import_document(const std::string& text) {
  TagMap loaded;
  try {
    json doc = json::parse(text);
    if (!doc.is_object()) throw TagError("tag document must be an object");
    for (const auto& [tag, list] : doc.items()) {
      if (tag.empty()) throw TagError("tag name must be non-empty");
      auto& set = loaded[tag];
      for (const auto& entry : list) {
        auto id = entry.at("image_id").get<std::string>();
        if (!files_.count(id)) throw TagError("unknown image_id '" + id + "'");
        set.insert(std::move(id));
      }
    }
  } catch (const json::exception& e) {
    throw TagError(std::string("malformed tag document: ") + e.what());
  }
  std::unique_lock lock(mu_);
  tags_ = std::move(loaded);
  dirty_ = false;
}

void TagStore::load_from(const std::filesystem::path& path) { import_document(read_file(path)); }

std::filesystem::path tag_sidecar_path(const std::filesystem::path& artifact) {
  auto p = artifact;
  p += ".tags.json";
  return p;
}

}  // namespace setmlvis
