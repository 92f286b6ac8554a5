#include "setmlvis/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "json.hpp"

namespace setmlvis {

namespace fs = std::filesystem;
using nlohmann::json;

bool BoundingBox::valid() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h) && w > 0 &&
         h > 0;
}

bool RawDataset::find_model(const std::string& name, ModelIndex& out) const {
  auto it = std::find(models.begin(), models.end(), name);
  if (it == models.end()) return false;
  out = static_cast<ModelIndex>(it - models.begin());
  return true;
}

bool RawDataset::find_image(const std::string& image_id, ImageIndex& out) const {
  auto it = std::find_if(images.begin(), images.end(),
                         [&](const ImageInfo& im) { return im.image_id == image_id; });
  if (it == images.end()) return false;
  out = static_cast<ImageIndex>(it - images.begin());
  return true;
}

namespace {

[[noreturn]] void fail_record(const fs::path& file, std::size_t record, const std::string& what) {
  std::ostringstream os;
  os << file.string() << ": record " << record << ": " << what;
  throw IngestError(os.str());
}

json read_json_list(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IngestError(file.string() + ": cannot open");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw IngestError(file.string() + ": " + e.what());
  }
  if (!doc.is_array()) throw IngestError(file.string() + ": expected a list of records");
  return doc;
}

std::string image_id_of(const json& rec, const fs::path& file, std::size_t n) {
  auto it = rec.find("image_id");
  if (it == rec.end()) fail_record(file, n, "missing image_id");
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return it->dump();
  fail_record(file, n, "image_id must be a string or integer");
}

BoundingBox bbox_of(const json& rec, const fs::path& file, std::size_t n) {
  auto it = rec.find("bbox");
  if (it == rec.end() || !it->is_array() || it->size() != 4)
    fail_record(file, n, "bbox must be [x, y, w, h]");
  for (const auto& v : *it)
    if (!v.is_number()) fail_record(file, n, "bbox values must be numbers");
  BoundingBox b{(*it)[0].get<double>(), (*it)[1].get<double>(), (*it)[2].get<double>(),
                (*it)[3].get<double>()};
  if (!b.valid()) fail_record(file, n, "degenerate or non-finite bbox");
  return b;
}

std::string class_of(const json& rec, const fs::path& file, std::size_t n) {
  auto it = rec.find("class");
  if (it == rec.end() || !it->is_string()) fail_record(file, n, "missing class");
  return it->get<std::string>();
}

class ImageRegistry {
 public:
  ImageRegistry(std::vector<ImageInfo>& images, bool closed) : images_(images), closed_(closed) {
    for (std::size_t i = 0; i < images_.size(); ++i)
      index_.emplace(images_[i].image_id, static_cast<ImageIndex>(i));
  }

  ImageIndex resolve(const std::string& image_id, const fs::path& file, std::size_t n) {
    auto it = index_.find(image_id);
    if (it != index_.end()) return it->second;
    if (closed_) fail_record(file, n, "unknown image_id '" + image_id + "'");
    auto idx = static_cast<ImageIndex>(images_.size());
    images_.push_back(ImageInfo{image_id, "", 0, 0});
    index_.emplace(image_id, idx);
    return idx;
  }

 private:
  std::vector<ImageInfo>& images_;
  std::unordered_map<std::string, ImageIndex> index_;
  bool closed_;
};

std::vector<ImageInfo> load_image_index(const fs::path& file) {
  std::vector<ImageInfo> out;
  std::set<std::string> seen;
  json doc = read_json_list(file);
  for (std::size_t n = 0; n < doc.size(); ++n) {
    const json& rec = doc[n];
    if (!rec.is_object()) fail_record(file, n + 1, "expected an object");
    ImageInfo im;
    im.image_id = image_id_of(rec, file, n + 1);
    auto f = rec.find("file");
    if (f == rec.end() || !f->is_string()) fail_record(file, n + 1, "missing file");
    im.file = f->get<std::string>();
    auto w = rec.find("width");
    auto h = rec.find("height");
    if (w == rec.end() || h == rec.end() || !w->is_number_integer() || !h->is_number_integer())
      fail_record(file, n + 1, "width and height must be integers");
    im.width = w->get<int>();
    im.height = h->get<int>();
    if (!seen.insert(im.image_id).second)
      fail_record(file, n + 1, "duplicate image_id '" + im.image_id + "'");
    out.push_back(std::move(im));
  }
  return out;
}

}  // namespace

RawDataset load_dataset(const fs::path& root, const std::string& object_class) {
  if (object_class.empty()) throw IngestError("object class must be non-empty");
  if (!fs::is_directory(root)) throw IngestError(root.string() + ": folder not found");

  const fs::path gt_path = root / kGroundTruthFile;
  const fs::path index_path = root / kImageIndexFile;
  if (!fs::is_regular_file(gt_path))
    throw IngestError(root.string() + ": missing ground-truth file " + kGroundTruthFile);

  std::vector<fs::path> model_files;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
    const auto name = entry.path().filename().string();
    if (name == kGroundTruthFile || name == kImageIndexFile) continue;
    model_files.push_back(entry.path());
  }
  std::sort(model_files.begin(), model_files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  if (model_files.size() < 2) {
    throw IngestError("criterion 1 violated: need at least two model prediction files in " +
                      root.string() + ", found " + std::to_string(model_files.size()));
  }

  RawDataset d;
  d.object_class = object_class;
  const bool closed = fs::is_regular_file(index_path);
  if (closed) d.images = load_image_index(index_path);
  ImageRegistry registry(d.images, closed);

  {
    json doc = read_json_list(gt_path);
    for (std::size_t n = 0; n < doc.size(); ++n) {
      const json& rec = doc[n];
      if (!rec.is_object()) fail_record(gt_path, n + 1, "expected an object");
      std::string image_id = image_id_of(rec, gt_path, n + 1);
      BoundingBox box = bbox_of(rec, gt_path, n + 1);
      std::string cls = class_of(rec, gt_path, n + 1);
      ImageIndex image = registry.resolve(image_id, gt_path, n + 1);
      if (cls != object_class) {
        ++d.dropped_ground_truth;
        continue;
      }
      auto id = GtId{static_cast<std::uint32_t>(d.ground_truth.size())};
      d.ground_truth.push_back(GroundTruthObject{id, image, box, std::move(cls)});
    }
  }

  for (const auto& file : model_files) {
    const auto model = static_cast<ModelIndex>(d.models.size());
    d.models.push_back(file.stem().string());
    json doc = read_json_list(file);
    for (std::size_t n = 0; n < doc.size(); ++n) {
      const json& rec = doc[n];
      if (!rec.is_object()) fail_record(file, n + 1, "expected an object");
      std::string image_id = image_id_of(rec, file, n + 1);
      BoundingBox box = bbox_of(rec, file, n + 1);
      std::string cls = class_of(rec, file, n + 1);
      auto c = rec.find("confidence");
      if (c == rec.end() || !c->is_number()) fail_record(file, n + 1, "missing confidence");
      const double conf = c->get<double>();
      if (!(conf >= 0.0 && conf <= 1.0)) fail_record(file, n + 1, "confidence out of range");
      ImageIndex image = registry.resolve(image_id, file, n + 1);
      if (cls != object_class) {
        ++d.dropped_detections;
        continue;
      }
      auto id = DetectionId{static_cast<std::uint32_t>(d.detections.size())};
      d.detections.push_back(Detection{id, model, image, box, std::move(cls), conf});
    }
  }
  return d;
}

ValidationReport validate_dataset(const RawDataset& d) {
  ValidationReport report;
  auto add = [&](std::string subject, std::string message) {
    report.violations.push_back(Violation{std::move(subject), std::move(message)});
  };

  if (d.models.size() < 2) add("dataset", "criterion 1 violated: fewer than two models");
  {
    std::set<std::string> names;
    for (const auto& m : d.models)
      if (!names.insert(m).second) add("model " + m, "duplicate model id");
  }
  if (d.object_class.empty()) add("dataset", "empty object class");
  {
    std::set<std::string> ids;
    for (const auto& im : d.images)
      if (!ids.insert(im.image_id).second) add("image " + im.image_id, "duplicate image id");
  }

  std::set<std::pair<ModelIndex, std::uint32_t>> seen;
  for (const auto& det : d.detections) {
    const std::string model =
        det.model < d.models.size() ? d.models[det.model] : "#" + std::to_string(det.model);
    const std::string subject = model + ":" + std::to_string(raw(det.id));
    if (det.model >= d.models.size()) add(subject, "unknown model index");
    if (!seen.insert({det.model, raw(det.id)}).second) add(subject, "duplicate detection id");
    if (!(det.confidence >= 0.0 && det.confidence <= 1.0)) add(subject, "confidence out of range");
    if (!det.box.valid()) add(subject, "degenerate or non-finite bbox");
    if (det.image >= d.images.size()) add(subject, "unknown image");
    if (det.class_label != d.object_class) add(subject, "class differs from object class");
  }

  std::set<std::uint32_t> gt_ids;
  for (const auto& g : d.ground_truth) {
    const std::string subject = "gt:" + std::to_string(raw(g.id));
    if (!gt_ids.insert(raw(g.id)).second) add(subject, "duplicate ground-truth id");
    if (!g.box.valid()) add(subject, "degenerate or non-finite bbox");
    if (g.image >= d.images.size()) add(subject, "unknown image");
    if (g.class_label != d.object_class) add(subject, "class differs from object class");
  }
  return report;
}

}  // namespace setmlvis
