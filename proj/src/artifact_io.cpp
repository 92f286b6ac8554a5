#include "setmlvis/artifact.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace setmlvis {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json box_json(const BoundingBox& b) { return json::array({b.x, b.y, b.w, b.h}); }

BoundingBox box_from(const json& j) {
  if (!j.is_array() || j.size() != 4) throw ArtifactError("corrupted artifact: bad bbox");
  return BoundingBox{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                     j[3].get<double>()};
}

void check_edges(const SetArtifact& a) {
  const auto& dets = a.raw.detections;
  std::unordered_map<std::uint32_t, const Detection*> by_id;
  for (const auto& d : dets) by_id.emplace(raw(d.id), &d);
  for (std::size_t i = 0; i < a.edges.size(); ++i) {
    const Edge& e = a.edges[i];
    auto ia = by_id.find(raw(e.a));
    auto ib = by_id.find(raw(e.b));
    const std::string where = "corrupted artifact: edge " + std::to_string(i) + ": ";
    if (ia == by_id.end() || ib == by_id.end()) throw ArtifactError(where + "unknown detection");
    if (ia->second->model == ib->second->model) throw ArtifactError(where + "same-model pair");
    if (ia->second->image != ib->second->image) throw ArtifactError(where + "cross-image pair");
    if (!(e.iou >= a.set_iou && e.iou <= 1.0)) throw ArtifactError(where + "iou below set_iou");
  }
}

}  // namespace

std::string serialize_artifact(const SetArtifact& a) {
  const RawDataset& d = a.raw;
  json doc;
  doc["format_version"] = kArtifactFormatVersion;
  doc["build"] = {{"tool_version", a.build.tool_version},
                  {"timestamp", a.build.timestamp},
                  {"source_folder", a.build.source_folder}};
  doc["object_class"] = d.object_class;
  doc["set_iou"] = a.set_iou;
  doc["models"] = d.models;
  doc["dropped"] = {{"detections", d.dropped_detections},
                    {"ground_truth", d.dropped_ground_truth}};

  json images = json::array();
  for (const auto& im : d.images)
    images.push_back(
        {{"image_id", im.image_id}, {"file", im.file}, {"width", im.width}, {"height", im.height}});
  doc["images"] = std::move(images);

  json dets = json::array();
  for (const auto& det : d.detections) {
    dets.push_back({{"id", raw(det.id)},
                    {"model", det.model},
                    {"image", det.image},
                    {"bbox", box_json(det.box)},
                    {"class", det.class_label},
                    {"confidence", det.confidence}});
  }
  doc["detections"] = std::move(dets);

  json gts = json::array();
  for (const auto& g : d.ground_truth) {
    gts.push_back({{"id", raw(g.id)},
                   {"image", g.image},
                   {"bbox", box_json(g.box)},
                   {"class", g.class_label}});
  }
  doc["ground_truth"] = std::move(gts);

  json edges = json::array();
  for (const auto& e : a.edges) edges.push_back(json::array({raw(e.a), raw(e.b), e.iou}));
  doc["edges"] = std::move(edges);

  return doc.dump(1) + "\n";
}

SetArtifact parse_artifact(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ArtifactError(std::string("corrupted artifact: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("format_version") ||
      !doc["format_version"].is_number_integer())
    throw ArtifactError("corrupted artifact: missing format_version");
  const int version = doc["format_version"].get<int>();
  if (version != kArtifactFormatVersion) {
    throw ArtifactError("artifact format version " + std::to_string(version) +
                        " is not supported (expected " +
                        std::to_string(kArtifactFormatVersion) + ")");
  }

  SetArtifact a;
  try {
    const json& b = doc.at("build");
    a.build.tool_version = b.at("tool_version").get<std::string>();
    a.build.timestamp = b.at("timestamp").get<std::string>();
    a.build.source_folder = b.at("source_folder").get<std::string>();
    a.set_iou = doc.at("set_iou").get<double>();

    RawDataset& d = a.raw;
    d.object_class = doc.at("object_class").get<std::string>();
    d.models = doc.at("models").get<std::vector<std::string>>();
    d.dropped_detections = doc.at("dropped").at("detections").get<std::size_t>();
    d.dropped_ground_truth = doc.at("dropped").at("ground_truth").get<std::size_t>();
    for (const auto& im : doc.at("images")) {
      d.images.push_back(ImageInfo{im.at("image_id").get<std::string>(),
                                   im.at("file").get<std::string>(), im.at("width").get<int>(),
                                   im.at("height").get<int>()});
    }
    for (const auto& r : doc.at("detections")) {
      d.detections.push_back(Detection{DetectionId{r.at("id").get<std::uint32_t>()},
                                       r.at("model").get<ModelIndex>(),
                                       r.at("image").get<ImageIndex>(), box_from(r.at("bbox")),
                                       r.at("class").get<std::string>(),
                                       r.at("confidence").get<double>()});
    }
    for (const auto& r : doc.at("ground_truth")) {
      d.ground_truth.push_back(GroundTruthObject{GtId{r.at("id").get<std::uint32_t>()},
                                                 r.at("image").get<ImageIndex>(),
                                                 box_from(r.at("bbox")),
                                                 r.at("class").get<std::string>()});
    }
    for (const auto& e : doc.at("edges")) {
      if (!e.is_array() || e.size() != 3) throw ArtifactError("corrupted artifact: bad edge");
      a.edges.push_back(Edge{DetectionId{e[0].get<std::uint32_t>()},
                             DetectionId{e[1].get<std::uint32_t>()}, e[2].get<double>()});
    }
  } catch (const json::exception& e) {
    throw ArtifactError(std::string("corrupted artifact: ") + e.what());
  }

  if (!(a.set_iou > 0.0 && a.set_iou <= 1.0))
    throw ArtifactError("corrupted artifact: set_iou out of range");
  ValidationReport report = validate_dataset(a.raw);
  if (!report.ok()) {
    const auto& v = report.violations.front();
    throw ArtifactError("corrupted artifact: " + v.subject + ": " + v.message);
  }
  check_edges(a);
  return a;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError(path.string() + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ArtifactError(tmp.string() + ": cannot write");
    out << contents;
    out.flush();
    if (!out) throw ArtifactError(tmp.string() + ": write failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw ArtifactError(path.string() + ": " + ec.message());
  }
}

void write_artifact(const SetArtifact& a, const fs::path& path) {
  write_file_atomic(path, serialize_artifact(a));
}

SetArtifact load_artifact(const fs::path& path) {
  try {
    return parse_artifact(read_file(path));
  } catch (const ArtifactError& e) {
    throw ArtifactError(path.string() + ": " + e.what());
  }
}

std::string build_timestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* sde = std::getenv("SOURCE_DATE_EPOCH")) t = std::strtoll(sde, nullptr, 10);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace setmlvis
