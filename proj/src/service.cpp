#include "setmlvis/service.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "httplib.h"
#include "setmlvis/payloads.hpp"

namespace setmlvis {

namespace fs = std::filesystem;
using nlohmann::json;

bool parse_listen_address(const std::string& text, std::string& host, int& port) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0) return false;
  const std::string p = text.substr(colon + 1);
  int value = -1;
  auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), value);
  if (ec != std::errc{} || ptr != p.data() + p.size() || value < 0 || value > 65535) return false;
  host = text.substr(0, colon);
  port = value;
  return true;
}

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void bad_request(httplib::Response& res, const std::string& reason) {
  send_json(res, api::error_body(reason), 400);
}

void not_found(httplib::Response& res, const std::string& reason) {
  send_json(res, json{{"error", "not_found"}, {"reason", reason}}, 404);
}

api::ParamLookup lookup_in(const httplib::Request& req) {
  return [&req](const std::string& name) -> std::optional<std::string> {
    if (!req.has_param(name)) return std::nullopt;
    return req.get_param_value(name);
  };
}

const char* content_type_for(const fs::path& p) {
  auto ext = p.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".png") return "image/png";
  if (ext == ".gif") return "image/gif";
  if (ext == ".webp") return "image/webp";
  if (ext == ".bmp") return "image/bmp";
  return "application/octet-stream";
}

// Resolves `file` under `root`; empty when it escapes the root.
std::optional<fs::path> confine(const fs::path& root, const std::string& file) {
  if (file.empty()) return std::nullopt;
  fs::path rel(file);
  if (rel.is_absolute()) return std::nullopt;
  std::error_code ec;
  const fs::path base = fs::weakly_canonical(root, ec);
  if (ec) return std::nullopt;
  const fs::path target = fs::weakly_canonical(base / rel, ec);
  if (ec) return std::nullopt;
  auto [b, t] = std::mismatch(base.begin(), base.end(), target.begin(), target.end());
  if (b != base.end()) return std::nullopt;
  return target;
}

}  // namespace

Service::Service(SetArtifact artifact, ServiceConfig config)
    : artifact_(std::move(artifact)),
      config_(std::move(config)),
      tags_(artifact_.raw.images),
      server_(std::make_unique<httplib::Server>()) {
  image_root_ = config_.static_image_root.empty() ? fs::path(artifact_.build.source_folder)
                                                  : config_.static_image_root;
  if (!config_.artifact_path.empty()) {
    const fs::path sidecar = tag_sidecar_path(config_.artifact_path);
    if (fs::exists(sidecar)) tags_.load_from(sidecar);
  }
  routes();
}

Service::~Service() { stop(); }

int Service::bind() {
  if (config_.port == 0) return server_->bind_to_any_port(config_.host);
  return server_->bind_to_port(config_.host, config_.port) ? config_.port : -1;
}

bool Service::listen() { return server_->listen_after_bind(); }

void Service::stop() {
  if (server_) server_->stop();
}

void Service::persist_tags() {
  if (!config_.persist_tags || config_.artifact_path.empty()) return;
  tags_.export_to(tag_sidecar_path(config_.artifact_path));
  tags_.mark_clean();
}

void Service::routes() {
  auto& srv = *server_;
  srv.set_tcp_nodelay(true);

  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res,
                               std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    send_json(res, json{{"error", "internal"}, {"reason", what}}, 500);
  });

  srv.Get("/api/meta", [this](const httplib::Request&, httplib::Response& res) {
    send_json(res, api::meta(artifact_));
  });

  srv.Get("/api/intersections", [this](const httplib::Request& req, httplib::Response& res) {
    EvalParams p;
    if (auto r = api::parse_eval_params(lookup_in(req), config_.defaults, p); !r.empty())
      return bad_request(res, r);
    send_json(res, api::intersections_for(artifact_, p));
  });

  srv.Post("/api/query", [this](const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::parse_error&) {
      return bad_request(res, "query body is not valid JSON");
    }
    QuerySpec spec;
    if (auto r = api::parse_query_body(body, artifact_, config_.defaults, spec); !r.empty())
      return bad_request(res, r);
    send_json(res, api::query_for(artifact_, spec));
  });

  srv.Get(R"(/api/clusters/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
    EvalParams p;
    if (auto r = api::parse_eval_params(lookup_in(req), config_.defaults, p); !r.empty())
      return bad_request(res, r);
    std::uint32_t id = 0;
    const std::string text = req.matches[1];
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), id);
    if (ec != std::errc{}) return not_found(res, "unknown cluster " + text);
    const ClusteredView view = recluster(artifact_, p);
    if (id >= view.clusters.size()) return not_found(res, "unknown cluster " + text);
    send_json(res, api::cluster_detail(artifact_, view, ClusterId{id}));
  });

  srv.Get(R"(/api/images/([^/]+)/annotations)",
          [this](const httplib::Request& req, httplib::Response& res) {
            EvalParams p;
            if (auto r = api::parse_eval_params(lookup_in(req), config_.defaults, p); !r.empty())
              return bad_request(res, r);
            ImageIndex image = 0;
            if (!artifact_.raw.find_image(req.matches[1], image))
              return not_found(res, "unknown image " + std::string(req.matches[1]));
            const ClusteredView view = recluster(artifact_, p);
            send_json(res, api::annotations(artifact_, view, p, image));
          });

  srv.Get(R"(/api/images/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    ImageIndex image = 0;
    if (!artifact_.raw.find_image(req.matches[1], image))
      return not_found(res, "unknown image " + std::string(req.matches[1]));
    const std::string& file = artifact_.raw.images[image].file;
    auto path = confine(image_root_, file);
    if (!path) {
      send_json(res, json{{"error", "forbidden"}, {"reason", "image path outside image root"}},
                403);
      return;
    }
    std::ifstream in(*path, std::ios::binary);
    if (!in) return not_found(res, "image file missing");
    std::ostringstream bytes;
    bytes << in.rdbuf();
    res.set_content(bytes.str(), content_type_for(*path));
  });

  srv.Get("/api/metrics", [this](const httplib::Request& req, httplib::Response& res) {
    EvalParams p;
    if (auto r = api::parse_eval_params(lookup_in(req), config_.defaults, p); !r.empty())
      return bad_request(res, r);
    try {
      send_json(res, api::metrics_for(artifact_, p));
    } catch (const MetricsError& e) {
      send_json(res, json{{"error", "unprocessable"}, {"reason", e.what()}}, 422);
    }
  });

  srv.Get("/api/tags", [this](const httplib::Request&, httplib::Response& res) {
    send_json(res, api::tags(tags_.snapshot()));
  });

  srv.Post("/api/tags", [this](const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::parse_error&) {
      return bad_request(res, "tag body is not valid JSON");
    }
    if (!body.is_object() || !body.contains("tag") || !body["tag"].is_string() ||
        !body.contains("image_ids") || !body["image_ids"].is_array())
      return bad_request(res, "tag body must be {tag, image_ids}");
    std::vector<std::string> ids;
    for (const auto& v : body["image_ids"]) {
      if (!v.is_string()) return bad_request(res, "image_ids must be strings");
      ids.push_back(v.get<std::string>());
    }
    std::lock_guard writer(tag_writer_);
    try {
      tags_.assign(body["tag"].get<std::string>(), ids);
    } catch (const TagError& e) {
      return bad_request(res, e.what());
    }
    persist_tags();
    send_json(res, api::tags(tags_.snapshot()));
  });

  srv.Get("/api/export/tags", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(tags_.export_document(), "application/json");
    res.set_header("Content-Disposition", "attachment; filename=\"tags.json\"");
  });
}

}  // namespace setmlvis
