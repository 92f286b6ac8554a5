#pragma once

// HTTP front end over one immutable artifact.

#include <filesystem>
#include <memory>
#include <mutex>
#include <string>

#include "setmlvis/artifact.hpp"
#include "setmlvis/detection_matcher.hpp"
#include "setmlvis/intersection_query.hpp"

namespace httplib {
class Server;
}

namespace setmlvis {

struct ServiceConfig {
  std::filesystem::path artifact_path;
  std::string host = "127.0.0.1";
  int port = 8080;
  /// Root for image bytes; empty means the artifact's source folder.
  std::filesystem::path static_image_root;
  EvalParams defaults{0.5, 0.7, 1.0};
  /// Persist tag mutations to the sidecar beside the artifact.
  bool persist_tags = true;
};

/// Splits "host:port"; returns false on a malformed address.
bool parse_listen_address(const std::string& text, std::string& host, int& port);

class Service {
 public:
  /// Loads the tag sidecar when one exists.
  Service(SetArtifact artifact, ServiceConfig config);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds the configured address (port 0 picks a free one). Returns the
  /// bound port, or -1 when the address cannot be bound.
  int bind();
  /// Serves until stop(); call after a successful bind().
  bool listen();
  void stop();

  const SetArtifact& artifact() const { return artifact_; }
  const TagStore& tags() const { return tags_; }

 private:
  void routes();
  void persist_tags();

  SetArtifact artifact_;
  ServiceConfig config_;
  std::filesystem::path image_root_;
  TagStore tags_;
  std::mutex tag_writer_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace setmlvis
