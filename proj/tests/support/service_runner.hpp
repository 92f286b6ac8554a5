#pragma once

#include <stdexcept>
#include <thread>

#include "httplib.h"
#include "setmlvis/service.hpp"

/// Runs a Service on a free loopback port for the lifetime of the object.
class ServiceRunner {
 public:
  ServiceRunner(setmlvis::SetArtifact artifact, setmlvis::ServiceConfig config)
      : service_(std::move(artifact), loopback(std::move(config))) {
    port_ = service_.bind();
    if (port_ < 0) throw std::runtime_error("cannot bind loopback port");
    thread_ = std::thread([this] { service_.listen(); });
  }
  ~ServiceRunner() {
    service_.stop();
    thread_.join();
  }

  int port() const { return port_; }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_keep_alive(true);
    return c;
  }
  setmlvis::Service& service() { return service_; }

 private:
  static setmlvis::ServiceConfig loopback(setmlvis::ServiceConfig c) {
    c.host = "127.0.0.1";
    c.port = 0;
    return c;
  }

  setmlvis::Service service_;
  int port_ = -1;
  std::thread thread_;
};
