#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <httplib.h>

#include "atlas/server/api.hpp"

namespace atlas::server {

/// httplib transport over an Api. Serves /api/* and the UI directory at /.
class HttpServer {
 public:
  explicit HttpServer(std::shared_ptr<const Api> api) : api_(std::move(api)) {
    svr_.Get(R"(/api/.*)", [this](const httplib::Request& req, httplib::Response& res) {
      Request r{req.path, {}};
      for (const auto& [k, v] : req.params) r.params.emplace(k, v);  // first value wins
      const auto out = api_->handle(r);
      res.status = out.status;
      for (const auto& [k, v] : out.headers) res.set_header(k, v);
      res.set_content(out.body, out.content_type);
    });
    const auto& ui = api_->registry().config().ui_dir;
    if (!ui.empty() && std::filesystem::is_directory(ui)) svr_.set_mount_point("/", ui.string());
  }

  /// Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port) {
    const int bound = port == 0 ? svr_.bind_to_any_port(host) : (svr_.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw error(errc::io_error, "cannot listen on " + host + ":" + std::to_string(port));
    return bound;
  }

  /// Blocks until stop() is called.
  void run() { svr_.listen_after_bind(); }
  void stop() { svr_.stop(); }
  bool running() const { return svr_.is_running(); }
  void wait_until_ready() const { svr_.wait_until_ready(); }

 private:
  std::shared_ptr<const Api> api_;
  httplib::Server svr_;
};

}  // namespace atlas::server
