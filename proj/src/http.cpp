// http.cpp
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// \file
// HTTP front end and remote engines.

#include "httplib.h"
#include "json.hpp"
#include "smt/service.hpp"

namespace smt::service {

std::pair<EngineDescriptor, std::shared_ptr<Engine>> engine_from_json(const std::string& body, int timeout_ms);

namespace {

using json = nlohmann::json;

class RemoteEngine : public Engine {
 public:
  RemoteEngine(std::string host, int port, std::string source, std::string target, int timeout_ms)
      : host_(std::move(host)), port_(port), source_(std::move(source)), target_(std::move(target)),
        timeout_ms_(timeout_ms) {}

  std::string translate(const std::string& text) override {
    httplib::Client cli(host_, port_);
    const auto secs = timeout_ms_ / 1000;
    const auto usecs = (timeout_ms_ % 1000) * 1000;
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    TranslateRequest req;
    req.source_lang = source_;
    req.target_lang = target_;
    req.text = text;
    auto res = cli.Post("/translate", request_json(req), "application/json");
    if (!res) throw Error("remote " + host_ + ":" + std::to_string(port_) + " unreachable");
    const auto resp = parse_response(res->body);
    if (resp.status != "ok") throw Error("remote returned " + resp.status + (resp.error.empty() ? "" : ": " + resp.error));
    return resp.translation;
  }

 private:
  std::string host_;
  int port_;
  std::string source_;
  std::string target_;
  int timeout_ms_;
};

int http_status(const std::string& status) {
  if (status == "ok") return 200;
  if (status == "malformed") return 400;
  if (status == "no_route") return 404;
  if (status == "timeout") return 504;
  return 502;
}

}  // namespace

std::shared_ptr<Engine> make_remote(const std::string& address, const std::string& source_lang,
                                    const std::string& target_lang, int timeout_ms) {
  std::string a = address;
  if (a.rfind("http://", 0) == 0) a = a.substr(7);
  while (!a.empty() && a.back() == '/') a.pop_back();
  const size_t colon = a.rfind(':');
  if (colon == std::string::npos) throw Error("remote address must be host:port, got '" + address + "'");
  const int port = std::atoi(a.c_str() + colon + 1);
  if (port <= 0) throw Error("bad port in remote address '" + address + "'");
  return std::make_shared<RemoteEngine>(a.substr(0, colon), port, source_lang, target_lang, timeout_ms);
}

struct Server::Impl {
  Registry& registry;
  ServiceConfig config;
  httplib::Server http;

  Impl(Registry& r, ServiceConfig c) : registry(r), config(std::move(c)) {
    http.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"}});
    http.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    http.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(json{{"status", "ok"}, {"engines", registry.size()}}.dump(), "application/json");
    });

    http.Get("/engines", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(engines_json(registry.list()), "application/json");
    });

    http.Post("/engines", [this](const httplib::Request& req, httplib::Response& res) {
      try {
        auto [d, engine] = engine_from_json(req.body, config.timeout_ms);
        const std::string id = d.id;
        try {
          registry.register_engine(std::move(d), std::move(engine));
        } catch (const Error& e) {
          res.status = 409;
          res.set_content(json{{"status", "error"}, {"error", e.what()}}.dump(), "application/json");
          return;
        }
        res.status = 201;
        res.set_content(json{{"status", "ok"}, {"id", id}}.dump(), "application/json");
      } catch (const std::exception& e) {
        res.status = 400;
        res.set_content(json{{"status", "malformed"}, {"error", e.what()}}.dump(), "application/json");
      }
    });

    http.Delete(R"(/engines/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      try {
        registry.unregister_engine(id);
        res.set_content(json{{"status", "ok"}, {"id", id}}.dump(), "application/json");
      } catch (const std::exception& e) {
        res.status = 404;
        res.set_content(json{{"status", "error"}, {"error", e.what()}}.dump(), "application/json");
      }
    });

    http.Post("/translate", [this](const httplib::Request& req, httplib::Response& res) {
      TranslateResponse resp;
      try {
        resp = translate(registry, parse_request(req.body), config);
      } catch (const std::exception& e) {
        resp.status = "malformed";
        resp.error = e.what();
      }
      res.status = http_status(resp.status);
      res.set_content(response_json(resp), "application/json");
    });
  }
};

Server::Server(Registry& registry, ServiceConfig config)
    : impl_(std::make_unique<Impl>(registry, std::move(config))) {}

Server::~Server() { stop(); }

int Server::start() {
  auto& cfg = impl_->config;
  if (cfg.port == 0) {
    port_ = impl_->http.bind_to_any_port(cfg.host);
  } else {
    port_ = impl_->http.bind_to_port(cfg.host, cfg.port) ? cfg.port : -1;
  }
  if (port_ <= 0) throw Error("cannot bind " + cfg.host + ":" + std::to_string(cfg.port));
  thread_ = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
  return port_;
}

void Server::run_blocking() {
  auto& cfg = impl_->config;
  if (cfg.port == 0) {
    port_ = impl_->http.bind_to_any_port(cfg.host);
  } else {
    port_ = impl_->http.bind_to_port(cfg.host, cfg.port) ? cfg.port : -1;
  }
  if (port_ <= 0) throw Error("cannot bind " + cfg.host + ":" + std::to_string(cfg.port));
  impl_->http.listen_after_bind();
}

void Server::stop() {
  if (impl_) impl_->http.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace smt::service
