// service.hpp
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
// Translation relay: engine registry, pivot route planning, per-hop traced
// translation and the HTTP front end.
//
// Wire format (JSON):
//   request  {"id", "source_lang", "target_lang", "modality", "text"}
//   response {"id", "source_lang", "target_lang", "modality", "text",
//             "translation", "route": [{"engine", "input", "output",
//             "duration_ms"}], "status", "error"?}
// status is one of ok, no_route, timeout, error, malformed.

#ifndef SMT_SERVICE_HPP_
#define SMT_SERVICE_HPP_

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "smt/text.hpp"

namespace smt::service {

enum class EngineKind { kStub, kDecoder, kRemote };
const char* kind_name(EngineKind k);

struct EngineDescriptor {
  std::string id;
  std::string source_lang;
  std::string target_lang;
  EngineKind kind = EngineKind::kStub;
  std::string address;  // remote endpoint, or stub/decoder detail
  std::string health = "ok";
};

class Engine {
 public:
  virtual ~Engine() = default;
  // Translates one payload; may throw.
  virtual std::string translate(const std::string& text) = 0;
};

class FunctionEngine : public Engine {
 public:
  explicit FunctionEngine(std::function<std::string(const std::string&)> fn) : fn_(std::move(fn)) {}
  std::string translate(const std::string& text) override { return fn_(text); }

 private:
  std::function<std::string(const std::string&)> fn_;
};

// Test stubs: "identity", "upper", "lower", "reverse" (word order),
// "prefix:<tag>", "sleep:<ms>", "fail".
std::shared_ptr<Engine> make_stub(const std::string& behaviour);

// POSTs a single-hop request to http://host:port/translate.
std::shared_ptr<Engine> make_remote(const std::string& address, const std::string& source_lang,
                                    const std::string& target_lang, int timeout_ms);

class NoRouteError : public Error {
 public:
  NoRouteError(const std::string& source, const std::string& target, std::vector<std::string> reachable);
  const std::vector<std::string>& reachable() const { return reachable_; }

 private:
  std::vector<std::string> reachable_;
};

struct RoutingPlan {
  std::string source_lang;
  std::string target_lang;
  std::vector<std::string> engines;
};

inline constexpr int kDefaultMaxHops = 2;

class Registry {
 public:
  // Language codes are lowercased; duplicate ids are rejected.
  void register_engine(EngineDescriptor descriptor, std::shared_ptr<Engine> engine);
  void unregister_engine(const std::string& id);
  // Sorted by id.
  std::vector<EngineDescriptor> list() const;
  size_t size() const;
  std::shared_ptr<Engine> engine(const std::string& id) const;
  EngineDescriptor descriptor(const std::string& id) const;

  // Fewest hops first, then the lexicographically smallest id sequence.
  RoutingPlan plan_route(const std::string& source_lang, const std::string& target_lang,
                         int max_hops = kDefaultMaxHops) const;

 private:
  struct Slot {
    EngineDescriptor descriptor;
    std::shared_ptr<Engine> engine;
  };
  mutable std::shared_mutex mu_;
  std::map<std::string, Slot> engines_;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  int timeout_ms = 30000;
  int max_hops = kDefaultMaxHops;

  // SMT_RELAY_HOST, SMT_RELAY_PORT, SMT_RELAY_TIMEOUT_MS, SMT_RELAY_MAX_HOPS
  // override the given defaults.
  static ServiceConfig from_env(ServiceConfig base);
  static ServiceConfig from_env();
  // "service.host = ..." style keys: host, port, timeout_ms, max_hops.
  static ServiceConfig from_file(const std::string& path, ServiceConfig base);
};

struct Hop {
  std::string engine;
  std::string input;
  std::string output;
  double duration_ms = 0.0;
};

struct TranslateRequest {
  std::string id;
  std::string source_lang;
  std::string target_lang;
  std::string modality = "text";
  std::string text;
};

struct TranslateResponse {
  TranslateRequest request;
  std::string status;
  std::string translation;
  std::vector<Hop> route;
  std::string error;
  std::vector<std::string> reachable;  // for no_route
};

TranslateResponse translate(const Registry& registry, const TranslateRequest& request, const ServiceConfig& config);

// JSON helpers. parse_request throws smt::Error on malformed documents.
TranslateRequest parse_request(const std::string& body);
std::string request_json(const TranslateRequest& request);
std::string response_json(const TranslateResponse& response);
TranslateResponse parse_response(const std::string& body);
std::string engines_json(const std::vector<EngineDescriptor>& engines);

// Blocking HTTP server on a background thread.
class Server {
 public:
  Server(Registry& registry, ServiceConfig config);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds and starts serving; returns the bound port.
  int start();
  void stop();
  int port() const { return port_; }
  // Serves on the calling thread until stop() is called elsewhere.
  void run_blocking();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace smt::service

#endif  // SMT_SERVICE_HPP_
