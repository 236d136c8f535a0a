// service.cpp
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

#include "smt/service.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <future>
#include <mutex>
#include <set>

#include "json.hpp"
#include "smt/pipeline.hpp"

namespace smt::service {

using json = nlohmann::json;

const char* kind_name(EngineKind k) {
  switch (k) {
    case EngineKind::kStub: return "stub";
    case EngineKind::kDecoder: return "decoder";
    case EngineKind::kRemote: return "remote";
  }
  return "?";
}

namespace {

EngineKind parse_kind(const std::string& s) {
  if (s == "stub") return EngineKind::kStub;
  if (s == "decoder") return EngineKind::kDecoder;
  if (s == "remote") return EngineKind::kRemote;
  throw Error("unknown engine kind '" + s + "'");
}

std::string map_words(const std::string& text, const std::function<std::string(const std::string&)>& f) {
  std::string out;
  size_t start = 0;
  while (true) {
    const size_t nl = text.find('\n', start);
    const std::string line = text.substr(start, nl == std::string::npos ? std::string::npos : nl - start);
    out += f(line);
    if (nl == std::string::npos) break;
    out += '\n';
    start = nl + 1;
  }
  return out;
}

std::string upper_ascii(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

std::shared_ptr<Engine> make_stub(const std::string& behaviour) {
  if (behaviour == "identity") return std::make_shared<FunctionEngine>([](const std::string& s) { return s; });
  if (behaviour == "upper") return std::make_shared<FunctionEngine>(upper_ascii);
  if (behaviour == "lower") {
    return std::make_shared<FunctionEngine>([](const std::string& s) { return text::to_lower(s); });
  }
  if (behaviour == "reverse") {
    return std::make_shared<FunctionEngine>([](const std::string& s) {
      return map_words(s, [](const std::string& line) {
        auto w = text::split_ws(line);
        std::reverse(w.begin(), w.end());
        return text::join(w, " ");
      });
    });
  }
  if (behaviour.rfind("prefix:", 0) == 0) {
    const std::string tag = behaviour.substr(7);
    return std::make_shared<FunctionEngine>([tag](const std::string& s) {
      return map_words(s, [&](const std::string& line) { return tag + line; });
    });
  }
  if (behaviour.rfind("sleep:", 0) == 0) {
    const int ms = std::atoi(behaviour.c_str() + 6);
    return std::make_shared<FunctionEngine>([ms](const std::string& s) {
      std::this_thread::sleep_for(std::chrono::milliseconds(ms));
      return s;
    });
  }
  if (behaviour == "fail") {
    return std::make_shared<FunctionEngine>([](const std::string&) -> std::string { throw Error("stub failure"); });
  }
  throw Error("unknown stub behaviour '" + behaviour + "'");
}

namespace {

std::string join_list(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ", ") + s;
  return out.empty() ? "none" : out;
}

}  // namespace

NoRouteError::NoRouteError(const std::string& source, const std::string& target, std::vector<std::string> reachable)
    : Error("no route from " + source + " to " + target + "; reachable targets: " + join_list(reachable)),
      reachable_(std::move(reachable)) {}

void Registry::register_engine(EngineDescriptor d, std::shared_ptr<Engine> engine) {
  if (d.id.empty()) throw Error("engine id must not be empty");
  if (d.source_lang.empty() || d.target_lang.empty()) throw Error("engine " + d.id + " needs both languages");
  if (!engine) throw Error("engine " + d.id + " has no implementation");
  d.source_lang = text::to_lower(d.source_lang);
  d.target_lang = text::to_lower(d.target_lang);
  std::unique_lock lock(mu_);
  if (engines_.count(d.id)) throw Error("engine id '" + d.id + "' already registered");
  const std::string id = d.id;
  engines_.emplace(id, Slot{std::move(d), std::move(engine)});
}

void Registry::unregister_engine(const std::string& id) {
  std::unique_lock lock(mu_);
  if (!engines_.erase(id)) throw Error("no engine with id '" + id + "'");
}

std::vector<EngineDescriptor> Registry::list() const {
  std::shared_lock lock(mu_);
  std::vector<EngineDescriptor> out;
  out.reserve(engines_.size());
  for (const auto& [id, slot] : engines_) out.push_back(slot.descriptor);
  return out;
}

size_t Registry::size() const {
  std::shared_lock lock(mu_);
  return engines_.size();
}

std::shared_ptr<Engine> Registry::engine(const std::string& id) const {
  std::shared_lock lock(mu_);
  auto it = engines_.find(id);
  if (it == engines_.end()) throw Error("no engine with id '" + id + "'");
  return it->second.engine;
}

EngineDescriptor Registry::descriptor(const std::string& id) const {
  std::shared_lock lock(mu_);
  auto it = engines_.find(id);
  if (it == engines_.end()) throw Error("no engine with id '" + id + "'");
  return it->second.descriptor;
}

RoutingPlan Registry::plan_route(const std::string& source_lang, const std::string& target_lang,
                                 int max_hops) const {
  if (max_hops < 1) throw Error("max_hops must be at least 1");
  const std::string src = text::to_lower(source_lang);
  const std::string tgt = text::to_lower(target_lang);
  const auto engines = list();  // sorted by id
  // best[lang]: smallest id sequence of the current length reaching lang.
  std::map<std::string, std::vector<std::string>> frontier = {{src, {}}};
  std::set<std::string> reachable;
  for (int hop = 1; hop <= max_hops && !frontier.empty(); ++hop) {
    std::map<std::string, std::vector<std::string>> next;
    for (const auto& [lang, path] : frontier) {
      for (const auto& e : engines) {
        if (e.source_lang != lang) continue;
        std::vector<std::string> cand = path;
        cand.push_back(e.id);
        auto it = next.find(e.target_lang);
        if (it == next.end() || cand < it->second) next[e.target_lang] = std::move(cand);
      }
    }
    auto hit = next.find(tgt);
    if (hit != next.end()) return RoutingPlan{src, tgt, hit->second};
    for (const auto& [lang, path] : next) {
      if (lang != src) reachable.insert(lang);
    }
    frontier = std::move(next);
  }
  throw NoRouteError(src, tgt, std::vector<std::string>(reachable.begin(), reachable.end()));
}

ServiceConfig ServiceConfig::from_env(ServiceConfig c) {
  auto env_int = [](const char* name, int fallback) {
    const char* v = std::getenv(name);
    if (!v || !*v) return fallback;
    char* end = nullptr;
    const long x = std::strtol(v, &end, 10);
    if (*end) throw Error(std::string(name) + " is not an integer: " + v);
    return static_cast<int>(x);
  };
  if (const char* h = std::getenv("SMT_RELAY_HOST"); h && *h) c.host = h;
  c.port = env_int("SMT_RELAY_PORT", c.port);
  c.timeout_ms = env_int("SMT_RELAY_TIMEOUT_MS", c.timeout_ms);
  c.max_hops = env_int("SMT_RELAY_MAX_HOPS", c.max_hops);
  return c;
}

ServiceConfig ServiceConfig::from_env() { return from_env(ServiceConfig{}); }

ServiceConfig ServiceConfig::from_file(const std::string& path, ServiceConfig c) {
  const auto cfg = pipeline::Config::load(path);
  for (const auto& [k, v] : cfg.values()) {
    if (k != "service.host" && k != "service.port" && k != "service.timeout_ms" && k != "service.max_hops") {
      throw Error("unknown service config key '" + k + "'");
    }
  }
  c.host = cfg.get("service.host", c.host);
  c.port = cfg.get_int("service.port", c.port);
  c.timeout_ms = cfg.get_int("service.timeout_ms", c.timeout_ms);
  c.max_hops = cfg.get_int("service.max_hops", c.max_hops);
  return c;
}

namespace {

struct HopOutcome {
  bool done = false;
  bool failed = false;
  std::string output;
  std::string error;
};

// Runs the engine on a detached thread so a hung engine only costs this
// request its timeout.
HopOutcome run_hop(std::shared_ptr<Engine> engine, const std::string& input, int timeout_ms) {
  auto promise = std::make_shared<std::promise<HopOutcome>>();
  auto future = promise->get_future();
  std::thread([engine = std::move(engine), input, promise]() {
    HopOutcome r;
    r.done = true;
    try {
      r.output = engine->translate(input);
    } catch (const std::exception& e) {
      r.failed = true;
      r.error = e.what();
    }
    promise->set_value(std::move(r));
  }).detach();
  if (future.wait_for(std::chrono::milliseconds(timeout_ms)) != std::future_status::ready) return HopOutcome{};
  return future.get();
}

}  // namespace

TranslateResponse translate(const Registry& registry, const TranslateRequest& request, const ServiceConfig& config) {
  TranslateResponse resp;
  resp.request = request;
  if (request.modality != "text") {
    resp.status = "malformed";
    resp.error = "unsupported modality '" + request.modality + "'";
    return resp;
  }
  RoutingPlan plan;
  try {
    plan = registry.plan_route(request.source_lang, request.target_lang, config.max_hops);
  } catch (const NoRouteError& e) {
    resp.status = "no_route";
    resp.error = e.what();
    resp.reachable = e.reachable();
    return resp;
  } catch (const std::exception& e) {
    resp.status = "error";
    resp.error = e.what();
    return resp;
  }
  std::string data = request.text;
  for (const auto& id : plan.engines) {
    std::shared_ptr<Engine> engine;
    try {
      engine = registry.engine(id);
    } catch (const std::exception& e) {
      resp.status = "error";
      resp.error = e.what();
      return resp;
    }
    const auto t0 = std::chrono::steady_clock::now();
    HopOutcome out = run_hop(engine, data, config.timeout_ms);
    Hop hop;
    hop.engine = id;
    hop.input = data;
    hop.duration_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (!out.done) {
      resp.route.push_back(hop);
      resp.status = "timeout";
      resp.error = "engine " + id + " did not answer within " + std::to_string(config.timeout_ms) + " ms";
      return resp;
    }
    if (out.failed) {
      resp.route.push_back(hop);
      resp.status = "error";
      resp.error = "engine " + id + ": " + out.error;
      return resp;
    }
    hop.output = out.output;
    resp.route.push_back(hop);
    data = std::move(out.output);
  }
  resp.status = "ok";
  resp.translation = data;
  return resp;
}

// JSON.

namespace {

std::string required_string(const json& j, const char* field) {
  if (!j.contains(field)) throw Error(std::string("missing field '") + field + "'");
  if (!j[field].is_string()) throw Error(std::string("field '") + field + "' must be a string");
  return j[field].get<std::string>();
}

std::string optional_string(const json& j, const char* field, const std::string& fallback) {
  if (!j.contains(field)) return fallback;
  if (!j[field].is_string()) throw Error(std::string("field '") + field + "' must be a string");
  return j[field].get<std::string>();
}

}  // namespace

TranslateRequest parse_request(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw Error(std::string("request is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error("request must be a JSON object");
  TranslateRequest r;
  r.id = optional_string(j, "id", "");
  r.source_lang = text::to_lower(required_string(j, "source_lang"));
  r.target_lang = text::to_lower(required_string(j, "target_lang"));
  r.modality = optional_string(j, "modality", "text");
  r.text = required_string(j, "text");
  if (r.source_lang.empty() || r.target_lang.empty()) throw Error("languages must not be empty");
  return r;
}

std::string request_json(const TranslateRequest& r) {
  json j = {{"id", r.id},
            {"source_lang", r.source_lang},
            {"target_lang", r.target_lang},
            {"modality", r.modality},
            {"text", r.text}};
  return j.dump();
}

std::string response_json(const TranslateResponse& r) {
  json route = json::array();
  for (const auto& h : r.route) {
    route.push_back({{"engine", h.engine}, {"input", h.input}, {"output", h.output}, {"duration_ms", h.duration_ms}});
  }
  json j = {{"id", r.request.id},
            {"source_lang", r.request.source_lang},
            {"target_lang", r.request.target_lang},
            {"modality", r.request.modality},
            {"text", r.request.text},
            {"translation", r.translation},
            {"route", route},
            {"status", r.status}};
  if (!r.error.empty()) j["error"] = r.error;
  if (r.status == "no_route") j["reachable"] = r.reachable;
  return j.dump();
}

TranslateResponse parse_response(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw Error(std::string("response is not valid JSON: ") + e.what());
  }
  TranslateResponse r;
  r.request.id = optional_string(j, "id", "");
  r.request.source_lang = optional_string(j, "source_lang", "");
  r.request.target_lang = optional_string(j, "target_lang", "");
  r.request.modality = optional_string(j, "modality", "text");
  r.request.text = optional_string(j, "text", "");
  r.translation = optional_string(j, "translation", "");
  r.status = required_string(j, "status");
  r.error = optional_string(j, "error", "");
  if (j.contains("route") && j["route"].is_array()) {
    for (const auto& h : j["route"]) {
      r.route.push_back({h.value("engine", ""), h.value("input", ""), h.value("output", ""),
                         h.value("duration_ms", 0.0)});
    }
  }
  if (j.contains("reachable") && j["reachable"].is_array()) {
    for (const auto& l : j["reachable"]) r.reachable.push_back(l.get<std::string>());
  }
  return r;
}

std::string engines_json(const std::vector<EngineDescriptor>& engines) {
  json arr = json::array();
  for (const auto& e : engines) {
    json d = {{"id", e.id},
              {"source_lang", e.source_lang},
              {"target_lang", e.target_lang},
              {"kind", kind_name(e.kind)},
              {"health", e.health}};
    if (!e.address.empty()) d["address"] = e.address;
    arr.push_back(d);
  }
  return json{{"engines", arr}}.dump();
}

// Used by the HTTP admin endpoint.
std::pair<EngineDescriptor, std::shared_ptr<Engine>> engine_from_json(const std::string& body, int timeout_ms) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw Error(std::string("engine document is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error("engine document must be a JSON object");
  EngineDescriptor d;
  d.id = required_string(j, "id");
  d.source_lang = text::to_lower(required_string(j, "source_lang"));
  d.target_lang = text::to_lower(required_string(j, "target_lang"));
  d.kind = parse_kind(optional_string(j, "kind", "stub"));
  std::shared_ptr<Engine> engine;
  if (d.kind == EngineKind::kStub) {
    d.address = optional_string(j, "stub", "identity");
    engine = make_stub(d.address);
  } else if (d.kind == EngineKind::kRemote) {
    d.address = required_string(j, "address");
    engine = make_remote(d.address, d.source_lang, d.target_lang, timeout_ms);
  } else {
    throw Error("decoder engines are configured at server start, not over HTTP");
  }
  return {d, engine};
}

}  // namespace smt::service
