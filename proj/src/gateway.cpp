#include "tablerouter/gateway.hpp"

#include "tablerouter/error.hpp"

#include "httplib.h"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace tablerouter {

using nlohmann::json;

std::string apply_stop_strings(std::string_view reply, const std::vector<std::string>& stops) {
  size_t cut = reply.size();
  for (const auto& stop : stops) {
    if (stop.empty()) continue;
    size_t pos = reply.find(stop);
    if (pos == std::string_view::npos) continue;
    if (stop == "```" && reply.find_first_not_of(" \t\r\n") == pos) {
      pos = reply.find(stop, pos + stop.size());
      if (pos == std::string_view::npos) continue;
    }
    cut = std::min(cut, pos);
  }
  return std::string(reply.substr(0, cut));
}

ScriptedGateway::ScriptedGateway(std::vector<ScriptEntry> entries)
    : entries_(std::move(entries)), used_(entries_.size(), false), calls_(5, 0) {}

std::unique_ptr<ScriptedGateway> ScriptedGateway::from_json(const json& j) {
  const json& list = j.is_object() && j.contains("entries") ? j.at("entries") : j;
  if (!list.is_array()) throw Error(ErrorCode::InvalidArgument, "script must be a list of entries");
  std::vector<ScriptEntry> entries;
  for (const auto& e : list) {
    ScriptEntry entry;
    const auto stage = stage_from_string(e.value("stage", ""));
    if (!stage) throw Error(ErrorCode::InvalidArgument, "script entry with unknown stage: " + e.dump());
    entry.stage = *stage;
    if (e.contains("match") && e.at("match").is_string()) entry.match = e.at("match").get<std::string>();
    const json& reply = e.at("reply");
    entry.reply = reply.is_string() ? reply.get<std::string>() : reply.dump();
    entry.repeat = e.value("repeat", false);
    entries.push_back(std::move(entry));
  }
  return std::make_unique<ScriptedGateway>(std::move(entries));
}

std::unique_ptr<ScriptedGateway> ScriptedGateway::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileUnreadable, "cannot read script " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::InvalidArgument, "script is not valid JSON: " + path);
  return from_json(j);
}

std::string ScriptedGateway::call(const ChatRequest& req) {
  std::lock_guard lock(mu_);
  ++calls_[static_cast<size_t>(req.stage)];
  const std::string haystack = req.system + "\n" + req.user;
  for (size_t i = 0; i < entries_.size(); ++i) {
    const ScriptEntry& e = entries_[i];
    if (used_[i] || e.stage != req.stage) continue;
    if (e.match && haystack.find(*e.match) == std::string::npos) continue;
    if (!e.repeat) used_[i] = true;
    return apply_stop_strings(e.reply, req.stop_strings);
  }
  throw Error(ErrorCode::ScriptExhausted, "no scripted reply left for stage " + std::string(to_string(req.stage)));
}

size_t ScriptedGateway::calls(Stage s) const {
  std::lock_guard lock(mu_);
  return calls_[static_cast<size_t>(s)];
}

size_t ScriptedGateway::total_calls() const {
  std::lock_guard lock(mu_);
  size_t n = 0;
  for (size_t c : calls_) n += c;
  return n;
}

size_t ScriptedGateway::remaining() const {
  std::lock_guard lock(mu_);
  size_t n = 0;
  for (size_t i = 0; i < entries_.size(); ++i)
    if (!used_[i] && !entries_[i].repeat) ++n;
  return n;
}

HttpGateway::HttpGateway(HttpGatewayConfig cfg)
    : cfg_(std::move(cfg)), slots_(std::clamp(cfg_.max_in_flight, 1, 1024)) {
  const size_t scheme_end = cfg_.url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::InvalidArgument, "gateway URL needs a scheme: " + cfg_.url);
  const size_t path_start = cfg_.url.find('/', scheme_end + 3);
  scheme_host_port_ = cfg_.url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/v1/chat/completions" : cfg_.url.substr(path_start);
}

json HttpGateway::request_body(const ChatRequest& req) const {
  json messages = json::array();
  if (!req.system.empty()) messages.push_back({{"role", "system"}, {"content", req.system}});
  json content = json::array();
  if (req.image) {
    const std::string url = "data:" + req.image_mime + ";base64," + httplib::detail::base64_encode(*req.image);
    content.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
  }
  content.push_back({{"type", "text"}, {"text", req.user}});
  messages.push_back({{"role", "user"}, {"content", content}});

  std::vector<std::string> stops = req.stop_strings;
  stops.insert(stops.end(), cfg_.extra_stop_strings.begin(), cfg_.extra_stop_strings.end());
  json body{{"messages", messages},
            {"temperature", req.decoding.temperature},
            {"top_p", req.decoding.top_p},
            {"repetition_penalty", req.decoding.repetition_penalty},
            {"max_tokens", req.decoding.max_new_tokens},
            {"stop", stops}};
  if (!cfg_.model.empty()) body["model"] = cfg_.model;
  return body;
}

namespace {

std::string reply_text(const json& resp) {
  const json& msg = resp.at("choices").at(0).at("message");
  const json& content = msg.at("content");
  if (content.is_string()) return content.get<std::string>();
  std::string out;
  for (const auto& part : content)
    if (part.contains("text")) out += part.at("text").get<std::string>();
  return out;
}

}  // namespace

std::string HttpGateway::call(const ChatRequest& req) {
  slots_.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{slots_};

  httplib::Client client(scheme_host_port_);
  client.set_read_timeout(cfg_.timeout);
  client.set_write_timeout(cfg_.timeout);
  httplib::Headers headers;
  if (const char* token = std::getenv(cfg_.auth_env.c_str()); token && *token)
    headers.emplace("Authorization", std::string("Bearer ") + token);
  const std::string body = request_body(req).dump();

  std::string last_error;
  for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
    if (attempt > 0) {
      ++retries_;
      std::cerr << "gateway: retry " << attempt << "/" << cfg_.retries << " after " << last_error << "\n";
      std::this_thread::sleep_for(cfg_.backoff * (1 << (attempt - 1)));
    }
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw Error(ErrorCode::ModelUnavailable, "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    const json parsed = json::parse(res->body, nullptr, false);
    if (parsed.is_discarded())
      throw Error(ErrorCode::ModelUnavailable, "endpoint returned non-JSON body");
    try {
      std::vector<std::string> stops = req.stop_strings;
      stops.insert(stops.end(), cfg_.extra_stop_strings.begin(), cfg_.extra_stop_strings.end());
      return apply_stop_strings(reply_text(parsed), stops);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ModelUnavailable, std::string("unexpected response shape: ") + e.what());
    }
  }
  throw Error(ErrorCode::ModelUnavailable, "model endpoint unavailable after " + std::to_string(cfg_.retries) +
                                               " retries (" + last_error + ")");
}

std::unique_ptr<ModelGateway> make_gateway(std::string_view spec) {
  if (spec.starts_with("scripted:")) return ScriptedGateway::from_file(std::string(spec.substr(9)));
  if (spec.starts_with("http:") || spec.starts_with("https:")) {
    HttpGatewayConfig cfg;
    std::string url(spec.substr(spec.find(':') + 1));
    if (url.starts_with("//")) url = std::string(spec.substr(0, spec.find(':') + 1)) + url;
    else if (url.find("://") == std::string::npos) url = "http://" + url;
    cfg.url = url;
    if (const char* m = std::getenv("TABLEROUTER_MODEL")) cfg.model = m;
    return std::make_unique<HttpGateway>(std::move(cfg));
  }
  throw Error(ErrorCode::InvalidArgument, "gateway must be http:URL or scripted:FILE, got " + std::string(spec));
}

}  // namespace tablerouter
