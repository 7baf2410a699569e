#pragma once

#include "tablerouter/prompts.hpp"

#include "json.hpp"

#include <atomic>
#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

namespace tablerouter {

class ModelGateway {
 public:
  virtual ~ModelGateway() = default;
  // Raw reply text, already truncated at the request's stop strings.
  virtual std::string call(const ChatRequest& req) = 0;
};

// Truncates at the earliest stop string. A "```" that opens the reply is a
// fence, not a stop: the cut then happens at the closing fence.
std::string apply_stop_strings(std::string_view reply, const std::vector<std::string>& stops);

struct ScriptEntry {
  Stage stage = Stage::direct_qa;
  std::optional<std::string> match;  // substring of system + user
  std::string reply;
  bool repeat = false;  // never consumed
};

// Offline stand-in for the model. Entries are consumed in order: each call
// takes the first unconsumed entry whose stage (and match, if any) fits.
class ScriptedGateway : public ModelGateway {
 public:
  explicit ScriptedGateway(std::vector<ScriptEntry> entries);
  // Accepts [{stage, match?, reply, repeat?}, ...] or {"entries": [...]}.
  static std::unique_ptr<ScriptedGateway> from_json(const nlohmann::json& j);
  static std::unique_ptr<ScriptedGateway> from_file(const std::string& path);

  std::string call(const ChatRequest& req) override;

  size_t calls(Stage s) const;
  size_t total_calls() const;
  size_t remaining() const;

 private:
  mutable std::mutex mu_;
  std::vector<ScriptEntry> entries_;
  std::vector<bool> used_;
  std::vector<size_t> calls_;
};

struct HttpGatewayConfig {
  std::string url;  // e.g. http://localhost:8000/v1/chat/completions
  std::string model;
  std::string auth_env = "TABLEROUTER_API_KEY";
  int retries = 3;
  std::chrono::milliseconds backoff{250};
  std::chrono::seconds timeout{300};
  int max_in_flight = 4;
  std::vector<std::string> extra_stop_strings;
};

// Chat-completions client: messages array with the image attached as a
// data-URL content part.
class HttpGateway : public ModelGateway {
 public:
  explicit HttpGateway(HttpGatewayConfig cfg);

  std::string call(const ChatRequest& req) override;

  nlohmann::json request_body(const ChatRequest& req) const;
  size_t retries_performed() const { return retries_.load(); }

 private:
  HttpGatewayConfig cfg_;
  std::string scheme_host_port_;
  std::string path_;
  std::counting_semaphore<1024> slots_;
  std::atomic<size_t> retries_{0};
};

// "http:URL" or "scripted:FILE".
std::unique_ptr<ModelGateway> make_gateway(std::string_view spec);

}  // namespace tablerouter
