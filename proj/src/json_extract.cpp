#include "tablerouter/json_extract.hpp"

#include <cctype>

namespace tablerouter {

std::string strip_code_fences(std::string_view reply) {
  std::string out;
  out.reserve(reply.size());
  size_t i = 0;
  while (i < reply.size()) {
    const size_t fence = reply.find("```", i);
    if (fence == std::string_view::npos) {
      out.append(reply.substr(i));
      break;
    }
    out.append(reply.substr(i, fence - i));
    // Skip the fence and an optional language tag up to the end of line.
    size_t j = fence + 3;
    while (j < reply.size() && (std::isalnum(static_cast<unsigned char>(reply[j])) || reply[j] == '-' || reply[j] == '_'))
      ++j;
    if (j < reply.size() && reply[j] == '\n') ++j;
    out.push_back('\n');
    i = j;
  }
  return out;
}

namespace {

// End (exclusive) of the balanced value starting at s[start], or npos.
size_t balanced_end(std::string_view s, size_t start) {
  std::string stack;
  bool in_string = false;
  bool escaped = false;
  for (size_t i = start; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
      continue;
    }
    switch (c) {
      case '"': in_string = true; break;
      case '{': stack.push_back('}'); break;
      case '[': stack.push_back(']'); break;
      case '}':
      case ']':
        if (stack.empty() || stack.back() != c) return std::string_view::npos;
        stack.pop_back();
        if (stack.empty()) return i + 1;
        break;
      default: break;
    }
  }
  return std::string_view::npos;
}

}  // namespace

std::optional<nlohmann::json> extract_json(std::string_view reply) {
  const std::string cleaned = strip_code_fences(reply);
  const std::string_view s = cleaned;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '{' && s[i] != '[') continue;
    const size_t end = balanced_end(s, i);
    if (end == std::string_view::npos) continue;
    auto j = nlohmann::json::parse(s.substr(i, end - i), nullptr, /*allow_exceptions=*/false);
    if (!j.is_discarded()) return j;
  }
  return std::nullopt;
}

}  // namespace tablerouter
