#pragma once

#include "json.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace tablerouter {

// Removes ``` fence lines (with or without a language tag), keeping the
// fenced content.
std::string strip_code_fences(std::string_view reply);

// First balanced top-level JSON object or array in a model reply that parses.
// Never throws.
std::optional<nlohmann::json> extract_json(std::string_view reply);

}  // namespace tablerouter
