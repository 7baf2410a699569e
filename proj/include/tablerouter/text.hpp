#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tablerouter::text {

// ASCII whitespace plus the no-break and thin spaces common in OCR output.
std::string trim(std::string_view s);

// Runs of whitespace become one ASCII space; ends are trimmed.
std::string collapse_whitespace(std::string_view s);

// Unicode compatibility normalization (NFKC) followed by case folding.
std::string compat_casefold(std::string_view s);

// Removes combining marks after canonical decomposition ("é" -> "e").
std::string strip_accents(std::string_view s);

// The matching key used across the toolkit: casefold, strip accents,
// collapse whitespace.
std::string fold(std::string_view s);

bool contains(std::string_view haystack, std::string_view needle);

std::string to_lower_ascii(std::string_view s);

bool iequals_ascii(std::string_view a, std::string_view b);

// Unicode code points of a UTF-8 string (invalid bytes map to U+FFFD).
std::u32string to_u32(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace tablerouter::text
