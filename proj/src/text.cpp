#include "tablerouter/text.hpp"

#include "tablerouter/error.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <cctype>

namespace tablerouter {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NoTableFound: return "NoTableFound";
    case ErrorCode::MalformedHtml: return "MalformedHtml";
    case ErrorCode::NoJsonObject: return "NoJsonObject";
    case ErrorCode::MissingSlot: return "MissingSlot";
    case ErrorCode::ModelUnavailable: return "ModelUnavailable";
    case ErrorCode::ScriptExhausted: return "ScriptExhausted";
    case ErrorCode::EmptyGroundTruth: return "EmptyGroundTruth";
    case ErrorCode::MissingGold: return "MissingGold";
    case ErrorCode::FileUnreadable: return "FileUnreadable";
    case ErrorCode::EmptyManifest: return "EmptyManifest";
    case ErrorCode::InfeasibleConfig: return "InfeasibleConfig";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::SpanConflict: return "SpanConflict";
    case ErrorCode::StaleVersion: return "StaleVersion";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

namespace text {
namespace {

// Length in bytes of a whitespace sequence starting at s[i], 0 if none.
size_t space_at(std::string_view s, size_t i) {
  const auto c = static_cast<unsigned char>(s[i]);
  if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') return 1;
  if (c == 0xC2 && i + 1 < s.size() && static_cast<unsigned char>(s[i + 1]) == 0xA0) return 2;
  if (c == 0xE2 && i + 2 < s.size()) {
    const auto b1 = static_cast<unsigned char>(s[i + 1]);
    const auto b2 = static_cast<unsigned char>(s[i + 2]);
    // U+2000..U+200A, U+202F
    if (b1 == 0x80 && ((b2 >= 0x80 && b2 <= 0x8A) || b2 == 0xAF)) return 3;
  }
  return 0;
}

// Length of a whitespace sequence ending right before s[end], 0 if none.
size_t space_before(std::string_view s, size_t end) {
  for (size_t len : {size_t{1}, size_t{2}, size_t{3}}) {
    if (end >= len && space_at(s, end - len) == len) return len;
  }
  return 0;
}

icu::UnicodeString to_icu(std::string_view s) {
  return icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
}

std::string from_icu(const icu::UnicodeString& u) {
  std::string out;
  u.toUTF8String(out);
  return out;
}

}  // namespace

std::string trim(std::string_view s) {
  size_t b = 0;
  while (b < s.size()) {
    const size_t n = space_at(s, b);
    if (n == 0) break;
    b += n;
  }
  size_t e = s.size();
  while (e > b) {
    const size_t n = space_before(s, e);
    if (n == 0) break;
    e -= n;
  }
  return std::string(s.substr(b, e - b));
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending = false;
  for (size_t i = 0; i < s.size();) {
    const size_t n = space_at(s, i);
    if (n > 0) {
      pending = !out.empty();
      i += n;
      continue;
    }
    if (pending) out.push_back(' ');
    pending = false;
    out.push_back(s[i]);
    ++i;
  }
  return out;
}

std::string compat_casefold(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfkc_cf = icu::Normalizer2::getNFKCCasefoldInstance(status);
  if (U_FAILURE(status)) return to_lower_ascii(s);
  icu::UnicodeString out = nfkc_cf->normalize(to_icu(s), status);
  if (U_FAILURE(status)) return to_lower_ascii(s);
  return from_icu(out);
}

std::string strip_accents(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfd = icu::Normalizer2::getNFDInstance(status);
  if (U_FAILURE(status)) return std::string(s);
  icu::UnicodeString decomposed = nfd->normalize(to_icu(s), status);
  if (U_FAILURE(status)) return std::string(s);
  icu::UnicodeString kept;
  for (int32_t i = 0; i < decomposed.length();) {
    const UChar32 cp = decomposed.char32At(i);
    if (u_charType(cp) != U_NON_SPACING_MARK) kept.append(cp);
    i += U16_LENGTH(cp);
  }
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) return from_icu(kept);
  return from_icu(nfc->normalize(kept, status));
}

std::string fold(std::string_view s) {
  return collapse_whitespace(strip_accents(compat_casefold(s)));
}

bool contains(std::string_view haystack, std::string_view needle) {
  return haystack.find(needle) != std::string_view::npos;
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool iequals_ascii(std::string_view a, std::string_view b) {
  return a.size() == b.size() && to_lower_ascii(a) == to_lower_ascii(b);
}

std::u32string to_u32(std::string_view s) {
  std::u32string out;
  const icu::UnicodeString u = to_icu(s);
  for (int32_t i = 0; i < u.length();) {
    const UChar32 cp = u.char32At(i);
    out.push_back(static_cast<char32_t>(cp));
    i += U16_LENGTH(cp);
  }
  return out;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  size_t start = 0;
  for (size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      parts.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return parts;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

}  // namespace text
}  // namespace tablerouter
