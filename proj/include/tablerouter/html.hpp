#pragma once

#include "tablerouter/grid.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace tablerouter {

struct HtmlToken {
  enum class Kind { open, close, text };
  Kind kind = Kind::text;
  std::string name;  // lowercase tag name for open/close
  std::string text;  // raw text for text tokens
  size_t colspan = 1;
  size_t rowspan = 1;
};

// Lenient tokenizer: comments, doctype and processing instructions are
// dropped; attributes other than colspan/rowspan are ignored.
std::vector<HtmlToken> tokenize_html(std::string_view html);

// Reduces raw model output to one canonical <table>...</table> fragment.
// Throws Error(NoTableFound) when no <table> tag exists.
std::string sanitize_html(std::string_view raw);

// Parses a sanitized fragment into a grid. Unclosed <td>/<tr> are closed at
// the next sibling or parent tag. Throws Error(MalformedHtml) when the input
// is not a single table fragment.
TableGrid parse_table(std::string_view html);

// Canonical dialect: table/thead/tbody/tr/td with colspan/rowspan only.
std::string to_html(const TableGrid& grid);

std::string decode_entities(std::string_view s);
std::string escape_html(std::string_view s);

}  // namespace tablerouter
