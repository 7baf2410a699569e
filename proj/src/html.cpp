#include "tablerouter/html.hpp"

#include "tablerouter/error.hpp"
#include "tablerouter/text.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace tablerouter {
namespace {

constexpr size_t kMaxSpan = 1000;

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

size_t parse_span(std::string_view v) {
  size_t i = 0;
  while (i < v.size() && std::isspace(static_cast<unsigned char>(v[i]))) ++i;
  size_t n = 0;
  bool any = false;
  for (; i < v.size() && std::isdigit(static_cast<unsigned char>(v[i])); ++i) {
    any = true;
    n = std::min(kMaxSpan, n * 10 + static_cast<size_t>(v[i] - '0'));
  }
  return any && n > 0 ? n : 1;
}

// Parses "name attr=value ..." after '<' (and optional '/'); returns the
// position just past '>' or npos when the tag never closes.
size_t parse_tag(std::string_view s, size_t i, HtmlToken& tok, bool& self_closing) {
  size_t j = i;
  while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '-' || s[j] == ':')) ++j;
  tok.name = text::to_lower_ascii(s.substr(i, j - i));
  self_closing = false;
  while (j < s.size()) {
    const char c = s[j];
    if (c == '>') return j + 1;
    if (c == '/') {
      self_closing = j + 1 < s.size() && s[j + 1] == '>';
      ++j;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++j;
      continue;
    }
    size_t k = j;
    while (k < s.size() && !std::isspace(static_cast<unsigned char>(s[k])) && s[k] != '=' &&
           s[k] != '>' && s[k] != '/')
      ++k;
    const std::string attr = text::to_lower_ascii(s.substr(j, k - j));
    if (k == j) ++k;
    j = k;
    while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    std::string value;
    if (j < s.size() && s[j] == '=') {
      ++j;
      while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j]))) ++j;
      if (j < s.size() && (s[j] == '"' || s[j] == '\'')) {
        const char q = s[j];
        const size_t end = s.find(q, j + 1);
        if (end == std::string_view::npos) return std::string_view::npos;
        value = std::string(s.substr(j + 1, end - j - 1));
        j = end + 1;
      } else {
        size_t end = j;
        while (end < s.size() && !std::isspace(static_cast<unsigned char>(s[end])) && s[end] != '>') ++end;
        value = std::string(s.substr(j, end - j));
        j = end;
      }
    }
    if (attr == "colspan") tok.colspan = parse_span(value);
    if (attr == "rowspan") tok.rowspan = parse_span(value);
  }
  return std::string_view::npos;
}

void append_utf8(std::string& out, unsigned long cp) {
  if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

const std::set<std::string, std::less<>> kStructural = {"table", "thead", "tbody", "tr", "td"};
const std::set<std::string, std::less<>> kDropWithContent = {"caption", "style", "script", "head", "title"};
const std::set<std::string, std::less<>> kSeparators = {"br", "p", "li", "hr"};

std::string canonical_name(const std::string& name) {
  if (name == "th") return "td";
  if (name == "tfoot") return "tbody";
  return name;
}

std::string open_tag(const HtmlToken& t) {
  std::string out = "<" + t.name;
  if (t.name == "td") {
    if (t.colspan > 1) out += " colspan=\"" + std::to_string(t.colspan) + "\"";
    if (t.rowspan > 1) out += " rowspan=\"" + std::to_string(t.rowspan) + "\"";
  }
  return out + ">";
}

}  // namespace

std::vector<HtmlToken> tokenize_html(std::string_view s) {
  std::vector<HtmlToken> out;
  auto push_text = [&](std::string_view t) {
    if (t.empty()) return;
    if (!out.empty() && out.back().kind == HtmlToken::Kind::text) {
      out.back().text.append(t);
    } else {
      HtmlToken tok;
      tok.kind = HtmlToken::Kind::text;
      tok.text = std::string(t);
      out.push_back(std::move(tok));
    }
  };
  size_t i = 0;
  while (i < s.size()) {
    const size_t lt = s.find('<', i);
    if (lt == std::string_view::npos) {
      push_text(s.substr(i));
      break;
    }
    push_text(s.substr(i, lt - i));
    if (s.substr(lt, 4) == "<!--") {
      const size_t end = s.find("-->", lt + 4);
      i = end == std::string_view::npos ? s.size() : end + 3;
      continue;
    }
    if (lt + 1 < s.size() && (s[lt + 1] == '!' || s[lt + 1] == '?')) {
      const size_t end = s.find('>', lt);
      i = end == std::string_view::npos ? s.size() : end + 1;
      continue;
    }
    const bool closing = lt + 1 < s.size() && s[lt + 1] == '/';
    const size_t name_at = lt + (closing ? 2 : 1);
    if (name_at >= s.size() || !is_alpha(s[name_at])) {
      push_text("<");
      i = lt + 1;
      continue;
    }
    HtmlToken tok;
    bool self_closing = false;
    const size_t end = parse_tag(s, name_at, tok, self_closing);
    if (end == std::string_view::npos) {
      push_text(s.substr(lt));
      break;
    }
    tok.kind = closing ? HtmlToken::Kind::close : HtmlToken::Kind::open;
    out.push_back(tok);
    if (self_closing && !closing) {
      HtmlToken close;
      close.kind = HtmlToken::Kind::close;
      close.name = tok.name;
      out.push_back(close);
    }
    i = end;
  }
  return out;
}

std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out.push_back(s[i]);
      continue;
    }
    const size_t semi = s.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out.push_back('&');
      continue;
    }
    const std::string_view name = s.substr(i + 1, semi - i - 1);
    if (name == "amp") out += '&';
    else if (name == "lt") out += '<';
    else if (name == "gt") out += '>';
    else if (name == "quot") out += '"';
    else if (name == "apos") out += '\'';
    else if (name == "nbsp") out += "\xC2\xA0";
    else if (name == "euro") out += "€";
    else if (name.size() > 1 && name[0] == '#') {
      const bool hex = name[1] == 'x' || name[1] == 'X';
      const std::string_view digits = name.substr(hex ? 2 : 1);
      unsigned long cp = 0;
      bool ok = !digits.empty();
      for (char c : digits) {
        const int v = std::isdigit(static_cast<unsigned char>(c)) ? c - '0'
                      : hex && std::isxdigit(static_cast<unsigned char>(c))
                          ? std::tolower(static_cast<unsigned char>(c)) - 'a' + 10
                          : -1;
        if (v < 0 || cp > 0x10FFFF) {
          ok = false;
          break;
        }
        cp = cp * (hex ? 16 : 10) + static_cast<unsigned long>(v);
      }
      if (!ok) {
        out.push_back('&');
        continue;
      }
      append_utf8(out, cp);
    } else {
      out.push_back('&');
      continue;
    }
    i = semi;
  }
  return out;
}

std::string escape_html(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out.push_back(c); break;
    }
  }
  return out;
}

std::string sanitize_html(std::string_view raw) {
  const auto tokens = tokenize_html(raw);
  auto begin = std::find_if(tokens.begin(), tokens.end(), [](const HtmlToken& t) {
    return t.kind == HtmlToken::Kind::open && t.name == "table";
  });
  if (begin == tokens.end()) throw Error(ErrorCode::NoTableFound, "no <table> tag in model output");

  std::string out = "<table>";
  bool in_cell = false;
  std::string cell_text;
  std::string dropping;  // name of an element whose content is discarded
  auto flush_cell_text = [&] {
    if (in_cell) out += text::trim(cell_text);
    cell_text.clear();
  };
  for (auto it = std::next(begin); it != tokens.end(); ++it) {
    const HtmlToken& t = *it;
    if (!dropping.empty()) {
      if (t.kind == HtmlToken::Kind::close && t.name == dropping) dropping.clear();
      continue;
    }
    if (t.kind == HtmlToken::Kind::text) {
      if (in_cell) cell_text += t.text;
      continue;
    }
    const std::string name = canonical_name(t.name);
    if (t.kind == HtmlToken::Kind::open && kDropWithContent.count(name)) {
      dropping = name;
      continue;
    }
    if (!kStructural.count(name)) {
      if (kSeparators.count(name) && in_cell) cell_text += ' ';
      continue;
    }
    if (name == "table") {
      if (t.kind == HtmlToken::Kind::close) break;
      continue;  // nested tables are not supported; keep the outer structure
    }
    flush_cell_text();
    if (t.kind == HtmlToken::Kind::open) {
      HtmlToken canon = t;
      canon.name = name;
      out += open_tag(canon);
      in_cell = name == "td";
    } else {
      out += "</" + name + ">";
      in_cell = false;
    }
  }
  flush_cell_text();
  out += "</table>";
  return out;
}

TableGrid parse_table(std::string_view html) {
  const auto tokens = tokenize_html(html);
  size_t i = 0;
  for (; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    if (t.kind == HtmlToken::Kind::open && t.name == "table") break;
    if (t.kind != HtmlToken::Kind::text || !text::trim(t.text).empty())
      throw Error(ErrorCode::MalformedHtml, "content before <table>");
  }
  if (i == tokens.size()) throw Error(ErrorCode::MalformedHtml, "no <table> element");

  struct RawCell {
    std::string text;
    size_t rowspan = 1;
    size_t colspan = 1;
  };
  struct RawRow {
    std::vector<RawCell> cells;
    bool in_thead = false;
  };
  std::vector<RawRow> rows;
  enum class Section { none, thead, tbody } section = Section::none;
  bool saw_thead = false;
  bool row_open = false;
  bool cell_open = false;
  bool closed = false;

  auto close_cell = [&] {
    if (!cell_open) return;
    auto& c = rows.back().cells.back();
    c.text = text::trim(decode_entities(c.text));
    cell_open = false;
  };
  auto close_row = [&] {
    close_cell();
    row_open = false;
  };
  auto open_row = [&] {
    close_row();
    rows.push_back(RawRow{{}, section == Section::thead});
    row_open = true;
  };

  for (++i; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    if (closed) {
      if (t.kind == HtmlToken::Kind::text && text::trim(t.text).empty()) continue;
      throw Error(ErrorCode::MalformedHtml, "content after </table>");
    }
    const std::string name = canonical_name(t.name);
    const bool open = t.kind == HtmlToken::Kind::open;
    if (t.kind == HtmlToken::Kind::text) {
      if (cell_open) rows.back().cells.back().text += t.text;
    } else if (name == "table") {
      if (open) throw Error(ErrorCode::MalformedHtml, "nested <table>");
      close_row();
      closed = true;
    } else if (name == "thead" || name == "tbody") {
      close_row();
      if (open) {
        section = name == "thead" ? Section::thead : Section::tbody;
        saw_thead = saw_thead || section == Section::thead;
      } else {
        section = Section::none;
      }
    } else if (name == "tr") {
      if (open) open_row();
      else close_row();
    } else if (name == "td") {
      close_cell();
      if (!open) continue;
      if (!row_open) open_row();
      rows.back().cells.push_back(RawCell{{}, t.rowspan, t.colspan});
      cell_open = true;
    }
  }
  close_row();

  // Browser-style layout over an occupancy matrix.
  const size_t n_rows = rows.size();
  std::vector<std::vector<bool>> occupied(n_rows);
  std::vector<TableGrid::Anchor> anchors;
  size_t n_cols = 0;
  auto occ = [&](size_t r, size_t c) {
    return c < occupied[r].size() && occupied[r][c];
  };
  auto mark = [&](size_t r, size_t c) {
    if (occupied[r].size() <= c) occupied[r].resize(c + 1, false);
    occupied[r][c] = true;
  };
  for (size_t r = 0; r < n_rows; ++r) {
    size_t c = 0;
    for (const auto& cell : rows[r].cells) {
      while (occ(r, c)) ++c;
      const size_t rs = std::min(cell.rowspan, n_rows - r);
      size_t cs = 1;
      // Clip the colspan at the first slot already claimed by a rowspan.
      while (cs < cell.colspan && !occ(r, c + cs)) ++cs;
      for (size_t dr = 0; dr < rs; ++dr)
        for (size_t dc = 0; dc < cs; ++dc) mark(r + dr, c + dc);
      anchors.push_back(TableGrid::Anchor{r, c, rs, cs, cell.text});
      n_cols = std::max(n_cols, c + cs);
      c += cs;
    }
  }
  for (const auto& row : occupied) n_cols = std::max(n_cols, row.size());

  size_t header_rows = 0;
  if (saw_thead) {
    while (header_rows < n_rows && rows[header_rows].in_thead) ++header_rows;
  } else if (n_rows > 0) {
    header_rows = 1;
  }
  auto grid = TableGrid::from_anchors(n_rows, n_cols, anchors, header_rows);
  if (!grid) throw Error(ErrorCode::MalformedHtml, "overlapping spans after layout");
  return *grid;
}

std::string to_html(const TableGrid& grid) {
  if (grid.n_rows() == 0) return "<table></table>";
  const auto anchors = grid.anchors();
  std::string out = "<table>";
  size_t next = 0;
  auto emit_rows = [&](size_t from, size_t to) {
    for (size_t r = from; r < to; ++r) {
      out += "<tr>";
      for (; next < anchors.size() && anchors[next].row == r; ++next) {
        const auto& a = anchors[next];
        HtmlToken t;
        t.name = "td";
        t.colspan = a.colspan;
        t.rowspan = a.rowspan;
        out += open_tag(t) + escape_html(a.text) + "</td>";
      }
      out += "</tr>";
    }
  };
  out += "<thead>";
  emit_rows(0, grid.header_row_count());
  out += "</thead>";
  if (grid.header_row_count() < grid.n_rows()) {
    out += "<tbody>";
    emit_rows(grid.header_row_count(), grid.n_rows());
    out += "</tbody>";
  }
  return out + "</table>";
}

}  // namespace tablerouter
