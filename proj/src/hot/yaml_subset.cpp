#include "minimano/hot/yaml_subset.hpp"

#include <cctype>
#include <optional>
#include <regex>

#include "minimano/common/error.hpp"

namespace minimano::hot {

const YamlNode* YamlNode::find(std::string_view key) const {
  for (const auto& [k, v] : entries)
    if (k == key) return &v;
  return nullptr;
}

namespace {

bool is_blank(std::string_view s) {
  for (char c : s)
    if (c != ' ' && c != '\t' && c != '\r') return false;
  return true;
}

std::string rtrim(std::string s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.pop_back();
  return s;
}

std::string ltrim(std::string s) {
  std::size_t i = 0;
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  return s.substr(i);
}

std::string trim(std::string s) { return ltrim(rtrim(std::move(s))); }

// Remove a trailing comment. A quote only opens a quoted region at the start
// of a token, so apostrophes inside plain words do not confuse the scan.
std::string strip_comment(const std::string& s) {
  char quote = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (quote == '"') {
      if (c == '\\') ++i;
      else if (c == '"') quote = 0;
      continue;
    }
    if (quote == '\'') {
      if (c == '\'') {
        if (i + 1 < s.size() && s[i + 1] == '\'') ++i;
        else quote = 0;
      }
      continue;
    }
    char prev = i == 0 ? ' ' : s[i - 1];
    if ((c == '"' || c == '\'') &&
        (prev == ' ' || prev == '\t' || prev == '[' || prev == '{' || prev == ',')) {
      quote = c;
      continue;
    }
    if (c == '#' && (prev == ' ' || prev == '\t')) return rtrim(s.substr(0, i));
  }
  return rtrim(s);
}

bool is_seq_item(std::string_view content) {
  return content == "-" || (content.size() >= 2 && content[0] == '-' && content[1] == ' ');
}

// Position of the ':' separating a block mapping key from its value, or npos.
std::size_t find_key_separator(std::string_view content) {
  if (content.empty()) return std::string_view::npos;
  char first = content[0];
  if (first == '{' || first == '[' || first == '|' || first == '>') return std::string_view::npos;
  std::size_t i = 0;
  if (first == '"' || first == '\'') {
    i = 1;
    while (i < content.size()) {
      if (first == '"' && content[i] == '\\') {
        i += 2;
        continue;
      }
      if (content[i] == first) {
        if (first == '\'' && i + 1 < content.size() && content[i + 1] == '\'') {
          i += 2;
          continue;
        }
        break;
      }
      ++i;
    }
    ++i;
    while (i < content.size() && content[i] == ' ') ++i;
    if (i < content.size() && content[i] == ':' &&
        (i + 1 == content.size() || content[i + 1] == ' '))
      return i;
    return std::string_view::npos;
  }
  for (; i < content.size(); ++i) {
    if (content[i] == ':' && (i + 1 == content.size() || content[i + 1] == ' ')) return i;
  }
  return std::string_view::npos;
}

bool is_mapping_line(std::string_view content) {
  return find_key_separator(content) != std::string_view::npos;
}

void append_utf8(std::string& out, unsigned cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

class Parser {
public:
  explicit Parser(std::string_view source) {
    std::size_t start = 0;
    while (start <= source.size()) {
      std::size_t nl = source.find('\n', start);
      if (nl == std::string_view::npos) {
        if (start < source.size()) lines_.emplace_back(source.substr(start));
        break;
      }
      lines_.emplace_back(source.substr(start, nl - start));
      start = nl + 1;
    }
    for (auto& l : lines_)
      if (!l.empty() && l.back() == '\r') l.pop_back();
  }

  YamlNode parse_document() {
    skip_blank();
    if (!at_end()) {
      auto v = view(pos_);
      if (v->content[0] == '%') fail(v->indent, "directives are not supported");
      if (v->indent == 0 && v->content == "---") {
        ++pos_;
      } else if (v->indent == 0 && v->content.rfind("--- ", 0) == 0) {
        fail(v->indent, "content on the document start line is not supported");
      }
    }
    skip_blank();
    YamlNode root;
    root.line = static_cast<int>(pos_) + 1;
    root.column = 1;
    if (at_end()) return root;
    root = parse_block(0);
    skip_blank();
    if (!at_end()) {
      auto v = view(pos_);
      if (v->content == "---" || v->content == "...")
        fail(v->indent, "multi-document streams are not supported");
      fail(v->indent, "unexpected content");
    }
    return root;
  }

private:
  struct LineView {
    int indent;
    std::string content;
  };

  std::vector<std::string> lines_;
  std::size_t pos_ = 0;

  int line_no() const { return static_cast<int>(pos_) + 1; }

  [[noreturn]] void fail(int indent, const std::string& message) const {
    throw ParseError(line_no(), indent + 1, message);
  }
  [[noreturn]] void fail_at(int line, int column, const std::string& message) const {
    throw ParseError(line, column, message);
  }

  std::optional<LineView> view(std::size_t i) const {
    const std::string& raw = lines_[i];
    if (is_blank(raw)) return std::nullopt;
    int indent = 0;
    while (indent < static_cast<int>(raw.size()) && raw[indent] == ' ') ++indent;
    if (raw[indent] == '\t') throw ParseError(static_cast<int>(i) + 1, indent + 1, "tab in indentation");
    std::string content = strip_comment(raw.substr(indent));
    if (content.empty()) return std::nullopt;
    return LineView{indent, std::move(content)};
  }

  bool at_end() const { return pos_ >= lines_.size(); }

  void skip_blank() {
    while (!at_end() && !view(pos_)) ++pos_;
  }

  YamlNode parse_block(int min_indent) {
    skip_blank();
    auto v = view(pos_);
    if (v->indent < min_indent) fail(v->indent, "unexpected dedent");
    if (is_seq_item(v->content)) return parse_sequence(v->indent);
    if (is_mapping_line(v->content)) return parse_mapping(v->indent);
    return parse_inline_value(v->content, line_no(), v->indent + 1, v->indent - 1);
  }

  std::string parse_key(const std::string& raw, int line, int column) {
    if (raw.empty()) fail_at(line, column, "empty mapping key");
    char c = raw[0];
    if (c == '"' || c == '\'') {
      std::size_t end = 0;
      std::string key = parse_quoted(raw, 0, end, line, column);
      if (!trim(raw.substr(end)).empty()) fail_at(line, column, "unexpected text after quoted key");
      return key;
    }
    if (c == '?') fail_at(line, column, "complex mapping keys are not supported");
    if (c == '&') fail_at(line, column, "anchors are not supported");
    if (c == '*') fail_at(line, column, "aliases are not supported");
    if (c == '!') fail_at(line, column, "tags are not supported");
    if (raw == "<<") fail_at(line, column, "merge keys are not supported");
    return raw;
  }

  YamlNode parse_mapping(int indent) {
    YamlNode node;
    node.kind = YamlNode::Kind::mapping;
    node.line = line_no();
    node.column = indent + 1;
    while (true) {
      skip_blank();
      if (at_end()) break;
      auto v = view(pos_);
      if (v->indent < indent) break;
      if (v->indent > indent) fail(v->indent, "unexpected indentation");
      if (is_seq_item(v->content)) fail(v->indent, "sequence item where a mapping key was expected");
      std::size_t sep = find_key_separator(v->content);
      if (sep == std::string::npos) fail(v->indent, "expected 'key: value'");
      int line = line_no();
      std::string key = parse_key(rtrim(v->content.substr(0, sep)), line, v->indent + 1);
      for (const auto& entry : node.entries)
        if (entry.first == key) fail(v->indent, "duplicate key '" + key + "'");
      std::string rest_raw = v->content.substr(sep + 1);
      int rest_col = v->indent + static_cast<int>(sep) + 2;
      while (!rest_raw.empty() && rest_raw[0] == ' ') {
        rest_raw.erase(0, 1);
        ++rest_col;
      }
      YamlNode value;
      if (rest_raw.empty()) {
        ++pos_;
        value.line = line;
        value.column = rest_col;
        skip_blank();
        if (!at_end()) {
          auto next = view(pos_);
          if (next->indent > indent) value = parse_block(next->indent);
          else if (next->indent == indent && is_seq_item(next->content)) value = parse_sequence(indent);
        }
      } else {
        value = parse_inline_value(rest_raw, line, rest_col, indent);
      }
      node.entries.emplace_back(std::move(key), std::move(value));
    }
    return node;
  }

  YamlNode parse_sequence(int indent) {
    YamlNode node;
    node.kind = YamlNode::Kind::sequence;
    node.line = line_no();
    node.column = indent + 1;
    while (true) {
      skip_blank();
      if (at_end()) break;
      auto v = view(pos_);
      if (v->indent < indent) break;
      if (v->indent > indent) fail(v->indent, "unexpected indentation");
      if (!is_seq_item(v->content)) break;
      std::string rest = v->content.substr(1);
      int item_col = indent + 1;
      while (!rest.empty() && rest[0] == ' ') {
        rest.erase(0, 1);
        ++item_col;
      }
      YamlNode item;
      if (rest.empty()) {
        item.line = line_no();
        item.column = item_col + 1;
        ++pos_;
        skip_blank();
        if (!at_end()) {
          auto next = view(pos_);
          if (next->indent > indent) item = parse_block(next->indent);
        }
      } else if (is_seq_item(rest) || is_mapping_line(rest)) {
        // Compact nested node: blank out the dash and reparse the line at the
        // item's column so continuation lines line up with it.
        lines_[pos_][indent] = ' ';
        item = parse_block(item_col);
      } else {
        item = parse_inline_value(rest, line_no(), item_col + 1, indent);
      }
      node.items.push_back(std::move(item));
    }
    return node;
  }

  // Parses a value that starts on the current line; consumes every line the
  // value spans.
  YamlNode parse_inline_value(const std::string& rest, int line, int column, int parent_indent) {
    char c = rest[0];
    switch (c) {
      case '&': fail_at(line, column, "anchors are not supported");
      case '*': fail_at(line, column, "aliases are not supported");
      case '!': fail_at(line, column, "tags are not supported");
      case '@':
      case '`': fail_at(line, column, "reserved indicator");
      case '%': fail_at(line, column, "'%' cannot start a plain scalar");
      default: break;
    }
    if (c == '?' && (rest.size() == 1 || rest[1] == ' '))
      fail_at(line, column, "complex mapping keys are not supported");
    if (c == '|' || c == '>') return parse_block_scalar(rest, line, column, parent_indent);
    if (c == '{' || c == '[') return parse_flow_value(rest, line, column);
    YamlNode node;
    node.line = line;
    node.column = column;
    if (c == '"' || c == '\'') {
      std::size_t end = 0;
      node.text = parse_quoted(rest, 0, end, line, column);
      node.style = YamlNode::Style::quoted;
      if (!trim(rest.substr(end)).empty()) fail_at(line, column, "unexpected text after quoted scalar");
    } else {
      if (rest.find(": ") != std::string::npos || rest.back() == ':')
        fail_at(line, column, "mapping values are not allowed here");
      if (is_seq_item(rest)) fail_at(line, column, "sequence item is not allowed here");
      node.text = rest;
    }
    ++pos_;
    return node;
  }

  YamlNode parse_block_scalar(const std::string& header, int line, int column, int parent_indent) {
    char style = header[0];
    char chomp = 'c';
    int explicit_indent = 0;
    for (std::size_t i = 1; i < header.size(); ++i) {
      char h = header[i];
      if ((h == '-' || h == '+') && chomp == 'c') chomp = h;
      else if (h >= '1' && h <= '9' && explicit_indent == 0) explicit_indent = h - '0';
      else if (h == ' ') continue;
      else fail_at(line, column, "invalid block scalar header");
    }
    ++pos_;
    int block_indent = -1;
    if (explicit_indent > 0) block_indent = std::max(parent_indent, 0) + explicit_indent;
    std::vector<std::string> body;
    while (!at_end()) {
      const std::string& raw = lines_[pos_];
      if (is_blank(raw)) {
        body.emplace_back();
        ++pos_;
        continue;
      }
      int ind = 0;
      while (ind < static_cast<int>(raw.size()) && raw[ind] == ' ') ++ind;
      if (block_indent < 0) {
        if (ind <= parent_indent) break;
        block_indent = ind;
      }
      if (ind < block_indent) break;
      body.push_back(raw.substr(block_indent));
      ++pos_;
    }
    std::size_t trailing = 0;
    while (!body.empty() && body.back().empty()) {
      body.pop_back();
      ++trailing;
    }
    std::string text;
    if (style == '|') {
      for (std::size_t i = 0; i < body.size(); ++i) {
        if (i) text += '\n';
        text += body[i];
      }
    } else {
      std::size_t pending = 0;
      bool first = true;
      bool prev_more_indented = false;
      for (const auto& l : body) {
        if (l.empty()) {
          ++pending;
          continue;
        }
        bool more_indented = l[0] == ' ' || l[0] == '\t';
        if (first) {
          text.append(pending, '\n');
        } else if (pending > 0) {
          text.append(pending, '\n');
        } else if (more_indented || prev_more_indented) {
          text += '\n';
        } else {
          text += ' ';
        }
        text += l;
        pending = 0;
        first = false;
        prev_more_indented = more_indented;
      }
    }
    if (!body.empty()) {
      if (chomp == 'c') text += '\n';
      else if (chomp == '+') text.append(trailing + 1, '\n');
    } else if (chomp == '+') {
      text.append(trailing, '\n');
    }
    YamlNode node;
    node.style = YamlNode::Style::block;
    node.text = std::move(text);
    node.line = line;
    node.column = column;
    return node;
  }

  static bool flow_balanced(const std::string& s) {
    int depth = 0;
    char quote = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      char c = s[i];
      if (quote == '"') {
        if (c == '\\') ++i;
        else if (c == '"') quote = 0;
        continue;
      }
      if (quote == '\'') {
        if (c == '\'') quote = 0;
        continue;
      }
      if (c == '"' || c == '\'') quote = c;
      else if (c == '{' || c == '[') ++depth;
      else if (c == '}' || c == ']') --depth;
    }
    return depth <= 0;
  }

  YamlNode parse_flow_value(const std::string& first, int line, int column) {
    std::string text = first;
    ++pos_;
    while (!flow_balanced(text)) {
      skip_blank();
      if (at_end()) fail_at(line, column, "unterminated flow collection");
      text += ' ';
      text += view(pos_)->content;
      ++pos_;
    }
    FlowParser fp{text, line, column, *this};
    YamlNode node = fp.value();
    fp.skip_ws();
    if (fp.i != text.size()) fail_at(line, column + static_cast<int>(fp.i), "unexpected text after flow collection");
    return node;
  }

  static std::string parse_quoted(const std::string& s, std::size_t start, std::size_t& end, int line,
                                  int column) {
    char q = s[start];
    std::string out;
    std::size_t i = start + 1;
    while (i < s.size()) {
      char c = s[i];
      if (q == '\'') {
        if (c == '\'') {
          if (i + 1 < s.size() && s[i + 1] == '\'') {
            out += '\'';
            i += 2;
            continue;
          }
          end = i + 1;
          return out;
        }
        out += c;
        ++i;
        continue;
      }
      if (c == '"') {
        end = i + 1;
        return out;
      }
      if (c == '\\') {
        if (i + 1 >= s.size()) break;
        char e = s[i + 1];
        i += 2;
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          case '0': out += '\0'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          case '/': out += '/'; break;
          case ' ': out += ' '; break;
          case 'x':
          case 'u': {
            std::size_t digits = e == 'x' ? 2 : 4;
            if (i + digits > s.size())
              throw ParseError(line, column + static_cast<int>(i), "truncated escape");
            unsigned cp = 0;
            for (std::size_t k = 0; k < digits; ++k) {
              char h = s[i + k];
              if (!std::isxdigit(static_cast<unsigned char>(h)))
                throw ParseError(line, column + static_cast<int>(i), "invalid escape");
              cp = cp * 16 + static_cast<unsigned>(std::isdigit(static_cast<unsigned char>(h))
                                                       ? h - '0'
                                                       : std::tolower(h) - 'a' + 10);
            }
            i += digits;
            append_utf8(out, cp);
            break;
          }
          default: throw ParseError(line, column + static_cast<int>(i) - 2, "unknown escape sequence");
        }
        continue;
      }
      out += c;
      ++i;
    }
    throw ParseError(line, column + static_cast<int>(start), "unterminated quoted scalar");
  }

  struct FlowParser {
    const std::string& s;
    int line;
    int column;
    Parser& parser;
    std::size_t i = 0;

    [[noreturn]] void fail(const std::string& message) const {
      throw ParseError(line, column + static_cast<int>(i), message);
    }

    void skip_ws() {
      while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    }

    YamlNode value() {
      skip_ws();
      if (i >= s.size()) fail("unexpected end of flow collection");
      char c = s[i];
      YamlNode node;
      node.line = line;
      node.column = column + static_cast<int>(i);
      if (c == '{') return mapping();
      if (c == '[') return sequence();
      if (c == '&') fail("anchors are not supported");
      if (c == '*') fail("aliases are not supported");
      if (c == '!') fail("tags are not supported");
      if (c == '"' || c == '\'') {
        std::size_t end = 0;
        node.text = parse_quoted(s, i, end, line, column);
        node.style = YamlNode::Style::quoted;
        i = end;
        return node;
      }
      node.text = plain(false);
      return node;
    }

    std::string plain(bool is_key) {
      std::size_t start = i;
      while (i < s.size()) {
        char c = s[i];
        if (c == ',' || c == ']' || c == '}' || c == '[' || c == '{') break;
        if (c == ':' && (i + 1 == s.size() || s[i + 1] == ' ' || s[i + 1] == ',' ||
                         s[i + 1] == '}' || s[i + 1] == ']')) {
          if (is_key) break;
          fail("mapping values are not allowed here");
        }
        ++i;
      }
      return trim(s.substr(start, i - start));
    }

    YamlNode mapping() {
      YamlNode node;
      node.kind = YamlNode::Kind::mapping;
      node.line = line;
      node.column = column + static_cast<int>(i);
      ++i;  // '{'
      while (true) {
        skip_ws();
        if (i >= s.size()) fail("unterminated flow mapping");
        if (s[i] == '}') {
          ++i;
          return node;
        }
        std::string key;
        if (s[i] == '"' || s[i] == '\'') {
          std::size_t end = 0;
          key = parse_quoted(s, i, end, line, column);
          i = end;
        } else {
          if (s[i] == '?') fail("complex mapping keys are not supported");
          if (s[i] == '{' || s[i] == '[') fail("complex mapping keys are not supported");
          key = plain(true);
        }
        if (key.empty()) fail("empty mapping key");
        for (const auto& entry : node.entries)
          if (entry.first == key) fail("duplicate key '" + key + "'");
        skip_ws();
        YamlNode v;
        v.line = line;
        v.column = column + static_cast<int>(i);
        if (i < s.size() && s[i] == ':') {
          ++i;
          skip_ws();
          if (i < s.size() && s[i] != ',' && s[i] != '}') v = value();
        }
        node.entries.emplace_back(std::move(key), std::move(v));
        skip_ws();
        if (i < s.size() && s[i] == ',') {
          ++i;
          continue;
        }
        if (i < s.size() && s[i] == '}') continue;
        fail("expected ',' or '}' in flow mapping");
      }
    }

    YamlNode sequence() {
      YamlNode node;
      node.kind = YamlNode::Kind::sequence;
      node.line = line;
      node.column = column + static_cast<int>(i);
      ++i;  // '['
      while (true) {
        skip_ws();
        if (i >= s.size()) fail("unterminated flow sequence");
        if (s[i] == ']') {
          ++i;
          return node;
        }
        node.items.push_back(value());
        skip_ws();
        if (i < s.size() && s[i] == ',') {
          ++i;
          continue;
        }
        if (i < s.size() && s[i] == ']') continue;
        fail("expected ',' or ']' in flow sequence");
      }
    }
  };
};

}  // namespace

YamlNode parse_yaml(std::string_view text) { return Parser(text).parse_document(); }

Value resolve_plain_scalar(std::string_view text) {
  static const std::regex int_re(R"([-+]?(0|[1-9][0-9]*))");
  static const std::regex float_re(R"([-+]?(\.[0-9]+|[0-9]+\.[0-9]*|[0-9]+)([eE][-+]?[0-9]+)?)");
  if (text.empty() || text == "~" || text == "null" || text == "Null" || text == "NULL") return Value();
  static const char* truthy[] = {"true", "True", "TRUE", "yes", "Yes", "YES", "on", "On", "ON"};
  static const char* falsy[] = {"false", "False", "FALSE", "no", "No", "NO", "off", "Off", "OFF"};
  for (const char* t : truthy)
    if (text == t) return Value(true);
  for (const char* f : falsy)
    if (text == f) return Value(false);
  std::string s(text);
  if (std::regex_match(s, int_re)) return Value(std::stod(s));
  if (std::regex_match(s, float_re)) {
    // Leading-zero integers ("0123") stay strings rather than guessing octal.
    std::string digits = s[0] == '-' || s[0] == '+' ? s.substr(1) : s;
    if (digits.size() > 1 && digits[0] == '0' && std::isdigit(static_cast<unsigned char>(digits[1])) &&
        digits.find_first_of(".eE") == std::string::npos)
      return Value(s);
    return Value(std::stod(s));
  }
  return Value(s);
}

Value scalar_value(const YamlNode& node) {
  if (node.style == YamlNode::Style::plain) return resolve_plain_scalar(node.text);
  return Value(node.text);
}

Value to_value(const YamlNode& node) {
  switch (node.kind) {
    case YamlNode::Kind::scalar: return scalar_value(node);
    case YamlNode::Kind::sequence: {
      Value::List list;
      for (const auto& item : node.items) list.push_back(to_value(item));
      return Value(std::move(list));
    }
    case YamlNode::Kind::mapping: {
      Value::Map map;
      for (const auto& [k, v] : node.entries) map.insert(k, to_value(v));
      return Value(std::move(map));
    }
  }
  return Value();
}

bool needs_quotes(std::string_view text) {
  if (text.empty()) return true;
  if (!resolve_plain_scalar(text).is_string()) return true;
  static constexpr std::string_view leading = "-?:,[]{}#&*!|>'\"%@`~ \t";
  if (leading.find(text.front()) != std::string_view::npos) return true;
  if (text.back() == ' ' || text.back() == '\t' || text.back() == ':') return true;
  if (text.find(": ") != std::string_view::npos || text.find(" #") != std::string_view::npos) return true;
  for (char c : text) {
    if (c == ',' || c == '[' || c == ']' || c == '{' || c == '}') return true;
    if (static_cast<unsigned char>(c) < 0x20 || c == 0x7f) return true;
  }
  if (text == "<<") return true;
  return false;
}

std::string double_quote(std::string_view text) {
  std::string out = "\"";
  for (char c : text) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20 || c == 0x7f) {
          static constexpr char hex[] = "0123456789abcdef";
          out += "\\x";
          out += hex[(static_cast<unsigned char>(c) >> 4) & 0xF];
          out += hex[static_cast<unsigned char>(c) & 0xF];
        } else {
          out += c;
        }
    }
  }
  out += '"';
  return out;
}

std::string scalar_to_yaml(const Value& value) {
  switch (value.type()) {
    case Value::Type::null: return "null";
    case Value::Type::boolean: return value.as_bool() ? "true" : "false";
    case Value::Type::number: return format_number(value.as_number());
    case Value::Type::string: {
      const auto& s = value.as_string();
      return needs_quotes(s) ? double_quote(s) : s;
    }
    default: throw Error(ErrorKind::type_mismatch, "not a scalar");
  }
}

bool fits_block_literal(std::string_view text) {
  if (text.find('\n') == std::string_view::npos) return false;
  if (text.front() == ' ' || text.front() == '\t' || text.front() == '\n') return false;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == std::string_view::npos ? text.npos : nl - start);
    if (!line.empty() && is_blank(line)) return false;
    for (char c : line)
      if ((static_cast<unsigned char>(c) < 0x20 && c != '\t') || c == 0x7f) return false;
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return true;
}

std::string block_header(std::string_view text) {
  if (text.back() != '\n') return "|-";
  if (text.size() >= 2 && text[text.size() - 2] == '\n') return "|+";
  return "|";
}

}  // namespace minimano::hot
