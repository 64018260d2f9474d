#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "minimano/common/value.hpp"

namespace minimano::hot {

// The document syntax accepted for templates is a strict YAML 1.1 subset:
// block mappings and sequences, plain/quoted/block scalars and flow
// collections. Anchors, aliases, tags, complex keys, directives and
// multi-document streams are rejected with a position-annotated ParseError.
struct YamlNode {
  enum class Kind { scalar, sequence, mapping };
  enum class Style { plain, quoted, block };

  Kind kind = Kind::scalar;
  Style style = Style::plain;
  std::string text;  // scalar text
  std::vector<YamlNode> items;
  std::vector<std::pair<std::string, YamlNode>> entries;
  int line = 0;
  int column = 0;

  bool is_scalar() const noexcept { return kind == Kind::scalar; }
  bool is_sequence() const noexcept { return kind == Kind::sequence; }
  bool is_mapping() const noexcept { return kind == Kind::mapping; }
  const YamlNode* find(std::string_view key) const;
};

YamlNode parse_yaml(std::string_view text);

// YAML 1.1 resolution of a plain scalar: null, bool, int, float, else string.
Value resolve_plain_scalar(std::string_view text);
Value scalar_value(const YamlNode& node);
Value to_value(const YamlNode& node);

// Emitter helpers used by canonical serialization.
bool needs_quotes(std::string_view text);
std::string double_quote(std::string_view text);
std::string scalar_to_yaml(const Value& value);  // flow-safe, single line
bool fits_block_literal(std::string_view text);
// Block literal body lines (header chosen by the caller via block_header).
std::string block_header(std::string_view text);

}  // namespace minimano::hot
