#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "minimano/common/ordered_map.hpp"

namespace minimano {

// Dynamically typed template value: parameters, literal properties,
// evaluated expressions and resource attributes all use this.
class Value {
public:
  using List = std::vector<Value>;
  using Map = OrderedMap<Value>;

  enum class Type { null, boolean, number, string, list, map };

  Value() = default;
  Value(std::nullptr_t) {}
  Value(bool b) : data_(b) {}
  Value(double d) : data_(d) {}
  Value(int i) : data_(static_cast<double>(i)) {}
  Value(std::int64_t i) : data_(static_cast<double>(i)) {}
  Value(std::string s) : data_(std::move(s)) {}
  Value(const char* s) : data_(std::string(s)) {}
  Value(List l) : data_(std::move(l)) {}
  Value(Map m) : data_(std::move(m)) {}

  Type type() const noexcept { return static_cast<Type>(data_.index()); }

  bool is_null() const noexcept { return type() == Type::null; }
  bool is_bool() const noexcept { return type() == Type::boolean; }
  bool is_number() const noexcept { return type() == Type::number; }
  bool is_string() const noexcept { return type() == Type::string; }
  bool is_list() const noexcept { return type() == Type::list; }
  bool is_map() const noexcept { return type() == Type::map; }
  bool is_scalar() const noexcept { return !is_list() && !is_map(); }

  bool as_bool() const;
  double as_number() const;
  const std::string& as_string() const;
  const List& as_list() const;
  List& as_list();
  const Map& as_map() const;
  Map& as_map();

  // Textual form of a scalar as substituted into user data or printed.
  // Integral numbers render without a fractional part.
  std::string to_text() const;

  friend bool operator==(const Value&, const Value&) = default;

private:
  std::variant<std::monostate, bool, double, std::string, List, Map> data_;
};

std::string_view to_string(Value::Type type) noexcept;

// Shortest round-trippable decimal form; integral values print as integers.
std::string format_number(double value);

nlohmann::ordered_json to_json(const Value& value);
Value value_from_json(const nlohmann::ordered_json& json);

}  // namespace minimano
