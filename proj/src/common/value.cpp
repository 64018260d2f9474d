#include "minimano/common/value.hpp"

#include <charconv>
#include <cmath>

#include "minimano/common/error.hpp"

namespace minimano {

namespace {

[[noreturn]] void wrong_type(Value::Type want, Value::Type got) {
  throw Error(ErrorKind::type_mismatch, "expected " + std::string(to_string(want)) + ", got " +
                                            std::string(to_string(got)));
}

}  // namespace

bool Value::as_bool() const {
  if (!is_bool()) wrong_type(Type::boolean, type());
  return std::get<bool>(data_);
}

double Value::as_number() const {
  if (!is_number()) wrong_type(Type::number, type());
  return std::get<double>(data_);
}

const std::string& Value::as_string() const {
  if (!is_string()) wrong_type(Type::string, type());
  return std::get<std::string>(data_);
}

const Value::List& Value::as_list() const {
  if (!is_list()) wrong_type(Type::list, type());
  return std::get<List>(data_);
}

Value::List& Value::as_list() {
  if (!is_list()) wrong_type(Type::list, type());
  return std::get<List>(data_);
}

const Value::Map& Value::as_map() const {
  if (!is_map()) wrong_type(Type::map, type());
  return std::get<Map>(data_);
}

Value::Map& Value::as_map() {
  if (!is_map()) wrong_type(Type::map, type());
  return std::get<Map>(data_);
}

std::string Value::to_text() const {
  switch (type()) {
    case Type::null: return "";
    case Type::boolean: return as_bool() ? "true" : "false";
    case Type::number: return format_number(as_number());
    case Type::string: return as_string();
    case Type::list:
    case Type::map: return to_json(*this).dump();
  }
  return {};
}

std::string_view to_string(Value::Type type) noexcept {
  switch (type) {
    case Value::Type::null: return "null";
    case Value::Type::boolean: return "boolean";
    case Value::Type::number: return "number";
    case Value::Type::string: return "string";
    case Value::Type::list: return "list";
    case Value::Type::map: return "map";
  }
  return "unknown";
}

std::string format_number(double value) {
  if (std::isfinite(value) && std::trunc(value) == value && std::fabs(value) < 9.007199254740992e15) {
    return std::to_string(static_cast<long long>(value));
  }
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, end);
}

nlohmann::ordered_json to_json(const Value& value) {
  using json = nlohmann::ordered_json;
  switch (value.type()) {
    case Value::Type::null: return nullptr;
    case Value::Type::boolean: return value.as_bool();
    case Value::Type::number: {
      double d = value.as_number();
      if (std::trunc(d) == d && std::fabs(d) < 9.007199254740992e15)
        return static_cast<std::int64_t>(d);
      return d;
    }
    case Value::Type::string: return value.as_string();
    case Value::Type::list: {
      json out = json::array();
      for (const auto& item : value.as_list()) out.push_back(to_json(item));
      return out;
    }
    case Value::Type::map: {
      json out = json::object();
      for (const auto& [k, v] : value.as_map()) out[k] = to_json(v);
      return out;
    }
  }
  return nullptr;
}

Value value_from_json(const nlohmann::ordered_json& json) {
  if (json.is_null()) return Value();
  if (json.is_boolean()) return Value(json.get<bool>());
  if (json.is_number()) return Value(json.get<double>());
  if (json.is_string()) return Value(json.get<std::string>());
  if (json.is_array()) {
    Value::List list;
    for (const auto& item : json) list.push_back(value_from_json(item));
    return Value(std::move(list));
  }
  Value::Map map;
  for (auto it = json.begin(); it != json.end(); ++it) map.insert(it.key(), value_from_json(it.value()));
  return Value(std::move(map));
}

}  // namespace minimano
