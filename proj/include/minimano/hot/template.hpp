#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "minimano/common/ordered_map.hpp"
#include "minimano/common/value.hpp"

namespace minimano::hot {

class ResourceTypeRegistry;

enum class ParamType { string, number, boolean, list, map };

std::string_view to_string(ParamType type) noexcept;
std::optional<ParamType> param_type_from_string(std::string_view name) noexcept;

struct ParameterDef {
  ParamType type = ParamType::string;
  std::optional<std::string> label;
  std::optional<std::string> description;
  std::optional<Value> default_value;

  friend bool operator==(const ParameterDef&, const ParameterDef&) = default;
};

// Property and output expressions: literals plus the intrinsic functions.
struct Expr {
  struct Literal {
    Value value;  // always a scalar; collections use ListOf / MapOf
    friend bool operator==(const Literal&, const Literal&) = default;
  };
  struct GetParam {
    std::string name;
    friend bool operator==(const GetParam&, const GetParam&) = default;
  };
  struct GetAttr {
    std::string resource;
    std::string attribute;
    friend bool operator==(const GetAttr&, const GetAttr&) = default;
  };
  struct GetResource {
    std::string resource;
    friend bool operator==(const GetResource&, const GetResource&) = default;
  };
  struct StrReplace {
    OrderedMap<Expr> params;
    std::string template_text;
    friend bool operator==(const StrReplace&, const StrReplace&) = default;
  };
  struct ListOf {
    std::vector<Expr> items;
    friend bool operator==(const ListOf&, const ListOf&) = default;
  };
  struct MapOf {
    OrderedMap<Expr> entries;
    friend bool operator==(const MapOf&, const MapOf&) = default;
  };

  std::variant<Literal, GetParam, GetAttr, GetResource, StrReplace, ListOf, MapOf> node;

  static Expr literal(Value v);  // collections become ListOf / MapOf
  static Expr get_param(std::string name) { return Expr{GetParam{std::move(name)}}; }
  static Expr get_attr(std::string res, std::string attr) {
    return Expr{GetAttr{std::move(res), std::move(attr)}};
  }
  static Expr get_resource(std::string res) { return Expr{GetResource{std::move(res)}}; }

  template <typename T>
  const T* as() const noexcept {
    return std::get_if<T>(&node);
  }

  friend bool operator==(const Expr&, const Expr&) = default;
};

struct ResourceDef {
  std::string name;
  std::string type;
  OrderedMap<Expr> properties;
  std::vector<std::string> depends_on;

  friend bool operator==(const ResourceDef&, const ResourceDef&) = default;
};

struct OutputDef {
  std::optional<std::string> description;
  Expr value;

  friend bool operator==(const OutputDef&, const OutputDef&) = default;
};

enum class Severity { error, warning };

struct Finding {
  Severity severity = Severity::error;
  std::string path;  // e.g. "resources.my_instance.properties.image"
  std::string message;

  friend bool operator==(const Finding&, const Finding&) = default;
};

struct TemplateDoc {
  std::string version;
  std::optional<std::string> description;
  OrderedMap<ParameterDef> parameters;
  OrderedMap<ResourceDef> resources;
  OrderedMap<OutputDef> outputs;
  std::vector<Finding> warnings;  // non-fatal parse findings; not part of equality

  friend bool operator==(const TemplateDoc& a, const TemplateDoc& b) {
    return a.version == b.version && a.description == b.description && a.parameters == b.parameters &&
           a.resources == b.resources && a.outputs == b.outputs;
  }
};

struct ValidationReport {
  std::vector<Finding> findings;

  bool deployable() const noexcept { return error_count() == 0; }
  std::size_t error_count() const noexcept;
  std::vector<Finding> errors() const;
  std::string summary() const;  // one "path: message" line per error
};

struct BoundParameters {
  OrderedMap<Value> values;

  const Value* find(std::string_view name) const { return values.find(name); }
  friend bool operator==(const BoundParameters&, const BoundParameters&) = default;
};

// A provider-side view of an already-deployed resource.
struct ResourceView {
  std::string id;
  const Value::Map* attributes = nullptr;
};

struct EvaluationContext {
  const BoundParameters* parameters = nullptr;
  std::function<std::optional<ResourceView>(std::string_view)> resource;
};

struct DependencyEdge {
  std::string provider;
  std::string consumer;

  friend bool operator==(const DependencyEdge&, const DependencyEdge&) = default;
  friend auto operator<=>(const DependencyEdge&, const DependencyEdge&) = default;
};

TemplateDoc parse_template(std::string_view source);
std::string serialize_template(const TemplateDoc& doc);

ValidationReport validate_template(const TemplateDoc& doc, const ResourceTypeRegistry& registry);

// Provided values override defaults. String values are coerced to the
// declared parameter type with strict parsing.
BoundParameters bind_parameters(const TemplateDoc& doc, const OrderedMap<Value>& provided);
Value coerce_parameter(const Value& value, ParamType type);

Value evaluate_expr(const Expr& expr, const EvaluationContext& ctx);

// Single left-to-right scan; at each position the longest matching marker
// wins and its replacement is copied literally (never rescanned).
std::string str_replace(std::string_view text,
                        const std::vector<std::pair<std::string, std::string>>& params);

// Edges provider -> consumer for every get_attr / get_resource reference and
// every depends_on entry,
// deduplicated, ordered by consumer then provider declaration order.
std::vector<DependencyEdge> extract_dependencies(const TemplateDoc& doc);

// Every resource named by get_attr / get_resource inside the expression.
void collect_resource_refs(const Expr& expr, std::vector<std::string>& out);

}  // namespace minimano::hot
