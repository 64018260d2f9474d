#include <algorithm>
#include <cmath>

#include "minimano/common/error.hpp"
#include "minimano/hot/registry.hpp"
#include "minimano/hot/template.hpp"

namespace minimano::hot {

std::size_t ValidationReport::error_count() const noexcept {
  std::size_t n = 0;
  for (const auto& f : findings)
    if (f.severity == Severity::error) ++n;
  return n;
}

std::vector<Finding> ValidationReport::errors() const {
  std::vector<Finding> out;
  for (const auto& f : findings)
    if (f.severity == Severity::error) out.push_back(f);
  return out;
}

std::string ValidationReport::summary() const {
  std::string out;
  for (const auto& f : findings) {
    if (f.severity != Severity::error) continue;
    if (!out.empty()) out += '\n';
    out += f.path + ": " + f.message;
  }
  return out;
}

namespace {

class Validator {
public:
  Validator(const TemplateDoc& doc, const ResourceTypeRegistry& registry)
      : doc_(doc), registry_(registry) {}

  ValidationReport run() {
    report_.findings = doc_.warnings;
    for (const auto& [name, p] : doc_.parameters) {
      if (!p.default_value) continue;
      try {
        coerce_parameter(*p.default_value, p.type);
      } catch (const Error&) {
        error("parameters." + name + ".default",
              "default does not conform to type " + std::string(to_string(p.type)));
      }
    }
    for (const auto& [name, res] : doc_.resources) check_resource(res);
    for (const auto& [name, out] : doc_.outputs) check_refs(out.value, "outputs." + name + ".value", "");
    return std::move(report_);
  }

private:
  const TemplateDoc& doc_;
  const ResourceTypeRegistry& registry_;
  ValidationReport report_;

  void error(std::string path, std::string message) {
    report_.findings.push_back(Finding{Severity::error, std::move(path), std::move(message)});
  }

  void check_resource(const ResourceDef& res) {
    const std::string base = "resources." + res.name;
    for (const auto& [prop, expr] : res.properties) check_refs(expr, base + ".properties." + prop, res.name);
    for (const auto& dep : res.depends_on) {
      if (!doc_.resources.contains(dep)) error(base + ".depends_on", "unknown resource " + dep);
      else if (dep == res.name) error(base + ".depends_on", "resource " + res.name + " depends on itself");
    }
    if (ResourceTypeRegistry::is_nested_type(res.type)) return;
    const ResourceTypeSchema* schema = registry_.find(res.type);
    if (!schema) {
      error(base + ".type", "unknown resource type " + res.type);
      return;
    }
    for (const auto& p : schema->properties)
      if (p.required && !res.properties.contains(p.name))
        error(base + ".properties", "missing mandatory property " + p.name);
    for (const auto& [prop, expr] : res.properties) {
      const std::string path = base + ".properties." + prop;
      const PropertySchema* ps = schema->property(prop);
      if (!ps) {
        error(path, "unknown property " + prop + " for " + res.type);
        continue;
      }
      check_property(*ps, expr, path);
    }
    if (res.type == kServerType) check_server(res, base);
    if (res.type == kWaitConditionType) check_wait_condition(res, base);
  }

  void check_property(const PropertySchema& ps, const Expr& expr, const std::string& path) {
    if (const auto* lit = expr.as<Expr::Literal>()) {
      const Value& v = lit->value;
      switch (ps.kind) {
        case PropertyKind::string:
          if (v.is_null()) error(path, "type mismatch: expected string, got null");
          else if (!ps.allowed.empty() &&
                   std::find(ps.allowed.begin(), ps.allowed.end(), v.to_text()) == ps.allowed.end())
            error(path, "unsupported value '" + v.to_text() + "'");
          break;
        case PropertyKind::integer:
          if (!v.is_number() || std::trunc(v.as_number()) != v.as_number())
            error(path, "type mismatch: expected integer");
          else if (ps.minimum && v.as_number() < static_cast<double>(*ps.minimum))
            error(path, "value must be at least " + std::to_string(*ps.minimum));
          break;
        case PropertyKind::list: error(path, "type mismatch: expected list"); break;
        case PropertyKind::map: error(path, "type mismatch: expected map"); break;
      }
      return;
    }
    if (expr.as<Expr::ListOf>()) {
      if (ps.kind != PropertyKind::list) error(path, "type mismatch: unexpected list");
      return;
    }
    if (expr.as<Expr::MapOf>()) {
      if (ps.kind != PropertyKind::map) error(path, "type mismatch: unexpected map");
      return;
    }
    if (const auto* gp = expr.as<Expr::GetParam>()) {
      const ParameterDef* param = doc_.parameters.find(gp->name);
      if (!param) return;  // reported as a dangling reference
      bool ok = true;
      switch (ps.kind) {
        case PropertyKind::string:
          ok = param->type == ParamType::string || param->type == ParamType::number ||
               param->type == ParamType::boolean;
          break;
        case PropertyKind::integer: ok = param->type == ParamType::number; break;
        case PropertyKind::list: ok = param->type == ParamType::list; break;
        case PropertyKind::map: ok = param->type == ParamType::map; break;
      }
      if (!ok)
        error(path, "type mismatch: parameter " + gp->name + " is " + std::string(to_string(param->type)));
      return;
    }
    if (expr.as<Expr::StrReplace>() && ps.kind != PropertyKind::string)
      error(path, "type mismatch: str_replace yields a string");
  }

  void check_server(const ResourceDef& res, const std::string& base) {
    if (const Expr* nets = res.properties.find("networks")) {
      if (const auto* list = nets->as<Expr::ListOf>()) {
        for (std::size_t i = 0; i < list->items.size(); ++i) {
          const auto* entry = list->items[i].as<Expr::MapOf>();
          std::string path = base + ".properties.networks[" + std::to_string(i) + "]";
          if (!entry || !entry->entries.contains("network")) {
            error(path, "expected a mapping with a 'network' key");
            continue;
          }
          for (const auto& [k, _] : entry->entries)
            if (k != "network") error(path + "." + k, "unknown network property " + k);
        }
      }
    }
    if (const Expr* groups = res.properties.find("security_groups")) {
      if (const auto* list = groups->as<Expr::ListOf>()) {
        for (std::size_t i = 0; i < list->items.size(); ++i)
          if (list->items[i].as<Expr::ListOf>() || list->items[i].as<Expr::MapOf>())
            error(base + ".properties.security_groups[" + std::to_string(i) + "]",
                  "type mismatch: expected a security group name");
      }
    }
  }

  void check_wait_condition(const ResourceDef& res, const std::string& base) {
    const Expr* handle = res.properties.find("handle");
    if (!handle) return;
    if (const auto* gr = handle->as<Expr::GetResource>()) {
      const ResourceDef* target = doc_.resources.find(gr->resource);
      if (target && target->type != kWaitHandleType)
        error(base + ".properties.handle", "handle must reference an " + std::string(kWaitHandleType));
    }
  }

  void check_refs(const Expr& expr, const std::string& path, const std::string& owner) {
    if (const auto* gp = expr.as<Expr::GetParam>()) {
      if (!doc_.parameters.contains(gp->name)) error(path, "unknown parameter " + gp->name);
    } else if (const auto* ga = expr.as<Expr::GetAttr>()) {
      const ResourceDef* target = doc_.resources.find(ga->resource);
      if (!target) {
        error(path, "unknown resource " + ga->resource);
      } else if (ga->resource == owner) {
        error(path, "resource " + owner + " references itself");
      } else if (const auto* schema = registry_.find(target->type);
                 schema && !schema->has_attribute(ga->attribute)) {
        error(path, "unknown attribute " + ga->attribute + " of resource " + ga->resource);
      }
    } else if (const auto* gr = expr.as<Expr::GetResource>()) {
      if (!doc_.resources.contains(gr->resource)) error(path, "unknown resource " + gr->resource);
      else if (gr->resource == owner) error(path, "resource " + owner + " references itself");
    } else if (const auto* sr = expr.as<Expr::StrReplace>()) {
      for (const auto& [marker, e] : sr->params) {
        if (marker.empty()) error(path + ".params", "empty str_replace marker");
        check_refs(e, path + ".params." + marker, owner);
      }
    } else if (const auto* list = expr.as<Expr::ListOf>()) {
      for (std::size_t i = 0; i < list->items.size(); ++i)
        check_refs(list->items[i], path + "[" + std::to_string(i) + "]", owner);
    } else if (const auto* map = expr.as<Expr::MapOf>()) {
      for (const auto& [k, e] : map->entries) check_refs(e, path + "." + k, owner);
    }
  }
};

}  // namespace

ValidationReport validate_template(const TemplateDoc& doc, const ResourceTypeRegistry& registry) {
  return Validator(doc, registry).run();
}

}  // namespace minimano::hot
