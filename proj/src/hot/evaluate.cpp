#include <algorithm>
#include <charconv>
#include <cmath>

#include "minimano/common/error.hpp"
#include "minimano/hot/template.hpp"

namespace minimano::hot {

namespace {

[[noreturn]] void mismatch(const Value& value, ParamType type) {
  throw Error(ErrorKind::type_mismatch, "value '" + value.to_text() + "' is not a valid " +
                                            std::string(to_string(type)));
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

Value coerce_parameter(const Value& value, ParamType type) {
  switch (type) {
    case ParamType::string:
      if (value.is_string()) return value;
      if (value.is_number() || value.is_bool()) return Value(value.to_text());
      mismatch(value, type);
    case ParamType::number: {
      if (value.is_number()) return value;
      if (!value.is_string()) mismatch(value, type);
      const std::string& s = value.as_string();
      double d = 0;
      auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
      if (s.empty() || ec != std::errc{} || end != s.data() + s.size() || !std::isfinite(d))
        mismatch(value, type);
      return Value(d);
    }
    case ParamType::boolean:
      if (value.is_bool()) return value;
      if (value.is_string() && value.as_string() == "true") return Value(true);
      if (value.is_string() && value.as_string() == "false") return Value(false);
      mismatch(value, type);
    case ParamType::list: {
      if (value.is_list()) return value;
      if (!value.is_string()) mismatch(value, type);
      Value::List items;
      const std::string& s = value.as_string();
      if (s.empty()) return Value(items);
      std::size_t start = 0;
      while (true) {
        std::size_t comma = s.find(',', start);
        items.emplace_back(trim(std::string_view(s).substr(start, comma == std::string::npos ? s.npos : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      return Value(std::move(items));
    }
    case ParamType::map: {
      if (value.is_map()) return value;
      if (!value.is_string()) mismatch(value, type);
      auto json = nlohmann::ordered_json::parse(value.as_string(), nullptr, false);
      if (json.is_discarded() || !json.is_object()) mismatch(value, type);
      return value_from_json(json);
    }
  }
  mismatch(value, type);
}

BoundParameters bind_parameters(const TemplateDoc& doc, const OrderedMap<Value>& provided) {
  for (const auto& [name, _] : provided)
    if (!doc.parameters.contains(name))
      throw Error(ErrorKind::unknown_parameter, "unknown parameter " + name);
  BoundParameters bound;
  for (const auto& [name, def] : doc.parameters) {
    const Value* given = provided.find(name);
    if (!given && !def.default_value)
      throw Error(ErrorKind::missing_parameter, "missing value for parameter " + name);
    const Value& raw = given ? *given : *def.default_value;
    try {
      bound.values.insert(name, coerce_parameter(raw, def.type));
    } catch (const Error& e) {
      throw Error(ErrorKind::type_mismatch, "parameter " + name + ": " + e.what());
    }
  }
  return bound;
}

std::string str_replace(std::string_view text,
                        const std::vector<std::pair<std::string, std::string>>& params) {
  std::vector<const std::pair<std::string, std::string>*> markers;
  for (const auto& p : params)
    if (!p.first.empty()) markers.push_back(&p);
  std::stable_sort(markers.begin(), markers.end(),
                   [](auto* a, auto* b) { return a->first.size() > b->first.size(); });
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const std::pair<std::string, std::string>* hit = nullptr;
    for (const auto* m : markers) {
      if (text.compare(i, m->first.size(), m->first) == 0) {
        hit = m;
        break;
      }
    }
    if (hit) {
      out += hit->second;
      i += hit->first.size();
    } else {
      out += text[i++];
    }
  }
  return out;
}

Value evaluate_expr(const Expr& expr, const EvaluationContext& ctx) {
  if (const auto* lit = expr.as<Expr::Literal>()) return lit->value;
  if (const auto* gp = expr.as<Expr::GetParam>()) {
    const Value* v = ctx.parameters ? ctx.parameters->find(gp->name) : nullptr;
    if (!v) throw Error(ErrorKind::unknown_parameter, "unknown parameter " + gp->name);
    return *v;
  }
  if (const auto* ga = expr.as<Expr::GetAttr>()) {
    auto view = ctx.resource ? ctx.resource(ga->resource) : std::nullopt;
    if (!view || !view->attributes)
      throw Error(ErrorKind::unavailable, "attribute " + ga->attribute + " of " + ga->resource +
                                              " is not yet available");
    const Value* v = view->attributes->find(ga->attribute);
    if (!v)
      throw Error(ErrorKind::unknown_attribute,
                  "resource " + ga->resource + " has no attribute " + ga->attribute);
    return *v;
  }
  if (const auto* gr = expr.as<Expr::GetResource>()) {
    auto view = ctx.resource ? ctx.resource(gr->resource) : std::nullopt;
    if (!view)
      throw Error(ErrorKind::unavailable, "resource " + gr->resource + " is not yet available");
    return Value(view->id);
  }
  if (const auto* sr = expr.as<Expr::StrReplace>()) {
    std::vector<std::pair<std::string, std::string>> params;
    for (const auto& [marker, e] : sr->params) {
      Value v = evaluate_expr(e, ctx);
      if (!v.is_scalar())
        throw Error(ErrorKind::type_mismatch, "str_replace param " + marker + " must be a scalar");
      params.emplace_back(marker, v.to_text());
    }
    return Value(str_replace(sr->template_text, params));
  }
  if (const auto* list = expr.as<Expr::ListOf>()) {
    Value::List out;
    for (const auto& item : list->items) out.push_back(evaluate_expr(item, ctx));
    return Value(std::move(out));
  }
  const auto& map = std::get<Expr::MapOf>(expr.node);
  Value::Map out;
  for (const auto& [k, e] : map.entries) out.insert(k, evaluate_expr(e, ctx));
  return Value(std::move(out));
}

void collect_resource_refs(const Expr& expr, std::vector<std::string>& out) {
  if (const auto* ga = expr.as<Expr::GetAttr>()) {
    out.push_back(ga->resource);
  } else if (const auto* gr = expr.as<Expr::GetResource>()) {
    out.push_back(gr->resource);
  } else if (const auto* sr = expr.as<Expr::StrReplace>()) {
    for (const auto& [_, e] : sr->params) collect_resource_refs(e, out);
  } else if (const auto* list = expr.as<Expr::ListOf>()) {
    for (const auto& e : list->items) collect_resource_refs(e, out);
  } else if (const auto* map = expr.as<Expr::MapOf>()) {
    for (const auto& [_, e] : map->entries) collect_resource_refs(e, out);
  }
}

std::vector<DependencyEdge> extract_dependencies(const TemplateDoc& doc) {
  std::vector<DependencyEdge> edges;
  for (const auto& [consumer, res] : doc.resources) {
    std::vector<std::string> refs;
    for (const auto& [_, e] : res.properties) collect_resource_refs(e, refs);
    refs.insert(refs.end(), res.depends_on.begin(), res.depends_on.end());
    std::vector<std::string> providers;
    for (auto& r : refs)
      if (doc.resources.contains(r) && std::find(providers.begin(), providers.end(), r) == providers.end())
        providers.push_back(r);
    std::sort(providers.begin(), providers.end(), [&](const std::string& a, const std::string& b) {
      return doc.resources.index_of(a) < doc.resources.index_of(b);
    });
    for (auto& p : providers) edges.push_back(DependencyEdge{p, consumer});
  }
  return edges;
}

}  // namespace minimano::hot
