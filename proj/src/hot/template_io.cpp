#include <regex>
#include <set>

#include "minimano/common/error.hpp"
#include "minimano/hot/template.hpp"
#include "minimano/hot/yaml_subset.hpp"

namespace minimano::hot {

std::string_view to_string(ParamType type) noexcept {
  switch (type) {
    case ParamType::string: return "string";
    case ParamType::number: return "number";
    case ParamType::boolean: return "boolean";
    case ParamType::list: return "list";
    case ParamType::map: return "map";
  }
  return "string";
}

std::optional<ParamType> param_type_from_string(std::string_view name) noexcept {
  if (name == "string") return ParamType::string;
  if (name == "number") return ParamType::number;
  if (name == "boolean") return ParamType::boolean;
  if (name == "list" || name == "comma_delimited_list") return ParamType::list;
  if (name == "map" || name == "json") return ParamType::map;
  return std::nullopt;
}

Expr Expr::literal(Value v) {
  if (v.is_list()) {
    ListOf list;
    for (auto& item : v.as_list()) list.items.push_back(literal(std::move(item)));
    return Expr{std::move(list)};
  }
  if (v.is_map()) {
    MapOf map;
    for (auto& [k, item] : v.as_map()) map.entries.insert(k, literal(std::move(item)));
    return Expr{std::move(map)};
  }
  return Expr{Literal{std::move(v)}};
}

namespace {

[[noreturn]] void fail_at(const YamlNode& node, const std::string& message) {
  throw ParseError(node.line, node.column, message);
}

const std::set<std::string, std::less<>>& unsupported_functions() {
  static const std::set<std::string, std::less<>> names = {
      "get_file", "list_join",  "repeat",      "str_split", "digest",         "map_merge",
      "map_replace", "resource_facade", "yaql", "equals",   "if",             "not",
      "and",      "or",         "filter",      "contains",  "make_url",       "list_concat",
      "list_concat_unique", "str_replace_strict", "str_replace_vstrict", "Fn::GetAtt", "Ref"};
  return names;
}

std::string scalar_text(const YamlNode& node, std::string_view what) {
  if (!node.is_scalar()) fail_at(node, std::string(what) + " must be a scalar");
  return node.text;
}

class TemplateReader {
public:
  TemplateDoc read(const YamlNode& root) {
    if (root.is_scalar() && root.text.empty()) fail_at(root, "empty template");
    if (!root.is_mapping()) fail_at(root, "template must be a mapping");
    TemplateDoc doc;
    const YamlNode* version = root.find("heat_template_version");
    if (!version) fail_at(root, "missing heat_template_version");
    doc.version = scalar_text(*version, "heat_template_version");
    static const std::regex date_re(R"(\d{4}-\d{2}-\d{2})");
    if (!std::regex_match(doc.version, date_re))
      fail_at(*version, "heat_template_version must be a date tag (YYYY-MM-DD)");

    for (const auto& [key, node] : root.entries) {
      if (key == "heat_template_version") continue;
      if (key == "description") {
        doc.description = scalar_text(node, "description");
      } else if (key == "parameters") {
        read_parameters(node, doc);
      } else if (key == "resources") {
        read_resources(node, doc);
      } else if (key == "outputs") {
        read_outputs(node, doc);
      } else {
        warn(key, "unknown top-level section '" + key + "' ignored");
      }
    }
    if (doc.resources.empty()) {
      const YamlNode* res = root.find("resources");
      fail_at(res ? *res : root, "template declares no resources");
    }
    doc.warnings = std::move(warnings_);
    return doc;
  }

private:
  std::vector<Finding> warnings_;

  void warn(std::string path, std::string message) {
    warnings_.push_back(Finding{Severity::warning, std::move(path), std::move(message)});
  }

  static bool is_null(const YamlNode& node) {
    return node.is_scalar() && node.style == YamlNode::Style::plain && scalar_value(node).is_null();
  }

  void read_parameters(const YamlNode& node, TemplateDoc& doc) {
    if (is_null(node)) return;
    if (!node.is_mapping()) fail_at(node, "parameters must be a mapping");
    for (const auto& [name, def] : node.entries) {
      if (!def.is_mapping()) fail_at(def, "parameter '" + name + "' must be a mapping");
      ParameterDef param;
      const YamlNode* type = def.find("type");
      if (!type) fail_at(def, "parameter '" + name + "' has no type");
      auto parsed = param_type_from_string(scalar_text(*type, "parameter type"));
      if (!parsed) fail_at(*type, "unknown parameter type '" + type->text + "'");
      param.type = *parsed;
      for (const auto& [key, attr] : def.entries) {
        if (key == "type") continue;
        if (key == "label") param.label = scalar_text(attr, "label");
        else if (key == "description") param.description = scalar_text(attr, "description");
        else if (key == "default") param.default_value = to_value(attr);
        else warn("parameters." + name + "." + key, "parameter attribute '" + key + "' ignored");
      }
      doc.parameters.insert(name, std::move(param));
    }
  }

  void read_resources(const YamlNode& node, TemplateDoc& doc) {
    if (is_null(node)) return;
    if (!node.is_mapping()) fail_at(node, "resources must be a mapping");
    for (const auto& [name, def] : node.entries) {
      if (!def.is_mapping()) fail_at(def, "resource '" + name + "' must be a mapping");
      ResourceDef res;
      res.name = name;
      const YamlNode* type = def.find("type");
      if (!type || !type->is_scalar() || type->text.empty())
        fail_at(def, "resource '" + name + "' has no type");
      res.type = type->text;
      for (const auto& [key, attr] : def.entries) {
        if (key == "type") continue;
        std::string path = "resources." + name + "." + key;
        if (key == "properties") {
          if (is_null(attr)) continue;
          if (!attr.is_mapping()) fail_at(attr, "properties of '" + name + "' must be a mapping");
          for (const auto& [prop, value] : attr.entries)
            res.properties.insert(prop, read_expr(value, path + "." + prop));
        } else if (key == "depends_on") {
          if (is_null(attr)) continue;
          if (attr.is_scalar()) {
            res.depends_on.push_back(attr.text);
          } else if (attr.is_sequence()) {
            for (const auto& item : attr.items) {
              if (!item.is_scalar()) fail_at(item, "depends_on of '" + name + "' must list resource names");
              res.depends_on.push_back(item.text);
            }
          } else {
            fail_at(attr, "depends_on of '" + name + "' must be a name or a list of names");
          }
        } else {
          warn(path, "resource attribute '" + key + "' ignored");
        }
      }
      doc.resources.insert(name, std::move(res));
    }
  }

  void read_outputs(const YamlNode& node, TemplateDoc& doc) {
    if (is_null(node)) return;
    if (!node.is_mapping()) fail_at(node, "outputs must be a mapping");
    for (const auto& [name, def] : node.entries) {
      if (!def.is_mapping()) fail_at(def, "output '" + name + "' must be a mapping");
      const YamlNode* value = def.find("value");
      if (!value) fail_at(def, "output '" + name + "' has no value");
      OutputDef out{std::nullopt, read_expr(*value, "outputs." + name + ".value")};
      for (const auto& [key, attr] : def.entries) {
        if (key == "value") continue;
        if (key == "description") out.description = scalar_text(attr, "description");
        else warn("outputs." + name + "." + key, "output attribute '" + key + "' ignored");
      }
      doc.outputs.insert(name, std::move(out));
    }
  }

  Expr read_expr(const YamlNode& node, const std::string& path) {
    if (node.is_scalar()) return Expr{Expr::Literal{scalar_value(node)}};
    if (node.is_sequence()) {
      Expr::ListOf list;
      for (std::size_t i = 0; i < node.items.size(); ++i)
        list.items.push_back(read_expr(node.items[i], path + "[" + std::to_string(i) + "]"));
      return Expr{std::move(list)};
    }
    if (node.entries.size() == 1) {
      const auto& [fn, arg] = node.entries.front();
      if (fn == "get_param") {
        if (!arg.is_scalar() || arg.text.empty())
          fail_at(arg, "get_param takes a single parameter name");
        return Expr::get_param(arg.text);
      }
      if (fn == "get_attr" || fn == "get_pattr") {
        if (!arg.is_sequence() || arg.items.size() != 2 || !arg.items[0].is_scalar() ||
            !arg.items[1].is_scalar())
          fail_at(arg, fn + " takes [<resource name>, <attribute name>]");
        if (fn == "get_pattr") warn(path, "get_pattr is treated as get_attr");
        return Expr::get_attr(arg.items[0].text, arg.items[1].text);
      }
      if (fn == "get_resource") {
        if (!arg.is_scalar() || arg.text.empty())
          fail_at(arg, "get_resource takes a single resource name");
        return Expr::get_resource(arg.text);
      }
      if (fn == "str_replace") return read_str_replace(arg, path);
      if (unsupported_functions().count(fn))
        fail_at(node, "unsupported intrinsic function '" + fn + "'");
    }
    Expr::MapOf map;
    for (const auto& [key, value] : node.entries) map.entries.insert(key, read_expr(value, path + "." + key));
    return Expr{std::move(map)};
  }

  Expr read_str_replace(const YamlNode& arg, const std::string& path) {
    if (!arg.is_mapping()) fail_at(arg, "str_replace takes a mapping with 'template' and 'params'");
    const YamlNode* tmpl = arg.find("template");
    const YamlNode* params = arg.find("params");
    if (!tmpl) fail_at(arg, "str_replace requires 'template'");
    if (!params) fail_at(arg, "str_replace requires 'params'");
    for (const auto& [key, _] : arg.entries)
      if (key != "template" && key != "params") fail_at(arg, "unexpected str_replace key '" + key + "'");
    if (!tmpl->is_scalar()) fail_at(*tmpl, "str_replace template must be a string");
    Expr::StrReplace sr;
    sr.template_text = tmpl->text;
    if (!is_null(*params)) {
      if (!params->is_mapping()) fail_at(*params, "str_replace params must be a mapping");
      for (const auto& [marker, value] : params->entries)
        sr.params.insert(marker, read_expr(value, path + ".params." + marker));
    }
    return Expr{std::move(sr)};
  }
};

// --- canonical serialization ---------------------------------------------

std::string pad(int n) { return std::string(static_cast<std::size_t>(n), ' '); }

void emit_block_literal(std::string& out, std::string_view text, int indent) {
  out += ' ';
  out += block_header(text);
  out += '\n';
  std::size_t start = 0;
  std::string_view body = text;
  // Trailing newlines are carried by the chomping indicator.
  std::size_t trailing = 0;
  while (!body.empty() && body.back() == '\n') {
    body.remove_suffix(1);
    ++trailing;
  }
  while (start <= body.size()) {
    std::size_t nl = body.find('\n', start);
    std::string_view line = body.substr(start, nl == std::string_view::npos ? body.npos : nl - start);
    if (!line.empty()) {
      out += pad(indent + 2);
      out += line;
    }
    out += '\n';
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  for (std::size_t i = 1; i < trailing; ++i) out += '\n';
}

void emit_scalar(std::string& out, const Value& v, int indent) {
  if (v.is_string() && fits_block_literal(v.as_string())) {
    emit_block_literal(out, v.as_string(), indent);
    return;
  }
  out += ' ';
  out += scalar_to_yaml(v);
  out += '\n';
}

std::string name_token(const std::string& name) { return scalar_to_yaml(Value(name)); }

void emit_expr(std::string& out, const Expr& e, int indent);

void emit_entries(std::string& out, const OrderedMap<Expr>& entries, int key_indent, bool first_inline) {
  bool first = true;
  for (const auto& [k, v] : entries) {
    if (!(first && first_inline)) out += pad(key_indent);
    out += name_token(k);
    out += ':';
    emit_expr(out, v, key_indent);
    first = false;
  }
}

// Writes the value that follows "key:" or "-" at column `indent`.
void emit_expr(std::string& out, const Expr& e, int indent) {
  if (const auto* lit = e.as<Expr::Literal>()) {
    emit_scalar(out, lit->value, indent);
  } else if (const auto* gp = e.as<Expr::GetParam>()) {
    out += " { get_param: " + name_token(gp->name) + " }\n";
  } else if (const auto* ga = e.as<Expr::GetAttr>()) {
    out += " { get_attr: [" + name_token(ga->resource) + ", " + name_token(ga->attribute) + "] }\n";
  } else if (const auto* gr = e.as<Expr::GetResource>()) {
    out += " { get_resource: " + name_token(gr->resource) + " }\n";
  } else if (const auto* sr = e.as<Expr::StrReplace>()) {
    out += '\n';
    out += pad(indent + 2) + "str_replace:\n";
    out += pad(indent + 4) + "params:";
    if (sr->params.empty()) {
      out += " {}\n";
    } else {
      out += '\n';
      emit_entries(out, sr->params, indent + 6, false);
    }
    out += pad(indent + 4) + "template:";
    emit_scalar(out, Value(sr->template_text), indent + 4);
  } else if (const auto* list = e.as<Expr::ListOf>()) {
    if (list->items.empty()) {
      out += " []\n";
      return;
    }
    out += '\n';
    for (const auto& item : list->items) {
      out += pad(indent + 2) + "-";
      const auto* map = item.as<Expr::MapOf>();
      if (map && !map->entries.empty()) {
        out += ' ';
        emit_entries(out, map->entries, indent + 4, true);
      } else {
        emit_expr(out, item, indent + 2);
      }
    }
  } else if (const auto* map = e.as<Expr::MapOf>()) {
    if (map->entries.empty()) {
      out += " {}\n";
      return;
    }
    out += '\n';
    emit_entries(out, map->entries, indent + 2, false);
  }
}

}  // namespace

TemplateDoc parse_template(std::string_view source) {
  YamlNode root = parse_yaml(source);
  return TemplateReader{}.read(root);
}

std::string serialize_template(const TemplateDoc& doc) {
  std::string out = "heat_template_version: " + scalar_to_yaml(Value(doc.version)) + "\n";
  if (doc.description) {
    out += "description:";
    emit_scalar(out, Value(*doc.description), 0);
  }
  if (!doc.parameters.empty()) {
    out += "parameters:\n";
    for (const auto& [name, p] : doc.parameters) {
      out += "  " + name_token(name) + ":\n";
      out += "    type: " + std::string(to_string(p.type)) + "\n";
      if (p.label) {
        out += "    label:";
        emit_scalar(out, Value(*p.label), 4);
      }
      if (p.description) {
        out += "    description:";
        emit_scalar(out, Value(*p.description), 4);
      }
      if (p.default_value) {
        out += "    default:";
        emit_expr(out, Expr::literal(*p.default_value), 4);
      }
    }
  }
  out += "resources:\n";
  for (const auto& [name, r] : doc.resources) {
    out += "  " + name_token(name) + ":\n";
    out += "    type: " + name_token(r.type) + "\n";
    if (!r.depends_on.empty()) {
      out += "    depends_on:\n";
      for (const auto& dep : r.depends_on) out += "      - " + name_token(dep) + "\n";
    }
    if (!r.properties.empty()) {
      out += "    properties:\n";
      emit_entries(out, r.properties, 6, false);
    }
  }
  if (!doc.outputs.empty()) {
    out += "outputs:\n";
    for (const auto& [name, o] : doc.outputs) {
      out += "  " + name_token(name) + ":\n";
      if (o.description) {
        out += "    description:";
        emit_scalar(out, Value(*o.description), 4);
      }
      out += "    value:";
      emit_expr(out, o.value, 4);
    }
  }
  return out;
}

}  // namespace minimano::hot
