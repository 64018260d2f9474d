#include "minimano/hot/registry.hpp"

namespace minimano::hot {

ResourceTypeRegistry ResourceTypeRegistry::builtin() {
  ResourceTypeRegistry registry;

  ResourceTypeSchema server;
  server.type = std::string(kServerType);
  server.properties = {
      {"image", PropertyKind::string, true, std::nullopt, {}, std::nullopt},
      {"flavor", PropertyKind::string, true, std::nullopt, {}, std::nullopt},
      {"key_name", PropertyKind::string, false, std::nullopt, {}, std::nullopt},
      {"networks", PropertyKind::list, false, std::nullopt, {}, std::nullopt},
      {"security_groups", PropertyKind::list, false, std::nullopt, {}, std::nullopt},
      {"user_data", PropertyKind::string, false, std::nullopt, {}, std::nullopt},
      {"user_data_format", PropertyKind::string, false, Value("RAW"), {"RAW"}, std::nullopt},
  };
  server.attributes = {"first_address", "instance_id", "name"};
  registry.add(std::move(server));

  ResourceTypeSchema random;
  random.type = std::string(kRandomStringType);
  random.properties = {
      {"length", PropertyKind::integer, false, Value(32), {}, 1},
      {"sequence", PropertyKind::string, false, Value("alphanumeric"),
       {"digits", "lowercase", "uppercase", "alphanumeric"}, std::nullopt},
  };
  random.attributes = {"value"};
  registry.add(std::move(random));

  ResourceTypeSchema wait;
  wait.type = std::string(kWaitConditionType);
  wait.properties = {
      {"handle", PropertyKind::string, true, std::nullopt, {}, std::nullopt},
      {"timeout", PropertyKind::integer, true, std::nullopt, {}, 1},
      {"count", PropertyKind::integer, false, Value(1), {}, 1},
  };
  wait.attributes = {"data"};
  registry.add(std::move(wait));

  ResourceTypeSchema handle;
  handle.type = std::string(kWaitHandleType);
  handle.attributes = {"curl_cli", "handle_id"};
  registry.add(std::move(handle));

  return registry;
}

bool ResourceTypeRegistry::is_nested_type(std::string_view type) {
  auto ends_with = [&](std::string_view suffix) {
    return type.size() > suffix.size() && type.substr(type.size() - suffix.size()) == suffix;
  };
  return ends_with(".yaml") || ends_with(".yml") || ends_with(".template");
}

}  // namespace minimano::hot
