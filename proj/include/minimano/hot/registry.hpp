#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "minimano/common/value.hpp"

namespace minimano::hot {

inline constexpr std::string_view kServerType = "OS::Nova::Server";
inline constexpr std::string_view kRandomStringType = "OS::Heat::RandomString";
inline constexpr std::string_view kWaitConditionType = "OS::Heat::WaitCondition";
inline constexpr std::string_view kWaitHandleType = "OS::Heat::WaitConditionHandle";

enum class PropertyKind { string, integer, list, map };

struct PropertySchema {
  std::string name;
  PropertyKind kind = PropertyKind::string;
  bool required = false;
  std::optional<Value> default_value;
  std::vector<std::string> allowed;  // empty: unrestricted
  std::optional<long> minimum;
};

struct ResourceTypeSchema {
  std::string type;
  std::vector<PropertySchema> properties;
  std::vector<std::string> attributes;

  const PropertySchema* property(std::string_view name) const {
    for (const auto& p : properties)
      if (p.name == name) return &p;
    return nullptr;
  }
  bool has_attribute(std::string_view name) const {
    for (const auto& a : attributes)
      if (a == name) return true;
    return false;
  }
};

// Known resource types with their property tables and attribute catalogs.
class ResourceTypeRegistry {
public:
  static ResourceTypeRegistry builtin();

  void add(ResourceTypeSchema schema) { types_[schema.type] = std::move(schema); }

  const ResourceTypeSchema* find(std::string_view type) const {
    auto it = types_.find(std::string(type));
    return it == types_.end() ? nullptr : &it->second;
  }

  // A resource type naming another template file (nested stack).
  static bool is_nested_type(std::string_view type);

private:
  std::map<std::string, ResourceTypeSchema> types_;
};

}  // namespace minimano::hot
