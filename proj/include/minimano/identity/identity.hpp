#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "minimano/common/event_log.hpp"
#include "minimano/common/ordered_map.hpp"
#include "minimano/common/rng.hpp"

namespace minimano::identity {

struct Tenant {
  std::string id;
  std::string name;

  friend bool operator==(const Tenant&, const Tenant&) = default;
};

struct User {
  std::string id;
  std::string name;
  std::string salt;
  std::string digest;  // hex SHA-256 of salt + credential

  friend bool operator==(const User&, const User&) = default;
};

struct RoleAssignment {
  std::string user_id;
  std::string tenant_id;
  std::string role;

  friend bool operator==(const RoleAssignment&, const RoleAssignment&) = default;
};

struct Token {
  std::string id;
  std::string user_id;
  std::string user_name;
  std::string tenant_id;
  std::string tenant_name;
  std::vector<std::string> roles;
  Tick issued_at = 0;
  Tick expires_at = 0;

  friend bool operator==(const Token&, const Token&) = default;
};

// Action -> roles allowed to perform it. Anything not listed is denied.
class Policy {
public:
  static Policy default_policy();
  // Values may be a role name or an array of role names.
  static Policy from_json(const nlohmann::ordered_json& json);
  static Policy load_file(const std::filesystem::path& path);

  bool allows(std::string_view action, const std::vector<std::string>& roles) const;
  nlohmann::ordered_json to_json() const;

  friend bool operator==(const Policy&, const Policy&) = default;

private:
  std::map<std::string, std::vector<std::string>, std::less<>> rules_;
};

// Every action the orchestrator checks before a mutating or reading call.
const std::vector<std::string>& known_actions();

class IdentityService {
public:
  IdentityService(Rng& rng, const Tick& clock, Tick token_ttl = 3600);

  // Creates tenant "admin", user "admin", the admin role binding and the
  // initial service catalog.
  void bootstrap(const std::string& admin_credential, const OrderedMap<std::string>& endpoints = {});

  void set_policy(Policy policy) { policy_ = std::move(policy); }
  const Policy& policy() const noexcept { return policy_; }
  Tick token_ttl() const noexcept { return token_ttl_; }

  // Unknown user, unknown tenant and wrong credential fail identically.
  Token authenticate(const std::string& user, const std::string& credential, const std::string& tenant);
  Token validate(std::string_view token_id) const;  // throws unauthorized
  void authorize(const Token& token, std::string_view action) const;  // throws forbidden
  Token require(std::string_view token_id, std::string_view action) const;

  Tenant create_tenant(std::string_view token, const std::string& name);
  User create_user(std::string_view token, const std::string& name, const std::string& credential);
  void assign_role(std::string_view token, const std::string& user, const std::string& tenant, const std::string& role);
  void register_endpoint(std::string_view token, const std::string& service, const std::string& url);
  std::string lookup_endpoint(std::string_view token, const std::string& service) const;

  const Tenant* find_tenant(std::string_view name_or_id) const;
  const User* find_user(std::string_view name_or_id) const;
  std::vector<std::string> roles_of(const std::string& user_id, const std::string& tenant_id) const;
  const OrderedMap<Tenant>& tenants() const noexcept { return tenants_; }

  nlohmann::ordered_json to_json() const;
  void load(const nlohmann::ordered_json& json);

private:
  Tenant add_tenant(const std::string& name);
  User add_user(const std::string& name, const std::string& credential);
  void add_role(const std::string& user_id, const std::string& tenant_id, const std::string& role);
  void prune_tokens();

  Rng& rng_;
  const Tick& clock_;
  Tick token_ttl_;
  Policy policy_;
  OrderedMap<Tenant> tenants_;
  OrderedMap<User> users_;
  std::vector<RoleAssignment> roles_;
  std::map<std::string, Token> tokens_;
  OrderedMap<std::string> catalog_;  // service type -> URL
};

}  // namespace minimano::identity
