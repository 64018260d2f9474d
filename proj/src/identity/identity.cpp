#include "minimano/identity/identity.hpp"

#include <algorithm>
#include <fstream>

#include "minimano/common/crypto.hpp"
#include "minimano/common/error.hpp"

namespace minimano::identity {

using json = nlohmann::ordered_json;

namespace {

const char* const kBadCredentials = "invalid credentials";

const std::vector<std::string> kAdminOnly = {
    "identity:create_tenant", "identity:create_user", "identity:assign_role", "catalog:register",
    "hosts:create",           "flavors:create",       "faults:inject",        "clock:advance",
    "healer:configure",       "servers:lock",
};

const std::vector<std::string> kTenantActions = {
    "catalog:lookup",    "templates:validate", "stacks:create",     "stacks:list",        "stacks:show",
    "stacks:delete",     "stacks:signal",      "images:create",     "images:list",        "flavors:list",
    "keypairs:create",   "secgroups:create",   "secgroups:update",  "networks:create",    "routers:create",
    "routers:update",    "floatingips:create", "floatingips:update", "floatingips:delete", "servers:create",
    "servers:list",      "servers:show",       "servers:delete",    "volumes:create",     "volumes:update",
    "volumes:snapshot",  "volumes:delete",     "objects:put",       "objects:get",        "connectivity:check",
    "telemetry:push",    "alarms:create",      "groups:create",     "groups:show",        "events:read",
};

}  // namespace

const std::vector<std::string>& known_actions() {
  static const std::vector<std::string> all = [] {
    std::vector<std::string> out = kAdminOnly;
    out.insert(out.end(), kTenantActions.begin(), kTenantActions.end());
    return out;
  }();
  return all;
}

Policy Policy::default_policy() {
  Policy p;
  for (const auto& a : kAdminOnly) p.rules_[a] = {"admin"};
  for (const auto& a : kTenantActions) p.rules_[a] = {"admin", "member"};
  return p;
}

Policy Policy::from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::invalid_argument, "policy must be a JSON object");
  Policy p;
  for (auto it = j.begin(); it != j.end(); ++it) {
    std::vector<std::string> roles;
    if (it.value().is_string()) {
      roles.push_back(it.value().get<std::string>());
    } else if (it.value().is_array()) {
      for (const auto& r : it.value()) {
        if (!r.is_string()) throw Error(ErrorKind::invalid_argument, "policy roles must be strings: " + it.key());
        roles.push_back(r.get<std::string>());
      }
    } else {
      throw Error(ErrorKind::invalid_argument, "policy value for '" + it.key() + "' must be a role or role list");
    }
    p.rules_[it.key()] = std::move(roles);
  }
  return p;
}

Policy Policy::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot read policy file " + path.string());
  auto j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorKind::invalid_argument, "policy file " + path.string() + " is not JSON");
  return from_json(j);
}

bool Policy::allows(std::string_view action, const std::vector<std::string>& roles) const {
  auto it = rules_.find(action);
  if (it == rules_.end()) return false;
  for (const auto& r : roles)
    if (std::find(it->second.begin(), it->second.end(), r) != it->second.end()) return true;
  return false;
}

json Policy::to_json() const {
  json out = json::object();
  for (const auto& [action, roles] : rules_) {
    if (roles.size() == 1) out[action] = roles.front();
    else out[action] = roles;
  }
  return out;
}

IdentityService::IdentityService(Rng& rng, const Tick& clock, Tick token_ttl)
    : rng_(rng), clock_(clock), token_ttl_(token_ttl), policy_(Policy::default_policy()) {
  if (token_ttl < 1) throw Error(ErrorKind::invalid_argument, "token lifetime must be positive");
}

void IdentityService::bootstrap(const std::string& admin_credential, const OrderedMap<std::string>& endpoints) {
  if (!tenants_.empty()) throw Error(ErrorKind::invalid_state, "identity store already bootstrapped");
  const auto tenant = add_tenant("admin");
  const auto user = add_user("admin", admin_credential);
  add_role(user.id, tenant.id, "admin");
  for (const auto& [service, url] : endpoints) catalog_.insert_or_assign(service, url);
}

Tenant IdentityService::add_tenant(const std::string& name) {
  if (name.empty()) throw Error(ErrorKind::invalid_argument, "tenant name must not be empty");
  if (find_tenant(name)) throw Error(ErrorKind::duplicate, "tenant '" + name + "' already exists");
  Tenant t{rng_.uuid4(), name};
  tenants_.insert(t.id, t);
  return t;
}

User IdentityService::add_user(const std::string& name, const std::string& credential) {
  if (name.empty()) throw Error(ErrorKind::invalid_argument, "user name must not be empty");
  if (credential.empty()) throw Error(ErrorKind::invalid_argument, "credential must not be empty");
  if (find_user(name)) throw Error(ErrorKind::duplicate, "user '" + name + "' already exists");
  User u{rng_.uuid4(), name, rng_.hex(32), {}};
  u.digest = sha256_hex(u.salt + credential);
  users_.insert(u.id, u);
  return u;
}

void IdentityService::add_role(const std::string& user_id, const std::string& tenant_id, const std::string& role) {
  if (role.empty()) throw Error(ErrorKind::invalid_argument, "role name must not be empty");
  RoleAssignment a{user_id, tenant_id, role};
  if (std::find(roles_.begin(), roles_.end(), a) == roles_.end()) roles_.push_back(std::move(a));
}

const Tenant* IdentityService::find_tenant(std::string_view name_or_id) const {
  if (const auto* t = tenants_.find(name_or_id)) return t;
  for (const auto& [_, t] : tenants_)
    if (t.name == name_or_id) return &t;
  return nullptr;
}

const User* IdentityService::find_user(std::string_view name_or_id) const {
  if (const auto* u = users_.find(name_or_id)) return u;
  for (const auto& [_, u] : users_)
    if (u.name == name_or_id) return &u;
  return nullptr;
}

std::vector<std::string> IdentityService::roles_of(const std::string& user_id, const std::string& tenant_id) const {
  std::vector<std::string> out;
  for (const auto& a : roles_)
    if (a.user_id == user_id && a.tenant_id == tenant_id) out.push_back(a.role);
  return out;
}

void IdentityService::prune_tokens() {
  std::erase_if(tokens_, [&](const auto& entry) { return entry.second.expires_at <= clock_; });
}

Token IdentityService::authenticate(const std::string& user_name, const std::string& credential,
                                    const std::string& tenant_name) {
  const User* user = find_user(user_name);
  const Tenant* tenant = find_tenant(tenant_name);
  // Hash even when the user is unknown so both failures cost the same.
  const std::string digest = sha256_hex((user ? user->salt : std::string(32, '0')) + credential);
  if (!user || !tenant || digest != user->digest) throw Error(ErrorKind::unauthorized, kBadCredentials);
  auto roles = roles_of(user->id, tenant->id);
  if (roles.empty()) throw Error(ErrorKind::unauthorized, kBadCredentials);
  prune_tokens();
  Token t{rng_.hex(32), user->id, user->name, tenant->id, tenant->name, std::move(roles), clock_, clock_ + token_ttl_};
  tokens_[t.id] = t;
  return t;
}

Token IdentityService::validate(std::string_view token_id) const {
  if (token_id.empty()) throw Error(ErrorKind::unauthorized, "missing token");
  auto it = tokens_.find(std::string(token_id));
  if (it == tokens_.end()) throw Error(ErrorKind::unauthorized, "invalid token");
  if (it->second.expires_at <= clock_) throw Error(ErrorKind::unauthorized, "token expired");
  // Roles are re-read so revocations and grants take effect immediately.
  Token t = it->second;
  if (!tenants_.contains(t.tenant_id) || !users_.contains(t.user_id))
    throw Error(ErrorKind::unauthorized, "invalid token");
  t.roles = roles_of(t.user_id, t.tenant_id);
  return t;
}

void IdentityService::authorize(const Token& token, std::string_view action) const {
  if (!policy_.allows(action, token.roles))
    throw Error(ErrorKind::forbidden, "policy does not allow " + std::string(action));
}

Token IdentityService::require(std::string_view token_id, std::string_view action) const {
  Token t = validate(token_id);
  authorize(t, action);
  return t;
}

Tenant IdentityService::create_tenant(std::string_view token, const std::string& name) {
  require(token, "identity:create_tenant");
  return add_tenant(name);
}

User IdentityService::create_user(std::string_view token, const std::string& name, const std::string& credential) {
  require(token, "identity:create_user");
  return add_user(name, credential);
}

void IdentityService::assign_role(std::string_view token, const std::string& user, const std::string& tenant,
                                  const std::string& role) {
  require(token, "identity:assign_role");
  const User* u = find_user(user);
  if (!u) throw Error(ErrorKind::not_found, "user '" + user + "' not found");
  const Tenant* t = find_tenant(tenant);
  if (!t) throw Error(ErrorKind::not_found, "tenant '" + tenant + "' not found");
  add_role(u->id, t->id, role);
}

void IdentityService::register_endpoint(std::string_view token, const std::string& service, const std::string& url) {
  require(token, "catalog:register");
  if (service.empty() || url.empty()) throw Error(ErrorKind::invalid_argument, "service and URL must not be empty");
  catalog_.insert_or_assign(service, url);
}

std::string IdentityService::lookup_endpoint(std::string_view token, const std::string& service) const {
  require(token, "catalog:lookup");
  if (const auto* url = catalog_.find(service)) return *url;
  throw Error(ErrorKind::not_found, "no endpoint registered for service '" + service + "'");
}

json IdentityService::to_json() const {
  json out;
  out["tenants"] = json::array();
  for (const auto& [_, t] : tenants_) out["tenants"].push_back(json{{"id", t.id}, {"name", t.name}});
  out["users"] = json::array();
  for (const auto& [_, u] : users_)
    out["users"].push_back(json{{"id", u.id}, {"name", u.name}, {"salt", u.salt}, {"digest", u.digest}});
  out["roles"] = json::array();
  for (const auto& r : roles_)
    out["roles"].push_back(json{{"user", r.user_id}, {"tenant", r.tenant_id}, {"role", r.role}});
  out["tokens"] = json::array();
  for (const auto& [_, t] : tokens_)
    out["tokens"].push_back(json{{"id", t.id},
                                 {"user_id", t.user_id},
                                 {"user_name", t.user_name},
                                 {"tenant_id", t.tenant_id},
                                 {"tenant_name", t.tenant_name},
                                 {"roles", t.roles},
                                 {"issued_at", t.issued_at},
                                 {"expires_at", t.expires_at}});
  out["catalog"] = json::object();
  for (const auto& [service, url] : catalog_) out["catalog"][service] = url;
  return out;
}

void IdentityService::load(const json& j) {
  tenants_ = {};
  users_ = {};
  roles_.clear();
  tokens_.clear();
  catalog_ = {};
  for (const auto& t : j.at("tenants"))
    tenants_.insert(t.at("id").get<std::string>(), Tenant{t.at("id").get<std::string>(), t.at("name").get<std::string>()});
  for (const auto& u : j.at("users"))
    users_.insert(u.at("id").get<std::string>(),
                  User{u.at("id").get<std::string>(), u.at("name").get<std::string>(), u.at("salt").get<std::string>(),
                       u.at("digest").get<std::string>()});
  for (const auto& r : j.at("roles"))
    roles_.push_back(RoleAssignment{r.at("user").get<std::string>(), r.at("tenant").get<std::string>(),
                                    r.at("role").get<std::string>()});
  for (const auto& t : j.at("tokens")) {
    Token tok{t.at("id").get<std::string>(),        t.at("user_id").get<std::string>(),
              t.at("user_name").get<std::string>(), t.at("tenant_id").get<std::string>(),
              t.at("tenant_name").get<std::string>(), t.at("roles").get<std::vector<std::string>>(),
              t.at("issued_at").get<Tick>(),        t.at("expires_at").get<Tick>()};
    tokens_[tok.id] = tok;
  }
  for (auto it = j.at("catalog").begin(); it != j.at("catalog").end(); ++it)
    catalog_.insert(it.key(), it.value().get<std::string>());
}

}  // namespace minimano::identity
