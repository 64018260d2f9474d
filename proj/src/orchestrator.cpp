#include "minimano/orchestrator.hpp"

#include <algorithm>
#include <mutex>

#include "minimano/common/error.hpp"

namespace minimano {

using json = nlohmann::ordered_json;
using Read = std::shared_lock<std::shared_mutex>;
using Write = std::unique_lock<std::shared_mutex>;

namespace {

constexpr int kSnapshotVersion = 1;

OrderedMap<std::string> default_catalog(const std::string& signal_base_url) {
  return {{"identity", "http://identity.local:5000/v3"},
          {"compute", "http://compute.local:8774/v2.1"},
          {"image", "http://image.local:9292"},
          {"network", "http://network.local:9696"},
          {"volume", "http://volume.local:8776/v3"},
          {"object-store", "http://objects.local:8080/v1"},
          {"orchestration", signal_base_url},
          {"telemetry", "http://telemetry.local:8041"}};
}

std::uint64_t pick_seed(const std::optional<std::uint64_t>& seed) {
  if (seed) return *seed;
  return Rng().next();
}

}  // namespace

Orchestrator::Orchestrator(const WorldConfig& world, RuntimeConfig runtime)
    : rng_(pick_seed(world.seed)),
      external_cidr_(world.external_cidr),
      signal_base_url_(world.signal_base_url),
      identity_(rng_, clock_, world.token_ttl),
      cloud_(rng_, clock_, nfvi::CloudConfig{world.external_cidr}),
      engine_(cloud_, log_, clock_, rng_, engine::EngineConfig{runtime.template_dirs, world.signal_base_url, 8}),
      autonomic_(cloud_, log_, clock_, rng_) {
  identity_.set_policy(std::move(runtime.policy));
  identity_.bootstrap(world.admin_credential, default_catalog(world.signal_base_url));
  for (const auto& [id, _] : identity_.tenants()) cloud_.default_security_group(id);
  for (const auto& h : world.hosts) cloud_.add_host(h.id, h.capacity);
  if (world.default_flavors) {
    cloud_.create_flavor("m1.tiny", {1, 512, 1});
    cloud_.create_flavor("m1.small", {1, 2048, 20});
    cloud_.create_flavor("m1.medium", {2, 4096, 40});
    cloud_.create_flavor("m1.large", {4, 8192, 80});
  }
}

Orchestrator::Orchestrator(RestoreTag, std::uint64_t seed, Tick token_ttl, std::string external_cidr,
                           std::string signal_base_url, RuntimeConfig runtime)
    : rng_(seed),
      external_cidr_(std::move(external_cidr)),
      signal_base_url_(std::move(signal_base_url)),
      identity_(rng_, clock_, token_ttl),
      cloud_(rng_, clock_, nfvi::CloudConfig{external_cidr_}),
      engine_(cloud_, log_, clock_, rng_, engine::EngineConfig{runtime.template_dirs, signal_base_url_, 8}),
      autonomic_(cloud_, log_, clock_, rng_) {
  identity_.set_policy(std::move(runtime.policy));
}

std::unique_ptr<Orchestrator> Orchestrator::restore(const json& snap, RuntimeConfig runtime) {
  if (!snap.is_object() || !snap.contains("v") || snap.at("v") != kSnapshotVersion)
    throw Error(ErrorKind::io, "state file has an unsupported format");
  try {
    const auto& cfg = snap.at("config");
    std::unique_ptr<Orchestrator> o(new Orchestrator(RestoreTag{}, 0, cfg.at("token_ttl").get<Tick>(),
                                                     cfg.at("external_cidr").get<std::string>(),
                                                     cfg.at("signal_base_url").get<std::string>(), std::move(runtime)));
    o->clock_ = snap.at("clock").get<Tick>();
    o->rng_.restore(snap.at("rng").get<std::string>());
    o->log_.load(snap.at("events"));
    o->identity_.load(snap.at("identity"));
    o->cloud_.load(snap.at("cloud"));
    o->engine_.load(snap.at("engine"));
    o->autonomic_.load(snap.at("autonomic"));
    return o;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::io, std::string("state file is corrupt: ") + e.what());
  }
}

json Orchestrator::snapshot() const {
  Read lock(mutex_);
  return json{{"v", kSnapshotVersion},
              {"config",
               json{{"token_ttl", identity_.token_ttl()},
                    {"external_cidr", external_cidr_},
                    {"signal_base_url", signal_base_url_}}},
              {"clock", clock_},
              {"rng", rng_.state()},
              {"identity", identity_.to_json()},
              {"cloud", cloud_.to_json()},
              {"engine", engine_.to_json()},
              {"autonomic", autonomic_.to_json()},
              {"events", log_.to_json()}};
}

Tick Orchestrator::now() const {
  Read lock(mutex_);
  return clock_;
}

identity::Token Orchestrator::require(const std::string& token, std::string_view action) const {
  return identity_.require(token, action);
}

// ---- identity ----

identity::Token Orchestrator::authenticate(const std::string& user, const std::string& credential,
                                           const std::string& tenant) {
  Write lock(mutex_);
  return identity_.authenticate(user, credential, tenant);
}

identity::Tenant Orchestrator::create_tenant(const std::string& token, const std::string& name) {
  Write lock(mutex_);
  auto t = identity_.create_tenant(token, name);
  cloud_.default_security_group(t.id);
  return t;
}

identity::User Orchestrator::create_user(const std::string& token, const std::string& name,
                                         const std::string& credential) {
  Write lock(mutex_);
  return identity_.create_user(token, name, credential);
}

void Orchestrator::assign_role(const std::string& token, const std::string& user, const std::string& tenant,
                               const std::string& role) {
  Write lock(mutex_);
  identity_.assign_role(token, user, tenant, role);
}

void Orchestrator::register_endpoint(const std::string& token, const std::string& service, const std::string& url) {
  Write lock(mutex_);
  identity_.register_endpoint(token, service, url);
}

std::string Orchestrator::lookup_endpoint(const std::string& token, const std::string& service) const {
  Read lock(mutex_);
  return identity_.lookup_endpoint(token, service);
}

// ---- infrastructure ----

void Orchestrator::add_host(const std::string& token, const std::string& id, nfvi::Capacity capacity) {
  Write lock(mutex_);
  require(token, "hosts:create");
  cloud_.add_host(id, capacity);
}

nfvi::Image Orchestrator::register_image(const std::string& token, const std::string& name, std::string payload,
                                         nfvi::ImageOptions options) {
  Write lock(mutex_);
  const auto t = require(token, "images:create");
  if (options.is_public && std::find(t.roles.begin(), t.roles.end(), "admin") == t.roles.end())
    throw Error(ErrorKind::forbidden, "only admins may publish public images");
  return cloud_.register_image(t.tenant_id, name, std::move(payload), options);
}

std::vector<nfvi::Image> Orchestrator::list_images(const std::string& token) const {
  Read lock(mutex_);
  const auto t = require(token, "images:list");
  std::vector<nfvi::Image> out;
  for (const auto* i : cloud_.images(t.tenant_id)) out.push_back(*i);
  return out;
}

nfvi::Flavor Orchestrator::create_flavor(const std::string& token, const std::string& name, nfvi::Capacity size) {
  Write lock(mutex_);
  require(token, "flavors:create");
  return cloud_.create_flavor(name, size);
}

std::vector<nfvi::Flavor> Orchestrator::list_flavors(const std::string& token) const {
  Read lock(mutex_);
  require(token, "flavors:list");
  std::vector<nfvi::Flavor> out;
  for (const auto& [_, f] : cloud_.flavors()) out.push_back(f);
  return out;
}

nfvi::GeneratedKeyPair Orchestrator::create_keypair(const std::string& token, const std::string& name) {
  Write lock(mutex_);
  const auto t = require(token, "keypairs:create");
  return cloud_.create_keypair(t.tenant_id, name);
}

nfvi::KeyPair Orchestrator::import_keypair(const std::string& token, const std::string& name,
                                           const std::string& public_key) {
  Write lock(mutex_);
  const auto t = require(token, "keypairs:create");
  return cloud_.import_keypair(t.tenant_id, name, public_key);
}

nfvi::SecurityGroup Orchestrator::create_security_group(const std::string& token, const std::string& name) {
  Write lock(mutex_);
  const auto t = require(token, "secgroups:create");
  return cloud_.create_security_group(t.tenant_id, name);
}

nfvi::SecurityGroup Orchestrator::add_security_rule(const std::string& token, const std::string& group,
                                                    nfvi::SecurityRule rule) {
  Write lock(mutex_);
  const auto t = require(token, "secgroups:update");
  if (group == "default") cloud_.default_security_group(t.tenant_id);
  return cloud_.add_security_rule(t.tenant_id, group, std::move(rule));
}

nfvi::Network Orchestrator::create_network(const std::string& token, const std::string& name, const std::string& cidr,
                                           const std::string& gateway) {
  Write lock(mutex_);
  const auto t = require(token, "networks:create");
  return cloud_.create_network(t.tenant_id, name, cidr, gateway);
}

nfvi::Router Orchestrator::create_router(const std::string& token, const std::string& name) {
  Write lock(mutex_);
  const auto t = require(token, "routers:create");
  return cloud_.create_router(t.tenant_id, name);
}

nfvi::Router Orchestrator::attach_interface(const std::string& token, const std::string& router,
                                            const std::string& network) {
  Write lock(mutex_);
  const auto t = require(token, "routers:update");
  return cloud_.attach_interface(t.tenant_id, router, network);
}

nfvi::Router Orchestrator::set_external_gateway(const std::string& token, const std::string& router) {
  Write lock(mutex_);
  const auto t = require(token, "routers:update");
  return cloud_.set_external_gateway(t.tenant_id, router);
}

nfvi::FloatingIp Orchestrator::allocate_floating_ip(const std::string& token) {
  Write lock(mutex_);
  const auto t = require(token, "floatingips:create");
  return cloud_.allocate_floating_ip(t.tenant_id);
}

nfvi::FloatingIp Orchestrator::associate_floating_ip(const std::string& token, const std::string& fip,
                                                     const std::string& instance) {
  Write lock(mutex_);
  const auto t = require(token, "floatingips:update");
  return cloud_.associate_floating_ip(t.tenant_id, fip, instance);
}

nfvi::FloatingIp Orchestrator::disassociate_floating_ip(const std::string& token, const std::string& fip) {
  Write lock(mutex_);
  const auto t = require(token, "floatingips:update");
  return cloud_.disassociate_floating_ip(t.tenant_id, fip);
}

void Orchestrator::release_floating_ip(const std::string& token, const std::string& fip) {
  Write lock(mutex_);
  const auto t = require(token, "floatingips:delete");
  cloud_.release_floating_ip(t.tenant_id, fip);
}

nfvi::Instance Orchestrator::launch_instance(const std::string& token, nfvi::LaunchSpec spec) {
  Write lock(mutex_);
  const auto t = require(token, "servers:create");
  spec.tenant = t.tenant_id;
  const auto& inst = cloud_.launch_instance(spec);
  const std::string id = inst.id;
  engine_.pump();  // a boot script may have signalled a stack
  return *cloud_.find_instance(id);
}

void Orchestrator::terminate_instance(const std::string& token, const std::string& instance) {
  Write lock(mutex_);
  const auto t = require(token, "servers:delete");
  cloud_.terminate_instance(t.tenant_id, instance);
}

void Orchestrator::set_instance_locked(const std::string& token, const std::string& instance, bool locked) {
  Write lock(mutex_);
  const auto t = require(token, "servers:lock");
  // Locking is an operator action, so an id from any tenant is accepted.
  const auto* inst = cloud_.find_instance(instance);
  cloud_.set_locked(inst ? inst->id : cloud_.instance(t.tenant_id, instance).id, locked);
}

std::vector<nfvi::Instance> Orchestrator::list_instances(const std::string& token) const {
  Read lock(mutex_);
  const auto t = require(token, "servers:list");
  std::vector<nfvi::Instance> out;
  for (const auto* i : cloud_.instances(t.tenant_id)) out.push_back(*i);
  return out;
}

nfvi::Instance Orchestrator::show_instance(const std::string& token, const std::string& instance) const {
  Read lock(mutex_);
  const auto t = require(token, "servers:show");
  return cloud_.instance(t.tenant_id, instance);
}

std::string Orchestrator::read_guest_file(const std::string& token, const std::string& instance,
                                          const std::string& path) const {
  Read lock(mutex_);
  const auto t = require(token, "servers:show");
  return cloud_.read_guest_file(t.tenant_id, instance, path);
}

nfvi::Volume Orchestrator::create_volume(const std::string& token, const std::string& name, std::int64_t size_gib) {
  Write lock(mutex_);
  const auto t = require(token, "volumes:create");
  return cloud_.create_volume(t.tenant_id, name, size_gib);
}

nfvi::Volume Orchestrator::attach_volume(const std::string& token, const std::string& volume,
                                         const std::string& instance) {
  Write lock(mutex_);
  const auto t = require(token, "volumes:update");
  return cloud_.attach_volume(t.tenant_id, volume, instance);
}

nfvi::Volume Orchestrator::detach_volume(const std::string& token, const std::string& volume) {
  Write lock(mutex_);
  const auto t = require(token, "volumes:update");
  return cloud_.detach_volume(t.tenant_id, volume);
}

nfvi::Snapshot Orchestrator::snapshot_volume(const std::string& token, const std::string& volume) {
  Write lock(mutex_);
  const auto t = require(token, "volumes:snapshot");
  return cloud_.snapshot_volume(t.tenant_id, volume);
}

void Orchestrator::write_volume(const std::string& token, const std::string& instance, const std::string& volume,
                                std::string data) {
  Write lock(mutex_);
  const auto t = require(token, "volumes:update");
  cloud_.write_volume(t.tenant_id, instance, volume, std::move(data));
}

std::string Orchestrator::read_volume(const std::string& token, const std::string& instance,
                                      const std::string& volume) const {
  Read lock(mutex_);
  const auto t = require(token, "servers:show");
  return cloud_.read_volume(t.tenant_id, instance, volume);
}

void Orchestrator::put_object(const std::string& token, const std::string& container, const std::string& name,
                              std::string payload) {
  Write lock(mutex_);
  const auto t = require(token, "objects:put");
  cloud_.put_object(t.tenant_id, container, name, std::move(payload));
}

std::string Orchestrator::get_object(const std::string& token, const std::string& container,
                                     const std::string& name) const {
  Read lock(mutex_);
  const auto t = require(token, "objects:get");
  return cloud_.get_object(t.tenant_id, container, name);
}

nfvi::Verdict Orchestrator::check_connectivity(const std::string& token, const nfvi::Endpoint& src,
                                               const nfvi::Endpoint& dst, nfvi::Protocol protocol, int port) const {
  Read lock(mutex_);
  const auto t = require(token, "connectivity:check");
  nfvi::Endpoint s = src, d = dst;
  if (!s.is_external()) s.instance = cloud_.instance(t.tenant_id, s.instance).id;
  if (!d.is_external()) d.instance = cloud_.instance(t.tenant_id, d.instance).id;
  return cloud_.check_connectivity(s, d, protocol, port);
}

// ---- templates and stacks ----

hot::ValidationReport Orchestrator::validate_template(const std::string& token, std::string_view text) const {
  Read lock(mutex_);
  require(token, "templates:validate");
  const auto doc = hot::parse_template(text);
  auto report = hot::validate_template(doc, engine_.registry());
  if (report.deployable()) {
    try {
      engine::build_plan(doc);
    } catch (const Error& e) {
      report.findings.push_back(hot::Finding{hot::Severity::error, "resources", e.what()});
    }
  }
  return report;
}

engine::Stack Orchestrator::create_stack(const std::string& token, const std::string& name,
                                         std::string_view template_text, const OrderedMap<Value>& parameters,
                                         const std::string& template_dir) {
  Write lock(mutex_);
  const auto t = require(token, "stacks:create");
  const auto doc = hot::parse_template(template_text);
  return engine_.create_stack(t.tenant_id, name, doc, parameters, engine::CreateOptions{template_dir, std::nullopt});
}

engine::Stack Orchestrator::delete_stack(const std::string& token, const std::string& stack) {
  Write lock(mutex_);
  const auto t = require(token, "stacks:delete");
  const auto& st = engine_.show_stack(t.tenant_id, stack);
  if (st.status == engine::StackStatus::create_complete || st.status == engine::StackStatus::create_failed)
    autonomic_.remove_stack(st.id);
  return engine_.delete_stack(t.tenant_id, stack);
}

std::vector<engine::StackSummary> Orchestrator::list_stacks(const std::string& token) const {
  Read lock(mutex_);
  const auto t = require(token, "stacks:list");
  return engine_.list_stacks(t.tenant_id);
}

engine::Stack Orchestrator::show_stack(const std::string& token, const std::string& stack) const {
  Read lock(mutex_);
  const auto t = require(token, "stacks:show");
  return engine_.show_stack(t.tenant_id, stack);
}

json Orchestrator::stack_detail(const std::string& token, const std::string& stack) const {
  Read lock(mutex_);
  const auto t = require(token, "stacks:show");
  return engine_.stack_detail(engine_.show_stack(t.tenant_id, stack));
}

engine::SignalAck Orchestrator::signal(const std::string& token, const std::string& handle, std::string_view payload) {
  Write lock(mutex_);
  const auto t = require(token, "stacks:signal");
  if (engine_.handle_tenant(handle) != t.tenant_id)
    throw Error(ErrorKind::not_found, "unknown wait condition handle '" + handle + "'");
  const auto ack = engine_.signal(handle, payload);
  engine_.pump();
  return ack;
}

// ---- autonomic ----

void Orchestrator::push_metric(const std::string& token, const std::string& resource, const std::string& metric,
                               double value, std::optional<Tick> tick) {
  Write lock(mutex_);
  const auto t = require(token, "telemetry:push");
  const auto& inst = cloud_.instance(t.tenant_id, resource);
  if (tick && *tick > clock_) throw Error(ErrorKind::invalid_argument, "samples cannot come from the future");
  autonomic_.record_metric(t.tenant_id, inst.id, metric, value, tick.value_or(clock_));
}

autonomic::ScalingGroup Orchestrator::create_group(const std::string& token, const std::string& name,
                                                   const std::string& stack, const std::string& resource,
                                                   int min_size, int max_size, int desired) {
  Write lock(mutex_);
  const auto t = require(token, "groups:create");
  const auto& st = engine_.show_stack(t.tenant_id, stack);
  if (st.status != engine::StackStatus::create_complete)
    throw Error(ErrorKind::invalid_state, "stack " + st.name + " is not CREATE_COMPLETE");
  const auto* rec = st.resources.find(resource);
  if (!rec) throw Error(ErrorKind::not_found, "stack " + st.name + " has no resource '" + resource + "'");
  if (rec->type != hot::kServerType)
    throw Error(ErrorKind::invalid_argument, "resource '" + resource + "' is not a server");
  const auto* inst = cloud_.find_instance(rec->id);
  if (!inst) throw Error(ErrorKind::not_found, "instance of resource '" + resource + "' is gone");
  nfvi::LaunchSpec spec;
  spec.tenant = t.tenant_id;
  spec.image = inst->image_id;
  spec.flavor = inst->flavor;
  spec.key_name = inst->key_name;
  for (const auto& [net, _] : inst->addresses) spec.networks.push_back(net);
  spec.security_groups = inst->security_groups;
  spec.user_data = inst->user_data;
  const auto& g = autonomic_.create_group(t.tenant_id, name, st.id, resource, spec, min_size, max_size, desired);
  engine_.pump();
  return g;
}

autonomic::ScalingGroup Orchestrator::show_group(const std::string& token, const std::string& group) const {
  Read lock(mutex_);
  const auto t = require(token, "groups:show");
  return autonomic_.group(t.tenant_id, group);
}

autonomic::Alarm Orchestrator::create_alarm(const std::string& token, autonomic::AlarmDef def) {
  Write lock(mutex_);
  const auto t = require(token, "alarms:create");
  def.tenant = t.tenant_id;
  if (const auto* inst = [&]() -> const nfvi::Instance* {
        try {
          return &cloud_.instance(t.tenant_id, def.target);
        } catch (const Error&) {
          return nullptr;
        }
      }())
    def.target = inst->id;
  return autonomic_.create_alarm(std::move(def));
}

void Orchestrator::configure_healer(const std::string& token, autonomic::HealerConfig config) {
  Write lock(mutex_);
  require(token, "healer:configure");
  autonomic_.set_healer(config);
}

void Orchestrator::inject_fault(const std::string& token, const std::string& instance, autonomic::FaultKind kind,
                                std::optional<Tick> at) {
  Write lock(mutex_);
  require(token, "faults:inject");
  const auto* inst = cloud_.find_instance(instance);
  std::string id = instance;
  if (!inst) {
    // Admins may name instances of any tenant by name.
    for (const auto& [iid, candidate] : cloud_.all_instances())
      if (candidate.name == instance && candidate.state != nfvi::InstanceState::deleted) id = iid;
  }
  autonomic_.inject_fault(id, kind, at.value_or(clock_));
}

Tick Orchestrator::advance_clock(const std::string& token, Tick ticks) {
  Write lock(mutex_);
  require(token, "clock:advance");
  autonomic_.advance_clock(clock_, ticks, [this](Tick now) { engine_.process_deadlines(now); });
  return clock_;
}

Tick Orchestrator::wait_tick(const std::string& token, const std::string& stack) {
  Write lock(mutex_);
  const auto t = require(token, "stacks:show");
  const auto& st = engine_.show_stack(t.tenant_id, stack);
  if (st.status != engine::StackStatus::create_in_progress)
    throw Error(ErrorKind::invalid_state, "stack " + st.name + " is not in progress");
  autonomic_.advance_clock(clock_, 1, [this](Tick now) { engine_.process_deadlines(now); });
  return clock_;
}

std::vector<Event> Orchestrator::events(const std::string& token, std::size_t from) const {
  Read lock(mutex_);
  require(token, "events:read");
  const auto& all = log_.events();
  if (from >= all.size()) return {};
  return std::vector<Event>(all.begin() + static_cast<std::ptrdiff_t>(from), all.end());
}

}  // namespace minimano
