#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "minimano/autonomic/autonomic.hpp"
#include "minimano/common/event_log.hpp"
#include "minimano/common/rng.hpp"
#include "minimano/engine/engine.hpp"
#include "minimano/identity/identity.hpp"
#include "minimano/nfvi/cloud.hpp"

namespace minimano {

struct HostSpec {
  std::string id;
  nfvi::Capacity capacity;
};

// Settings that shape a freshly bootstrapped world.
struct WorldConfig {
  std::optional<std::uint64_t> seed;
  std::string admin_credential = "admin";
  std::vector<HostSpec> hosts = {{"host-1", {8, 16384, 160}}, {"host-2", {8, 16384, 160}}};
  bool default_flavors = true;
  std::string external_cidr = "172.24.4.0/24";
  Tick token_ttl = 3600;
  std::string signal_base_url = "http://orchestration.local:8004/v1";
};

// Settings supplied by the process rather than stored with the state.
struct RuntimeConfig {
  identity::Policy policy = identity::Policy::default_policy();
  std::vector<std::filesystem::path> template_dirs;
};

// Single writer over the whole simulated cloud. Every call validates the
// token and checks policy before touching state. Calls are serialized by a
// reader/writer lock, so one instance can be shared across threads.
class Orchestrator {
public:
  Orchestrator(const WorldConfig& world, RuntimeConfig runtime = {});
  static std::unique_ptr<Orchestrator> restore(const nlohmann::ordered_json& snapshot, RuntimeConfig runtime = {});
  Orchestrator(const Orchestrator&) = delete;
  Orchestrator& operator=(const Orchestrator&) = delete;

  nlohmann::ordered_json snapshot() const;
  Tick now() const;

  // Identity and catalog
  identity::Token authenticate(const std::string& user, const std::string& credential, const std::string& tenant);
  identity::Tenant create_tenant(const std::string& token, const std::string& name);
  identity::User create_user(const std::string& token, const std::string& name, const std::string& credential);
  void assign_role(const std::string& token, const std::string& user, const std::string& tenant,
                   const std::string& role);
  void register_endpoint(const std::string& token, const std::string& service, const std::string& url);
  std::string lookup_endpoint(const std::string& token, const std::string& service) const;

  // Infrastructure
  void add_host(const std::string& token, const std::string& id, nfvi::Capacity capacity);
  nfvi::Image register_image(const std::string& token, const std::string& name, std::string payload,
                             nfvi::ImageOptions options = {});
  std::vector<nfvi::Image> list_images(const std::string& token) const;
  nfvi::Flavor create_flavor(const std::string& token, const std::string& name, nfvi::Capacity size);
  std::vector<nfvi::Flavor> list_flavors(const std::string& token) const;
  nfvi::GeneratedKeyPair create_keypair(const std::string& token, const std::string& name);
  nfvi::KeyPair import_keypair(const std::string& token, const std::string& name, const std::string& public_key);
  nfvi::SecurityGroup create_security_group(const std::string& token, const std::string& name);
  nfvi::SecurityGroup add_security_rule(const std::string& token, const std::string& group, nfvi::SecurityRule rule);
  nfvi::Network create_network(const std::string& token, const std::string& name, const std::string& cidr,
                               const std::string& gateway = {});
  nfvi::Router create_router(const std::string& token, const std::string& name);
  nfvi::Router attach_interface(const std::string& token, const std::string& router, const std::string& network);
  nfvi::Router set_external_gateway(const std::string& token, const std::string& router);
  nfvi::FloatingIp allocate_floating_ip(const std::string& token);
  nfvi::FloatingIp associate_floating_ip(const std::string& token, const std::string& fip, const std::string& instance);
  nfvi::FloatingIp disassociate_floating_ip(const std::string& token, const std::string& fip);
  void release_floating_ip(const std::string& token, const std::string& fip);
  nfvi::Instance launch_instance(const std::string& token, nfvi::LaunchSpec spec);
  void terminate_instance(const std::string& token, const std::string& instance);
  void set_instance_locked(const std::string& token, const std::string& instance, bool locked);
  std::vector<nfvi::Instance> list_instances(const std::string& token) const;
  nfvi::Instance show_instance(const std::string& token, const std::string& instance) const;
  std::string read_guest_file(const std::string& token, const std::string& instance, const std::string& path) const;
  nfvi::Volume create_volume(const std::string& token, const std::string& name, std::int64_t size_gib);
  nfvi::Volume attach_volume(const std::string& token, const std::string& volume, const std::string& instance);
  nfvi::Volume detach_volume(const std::string& token, const std::string& volume);
  nfvi::Snapshot snapshot_volume(const std::string& token, const std::string& volume);
  void write_volume(const std::string& token, const std::string& instance, const std::string& volume,
                    std::string data);
  std::string read_volume(const std::string& token, const std::string& instance, const std::string& volume) const;
  void put_object(const std::string& token, const std::string& container, const std::string& name,
                  std::string payload);
  std::string get_object(const std::string& token, const std::string& container, const std::string& name) const;
  nfvi::Verdict check_connectivity(const std::string& token, const nfvi::Endpoint& src, const nfvi::Endpoint& dst,
                                   nfvi::Protocol protocol, int port) const;

  // Templates and stacks
  hot::ValidationReport validate_template(const std::string& token, std::string_view text) const;
  engine::Stack create_stack(const std::string& token, const std::string& name, std::string_view template_text,
                             const OrderedMap<Value>& parameters, const std::string& template_dir = {});
  engine::Stack delete_stack(const std::string& token, const std::string& stack);
  std::vector<engine::StackSummary> list_stacks(const std::string& token) const;
  engine::Stack show_stack(const std::string& token, const std::string& stack) const;
  nlohmann::ordered_json stack_detail(const std::string& token, const std::string& stack) const;
  engine::SignalAck signal(const std::string& token, const std::string& handle, std::string_view payload);

  // Telemetry and autonomic management
  void push_metric(const std::string& token, const std::string& resource, const std::string& metric, double value,
                   std::optional<Tick> tick = std::nullopt);
  autonomic::ScalingGroup create_group(const std::string& token, const std::string& name, const std::string& stack,
                                       const std::string& resource, int min_size, int max_size, int desired);
  autonomic::ScalingGroup show_group(const std::string& token, const std::string& group) const;
  autonomic::Alarm create_alarm(const std::string& token, autonomic::AlarmDef def);
  void configure_healer(const std::string& token, autonomic::HealerConfig config);
  void inject_fault(const std::string& token, const std::string& instance, autonomic::FaultKind kind,
                    std::optional<Tick> at = std::nullopt);
  Tick advance_clock(const std::string& token, Tick ticks);
  std::vector<Event> events(const std::string& token, std::size_t from = 0) const;

  // Moves time forward on behalf of a client that is blocking on a stack;
  // needs a token that may read that stack.
  Tick wait_tick(const std::string& token, const std::string& stack);

  // Direct access for tests and the scenario runner; bypasses authorization
  // and locking.
  const nfvi::Cloud& cloud() const noexcept { return cloud_; }
  nfvi::Cloud& cloud() noexcept { return cloud_; }
  const engine::Engine& engine() const noexcept { return engine_; }
  const autonomic::Autonomic& autonomic() const noexcept { return autonomic_; }
  const identity::IdentityService& identity() const noexcept { return identity_; }
  const EventLog& event_log() const noexcept { return log_; }

private:
  struct RestoreTag {};
  Orchestrator(RestoreTag, std::uint64_t seed, Tick token_ttl, std::string external_cidr, std::string signal_base_url,
               RuntimeConfig runtime);

  identity::Token require(const std::string& token, std::string_view action) const;

  mutable std::shared_mutex mutex_;
  Tick clock_ = 0;
  Rng rng_;
  EventLog log_;
  std::string external_cidr_;
  std::string signal_base_url_;
  identity::IdentityService identity_;
  nfvi::Cloud cloud_;
  engine::Engine engine_;
  autonomic::Autonomic autonomic_;
};

}  // namespace minimano
