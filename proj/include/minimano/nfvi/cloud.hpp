#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "minimano/common/event_log.hpp"
#include "minimano/common/ordered_map.hpp"
#include "minimano/common/rng.hpp"
#include "minimano/nfvi/guest.hpp"
#include "minimano/nfvi/ipv4.hpp"

namespace minimano::nfvi {

struct Capacity {
  std::int64_t vcpus = 0;
  std::int64_t ram_mib = 0;
  std::int64_t disk_gib = 0;

  bool covers(const Capacity& need) const noexcept {
    return vcpus >= need.vcpus && ram_mib >= need.ram_mib && disk_gib >= need.disk_gib;
  }
  Capacity operator-(const Capacity& o) const noexcept {
    return {vcpus - o.vcpus, ram_mib - o.ram_mib, disk_gib - o.disk_gib};
  }
  Capacity& operator+=(const Capacity& o) noexcept {
    vcpus += o.vcpus, ram_mib += o.ram_mib, disk_gib += o.disk_gib;
    return *this;
  }
  friend bool operator==(const Capacity&, const Capacity&) = default;
};

struct Host {
  std::string id;
  Capacity capacity;
  std::set<std::string> image_cache;  // image ids already copied to this host

  friend bool operator==(const Host&, const Host&) = default;
};

struct ImageOptions {
  bool generic = true;     // no baked-in host identity
  bool cloud_init = true;  // runs user data at boot
  bool is_public = false;
};

struct Image {
  std::string id;
  std::string name;
  std::string owner;  // tenant id
  std::string payload;
  ImageOptions options;
  // Identity baked into a non-generic image; every instance inherits it.
  std::string baked_mac;
  std::string baked_host_key;

  friend bool operator==(const Image& a, const Image& b) {
    return a.id == b.id && a.name == b.name && a.owner == b.owner && a.payload == b.payload &&
           a.options.generic == b.options.generic && a.options.cloud_init == b.options.cloud_init &&
           a.options.is_public == b.options.is_public && a.baked_mac == b.baked_mac &&
           a.baked_host_key == b.baked_host_key;
  }
};

struct Flavor {
  std::string name;
  Capacity size;

  friend bool operator==(const Flavor&, const Flavor&) = default;
};

struct KeyPair {
  std::string name;
  std::string tenant;
  std::string public_key;
  std::string fingerprint;

  friend bool operator==(const KeyPair&, const KeyPair&) = default;
};

struct GeneratedKeyPair {
  KeyPair keypair;
  std::string private_key;  // returned once, never stored
};

enum class Direction { ingress, egress };
enum class Protocol { any, tcp, udp, icmp };

std::string_view to_string(Direction d) noexcept;
std::string_view to_string(Protocol p) noexcept;
Direction direction_from_string(std::string_view s);
Protocol protocol_from_string(std::string_view s);

struct SecurityRule {
  Direction direction = Direction::ingress;
  Protocol protocol = Protocol::any;
  int port_min = 1;
  int port_max = 65535;
  std::string remote_group;  // group id; empty when remote_cidr is used
  std::string remote_cidr;   // e.g. "0.0.0.0/0"

  friend bool operator==(const SecurityRule&, const SecurityRule&) = default;
};

struct SecurityGroup {
  std::string id;
  std::string name;
  std::string tenant;
  std::vector<SecurityRule> rules;

  friend bool operator==(const SecurityGroup&, const SecurityGroup&) = default;
};

enum class InstanceState { build, active, failed, deleted };

std::string_view to_string(InstanceState s) noexcept;
InstanceState instance_state_from_string(std::string_view s);

struct Instance {
  std::string id;
  std::string name;
  std::string tenant;
  std::string image_id;
  std::string flavor;
  std::string host;
  InstanceState state = InstanceState::build;
  std::string fault;                 // reason for FAILED
  OrderedMap<std::string> addresses;  // network id -> fixed address
  std::string key_name;
  std::vector<std::string> security_groups;  // group ids
  std::string user_data;
  EphemeralDisk disk;
  std::vector<std::string> authorized_keys;
  std::string mac;
  std::string host_key;
  std::string guest_log;
  bool locked = false;  // terminate fails while set
  Tick created_at = 0;

  friend bool operator==(const Instance&, const Instance&) = default;
};

struct Network {
  std::string id;
  std::string name;
  std::string tenant;
  Ipv4Cidr cidr;
  Ipv4 gateway = 0;
  std::set<Ipv4> allocated;
  std::string router;  // id of the router this subnet is attached to
  bool external = false;

  friend bool operator==(const Network&, const Network&) = default;
};

struct Router {
  std::string id;
  std::string name;
  std::string tenant;
  std::vector<std::string> interfaces;  // network ids
  bool external_gateway = false;
  std::string gateway_address;  // on the external network

  friend bool operator==(const Router&, const Router&) = default;
};

struct FloatingIp {
  std::string id;
  std::string tenant;
  std::string address;
  std::string instance;       // empty when unassociated
  std::string fixed_network;  // network carrying the translated address
  std::string fixed_address;

  friend bool operator==(const FloatingIp&, const FloatingIp&) = default;
};

struct Snapshot {
  std::string id;
  std::string payload;
  Tick created_at = 0;

  friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

struct Volume {
  std::string id;
  std::string name;
  std::string tenant;
  std::int64_t size_gib = 1;
  std::string payload;
  std::string attached_to;
  std::vector<Snapshot> snapshots;

  friend bool operator==(const Volume&, const Volume&) = default;
};

struct LaunchSpec {
  std::string name;
  std::string tenant;
  std::string image;   // name or id
  std::string flavor;  // name
  std::string key_name;
  std::vector<std::string> networks;         // names or ids
  std::vector<std::string> security_groups;  // names or ids; empty means "default"
  std::string user_data;

  friend bool operator==(const LaunchSpec&, const LaunchSpec&) = default;
};

nlohmann::ordered_json to_json(const LaunchSpec& spec);
LaunchSpec launch_spec_from_json(const nlohmann::ordered_json& json);

// One side of a connectivity check: an instance, or an address outside the cloud.
struct Endpoint {
  std::string instance;
  std::string address;

  bool is_external() const noexcept { return instance.empty(); }
  static Endpoint of_instance(std::string id) { return {std::move(id), {}}; }
  static Endpoint external(std::string address = "203.0.113.10") { return {{}, std::move(address)}; }
};

struct Verdict {
  bool allowed = false;
  std::string reason;               // ok | no-route | no-nat | sg-blocked
  std::string source_address;       // as seen by the destination
  std::string destination_address;  // after address translation

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

// Counts of every kind of live entity; used to check conservation.
using Census = std::map<std::string, std::int64_t>;

struct CloudConfig {
  std::string external_cidr = "172.24.4.0/24";
};

// In-process stand-in for compute, image, network, block storage and object
// storage services.
class Cloud {
public:
  Cloud(Rng& rng, const Tick& clock, CloudConfig config = {});
  Cloud(const Cloud&) = delete;
  Cloud& operator=(const Cloud&) = delete;

  void set_signal_sink(SignalSink sink) { sink_ = std::move(sink); }

  // Hosts
  const Host& add_host(std::string id, Capacity capacity);
  const OrderedMap<Host>& hosts() const noexcept { return hosts_; }
  Capacity used(const std::string& host) const;

  // Images and flavors
  const Image& register_image(const std::string& tenant, const std::string& name, std::string payload,
                              ImageOptions options = {});
  const Image& image(const std::string& tenant, std::string_view name_or_id) const;
  std::vector<const Image*> images(const std::string& tenant) const;
  const Flavor& create_flavor(const std::string& name, Capacity size);
  const Flavor& flavor(std::string_view name) const;
  const OrderedMap<Flavor>& flavors() const noexcept { return flavors_; }

  // Key pairs
  GeneratedKeyPair create_keypair(const std::string& tenant, const std::string& name);
  const KeyPair& import_keypair(const std::string& tenant, const std::string& name, const std::string& public_key);
  const KeyPair& keypair(const std::string& tenant, std::string_view name) const;

  // Security groups
  const SecurityGroup& create_security_group(const std::string& tenant, const std::string& name);
  const SecurityGroup& add_security_rule(const std::string& tenant, std::string_view group, SecurityRule rule);
  const SecurityGroup& security_group(const std::string& tenant, std::string_view name_or_id) const;
  const SecurityGroup& default_security_group(const std::string& tenant);

  // Networking
  const Network& create_network(const std::string& tenant, const std::string& name, std::string_view cidr,
                                std::string_view gateway = {});
  const Network& network(const std::string& tenant, std::string_view name_or_id) const;
  const Network& external_network() const;
  const Router& create_router(const std::string& tenant, const std::string& name);
  const Router& attach_interface(const std::string& tenant, std::string_view router, std::string_view network);
  const Router& set_external_gateway(const std::string& tenant, std::string_view router);
  const Router& router(const std::string& tenant, std::string_view name_or_id) const;
  const FloatingIp& allocate_floating_ip(const std::string& tenant);
  const FloatingIp& associate_floating_ip(const std::string& tenant, std::string_view fip, std::string_view instance);
  const FloatingIp& disassociate_floating_ip(const std::string& tenant, std::string_view fip);
  void release_floating_ip(const std::string& tenant, std::string_view fip);
  const FloatingIp& floating_ip(const std::string& tenant, std::string_view id_or_address) const;
  const FloatingIp* floating_ip_of(std::string_view instance) const;

  // Compute
  const Instance& launch_instance(const LaunchSpec& spec);
  void terminate_instance(const std::string& tenant, std::string_view id);
  void crash_instance(std::string_view id, const std::string& reason);
  void set_locked(std::string_view id, bool locked);
  const Instance* find_instance(std::string_view id) const;
  const Instance& instance(const std::string& tenant, std::string_view id) const;
  std::vector<const Instance*> instances(const std::string& tenant) const;
  const OrderedMap<Instance>& all_instances() const noexcept { return instances_; }
  std::string read_guest_file(const std::string& tenant, std::string_view instance, std::string_view path) const;

  // Block storage
  const Volume& create_volume(const std::string& tenant, const std::string& name, std::int64_t size_gib);
  const Volume& attach_volume(const std::string& tenant, std::string_view volume, std::string_view instance);
  const Volume& detach_volume(const std::string& tenant, std::string_view volume);
  const Snapshot& snapshot_volume(const std::string& tenant, std::string_view volume);
  void delete_volume(const std::string& tenant, std::string_view volume);
  void write_volume(const std::string& tenant, std::string_view instance, std::string_view volume, std::string data);
  std::string read_volume(const std::string& tenant, std::string_view instance, std::string_view volume) const;
  const Volume& volume(const std::string& tenant, std::string_view id) const;

  // Object storage (last writer wins, containers created on first put)
  void put_object(const std::string& tenant, const std::string& container, const std::string& name,
                  std::string payload);
  const std::string& get_object(const std::string& tenant, const std::string& container,
                                const std::string& name) const;

  Verdict check_connectivity(const Endpoint& src, const Endpoint& dst, Protocol protocol, int port) const;

  Census census() const;

  nlohmann::ordered_json to_json() const;
  void load(const nlohmann::ordered_json& json);

private:
  Instance& mutable_instance(const std::string& tenant, std::string_view id);
  Network& mutable_network(const std::string& tenant, std::string_view name_or_id);
  Router& mutable_router(const std::string& tenant, std::string_view name_or_id);
  FloatingIp& mutable_floating_ip(const std::string& tenant, std::string_view id_or_address);
  Volume& mutable_volume(const std::string& tenant, std::string_view id);
  SecurityGroup& mutable_security_group(const std::string& tenant, std::string_view name_or_id);
  Ipv4 allocate_address(Network& net);
  void release_instance_resources(Instance& inst);
  std::string random_mac();
  std::string random_host_key();
  bool has_external_path(const Network& net) const;

  Rng& rng_;
  const Tick& clock_;
  SignalSink sink_;
  OrderedMap<Host> hosts_;
  OrderedMap<Image> images_;
  OrderedMap<Flavor> flavors_;
  std::vector<KeyPair> keypairs_;
  OrderedMap<SecurityGroup> security_groups_;
  OrderedMap<Network> networks_;  // includes the external network
  OrderedMap<Router> routers_;
  OrderedMap<FloatingIp> floating_ips_;
  OrderedMap<Instance> instances_;
  OrderedMap<Volume> volumes_;
  std::map<std::string, std::map<std::string, std::map<std::string, std::string>>> objects_;
  std::string external_network_id_;
};

}  // namespace minimano::nfvi
