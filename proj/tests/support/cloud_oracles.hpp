#pragma once

// Independent models of the simulated provider, used as test oracles.
// Nothing here reads the provider's internal bookkeeping to decide an answer:
// addresses and verdicts are derived from the topology description alone.

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "minimano/common/error.hpp"
#include "minimano/common/rng.hpp"
#include "minimano/nfvi/cloud.hpp"

namespace testsupport {

namespace nf = minimano::nfvi;

// ---------------------------------------------------------------- connectivity

enum class Attach { none, gw_router, plain_router };

struct RuleSpec {
  int group = 0;  // 0 = A, 1 = B
  nf::Direction dir = nf::Direction::ingress;
  nf::Protocol proto = nf::Protocol::any;
  int lo = 1, hi = 65535;
  std::string cidr;      // empty when remote_group is used
  int remote_group = -1;  // 0 = A, 1 = B
};

struct InstSpec {
  int net = 0;
  int group = 0;
  bool fip = false;
};

struct Topology {
  std::vector<Attach> nets;
  std::vector<InstSpec> insts;
  std::vector<RuleSpec> rules;

  std::string describe() const {
    std::ostringstream os;
    os << "nets[";
    for (auto a : nets) os << (a == Attach::none ? 'n' : a == Attach::gw_router ? 'G' : 'R');
    os << "] insts[";
    for (const auto& i : insts) os << " n" << i.net << (i.group ? 'B' : 'A') << (i.fip ? "+fip" : "");
    os << " ] rules[";
    for (const auto& r : rules)
      os << ' ' << (r.group ? 'B' : 'A') << ':' << nf::to_string(r.dir) << '/' << nf::to_string(r.proto) << '/'
         << r.lo << '-' << r.hi << '/' << (r.cidr.empty() ? std::string(r.remote_group ? "@B" : "@A") : r.cidr);
    os << " ]";
    return os.str();
  }
};

// Six candidate rules; rule sets are drawn from these, placed in group A or B.
inline std::vector<RuleSpec> rule_pool() {
  using D = nf::Direction;
  using P = nf::Protocol;
  return {
      {0, D::ingress, P::tcp, 22, 22, "0.0.0.0/0", -1},
      {0, D::ingress, P::icmp, 1, 65535, "10.0.0.0/16", -1},
      {0, D::ingress, P::tcp, 1, 1024, "", 0},
      {0, D::ingress, P::any, 1, 65535, "172.24.4.0/24", -1},
      {0, D::ingress, P::udp, 53, 53, "203.0.113.0/24", -1},
      {0, D::egress, P::tcp, 22, 22, "10.0.1.0/24", -1},
  };
}

struct Probe {
  nf::Protocol proto;
  int port;
};
inline std::vector<Probe> probes() {
  return {{nf::Protocol::tcp, 22}, {nf::Protocol::tcp, 80}, {nf::Protocol::udp, 53}, {nf::Protocol::icmp, 0}};
}
inline const std::array<std::string, 2> kExternalPeers = {"203.0.113.10", "172.24.4.200"};

struct Expected {
  bool allowed = false;
  std::string reason;
  std::string src, dst;
};

// Plain dotted-quad arithmetic, kept separate from the provider's helpers.
inline std::uint32_t dotted(const std::string& s) {
  std::uint32_t out = 0;
  int part = 0;
  for (char c : s + ".") {
    if (c == '.') {
      out = out << 8 | static_cast<std::uint32_t>(part);
      part = 0;
    } else {
      part = part * 10 + (c - '0');
    }
  }
  return out;
}
inline bool in_cidr(const std::string& address, const std::string& cidr) {
  const auto slash = cidr.find('/');
  const int bits = std::stoi(cidr.substr(slash + 1));
  const std::uint32_t mask = bits == 0 ? 0 : 0xFFFFFFFFu << (32 - bits);
  return (dotted(address) & mask) == (dotted(cidr.substr(0, slash)) & mask);
}

struct DerivedAddresses {
  std::vector<std::string> fixed;
  std::vector<std::optional<std::string>> fip;  // set when association succeeds
  std::string gateway;                           // router G on the external network
};

// Allocation policy: .1 is the gateway, .2 reserved, hosts from .3 in order.
// The gateway router takes the first external address, then floating IPs in
// request order (a request for an unroutable instance still consumes one).
inline DerivedAddresses derive_addresses(const Topology& t) {
  DerivedAddresses a;
  std::vector<int> next(t.nets.size(), 3);
  int ext_next = 3;
  a.gateway = "172.24.4." + std::to_string(ext_next++);
  for (const auto& i : t.insts) {
    a.fixed.push_back("10.0." + std::to_string(i.net) + "." + std::to_string(next[i.net]++));
    if (!i.fip) {
      a.fip.emplace_back();
      continue;
    }
    const std::string address = "172.24.4." + std::to_string(ext_next++);
    if (t.nets[i.net] == Attach::gw_router)
      a.fip.emplace_back(address);
    else
      a.fip.emplace_back();
  }
  return a;
}

// Endpoint index: 0..n-1 instances, n + k external peer k.
inline Expected oracle_verdict(const Topology& t, const DerivedAddresses& a, int src, int dst, Probe p) {
  const int n = static_cast<int>(t.insts.size());
  const bool s_ext = src >= n, d_ext = dst >= n;
  Expected e;
  auto router_of = [&](int net) { return t.nets[net]; };

  // Layer 3.
  if (!s_ext && !d_ext) {
    const int sn = t.insts[src].net, dn = t.insts[dst].net;
    const bool same_net = sn == dn;
    const bool same_router = router_of(sn) != Attach::none && router_of(sn) == router_of(dn);
    if (!same_net && !same_router) return {false, "no-route", "", ""};
    e.src = a.fixed[src];
    e.dst = a.fixed[dst];
  } else if (s_ext) {
    if (!a.fip[dst]) return {false, "no-nat", "", ""};
    e.src = kExternalPeers[src - n];
    e.dst = a.fixed[dst];
  } else {
    if (router_of(t.insts[src].net) != Attach::gw_router) return {false, "no-route", "", ""};
    e.src = a.fip[src] ? *a.fip[src] : a.gateway;
    e.dst = kExternalPeers[dst - n];
  }

  // Every group carries an implicit egress-anywhere rule.
  auto rules_of = [&](int group) {
    std::vector<RuleSpec> out{{group, nf::Direction::egress, nf::Protocol::any, 1, 65535, "0.0.0.0/0", -1}};
    for (const auto& r : t.rules)
      if (r.group == group) out.push_back(r);
    return out;
  };
  auto admits = [&](int self, nf::Direction dir, int peer, const std::string& peer_address) {
    if (peer >= 0 && peer < n && t.insts[peer].group == t.insts[self].group) return true;
    for (const auto& r : rules_of(t.insts[self].group)) {
      if (r.dir != dir) continue;
      if (r.proto != nf::Protocol::any && r.proto != p.proto) continue;
      const bool ported = r.proto == nf::Protocol::tcp || r.proto == nf::Protocol::udp;
      if (ported && (p.port < r.lo || p.port > r.hi)) continue;
      if (r.remote_group >= 0) {
        if (peer >= 0 && peer < n && t.insts[peer].group == r.remote_group) return true;
        continue;
      }
      if (in_cidr(peer_address, r.cidr)) return true;
    }
    return false;
  };
  if (!s_ext && !admits(src, nf::Direction::egress, dst, e.dst)) return {false, "sg-blocked", "", ""};
  if (!d_ext && !admits(dst, nf::Direction::ingress, src, e.src)) return {false, "sg-blocked", "", ""};
  e.allowed = true;
  e.reason = "ok";
  return e;
}

struct OracleReport {
  long topologies = 0;
  long checks = 0;
  long mismatches = 0;
  std::string first;
};

// Builds the topology in a fresh provider and compares every probe.
inline void check_topology(const Topology& t, OracleReport& rep) {
  minimano::Rng rng(7);
  minimano::Tick clock = 0;
  nf::Cloud cloud(rng, clock);
  cloud.add_host("host-1", {64, 131072, 1280});
  cloud.create_flavor("m1.tiny", {1, 512, 1});
  const std::string tenant = "t";
  cloud.register_image(tenant, "img", "base");
  cloud.create_security_group(tenant, "A");
  cloud.create_security_group(tenant, "B");
  cloud.create_router(tenant, "G");
  cloud.set_external_gateway(tenant, "G");
  cloud.create_router(tenant, "R");
  for (std::size_t i = 0; i < t.nets.size(); ++i) {
    const std::string name = "net" + std::to_string(i);
    cloud.create_network(tenant, name, "10.0." + std::to_string(i) + ".0/24");
    if (t.nets[i] == Attach::gw_router) cloud.attach_interface(tenant, "G", name);
    if (t.nets[i] == Attach::plain_router) cloud.attach_interface(tenant, "R", name);
  }
  for (const auto& r : t.rules) {
    nf::SecurityRule rule{r.dir, r.proto, r.lo, r.hi, {}, r.cidr};
    if (r.remote_group >= 0) rule.remote_group = r.remote_group ? "B" : "A";
    try {
      cloud.add_security_rule(tenant, r.group ? "B" : "A", rule);
    } catch (const minimano::Error&) {
      // Identical rule twice in the same group: the oracle treats it as one.
    }
  }
  const auto derived = derive_addresses(t);
  std::vector<std::string> ids;
  auto fail = [&](const std::string& what) {
    if (rep.mismatches++ == 0) rep.first = t.describe() + ": " + what;
  };
  for (std::size_t i = 0; i < t.insts.size(); ++i) {
    nf::LaunchSpec spec;
    spec.name = "vm" + std::to_string(i);
    spec.tenant = tenant;
    spec.image = "img";
    spec.flavor = "m1.tiny";
    spec.networks = {"net" + std::to_string(t.insts[i].net)};
    spec.security_groups = {t.insts[i].group ? "B" : "A"};
    const auto& inst = cloud.launch_instance(spec);
    ids.push_back(inst.id);
    if (inst.addresses.begin()->second != derived.fixed[i]) fail("fixed address " + inst.addresses.begin()->second);
    if (!t.insts[i].fip) continue;
    const auto fip = cloud.allocate_floating_ip(tenant).id;
    try {
      const auto& f = cloud.associate_floating_ip(tenant, fip, inst.id);
      if (!derived.fip[i] || f.address != *derived.fip[i]) fail("floating address " + f.address);
    } catch (const minimano::Error& e) {
      if (derived.fip[i] || e.kind() != minimano::ErrorKind::invalid_state) fail(std::string("associate: ") + e.what());
    }
  }
  ++rep.topologies;
  const int n = static_cast<int>(ids.size());
  const int endpoints = n + static_cast<int>(kExternalPeers.size());
  for (int s = 0; s < endpoints; ++s) {
    for (int d = 0; d < endpoints; ++d) {
      if (s == d || (s >= n && d >= n)) continue;
      const auto src = s < n ? nf::Endpoint::of_instance(ids[s]) : nf::Endpoint::external(kExternalPeers[s - n]);
      const auto dst = d < n ? nf::Endpoint::of_instance(ids[d]) : nf::Endpoint::external(kExternalPeers[d - n]);
      for (const auto& p : probes()) {
        ++rep.checks;
        const auto got = cloud.check_connectivity(src, dst, p.proto, p.port);
        const auto want = oracle_verdict(t, derived, s, d, p);
        bool same = got.allowed == want.allowed && got.reason == want.reason;
        if (same && want.allowed) same = got.source_address == want.src && got.destination_address == want.dst;
        if (!same) {
          std::ostringstream os;
          os << s << "->" << d << ' ' << nf::to_string(p.proto) << '/' << p.port << " got " << got.reason << ' '
             << got.source_address << "->" << got.destination_address << " want " << want.reason << ' ' << want.src
             << "->" << want.dst;
          fail(os.str());
        }
      }
    }
  }
}

// Sweep 1: every network layout (up to three networks, each unattached, on the
// gateway router or on a router without gateway) times every placement of up
// to three instances (network, group A or B, floating IP or not), under a
// fixed rule set. Sweep 2: every rule set of up to four rules drawn from the
// pool, in either group, on a set of representative layouts.
inline OracleReport run_connectivity_oracle() {
  OracleReport rep;
  const auto pool = rule_pool();
  const std::vector<RuleSpec> fixed_rules = {
      [&] { auto r = pool[0]; r.group = 0; return r; }(),
      [&] { auto r = pool[1]; r.group = 1; return r; }(),
      [&] { auto r = pool[2]; r.group = 1; return r; }(),
  };
  for (int nets = 1; nets <= 3; ++nets) {
    int layouts = 1;
    for (int i = 0; i < nets; ++i) layouts *= 3;
    for (int layout = 0; layout < layouts; ++layout) {
      Topology base;
      for (int i = 0, x = layout; i < nets; ++i, x /= 3) base.nets.push_back(static_cast<Attach>(x % 3));
      base.rules = fixed_rules;
      const int per_inst = nets * 4;
      for (int m = 1; m <= 3; ++m) {
        int combos = 1;
        for (int i = 0; i < m; ++i) combos *= per_inst;
        for (int c = 0; c < combos; ++c) {
          Topology t = base;
          for (int i = 0, x = c; i < m; ++i, x /= per_inst) {
            const int v = x % per_inst;
            t.insts.push_back(InstSpec{v / 4, (v / 2) % 2, v % 2 == 1});
          }
          check_topology(t, rep);
        }
      }
    }
  }

  std::vector<RuleSpec> items;
  for (const auto& r : pool)
    for (int g = 0; g < 2; ++g) {
      auto x = r;
      x.group = g;
      items.push_back(x);
    }
  const std::vector<Topology> layouts = {
      {{Attach::gw_router, Attach::gw_router, Attach::none}, {{0, 0, true}, {1, 1, false}, {0, 1, true}}, {}},
      {{Attach::gw_router, Attach::plain_router}, {{0, 1, true}, {1, 0, false}}, {}},
      {{Attach::plain_router, Attach::plain_router, Attach::gw_router}, {{0, 0, false}, {1, 1, false}, {2, 1, true}}, {}},
  };
  const int k = static_cast<int>(items.size());
  for (const auto& layout : layouts) {
    for (int mask = 0; mask < (1 << k); ++mask) {
      if (__builtin_popcount(static_cast<unsigned>(mask)) > 4) continue;
      Topology t = layout;
      for (int i = 0; i < k; ++i)
        if (mask & (1 << i)) t.rules.push_back(items[i]);
      check_topology(t, rep);
    }
  }
  return rep;
}

// ---------------------------------------------------------------- lifetime fuzz

struct LifetimeReport {
  int steps = 0;
  int succeeded = 0;
  std::map<std::string, int> ops;  // successful operations by kind
  std::vector<std::string> violations;
};

// Random interleavings of launch, terminate, crash, attach, detach, volume
// writes, floating IP allocate/associate/disassociate/release. After every
// step the provider is checked against a model kept here.
inline LifetimeReport run_lifetime_fuzz(std::uint64_t seed, int steps) {
  LifetimeReport rep;
  minimano::Rng rng(seed);
  minimano::Rng pick(seed ^ 0x9E3779B97F4A7C15ULL);
  minimano::Tick clock = 0;
  nf::Cloud cloud(rng, clock);
  const std::map<std::string, nf::Capacity> hosts = {{"host-1", {4, 8192, 60}}, {"host-2", {2, 4096, 40}}};
  for (const auto& [h, c] : hosts) cloud.add_host(h, c);
  const std::map<std::string, nf::Capacity> flavors = {
      {"m1.tiny", {1, 512, 1}}, {"m1.small", {1, 2048, 20}}, {"m1.medium", {2, 4096, 40}}};
  for (const auto& [f, c] : flavors) cloud.create_flavor(f, c);
  const std::string tenant = "t";
  cloud.register_image(tenant, "img", "base");
  cloud.create_router(tenant, "edge");
  cloud.set_external_gateway(tenant, "edge");
  cloud.create_network(tenant, "a", "10.1.0.0/28");
  cloud.create_network(tenant, "b", "10.2.0.0/28");
  cloud.attach_interface(tenant, "edge", "a");

  struct ModelInst {
    std::string id, flavor, host;
    std::vector<std::string> nets;
    bool active = true;
  };
  std::map<std::string, ModelInst> live;
  std::set<std::string> fips;
  std::map<std::string, std::string> payload;  // volume id -> last written data
  std::map<std::string, std::string> attached;  // volume id -> instance id
  for (int i = 0; i < 4; ++i) payload[cloud.create_volume(tenant, "v" + std::to_string(i), 1).id] = "";
  int serial = 0;

  auto any_of = [&](const auto& container) -> std::string {
    if (container.empty()) return "missing";
    auto it = container.begin();
    std::advance(it, static_cast<long>(pick.below(container.size())));
    if constexpr (requires { it->first; })
      return it->first;
    else
      return *it;
  };
  auto violation = [&](const std::string& what) { rep.violations.push_back("step " + std::to_string(rep.steps) + ": " + what); };

  for (int step = 0; step < steps; ++step) {
    rep.steps = step + 1;
    ++clock;
    const auto op = pick.below(10);
    std::string kind;
    try {
      switch (op) {
        case 0:
        case 1: {
          kind = "launch";
          nf::LaunchSpec spec;
          spec.name = "vm" + std::to_string(serial++);
          spec.tenant = tenant;
          spec.image = "img";
          spec.flavor = any_of(flavors);
          const auto shape = pick.below(3);
          if (shape != 1) spec.networks.push_back("a");
          if (shape != 0) spec.networks.push_back("b");
          const auto& inst = cloud.launch_instance(spec);
          ModelInst m{inst.id, spec.flavor, inst.host, {}, true};
          for (const auto& [net, _] : inst.addresses) m.nets.push_back(net);
          live[inst.id] = m;
          break;
        }
        case 2: {
          kind = "terminate";
          const auto id = any_of(live);
          cloud.terminate_instance(tenant, id);
          live.erase(id);
          for (auto it = attached.begin(); it != attached.end();)
            it = it->second == id ? attached.erase(it) : std::next(it);
          break;
        }
        case 3: {
          kind = "crash";
          const auto id = any_of(live);
          cloud.crash_instance(id, "fuzz");
          if (live.count(id)) live[id].active = false;
          break;
        }
        case 4: {
          kind = "attach";
          const auto vol = any_of(payload);
          const auto id = any_of(live);
          cloud.attach_volume(tenant, vol, id);
          attached[vol] = id;
          break;
        }
        case 5: {
          kind = "detach";
          const auto vol = any_of(payload);
          cloud.detach_volume(tenant, vol);
          attached.erase(vol);
          break;
        }
        case 6: {
          kind = "write";
          if (attached.empty()) throw minimano::Error(minimano::ErrorKind::invalid_state, "nothing attached");
          const auto vol = any_of(attached);
          const std::string data = "data-" + std::to_string(step);
          cloud.write_volume(tenant, attached[vol], vol, data);
          payload[vol] = data;
          break;
        }
        case 7: {
          if (pick.below(3) == 0 && !fips.empty()) {
            kind = "release";
            const auto f = any_of(fips);
            cloud.release_floating_ip(tenant, f);
            fips.erase(f);
          } else {
            kind = "allocate";
            fips.insert(cloud.allocate_floating_ip(tenant).id);
          }
          break;
        }
        case 8: {
          kind = "associate";
          cloud.associate_floating_ip(tenant, any_of(fips), any_of(live));
          break;
        }
        default: {
          kind = "disassociate";
          cloud.disassociate_floating_ip(tenant, any_of(fips));
          break;
        }
      }
      ++rep.succeeded;
      ++rep.ops[kind];
    } catch (const minimano::Error&) {
      // Rejected operations must leave the invariants intact; checked below.
    }

    // Fixed-IP uniqueness, and each live instance keeps its addresses.
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& [id, m] : live) {
      const auto* inst = cloud.find_instance(id);
      if (!inst || inst->state == nf::InstanceState::deleted) {
        violation("instance " + id + " vanished");
        continue;
      }
      if (inst->addresses.size() != m.nets.size()) violation("instance " + id + " address count changed");
      for (const auto& [net, address] : inst->addresses)
        if (!seen.insert({net, address}).second) violation("duplicate fixed address " + address);
    }
    // Terminated instances hold no address and their disks are gone.
    for (const auto& [id, inst] : cloud.all_instances())
      if (inst.state == nf::InstanceState::deleted && (!inst.disk.files.empty() || !inst.disk.base.empty()))
        violation("ephemeral disk of " + id + " survived termination");

    // Floating IPs change only through allocate and release.
    const auto census = cloud.census();
    if (census.at("floating_ips") != static_cast<std::int64_t>(fips.size())) violation("floating IP count drifted");
    std::set<std::string> fip_addresses;
    for (const auto& f : fips) {
      try {
        const auto& fip = cloud.floating_ip(tenant, f);
        fip_addresses.insert(fip.address);
        if (!fip.instance.empty() && !live.count(fip.instance)) violation("floating IP bound to dead instance");
      } catch (const minimano::Error&) {
        violation("floating IP " + f + " disappeared");
      }
    }
    if (fip_addresses.size() != fips.size()) violation("floating addresses collide");

    // Volume payloads persist across detach and termination.
    for (const auto& [vol, data] : payload) {
      const auto& v = cloud.volume(tenant, vol);
      if (v.payload != data) violation("volume " + vol + " payload changed");
      const auto it = attached.find(vol);
      const std::string expect = it == attached.end() ? "" : it->second;
      if (v.attached_to != expect) violation("volume " + vol + " attachment drifted");
    }

    // Host capacity bounds, recomputed from the model.
    std::map<std::string, nf::Capacity> demand;
    for (const auto& [_, m] : live) demand[m.host] += flavors.at(m.flavor);
    for (const auto& [h, cap] : hosts) {
      const auto d = demand[h];
      if (d.vcpus > cap.vcpus || d.ram_mib > cap.ram_mib || d.disk_gib > cap.disk_gib)
        violation("host " + h + " over capacity");
      if (!(cloud.used(h) == d)) violation("host " + h + " usage disagrees with model");
    }
  }
  return rep;
}

}  // namespace testsupport
