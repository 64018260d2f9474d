#include <algorithm>

#include "minimano/common/error.hpp"
#include "minimano/nfvi/cloud.hpp"

namespace minimano::nfvi {

namespace {

bool rule_matches(const SecurityRule& rule, Direction dir, Protocol proto, int port, const Instance* peer,
                  const std::string& peer_address) {
  if (rule.direction != dir) return false;
  if (rule.protocol != Protocol::any && rule.protocol != proto) return false;
  if ((rule.protocol == Protocol::tcp || rule.protocol == Protocol::udp) && (port < rule.port_min || port > rule.port_max))
    return false;
  if (!rule.remote_group.empty()) {
    if (!peer) return false;
    return std::find(peer->security_groups.begin(), peer->security_groups.end(), rule.remote_group) !=
           peer->security_groups.end();
  }
  const auto cidr = parse_cidr(rule.remote_cidr);
  const auto address = parse_ipv4(peer_address);
  return cidr && address && cidr->contains(*address);
}

bool share_group(const Instance& a, const Instance& b) {
  for (const auto& g : a.security_groups)
    if (std::find(b.security_groups.begin(), b.security_groups.end(), g) != b.security_groups.end()) return true;
  return false;
}

}  // namespace

Verdict Cloud::check_connectivity(const Endpoint& src, const Endpoint& dst, Protocol protocol, int port) const {
  const Instance* s = nullptr;
  const Instance* d = nullptr;
  if (!src.is_external()) {
    s = find_instance(src.instance);
    if (!s || s->state == InstanceState::deleted) throw Error(ErrorKind::not_found, "instance '" + src.instance + "' not found");
  }
  if (!dst.is_external()) {
    d = find_instance(dst.instance);
    if (!d || d->state == InstanceState::deleted) throw Error(ErrorKind::not_found, "instance '" + dst.instance + "' not found");
  }
  if (src.is_external() && !parse_ipv4(src.address))
    throw Error(ErrorKind::invalid_argument, "bad external address '" + src.address + "'");
  if (dst.is_external() && !parse_ipv4(dst.address))
    throw Error(ErrorKind::invalid_argument, "bad external address '" + dst.address + "'");

  Verdict v;
  if ((s && s->state != InstanceState::active) || (d && d->state != InstanceState::active) || (!s && !d)) {
    v.reason = "no-route";
    return v;
  }

  // Layer 3: find the path and the addresses each side observes.
  if (s && d) {
    bool found = false;
    for (int pass = 0; pass < 2 && !found; ++pass) {
      for (const auto& [dnet, daddr] : d->addresses) {
        for (const auto& [snet, saddr] : s->addresses) {
          const auto& sn = networks_.at(snet);
          const auto& dn = networks_.at(dnet);
          const bool ok = pass == 0 ? snet == dnet : (!sn.router.empty() && sn.router == dn.router);
          if (!ok) continue;
          v.source_address = saddr;
          v.destination_address = daddr;
          found = true;
          break;
        }
        if (found) break;
      }
    }
    if (!found) {
      v.reason = "no-route";
      return v;
    }
  } else if (d) {
    const FloatingIp* fip = floating_ip_of(d->id);
    if (!fip) {
      v.reason = "no-nat";
      return v;
    }
    if (!has_external_path(networks_.at(fip->fixed_network))) {
      v.reason = "no-route";
      return v;
    }
    v.source_address = src.address;
    v.destination_address = fip->fixed_address;
  } else {
    const Network* routed = nullptr;
    for (const auto& [net, _] : s->addresses)
      if (has_external_path(networks_.at(net))) {
        routed = &networks_.at(net);
        break;
      }
    if (!routed) {
      v.reason = "no-route";
      return v;
    }
    const FloatingIp* fip = floating_ip_of(s->id);
    v.source_address = fip ? fip->address : routers_.at(routed->router).gateway_address;
    v.destination_address = dst.address;
  }

  // Security groups: egress at the source, then ingress at the destination.
  auto allows = [&](const Instance& self, Direction dir, const Instance* peer, const std::string& peer_address) {
    if (peer && share_group(self, *peer)) return true;
    for (const auto& gid : self.security_groups) {
      const auto* g = security_groups_.find(gid);
      if (!g) continue;
      for (const auto& rule : g->rules)
        if (rule_matches(rule, dir, protocol, port, peer, peer_address)) return true;
    }
    return false;
  };
  if (s) {
    // The source sees the destination by the address it dials.
    const std::string dialed = d ? v.destination_address : dst.address;
    if (!allows(*s, Direction::egress, d, dialed)) {
      v.reason = "sg-blocked";
      return v;
    }
  }
  if (d && !allows(*d, Direction::ingress, s, v.source_address)) {
    v.reason = "sg-blocked";
    return v;
  }
  v.allowed = true;
  v.reason = "ok";
  return v;
}

}  // namespace minimano::nfvi
