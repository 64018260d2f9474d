#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace minimano::nfvi {

using Ipv4 = std::uint32_t;

std::optional<Ipv4> parse_ipv4(std::string_view text);
std::string format_ipv4(Ipv4 address);

struct Ipv4Cidr {
  Ipv4 network = 0;  // already masked
  int prefix = 0;

  Ipv4 mask() const noexcept { return prefix == 0 ? 0 : ~Ipv4{0} << (32 - prefix); }
  Ipv4 broadcast() const noexcept { return network | ~mask(); }
  bool contains(Ipv4 address) const noexcept { return (address & mask()) == network; }
  bool overlaps(const Ipv4Cidr& other) const noexcept {
    const int p = prefix < other.prefix ? prefix : other.prefix;
    const Ipv4 m = p == 0 ? 0 : ~Ipv4{0} << (32 - p);
    return (network & m) == (other.network & m);
  }
  std::string to_string() const;

  friend bool operator==(const Ipv4Cidr&, const Ipv4Cidr&) = default;
};

// Accepts "a.b.c.d/n" with host bits clear; nullopt otherwise.
std::optional<Ipv4Cidr> parse_cidr(std::string_view text);

}  // namespace minimano::nfvi
