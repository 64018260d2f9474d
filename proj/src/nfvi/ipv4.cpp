#include "minimano/nfvi/ipv4.hpp"

#include <charconv>

namespace minimano::nfvi {

std::optional<Ipv4> parse_ipv4(std::string_view text) {
  Ipv4 out = 0;
  const char* p = text.data();
  const char* end = p + text.size();
  for (int octet = 0; octet < 4; ++octet) {
    if (octet > 0) {
      if (p == end || *p != '.') return std::nullopt;
      ++p;
    }
    if (p == end || *p < '0' || *p > '9') return std::nullopt;
    unsigned value = 0;
    auto [next, ec] = std::from_chars(p, end, value);
    if (ec != std::errc{} || value > 255 || next - p > 3) return std::nullopt;
    if (next - p > 1 && *p == '0') return std::nullopt;  // no leading zeros
    out = (out << 8) | value;
    p = next;
  }
  if (p != end) return std::nullopt;
  return out;
}

std::string format_ipv4(Ipv4 address) {
  return std::to_string(address >> 24) + '.' + std::to_string((address >> 16) & 0xFF) + '.' +
         std::to_string((address >> 8) & 0xFF) + '.' + std::to_string(address & 0xFF);
}

std::string Ipv4Cidr::to_string() const { return format_ipv4(network) + '/' + std::to_string(prefix); }

std::optional<Ipv4Cidr> parse_cidr(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  auto address = parse_ipv4(text.substr(0, slash));
  if (!address) return std::nullopt;
  const auto prefix_text = text.substr(slash + 1);
  int prefix = -1;
  auto [next, ec] = std::from_chars(prefix_text.data(), prefix_text.data() + prefix_text.size(), prefix);
  if (ec != std::errc{} || next != prefix_text.data() + prefix_text.size() || prefix < 0 || prefix > 32)
    return std::nullopt;
  Ipv4Cidr cidr{*address, prefix};
  if ((*address & cidr.mask()) != *address) return std::nullopt;
  return cidr;
}

}  // namespace minimano::nfvi
