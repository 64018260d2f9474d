#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

namespace minimano {

// Seeded, serializable random stream. Only the raw mt19937_64 output is
// used (std distributions are not portable across standard libraries), so a
// given seed yields the same UUIDs, tokens and random strings everywhere.
class Rng {
public:
  Rng() : Rng(std::random_device{}()) {}
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  // Uniform double in [0, 1).
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::string hex(std::size_t chars) {
    static constexpr std::string_view digits = "0123456789abcdef";
    std::string out;
    out.reserve(chars);
    for (std::size_t i = 0; i < chars; ++i) out.push_back(digits[below(16)]);
    return out;
  }

  // RFC 4122 version-4 UUID in canonical 8-4-4-4-12 form.
  std::string uuid4() {
    std::uint64_t hi = engine_();
    std::uint64_t lo = engine_();
    hi = (hi & 0xFFFFFFFFFFFF0FFFULL) | 0x0000000000004000ULL;
    lo = (lo & 0x3FFFFFFFFFFFFFFFULL) | 0x8000000000000000ULL;
    static constexpr std::string_view digits = "0123456789abcdef";
    std::string out;
    out.reserve(36);
    auto put = [&](std::uint64_t word, int from_nibble, int count) {
      for (int i = from_nibble; i < from_nibble + count; ++i)
        out.push_back(digits[(word >> (60 - 4 * i)) & 0xF]);
    };
    put(hi, 0, 8);
    out.push_back('-');
    put(hi, 8, 4);
    out.push_back('-');
    put(hi, 12, 4);
    out.push_back('-');
    put(lo, 0, 4);
    out.push_back('-');
    put(lo, 4, 12);
    return out;
  }

  std::string state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }

  void restore(const std::string& state) {
    std::istringstream is(state);
    is >> engine_;
  }

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

private:
  std::mt19937_64 engine_;
};

}  // namespace minimano
