#include "sqphase/rng.hpp"

#include <cmath>
#include <numbers>

namespace sqphase {

namespace {

std::uint64_t finalize(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t mix64(std::uint64_t seed, std::uint64_t index) {
  return finalize(seed + (index + 1) * 0x9E3779B97F4A7C15ull);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t trial, StreamRole role)
    : key_(mix64(mix64(seed, trial), static_cast<std::uint64_t>(role))) {}

std::uint64_t RngStream::next_u64() { return mix64(key_, counter_++); }

double RngStream::uniform01() {
  // 53 mantissa bits, offset by half an ulp so 0 and 1 are unreachable.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double u1 = uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

std::uint64_t RngStream::below(std::uint64_t n) {
  // Rejection below the largest multiple of n.
  const std::uint64_t limit = n * (~std::uint64_t{0} / n);
  std::uint64_t v = next_u64();
  while (v >= limit) v = next_u64();
  return v % n;
}

}  // namespace sqphase
