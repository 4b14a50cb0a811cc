#pragma once

#include <cstdint>

namespace sqphase {

// Purpose a stream serves inside one trial.  Separate roles get disjoint
// streams so adding draws to one role never perturbs another.
enum class StreamRole : std::uint64_t {
  Data = 1,
  PlantedDraw = 2,
  AdversaryCommit = 3,
  McFallback = 4,
  Generic = 5,
};

// splitmix64 evaluated as a pure function of (seed, index).
std::uint64_t mix64(std::uint64_t seed, std::uint64_t index);

// Counter-based stream keyed by (seed, trial, role).  Output depends only on
// the key and how many values were drawn, never on scheduling, so runs are
// reproducible for any worker count.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t trial, StreamRole role);

  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1).
  double uniform01();
  // Standard normal via Box-Muller; generated in pairs, one cached.
  double normal();
  // Uniform integer in [0, n), unbiased.
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sqphase
