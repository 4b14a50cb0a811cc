#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace sqphase {

// Exact integer type for class cardinalities and shell counts.  Desk-scale
// dimensions already overflow 64 bits (e.g. central binomials near d = 64),
// so all counting is done exactly and converted to double only at the end.
using BigInt = boost::multiprecision::cpp_int;

inline constexpr std::uint64_t kDefaultEnumerationCap = 1'000'000;

// Raised when an operation would need to materialize more structures than the
// configured enumeration cap allows.
class CapExceededError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when the stated hypothesis of a closed-form bound does not hold at
// the requested parameter point, or a construction has no valid configuration.
class HypothesisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double to_double(const BigInt& v) { return v.convert_to<double>(); }

// num/den as a double; exact integer division is not required, the callers
// only consume ratios of counts.
inline double ratio(const BigInt& num, const BigInt& den) {
  return to_double(num) / to_double(den);
}

}  // namespace sqphase
