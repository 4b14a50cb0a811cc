#include "sqphase/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sqphase {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
}

double stdnormal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double stdnormal_sf(double x) { return 0.5 * std::erfc(x * kInvSqrt2); }

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

BigInt factorial(int n) {
  if (n < 0) throw std::invalid_argument("factorial: negative argument");
  BigInt r = 1;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

BigInt binomial(int n, int k) {
  if (n < 0) throw std::invalid_argument("binomial: negative n");
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  BigInt r = 1;
  for (int i = 1; i <= k; ++i) {
    r *= n - k + i;
    r /= i;  // exact: r is binomial(n-k+i, i) after each step
  }
  return r;
}

BigInt derangements(int n) {
  if (n < 0) throw std::invalid_argument("derangements: negative argument");
  const BigInt nf = factorial(n);
  BigInt r = 0;
  BigInt lf = 1;  // l! running value
  for (int l = 0; l <= n; ++l) {
    if (l > 0) lf *= l;
    const BigInt term = nf / lf;
    r += (l % 2 == 0) ? term : -term;
  }
  return r;
}

}  // namespace sqphase
