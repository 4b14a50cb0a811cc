#pragma once

#include <span>

#include "sqphase/common.hpp"

namespace sqphase {

// Standard normal CDF and survival function, via erfc so both tails keep full
// relative accuracy.
double stdnormal_cdf(double x);
double stdnormal_sf(double x);

// log(sum(exp(v))) guarded against overflow; empty input yields -inf.
double log_sum_exp(std::span<const double> v);

BigInt factorial(int n);
BigInt binomial(int n, int k);
// Number of permutations of [n] without fixed points, by the alternating-sum
// identity evaluated in exact arithmetic.
BigInt derangements(int n);

}  // namespace sqphase
