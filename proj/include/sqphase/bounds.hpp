#pragma once

#include <span>
#include <utility>

#include "sqphase/common.hpp"
#include "sqphase/models.hpp"
#include "sqphase/structure.hpp"

namespace sqphase {

// Protocol risk lower bound for a query algorithm with budget T against the
// worst-case oracle: the three-way minimum of
//   1 - T * sup/|C| + min{2 xi, T/|C|, sup/|C|},   T/|C| + 1 - 2 xi,   1,
// where sup bounds the distinguishable-set size of any single query.
double risk_lower_bound(long T, const BigInt& sup_cq, const BigInt& class_size, double xi);

// Average of h over the m members closest to an anchor (complete shells plus
// a lexicographically filled partial shell).  Anchor-free by symmetry,
// computed exactly from shell counts; nonincreasing in m.
double combinatorial_quantity(const ProblemInstance& inst, const BigInt& m);

// Largest m whose combinatorial quantity still reaches 1 + log(1/xi)/n; an
// upper bound for the distinguishable-set size of every bounded query.
BigInt sup_distinguishable_numeric(const ProblemInstance& inst, long n, double xi);

// Chi-squared divergence of the uniform mixture of n-sample alternatives
// against the n-sample null, exactly: E[h(Z)^n] - 1 with Z the overlap of two
// independent uniform members.
double chi2_mixture_exact(const ProblemInstance& inst, long n);
// Same for the uniform mixture over an explicit subset of members.
double chi2_mixture_exact(const ProblemInstance& inst, std::span<const IndexSet> subset, long n);

// Risk lower bound from one chi-squared value: max(0, 1 - sqrt(chi2)).
double lecam_risk_lower_bound(double chi2);

// Shared parameter bundle for the closed-form calculators.
struct BoundParams {
  int d;
  int s;
  long n;
  double beta;
  double alpha = 1.0;
  double xi;
  double delta = 0.1;  // free exponent of the matching-class bound

  double tau2() const;       // log(1/xi) / n
  double zeta() const;       // d / (2 s^2)
  double gamma() const;      // zeta * log(1 + tau2/alpha^2) / (2 beta^2)
  double gamma_bar() const;  // spiked-model single-set ratio constant
  double delta_pca() const;  // from d / s^2 = d^{2 delta}
};

// Closed-form fractions sup|C(q)| / |C|, clamped to [0, 1].  Each throws
// HypothesisError when its finite-scale hypothesis fails.
enum class SparseRegimeSetting { SmallSupport, LargeSupport };
double closed_form_bound_sparse(const BoundParams& p, SparseRegimeSetting setting);
double closed_form_bound_matching(const BoundParams& p);
double closed_form_bound_spca(const BoundParams& p);

// Phase classification on the exponent scale: d -> infinity with
// s = d^{p_s}, beta = d^{-p_beta}, n = d^{p_n}, alpha = d^{-p_alpha}.
enum class ProblemFamily { SparseShiftedMean, MatchingShiftedMean, SparsePca };
enum class Regime { Tractable, IntractablePossible, Impossible, Boundary };

struct Exponents {
  double p_s = 0.0;
  double p_beta = 0.0;
  double p_n = 0.0;
  double p_alpha = 0.0;
};

Regime phase_classify(ProblemFamily family, const Exponents& e, double tol = 1e-12);

const char* regime_name(Regime r);
const char* family_name(ProblemFamily f);

// Weighted averages of a nonincreasing sequence under two weight profiles:
// b geometric with ratio kappa > 1, a growing at least as fast.  Returns
// (sum h a / sum a, sum h b / sum b); the first never exceeds the second.
std::pair<double, double> weighted_monotone_average(std::span<const double> a,
                                                    std::span<const double> b,
                                                    std::span<const double> h);

}  // namespace sqphase
