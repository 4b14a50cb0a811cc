#include "sqphase/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sqphase {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

void check_xi(double xi) {
  if (!(xi > 0.0 && xi < 0.25)) throw std::invalid_argument("xi must lie in (0, 1/4)");
}

}  // namespace

double risk_lower_bound(long T, const BigInt& sup_cq, const BigInt& class_size, double xi) {
  if (T < 0) throw std::invalid_argument("risk_lower_bound: T must be >= 0");
  if (sup_cq < 0 || class_size < 1) throw std::invalid_argument("risk_lower_bound: bad counts");
  check_xi(xi);
  const double sup_frac = ratio(sup_cq, class_size);
  const double t_frac = static_cast<double>(T) / to_double(class_size);
  const double first = 1.0 - T * sup_frac + std::min({2.0 * xi, t_frac, sup_frac});
  const double second = t_frac + 1.0 - 2.0 * xi;
  return std::min({first, second, 1.0});
}

double combinatorial_quantity(const ProblemInstance& inst, const BigInt& m) {
  const StructureClass& cls = inst.cls;
  const ShellTable table = shell_counts(cls);
  if (m < 1 || m > table.total)
    throw std::invalid_argument("combinatorial_quantity: m outside [1, |C|]");
  BigInt prefix = 0;
  double weighted = 0.0;
  for (int j = 0; j <= cls.s; ++j) {
    const double h = h_value(inst, cls.s - j);
    if (prefix + table.counts[j] >= m) {
      weighted += to_double(m - prefix) * h;  // partial shell
      break;
    }
    weighted += to_double(table.counts[j]) * h;
    prefix += table.counts[j];
  }
  return weighted / to_double(m);
}

BigInt sup_distinguishable_numeric(const ProblemInstance& inst, long n, double xi) {
  if (n < 1) throw std::invalid_argument("sup_distinguishable_numeric: n must be >= 1");
  check_xi(xi);
  const double threshold = 1.0 + std::log(1.0 / xi) / static_cast<double>(n);
  const BigInt total = inst.cls.cardinality();
  const auto holds = [&](const BigInt& m) { return combinatorial_quantity(inst, m) >= threshold; };
  if (!holds(1)) return 0;
  if (holds(total)) return total;
  BigInt lo = 1, hi = total;  // holds(lo), !holds(hi)
  while (hi - lo > 1) {
    const BigInt mid = (lo + hi) / 2;
    (holds(mid) ? lo : hi) = mid;
  }
  return lo;
}

double chi2_mixture_exact(const ProblemInstance& inst, long n) {
  if (n < 1) throw std::invalid_argument("chi2_mixture_exact: n must be >= 1");
  const std::vector<double> p = overlap_distribution(inst.cls);
  double acc = 0.0;
  for (int z = 0; z <= inst.cls.s; ++z)
    if (p[z] > 0.0) acc += p[z] * std::pow(h_value(inst, z), static_cast<double>(n));
  return acc - 1.0;
}

double chi2_mixture_exact(const ProblemInstance& inst, std::span<const IndexSet> subset, long n) {
  if (n < 1) throw std::invalid_argument("chi2_mixture_exact: n must be >= 1");
  if (subset.empty()) throw std::invalid_argument("chi2_mixture_exact: empty subset");
  double acc = 0.0;
  for (const IndexSet& a : subset)
    for (const IndexSet& b : subset)
      acc += std::pow(h_value(inst, overlap(a, b)), static_cast<double>(n));
  const double k = static_cast<double>(subset.size());
  return acc / (k * k) - 1.0;
}

double lecam_risk_lower_bound(double chi2) {
  if (!(chi2 >= 0.0)) throw std::invalid_argument("lecam_risk_lower_bound: chi2 must be >= 0");
  return std::max(0.0, 1.0 - std::sqrt(chi2));
}

double BoundParams::tau2() const { return std::log(1.0 / xi) / static_cast<double>(n); }

double BoundParams::zeta() const {
  return static_cast<double>(d) / (2.0 * static_cast<double>(s) * s);
}

double BoundParams::gamma() const {
  return zeta() * std::log1p(tau2() / (alpha * alpha)) / (2.0 * beta * beta);
}

double BoundParams::gamma_bar() const {
  const double s2 = static_cast<double>(s) * s;
  const double arg = 1.0 - (1.0 + 2.0 * s) * beta * beta / (s2 * (1.0 - beta * beta));
  if (!(arg > 0.0)) throw HypothesisError("gamma_bar undefined: signal too strong for this support");
  return 1.0 / std::sqrt(arg);
}

double BoundParams::delta_pca() const {
  if (s * s >= d) throw HypothesisError("spiked bound needs s^2 < d");
  return std::log(static_cast<double>(d) / (static_cast<double>(s) * s)) /
         (2.0 * std::log(static_cast<double>(d)));
}

double closed_form_bound_sparse(const BoundParams& p, SparseRegimeSetting setting) {
  check_xi(p.xi);
  if (!(p.beta > 0.0 && p.alpha > 0.0)) throw std::invalid_argument("need beta > 0 and alpha > 0");
  const double growth = std::log1p(p.tau2() / (p.alpha * p.alpha)) / (p.beta * p.beta);
  if (setting == SparseRegimeSetting::SmallSupport) {
    // Shell counts decay by at least zeta^{-1} per level; the leading factor 2
    // absorbs the geometric tail once zeta >= 2.
    const double z = p.zeta();
    if (!(z >= 2.0)) throw HypothesisError("small-support bound needs d >= 4 s^2");
    return clamp01(2.0 * std::exp(-std::log(z) * (growth - 2.0)));
  }
  const double g = p.gamma();
  if (!(g >= 2.0)) throw HypothesisError("large-support bound needs gamma >= 2");
  return clamp01(2.0 * std::exp(-std::log(g) * (2.0 * g * p.s * p.s / p.d - 1.0)));
}

double closed_form_bound_matching(const BoundParams& p) {
  check_xi(p.xi);
  if (!(p.beta > 0.0 && p.alpha > 0.0)) throw std::invalid_argument("need beta > 0 and alpha > 0");
  if (!(p.delta > 0.0)) throw std::invalid_argument("need delta > 0");
  const double growth = std::log1p(p.tau2() / (p.alpha * p.alpha)) / (p.beta * p.beta);
  const double d_delta = std::pow(static_cast<double>(p.d), p.delta);
  if (!(growth >= 1.5 * d_delta + 1.0))
    throw HypothesisError("matching bound hypothesis fails: signal too strong for this delta");
  return clamp01(2.0 * std::exp(-p.delta * std::log(static_cast<double>(p.d)) * 0.375 * d_delta));
}

double closed_form_bound_spca(const BoundParams& p) {
  check_xi(p.xi);
  if (!(p.beta > 0.0 && p.beta < 1.0)) throw std::invalid_argument("spiked bound needs beta in (0, 1)");
  const double delta = p.delta_pca();
  const double gb = p.gamma_bar();
  const double d_neg = std::pow(static_cast<double>(p.d), -delta);
  const double lift = 2.0 * d_neg * (gb - 1.0);
  if (!(lift <= p.tau2()))
    throw HypothesisError("spiked bound precondition fails: 2 d^-delta (gamma_bar - 1) > tau^2");
  const double r = (1.0 + p.tau2()) / (1.0 + lift);
  const double bracket = 1.0 - 1.0 / (r * r);
  const double expo = p.s / p.beta * std::sqrt(bracket) - 1.0;
  return clamp01(2.0 * std::exp(-delta * std::log(static_cast<double>(p.d)) * expo));
}

namespace {

double positive_part(double x) { return x > 0.0 ? x : 0.0; }

Regime classify_shifted(const Exponents& e, bool matching, double tol) {
  const double p_s = matching ? 0.5 : e.p_s;
  const double spectral = matching ? 0.0 : positive_part(2.0 * p_s - 1.0);
  const double a = positive_part(e.p_n - 2.0 * e.p_alpha) + spectral - 2.0 * e.p_beta;
  if (std::fabs(a) <= tol) return Regime::Boundary;
  if (a > 0.0) return Regime::Tractable;
  const double b1 = p_s - 2.0 * e.p_beta;
  const double b2 = e.p_n - e.p_alpha - 2.0 * e.p_beta;
  if (std::fabs(b1) <= tol || std::fabs(b2) <= tol) return Regime::Boundary;
  if (b1 < 0.0 || b2 < 0.0) return Regime::Impossible;
  return Regime::IntractablePossible;
}

Regime classify_pca(const Exponents& e, double tol) {
  const double u = -e.p_beta;
  const double poly_edge = e.p_s - e.p_n / 2.0;
  const double info_edge = (e.p_s - e.p_n) / 2.0;
  if (std::fabs(u - poly_edge) <= tol || std::fabs(u - info_edge) <= tol) return Regime::Boundary;
  if (u > poly_edge) return Regime::Tractable;
  if (u < info_edge) return Regime::Impossible;
  return Regime::IntractablePossible;
}

}  // namespace

Regime phase_classify(ProblemFamily family, const Exponents& e, double tol) {
  switch (family) {
    case ProblemFamily::SparseShiftedMean:
      return classify_shifted(e, false, tol);
    case ProblemFamily::MatchingShiftedMean:
      return classify_shifted(e, true, tol);
    case ProblemFamily::SparsePca:
      return classify_pca(e, tol);
  }
  throw std::logic_error("unknown problem family");
}

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::Tractable:
      return "tractable";
    case Regime::IntractablePossible:
      return "intractable_possible";
    case Regime::Impossible:
      return "impossible";
    case Regime::Boundary:
      return "boundary";
  }
  return "?";
}

const char* family_name(ProblemFamily f) {
  switch (f) {
    case ProblemFamily::SparseShiftedMean:
      return "sparse-sm";
    case ProblemFamily::MatchingShiftedMean:
      return "matching-sm";
    case ProblemFamily::SparsePca:
      return "spca";
  }
  return "?";
}

std::pair<double, double> weighted_monotone_average(std::span<const double> a,
                                                    std::span<const double> b,
                                                    std::span<const double> h) {
  const std::size_t k = h.size();
  if (k < 2 || a.size() != k || b.size() != k)
    throw std::invalid_argument("weighted_monotone_average: need equal lengths >= 2");
  for (std::size_t i = 0; i < k; ++i)
    if (!(a[i] > 0.0 && b[i] > 0.0))
      throw std::invalid_argument("weighted_monotone_average: weights must be positive");
  const double kappa = b[1] / b[0];
  if (!(kappa > 1.0)) throw std::invalid_argument("weighted_monotone_average: need ratio > 1");
  for (std::size_t i = 0; i + 1 < k; ++i) {
    if (std::fabs(b[i + 1] / b[i] - kappa) > 1e-9 * kappa)
      throw std::invalid_argument("weighted_monotone_average: b must be geometric");
    if (a[i + 1] / a[i] < kappa * (1.0 - 1e-12))
      throw std::invalid_argument("weighted_monotone_average: a must grow at least as fast as b");
    if (h[i + 1] - h[i] > 1e-12 * std::max(1.0, std::fabs(h[i])))
      throw std::invalid_argument("weighted_monotone_average: h must be nonincreasing");
  }
  double ha = 0.0, sa = 0.0, hb = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    ha += h[i] * a[i];
    sa += a[i];
    hb += h[i] * b[i];
    sb += b[i];
  }
  return {ha / sa, hb / sb};
}

}  // namespace sqphase
