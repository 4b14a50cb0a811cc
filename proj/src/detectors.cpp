#include "sqphase/detectors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "sqphase/stats.hpp"

namespace sqphase {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_pca(DetectorSetting s) {
  return s == DetectorSetting::SPCA1 || s == DetectorSetting::SPCA2;
}

bool is_matching_setting(DetectorSetting s) {
  return s == DetectorSetting::PM_SM1 || s == DetectorSetting::PM_SM3 ||
         s == DetectorSetting::PM_SM4a;
}

// log(alpha * exp(e) + 1 - alpha), stable for any sign of e.
double log_mix(double alpha, double e) {
  if (alpha >= 1.0) return e;
  if (alpha <= 0.0) return 0.0;
  if (e > 0.0) return std::log(alpha) + e + std::log1p((1.0 - alpha) / alpha * std::exp(-e));
  return std::log1p(alpha * std::expm1(e));
}

std::vector<double> column_sums(const DataMatrix& data) {
  std::vector<double> w(data.d, 0.0);
  for (int i = 0; i < data.n; ++i) {
    const auto row = data.row(i);
    for (int j = 0; j < data.d; ++j) w[j] += row[j];
  }
  return w;
}

// log of the class average of exp(beta * sum_{j in S} w_j).
double log_class_average(const ProblemInstance& inst, const std::vector<double>& w,
                         std::uint64_t cap) {
  std::vector<double> expo;
  for (const IndexSet& set : enumerate_class(inst.cls, cap)) {
    double t = 0.0;
    for (int j : set.indices) t += w[j - 1];
    expo.push_back(inst.beta * t);
  }
  return log_sum_exp(expo) - std::log(to_double(inst.cls.cardinality()));
}

// log perm(exp(beta * M)) through row max extraction so every scaled entry
// is <= 1 and the permanent itself cannot overflow.
double log_permanent_exp(double beta, const std::vector<std::vector<double>>& m) {
  const std::size_t r = m.size();
  double shift = 0.0;
  std::vector<std::vector<double>> scaled(r, std::vector<double>(r));
  for (std::size_t k = 0; k < r; ++k) {
    const double rmax = *std::max_element(m[k].begin(), m[k].end());
    shift += beta * rmax;
    for (std::size_t j = 0; j < r; ++j) scaled[k][j] = std::exp(beta * (m[k][j] - rmax));
  }
  return shift + std::log(permanent(scaled));
}

std::vector<std::vector<double>> edge_matrix(const std::vector<double>& w, int r) {
  std::vector<std::vector<double>> m(r, std::vector<double>(r));
  for (int k = 1; k <= r; ++k)
    for (int kp = 1; kp <= r; ++kp) m[k - 1][kp - 1] = w[(k - 1) * r + kp - 1];
  return m;
}

}  // namespace

const char* detector_name(DetectorSetting s) {
  switch (s) {
    case DetectorSetting::SM1: return "SM1";
    case DetectorSetting::SM2: return "SM2";
    case DetectorSetting::SM3: return "SM3";
    case DetectorSetting::SM4a: return "SM4a";
    case DetectorSetting::SM4b: return "SM4b";
    case DetectorSetting::PM_SM1: return "PM_SM1";
    case DetectorSetting::PM_SM3: return "PM_SM3";
    case DetectorSetting::PM_SM4a: return "PM_SM4a";
    case DetectorSetting::SPCA1: return "SPCA1";
    case DetectorSetting::SPCA2: return "SPCA2";
    case DetectorSetting::LR: return "LR";
  }
  return "?";
}

DetectorSetting detector_from_name(const std::string& name) {
  for (DetectorSetting s :
       {DetectorSetting::SM1, DetectorSetting::SM2, DetectorSetting::SM3, DetectorSetting::SM4a,
        DetectorSetting::SM4b, DetectorSetting::PM_SM1, DetectorSetting::PM_SM3,
        DetectorSetting::PM_SM4a, DetectorSetting::SPCA1, DetectorSetting::SPCA2,
        DetectorSetting::LR})
    if (name == detector_name(s)) return s;
  throw std::invalid_argument("unknown detector setting: " + name);
}

Detector Detector::make(DetectorSetting setting, ProblemInstance instance, long n,
                        double margin_constant, long budget_limit, std::uint64_t cap) {
  if (n < 1) throw std::invalid_argument("detector needs n >= 1");
  if (setting != DetectorSetting::LR) {
    const bool pca_model = instance.model == ModelKind::SpikedCovariance;
    if (is_pca(setting) != pca_model)
      throw std::invalid_argument("detector setting does not match the instance model");
  }
  if (is_matching_setting(setting) && instance.cls.kind != ClassKind::PerfectMatching)
    throw std::invalid_argument("PM detectors need a matching class");
  if ((setting == DetectorSetting::SM4a || setting == DetectorSetting::SM4b ||
       setting == DetectorSetting::SPCA2) &&
      instance.cls.kind != ClassKind::SparseSupport)
    throw std::invalid_argument("subset-battery detectors need a sparse-support class");
  if (setting == DetectorSetting::SM4b && !(margin_constant > 0.0))
    throw std::invalid_argument("SM4b needs a positive reduced-support constant");
  return {setting, std::move(instance), n, margin_constant, budget_limit, cap};
}

int Detector::reduced_support() const {
  const double raw =
      2.0 * static_cast<double>(n) * instance.alpha / (margin_constant * std::log(instance.cls.d));
  const int ceiling = static_cast<int>(std::ceil(raw));
  return std::clamp(ceiling, 1, instance.cls.s);
}

std::vector<Query> Detector::build_schedule() const {
  const int d = instance.cls.d;
  const int s = instance.cls.s;
  const double beta = instance.beta;
  std::vector<Query> qs;
  switch (setting) {
    case DetectorSetting::SM1:
    case DetectorSetting::PM_SM1:
      qs.push_back(Query::scaled_sum_threshold(std::sqrt(2.0 * std::log(static_cast<double>(n)))));
      break;
    case DetectorSetting::SM2:
      for (int t = 1; t <= d; ++t) qs.push_back(Query::coordinate_threshold(t, beta / 2.0));
      break;
    case DetectorSetting::SM3:
    case DetectorSetting::PM_SM3: {
      std::vector<int> all(d);
      std::iota(all.begin(), all.end(), 1);
      qs.push_back(Query::subset_sum_threshold(std::move(all), beta * s / 2.0));
      break;
    }
    case DetectorSetting::SM4a:
    case DetectorSetting::PM_SM4a:
      for (const IndexSet& set : enumerate_class(instance.cls, cap))
        qs.push_back(Query::subset_sum_threshold(set.indices, beta * s / 2.0));
      break;
    case DetectorSetting::SM4b: {
      const int sbar = reduced_support();
      for (const IndexSet& set : enumerate_class(StructureClass::sparse(d, sbar), cap))
        qs.push_back(Query::subset_sum_threshold(set.indices, beta * sbar / 2.0));
      break;
    }
    case DetectorSetting::SPCA1:
      for (int t = 1; t <= d; ++t)
        qs.push_back(Query::coordinate_square_threshold(t, 1.0 + beta / s));
      break;
    case DetectorSetting::SPCA2:
      for (const IndexSet& set : enumerate_class(instance.cls, cap))
        qs.push_back(Query::subset_square_threshold(set.indices, 1.0 + beta));
      break;
    case DetectorSetting::LR:
      break;
  }
  if (budget_limit >= 0 && static_cast<long>(qs.size()) > budget_limit)
    qs.resize(static_cast<std::size_t>(budget_limit));
  return qs;
}

double Detector::threshold() const {
  const int d = instance.cls.d;
  const int s = instance.cls.s;
  const double beta = instance.beta;
  const double alpha = instance.alpha;
  switch (setting) {
    case DetectorSetting::SM1:
    case DetectorSetting::PM_SM1:
      return stdnormal_sf(std::sqrt(2.0 * std::log(static_cast<double>(n)))) + alpha / 8.0;
    case DetectorSetting::SM2:
      return stdnormal_sf(beta / 2.0) + alpha * beta / (4.0 * kPi);
    case DetectorSetting::SM3:
    case DetectorSetting::PM_SM3: {
      const double root_d = std::sqrt(static_cast<double>(d));
      return stdnormal_sf(beta * s / (2.0 * root_d)) + alpha * beta * s / (4.0 * kPi * root_d);
    }
    case DetectorSetting::SM4a:
    case DetectorSetting::PM_SM4a:
      return stdnormal_sf(beta * std::sqrt(static_cast<double>(s)) / 2.0) + alpha / 4.0;
    case DetectorSetting::SM4b:
      return stdnormal_sf(beta * std::sqrt(static_cast<double>(reduced_support())) / 2.0) +
             alpha / 4.0;
    case DetectorSetting::SPCA1:
      return 2.0 * stdnormal_sf(std::sqrt(1.0 + beta / s)) + beta / (8.0 * kPi * s);
    case DetectorSetting::SPCA2:
      return 2.0 * stdnormal_sf(std::sqrt(1.0 + beta)) + beta / (8.0 * kPi);
    case DetectorSetting::LR:
      return 0.0;  // log scale
  }
  throw std::logic_error("unknown detector setting");
}

double Detector::eta() const {
  const int d = instance.cls.d;
  switch (setting) {
    case DetectorSetting::SM1:
    case DetectorSetting::PM_SM1:
    case DetectorSetting::SM3:
    case DetectorSetting::PM_SM3:
    case DetectorSetting::LR:
      return 0.0;
    case DetectorSetting::SM2:
    case DetectorSetting::SPCA1:
      return std::log(static_cast<double>(d));
    case DetectorSetting::SM4a:
    case DetectorSetting::SPCA2:
      return std::log(to_double(binomial(d, instance.cls.s)));
    case DetectorSetting::SM4b:
      return std::log(to_double(binomial(d, reduced_support())));
    case DetectorSetting::PM_SM4a:
      return std::log(to_double(factorial(instance.cls.s)));
  }
  throw std::logic_error("unknown detector setting");
}

long Detector::budget() const {
  if (setting == DetectorSetting::LR) return 0;
  BigInt full = 0;
  switch (setting) {
    case DetectorSetting::SM1:
    case DetectorSetting::PM_SM1:
    case DetectorSetting::SM3:
    case DetectorSetting::PM_SM3:
      full = 1;
      break;
    case DetectorSetting::SM2:
    case DetectorSetting::SPCA1:
      full = instance.cls.d;
      break;
    case DetectorSetting::SM4a:
    case DetectorSetting::SPCA2:
      full = binomial(instance.cls.d, instance.cls.s);
      break;
    case DetectorSetting::SM4b:
      full = binomial(instance.cls.d, reduced_support());
      break;
    case DetectorSetting::PM_SM4a:
      full = factorial(instance.cls.s);
      break;
    case DetectorSetting::LR:
      break;
  }
  if (budget_limit >= 0 && full > budget_limit) full = budget_limit;
  if (full > BigInt(cap)) throw CapExceededError("detector schedule exceeds the enumeration cap");
  return full.convert_to<long>();
}

Verdict Detector::run(OracleSession& oracle) const {
  if (setting == DetectorSetting::LR)
    throw std::invalid_argument("LR detector consumes raw data, not oracle responses");
  double stat = -std::numeric_limits<double>::infinity();
  for (const Query& q : build_schedule()) stat = std::max(stat, oracle.respond(q));
  const double thr = threshold();
  return {stat >= thr, stat, thr};
}

Verdict Detector::run_on_data(const DataMatrix& data) const {
  if (setting == DetectorSetting::LR) {
    const double stat = log_lr_statistic(data, instance, cap);
    return {stat >= 0.0, stat, 0.0};
  }
  DataOracleSession session(data);
  return run(session);
}

double log_lr_statistic(const DataMatrix& data, const ProblemInstance& inst, std::uint64_t cap) {
  if (data.d != inst.cls.d) throw std::invalid_argument("lr_statistic: dimension mismatch");
  const double beta = inst.beta;
  const double s = inst.cls.s;
  std::vector<double> expo;
  if (inst.model == ModelKind::SpikedCovariance) {
    const double scale = beta / (2.0 * (1.0 + beta) * s);
    for (const IndexSet& set : enumerate_class(inst.cls, cap)) {
      double term = 0.0;
      for (int i = 0; i < data.n; ++i) {
        const auto row = data.row(i);
        double w = 0.0;
        for (int j : set.indices) w += row[j - 1];
        term += scale * w * w;
      }
      expo.push_back(term);
    }
    const double norm = -0.5 * data.n * std::log1p(beta);
    return norm + log_sum_exp(expo) - std::log(to_double(inst.cls.cardinality()));
  }
  // Shifted mean: product over rows of the per-row mixture ratio.
  const double drop = s * beta * beta / 2.0;
  for (const IndexSet& set : enumerate_class(inst.cls, cap)) {
    double term = 0.0;
    for (int i = 0; i < data.n; ++i) {
      const auto row = data.row(i);
      double w = 0.0;
      for (int j : set.indices) w += row[j - 1];
      term += log_mix(inst.alpha, beta * w - drop);
    }
    expo.push_back(term);
  }
  return log_sum_exp(expo) - std::log(to_double(inst.cls.cardinality()));
}

double lr_statistic(const DataMatrix& data, const ProblemInstance& inst, std::uint64_t cap) {
  return std::exp(log_lr_statistic(data, inst, cap));
}

double permanent(const std::vector<std::vector<double>>& a) {
  const std::size_t r = a.size();
  if (r == 0) return 1.0;
  if (r > 12) throw CapExceededError("permanent: size exceeds the Ryser cap of 12");
  for (const auto& row : a)
    if (row.size() != r) throw std::invalid_argument("permanent: matrix must be square");
  // Gray-code Ryser: maintain per-row sums over the current column subset.
  std::vector<double> sums(r, 0.0);
  double total = 0.0;
  const std::uint32_t limit = 1u << r;
  std::uint32_t prev = 0;
  for (std::uint32_t g = 1; g < limit; ++g) {
    const std::uint32_t code = g ^ (g >> 1);
    const std::uint32_t diff = code ^ prev;
    const int j = std::countr_zero(diff);
    const double sign_col = (code & diff) ? 1.0 : -1.0;
    for (std::size_t i = 0; i < r; ++i) sums[i] += sign_col * a[i][static_cast<std::size_t>(j)];
    prev = code;
    double prod = 1.0;
    for (std::size_t i = 0; i < r; ++i) prod *= sums[i];
    total += (std::popcount(code) % 2 == 0 ? 1.0 : -1.0) * prod;
  }
  return (r % 2 == 0 ? 1.0 : -1.0) * total;
}

double log_matching_lr_via_permanent(const DataMatrix& data, const ProblemInstance& inst) {
  if (inst.cls.kind != ClassKind::PerfectMatching)
    throw std::invalid_argument("permanent path needs a matching class");
  if (inst.model != ModelKind::ShiftedMean || inst.alpha != 1.0)
    throw std::invalid_argument("permanent path needs the full shifted-mean mixture (alpha = 1)");
  const int r = inst.cls.s;
  if (r > 5) throw CapExceededError("permanent path needs sqrt(d) <= 5");
  const std::vector<double> w = column_sums(data);
  const double drop = r * inst.beta * inst.beta * data.n / 2.0;
  return -drop - std::log(to_double(factorial(r))) +
         log_permanent_exp(inst.beta, edge_matrix(w, r));
}

double matching_lr_via_permanent(const DataMatrix& data, const ProblemInstance& inst) {
  return std::exp(log_matching_lr_via_permanent(data, inst));
}

double generalized_permanent_sum(const DataMatrix& data, const ProblemInstance& inst, int n_cap,
                                 std::uint64_t cap) {
  if (inst.model != ModelKind::ShiftedMean)
    throw std::invalid_argument("row-subset expansion applies to the shifted-mean model");
  const int n = data.n;
  if (n > n_cap) throw CapExceededError("row-subset expansion is exponential in n; cap exceeded");
  const int r = inst.cls.s;
  const double alpha = inst.alpha;
  const double beta = inst.beta;
  const bool use_permanent = inst.cls.kind == ClassKind::PerfectMatching;
  std::vector<double> log_terms;
  std::vector<double> w(data.d);
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    const int size = std::popcount(mask);
    if (alpha == 0.0 && size > 0) continue;
    if (alpha == 1.0 && size < n) continue;
    double log_weight = 0.0;
    if (alpha > 0.0) log_weight += size * std::log(alpha);
    if (alpha < 1.0) log_weight += (n - size) * std::log1p(-alpha);
    std::fill(w.begin(), w.end(), 0.0);
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) {
        const auto row = data.row(i);
        for (int j = 0; j < data.d; ++j) w[j] += row[j];
      }
    const double inner = use_permanent
                             ? log_permanent_exp(beta, edge_matrix(w, r)) -
                                   std::log(to_double(inst.cls.cardinality()))
                             : log_class_average(inst, w, cap);
    log_terms.push_back(log_weight - r * beta * beta * size / 2.0 + inner);
  }
  return std::exp(log_sum_exp(log_terms));
}

}  // namespace sqphase
