#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sqphase/common.hpp"
#include "sqphase/models.hpp"
#include "sqphase/oracle.hpp"
#include "sqphase/query.hpp"

namespace sqphase {

// Test batteries.  SM* address the shifted-mean model on sparse supports,
// PM_* the shifted-mean model on perfect matchings, SPCA* the spiked model.
// Each query battery compares the largest oracle response against a fixed
// threshold (null expectation plus an explicit margin); ties reject.  LR
// thresholds the exact likelihood ratio of the raw data at 1.
enum class DetectorSetting {
  SM1,      // single scaled full-sum query at sqrt(2 log n)
  SM2,      // one coordinate threshold per column
  SM3,      // single unscaled full-sum query
  SM4a,     // one subset-sum query per class member
  SM4b,     // subset sums over a reduced support size
  PM_SM1,   // SM1 on the matching class
  PM_SM3,   // SM3 on the matching class
  PM_SM4a,  // subset sums over all matchings
  SPCA1,    // one squared-coordinate query per column
  SPCA2,    // one normalized squared subset sum per class member
  LR,       // exact likelihood ratio on raw data
};

const char* detector_name(DetectorSetting s);
DetectorSetting detector_from_name(const std::string& name);

struct Verdict {
  bool reject = false;
  double statistic = 0.0;
  double threshold = 0.0;
};

struct Detector {
  DetectorSetting setting;
  ProblemInstance instance;
  long n;                         // declared sample size behind the oracle
  double margin_constant = 8.0;   // reduced-support constant for SM4b
  long budget_limit = -1;         // >= 0 truncates the schedule
  std::uint64_t cap = kDefaultEnumerationCap;

  static Detector make(DetectorSetting setting, ProblemInstance instance, long n,
                       double margin_constant = 8.0, long budget_limit = -1,
                       std::uint64_t cap = kDefaultEnumerationCap);

  // Reduced support size used by SM4b: ceil(2 n alpha / (C log d)) clamped
  // to [1, s].
  int reduced_support() const;

  std::vector<Query> build_schedule() const;
  double threshold() const;
  // Log of the declared query-space size.
  double eta() const;
  long budget() const;

  // Queries the oracle over the schedule and thresholds the max response.
  Verdict run(OracleSession& oracle) const;
  // LR path (and a convenience data-oracle wrapper for query batteries).
  Verdict run_on_data(const DataMatrix& data) const;
};

// Exact likelihood ratio of the full data set for the instance, by direct
// class enumeration; log form is the numerically safe primitive.
double log_lr_statistic(const DataMatrix& data, const ProblemInstance& inst,
                        std::uint64_t cap = kDefaultEnumerationCap);
double lr_statistic(const DataMatrix& data, const ProblemInstance& inst,
                    std::uint64_t cap = kDefaultEnumerationCap);

// Permanent via Ryser's alternating sum with Gray-code updates; size <= 12.
double permanent(const std::vector<std::vector<double>>& a);

// Matching-class likelihood ratio through a single permanent; needs the full
// mixture (alpha = 1) and sqrt(d) <= 5.
double log_matching_lr_via_permanent(const DataMatrix& data, const ProblemInstance& inst);
double matching_lr_via_permanent(const DataMatrix& data, const ProblemInstance& inst);

// Likelihood ratio via the row-subset expansion: sum over I subset of [n] of
// alpha^|I| (1-alpha)^{n-|I|} exp(-s beta^2 |I|/2) times the class average of
// exp(beta * sum of the I-restricted column sums); one permanent per I on the
// matching class.  Exponential in n; capped.
double generalized_permanent_sum(const DataMatrix& data, const ProblemInstance& inst,
                                 int n_cap = 12, std::uint64_t cap = kDefaultEnumerationCap);

}  // namespace sqphase
