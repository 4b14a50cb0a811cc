#pragma once

#include <optional>
#include <span>
#include <vector>

#include "sqphase/query.hpp"
#include "sqphase/rng.hpp"
#include "sqphase/structure.hpp"

namespace sqphase {

enum class ModelKind {
  ShiftedMean,       // null N(0, I_d); alternative mixes in N(theta_S, I_d)
                     // with weight alpha, theta_S = beta on S
  SpikedCovariance,  // null N(0, I_d); alternative N(0, I_d + beta v v^T),
                     // v = s^{-1/2} on S; requires beta in (0, 1)
};

struct ProblemInstance {
  ModelKind model;
  StructureClass cls;
  double beta;   // signal strength
  double alpha;  // mixture weight; fixed to 1 for the spiked model

  static ProblemInstance shifted_mean(StructureClass cls, double beta, double alpha);
  static ProblemInstance spiked(StructureClass cls, double beta);
};

// n rows of d values, row-major.
struct DataMatrix {
  int n = 0;
  int d = 0;
  std::vector<double> values;

  std::span<const double> row(int i) const {
    return {values.data() + static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d)};
  }
  std::span<double> row(int i) {
    return {values.data() + static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d)};
  }
};

// Draws n iid rows; planted == nullopt samples the null.
DataMatrix sample_data(const ProblemInstance& inst, const std::optional<IndexSet>& planted,
                       int n, RngStream& rng);

// dP_S/dP_0 evaluated at one row.
double likelihood_ratio_point(const ProblemInstance& inst, const IndexSet& set,
                              std::span<const double> row);

// Expected product of two single-row likelihood ratios whose planted sets
// share `ov` coordinates; depends on the pair only through ov.  h(0) = 1 and
// h is nondecreasing.
double h_value(const ProblemInstance& inst, int ov);

// First two moments of a query under the instance (planted == nullopt for the
// null).  Canonical descriptors evaluate exactly; anything else falls back to
// Monte Carlo with a reported standard error.
struct QueryMoments {
  double mean = 0.0;
  double variance = 0.0;
  double mean_std_error = 0.0;
  bool exact = true;
};

inline constexpr long kDefaultMcSamples = 100'000;

QueryMoments query_moments(const Query& q, const ProblemInstance& inst,
                           const std::optional<IndexSet>& planted,
                           long mc_samples = kDefaultMcSamples, RngStream* rng = nullptr);

// Convenience: the mean only.
double expected_query_value(const Query& q, const ProblemInstance& inst,
                            const std::optional<IndexSet>& planted,
                            long mc_samples = kDefaultMcSamples, RngStream* rng = nullptr);

}  // namespace sqphase
