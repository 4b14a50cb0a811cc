#include "sqphase/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sqphase/stats.hpp"

namespace sqphase {

namespace {

// P(N(mu, sd^2) >= c)
double normal_tail_ge(double c, double mu, double sd) { return stdnormal_sf((c - mu) / sd); }

// P(N(mu, sd^2)^2 >= c)
double normal_square_tail_ge(double c, double mu, double sd) {
  if (c <= 0.0) return 1.0;
  const double r = std::sqrt(c);
  return stdnormal_sf((r - mu) / sd) + stdnormal_sf((r + mu) / sd);
}

int subset_overlap(const std::vector<int>& subset, const IndexSet& set) {
  IndexSet probe{subset};
  return overlap(probe, set);
}

// Mean of a canonical query under N(theta_S, I) with theta = beta on S
// (shifted-mean pure component; beta = 0 gives the null).
double shifted_component_mean(const QueryDescriptor& qd, const StructureClass& cls,
                              double beta, const std::optional<IndexSet>& planted) {
  const auto in_planted = [&](int t) {
    return planted && std::binary_search(planted->indices.begin(), planted->indices.end(), t);
  };
  switch (qd.family) {
    case QueryFamily::CoordinateThreshold:
      return normal_tail_ge(qd.threshold, in_planted(qd.coordinate) ? beta : 0.0, 1.0);
    case QueryFamily::ScaledSumThreshold: {
      const double mu = planted ? beta * cls.s / std::sqrt(static_cast<double>(cls.d)) : 0.0;
      return normal_tail_ge(qd.threshold, mu, 1.0);
    }
    case QueryFamily::SubsetSumThreshold: {
      const double size = static_cast<double>(qd.subset.size());
      const double mu = planted ? beta * subset_overlap(qd.subset, *planted) : 0.0;
      return normal_tail_ge(qd.threshold, mu, std::sqrt(size));
    }
    case QueryFamily::CoordinateSquareThreshold:
      return normal_square_tail_ge(qd.threshold, in_planted(qd.coordinate) ? beta : 0.0, 1.0);
    case QueryFamily::SubsetSquareThreshold: {
      const double size = static_cast<double>(qd.subset.size());
      const double mu = planted ? beta * subset_overlap(qd.subset, *planted) : 0.0;
      return normal_square_tail_ge(qd.threshold * size, mu, std::sqrt(size));
    }
  }
  throw std::logic_error("unknown query family");
}

// Mean of a canonical query under the spiked model; every linear functional
// of a row is a centered normal whose variance picks up beta * ov^2 / s.
double spiked_mean(const QueryDescriptor& qd, const StructureClass& cls, double beta,
                   const std::optional<IndexSet>& planted) {
  const double s = static_cast<double>(cls.s);
  const auto in_planted = [&](int t) {
    return planted && std::binary_search(planted->indices.begin(), planted->indices.end(), t);
  };
  switch (qd.family) {
    case QueryFamily::CoordinateThreshold: {
      const double var = 1.0 + (in_planted(qd.coordinate) ? beta / s : 0.0);
      return normal_tail_ge(qd.threshold, 0.0, std::sqrt(var));
    }
    case QueryFamily::ScaledSumThreshold: {
      const double var = 1.0 + (planted ? beta * s / cls.d : 0.0);
      return normal_tail_ge(qd.threshold, 0.0, std::sqrt(var));
    }
    case QueryFamily::SubsetSumThreshold: {
      const double size = static_cast<double>(qd.subset.size());
      const double ov = planted ? subset_overlap(qd.subset, *planted) : 0.0;
      return normal_tail_ge(qd.threshold, 0.0, std::sqrt(size + beta * ov * ov / s));
    }
    case QueryFamily::CoordinateSquareThreshold: {
      const double var = 1.0 + (in_planted(qd.coordinate) ? beta / s : 0.0);
      return normal_square_tail_ge(qd.threshold, 0.0, std::sqrt(var));
    }
    case QueryFamily::SubsetSquareThreshold: {
      const double size = static_cast<double>(qd.subset.size());
      const double ov = planted ? subset_overlap(qd.subset, *planted) : 0.0;
      return normal_square_tail_ge(qd.threshold * size, 0.0, std::sqrt(size + beta * ov * ov / s));
    }
  }
  throw std::logic_error("unknown query family");
}

}  // namespace

ProblemInstance ProblemInstance::shifted_mean(StructureClass cls, double beta, double alpha) {
  if (!(beta > 0.0)) throw std::invalid_argument("shifted mean needs beta > 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("mixture weight must lie in [0, 1]");
  return {ModelKind::ShiftedMean, cls, beta, alpha};
}

ProblemInstance ProblemInstance::spiked(StructureClass cls, double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("spiked model needs beta in (0, 1)");
  return {ModelKind::SpikedCovariance, cls, beta, 1.0};
}

DataMatrix sample_data(const ProblemInstance& inst, const std::optional<IndexSet>& planted,
                       int n, RngStream& rng) {
  if (n < 1) throw std::invalid_argument("sample_data needs n >= 1");
  DataMatrix data;
  data.n = n;
  data.d = inst.cls.d;
  data.values.resize(static_cast<std::size_t>(n) * inst.cls.d);
  const double spike_scale = std::sqrt(inst.beta / inst.cls.s);
  for (int i = 0; i < n; ++i) {
    auto row = data.row(i);
    for (int j = 0; j < inst.cls.d; ++j) row[j] = rng.normal();
    if (!planted) continue;
    if (inst.model == ModelKind::ShiftedMean) {
      if (rng.uniform01() < inst.alpha)
        for (int j : planted->indices) row[j - 1] += inst.beta;
    } else {
      const double g = rng.normal();
      for (int j : planted->indices) row[j - 1] += spike_scale * g;
    }
  }
  return data;
}

double likelihood_ratio_point(const ProblemInstance& inst, const IndexSet& set,
                              std::span<const double> row) {
  double w = 0.0;
  for (int j : set.indices) w += row[static_cast<std::size_t>(j - 1)];
  if (inst.model == ModelKind::ShiftedMean) {
    const double expo = inst.beta * w - inst.cls.s * inst.beta * inst.beta / 2.0;
    return inst.alpha * std::exp(expo) + (1.0 - inst.alpha);
  }
  const double proj = w / std::sqrt(static_cast<double>(inst.cls.s));
  return std::exp(inst.beta * proj * proj / (2.0 * (1.0 + inst.beta))) /
         std::sqrt(1.0 + inst.beta);
}

double h_value(const ProblemInstance& inst, int ov) {
  if (ov < 0 || ov > inst.cls.s) throw std::invalid_argument("h_value: overlap out of range");
  if (inst.model == ModelKind::ShiftedMean) {
    const double a2 = inst.alpha * inst.alpha;
    return a2 * std::exp(ov * inst.beta * inst.beta) + (1.0 - a2);
  }
  const double r = inst.beta * ov / inst.cls.s;
  return 1.0 / std::sqrt(1.0 - r * r);
}

QueryMoments query_moments(const Query& q, const ProblemInstance& inst,
                           const std::optional<IndexSet>& planted, long mc_samples,
                           RngStream* rng) {
  if (planted && !inst.cls.contains(*planted))
    throw std::invalid_argument("query_moments: planted set not in class");
  QueryMoments m;
  if (q.descriptor) {
    // All canonical families are indicators: variance is p(1-p).
    double p = 0.0;
    if (inst.model == ModelKind::ShiftedMean) {
      const double p1 = shifted_component_mean(*q.descriptor, inst.cls, inst.beta, planted);
      const double p0 = shifted_component_mean(*q.descriptor, inst.cls, 0.0, std::nullopt);
      p = planted ? inst.alpha * p1 + (1.0 - inst.alpha) * p0 : p0;
    } else {
      p = spiked_mean(*q.descriptor, inst.cls, inst.beta, planted);
    }
    m.mean = p;
    m.variance = p * (1.0 - p);
    return m;
  }
  if (mc_samples < 2) throw std::invalid_argument("query_moments: need at least 2 samples");
  RngStream fallback(0x9e3779b9u, 0, StreamRole::McFallback);
  RngStream& r = rng ? *rng : fallback;
  double sum = 0.0, sum_sq = 0.0;
  for (long i = 0; i < mc_samples; ++i) {
    const DataMatrix row = sample_data(inst, planted, 1, r);
    const double v = evaluate_query(q, row.row(0));
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / mc_samples;
  const double var = (sum_sq - mc_samples * mean * mean) / (mc_samples - 1);
  m.mean = mean;
  m.variance = var;
  m.mean_std_error = std::sqrt(var / mc_samples);
  m.exact = false;
  return m;
}

double expected_query_value(const Query& q, const ProblemInstance& inst,
                            const std::optional<IndexSet>& planted, long mc_samples,
                            RngStream* rng) {
  return query_moments(q, inst, planted, mc_samples, rng).mean;
}

}  // namespace sqphase
