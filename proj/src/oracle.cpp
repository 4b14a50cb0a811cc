#include "sqphase/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace sqphase {

OracleConfig::OracleConfig(long n_, double xi_, double eta_, double bound_)
    : n(n_), xi(xi_), eta(eta_), bound(bound_) {
  if (n < 1) throw std::invalid_argument("oracle config needs n >= 1");
  if (!(xi > 0.0 && xi < 0.25)) throw std::invalid_argument("oracle config needs xi in (0, 1/4)");
  if (!(eta >= 0.0)) throw std::invalid_argument("oracle config needs eta >= 0");
  if (!(bound > 0.0)) throw std::invalid_argument("oracle config needs bound > 0");
}

double tolerance(const OracleConfig& cfg, double variance) {
  if (!(variance >= 0.0)) throw std::invalid_argument("tolerance: variance must be >= 0");
  const double budget = (cfg.eta + std::log(1.0 / cfg.xi)) / static_cast<double>(cfg.n);
  const double range_term = 2.0 * cfg.bound / 3.0 * budget;
  const double variance_term = std::sqrt(2.0 * variance * budget);
  return std::max(range_term, variance_term);
}

double reduced_tolerance(const OracleConfig& cfg, double variance_null) {
  OracleConfig reduced = cfg;
  reduced.eta = 0.0;
  return tolerance(reduced, variance_null);
}

double data_oracle_respond(const Query& q, const DataMatrix& data) {
  if (data.n < 1) throw std::invalid_argument("data oracle needs at least one row");
  const int n = data.n, d = data.d;
  const double* v = data.values.data();
  if (q.descriptor) {
    const QueryDescriptor& qd = *q.descriptor;
    long count = 0;
    switch (qd.family) {
      case QueryFamily::CoordinateThreshold: {
        const std::size_t t = static_cast<std::size_t>(qd.coordinate - 1);
        for (int i = 0; i < n; ++i)
          count += v[static_cast<std::size_t>(i) * d + t] >= qd.threshold;
        return static_cast<double>(count) / n;
      }
      case QueryFamily::CoordinateSquareThreshold: {
        const std::size_t t = static_cast<std::size_t>(qd.coordinate - 1);
        for (int i = 0; i < n; ++i) {
          const double x = v[static_cast<std::size_t>(i) * d + t];
          count += x * x >= qd.threshold;
        }
        return static_cast<double>(count) / n;
      }
      case QueryFamily::ScaledSumThreshold: {
        const double scale = 1.0 / std::sqrt(static_cast<double>(d));
        for (int i = 0; i < n; ++i) {
          const double* row = v + static_cast<std::size_t>(i) * d;
          double w = 0.0;
          for (int j = 0; j < d; ++j) w += row[j];
          count += w * scale >= qd.threshold;
        }
        return static_cast<double>(count) / n;
      }
      case QueryFamily::SubsetSumThreshold:
      case QueryFamily::SubsetSquareThreshold: {
        const bool squared = qd.family == QueryFamily::SubsetSquareThreshold;
        const double size = static_cast<double>(qd.subset.size());
        for (int i = 0; i < n; ++i) {
          const double* row = v + static_cast<std::size_t>(i) * d;
          double w = 0.0;
          for (int j : qd.subset) w += row[j - 1];
          count += (squared ? w * w / size : w) >= qd.threshold;
        }
        return static_cast<double>(count) / n;
      }
    }
  }
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += evaluate_query(q, data.row(i));
  return sum / n;
}

std::vector<IndexSet> distinguishable_set(const Query& q, const ProblemInstance& inst,
                                          const OracleConfig& cfg, std::uint64_t cap) {
  const double null_mean = query_moments(q, inst, std::nullopt).mean;
  const double null_var = query_moments(q, inst, std::nullopt).variance;
  const double bar = reduced_tolerance(cfg, null_var);
  std::vector<IndexSet> out;
  for (IndexSet& set : enumerate_class(inst.cls, cap)) {
    const double mean = query_moments(q, inst, set).mean;
    if (std::fabs(mean - null_mean) > bar) out.push_back(std::move(set));
  }
  return out;
}

double OracleSession::respond(const Query& q) {
  const double z = respond_impl(q);
  log_.push_back({q, z});
  return z;
}

AdversarySession::AdversarySession(ProblemInstance inst, OracleConfig cfg,
                                   std::vector<Query> schedule, RngStream commit_rng,
                                   std::uint64_t cap)
    : inst_(std::move(inst)),
      cfg_(cfg),
      mode_(AdversaryMode::NullWorstCase),
      budget_(static_cast<long>(schedule.size())),
      cap_(cap),
      schedule_(std::move(schedule)),
      rng_(commit_rng) {}

AdversarySession::AdversarySession(ProblemInstance inst, OracleConfig cfg, long budget,
                                   RngStream commit_rng, std::uint64_t cap)
    : inst_(std::move(inst)),
      cfg_(cfg),
      mode_(AdversaryMode::NullWorstCase),
      budget_(budget),
      cap_(cap),
      rng_(commit_rng) {
  if (budget < 0) throw std::invalid_argument("adversary budget must be >= 0");
}

AdversarySession::AdversarySession(ProblemInstance inst, OracleConfig cfg, long budget,
                                   IndexSet planted)
    : inst_(std::move(inst)),
      cfg_(cfg),
      mode_(AdversaryMode::Alternative),
      budget_(budget),
      cap_(kDefaultEnumerationCap),
      committed_(std::move(planted)) {
  if (budget < 0) throw std::invalid_argument("adversary budget must be >= 0");
  if (!inst_.cls.contains(*committed_))
    throw std::invalid_argument("adversary: planted set not in class");
}

void AdversarySession::commit_from_schedule() {
  const std::vector<Query>& schedule = *schedule_;
  const long T = budget_;
  std::vector<std::vector<IndexSet>> dsets(schedule.size());
  for (std::size_t t = 0; t < schedule.size(); ++t)
    dsets[t] = distinguishable_set(schedule[t], inst_, cfg_, cap_);

  // Multiplicity of each distinguished member across the schedule.
  std::map<IndexSet, int> hits;
  for (const auto& ds : dsets)
    for (const IndexSet& set : ds) ++hits[set];

  // Designated sequence: per query, a member only that query distinguishes.
  std::vector<IndexSet> designated;
  designated.reserve(dsets.size());
  bool have_sequence = T > 0;
  for (const auto& ds : dsets) {
    const IndexSet* pick = nullptr;
    for (const IndexSet& set : ds)
      if (hits.at(set) == 1 && (!pick || set < *pick)) pick = &set;
    if (!pick) {
      have_sequence = false;
      break;
    }
    designated.push_back(*pick);
  }

  std::vector<IndexSet> free_sets;
  for (IndexSet& set : enumerate_class(inst_.cls, cap_))
    if (!hits.count(set)) free_sets.push_back(std::move(set));

  designated_sequence_ = have_sequence;
  if (have_sequence) {
    if (free_sets.empty())
      throw HypothesisError("worst-case oracle: schedule distinguishes the whole class");
    if (rng_->uniform01() < 2.0 * cfg_.xi) {
      committed_ = designated[rng_->below(designated.size())];
    } else {
      committed_ = free_sets[rng_->below(free_sets.size())];
    }
  } else {
    if (free_sets.empty())
      throw HypothesisError("worst-case oracle: schedule distinguishes the whole class");
    committed_ = free_sets[rng_->below(free_sets.size())];
  }
}

double AdversarySession::respond_impl(const Query& q) {
  if (asked_ >= budget_) throw CapExceededError("adversary: declared budget exhausted");
  ++asked_;
  if (mode_ == AdversaryMode::Alternative)
    return expected_query_value(q, inst_, committed_);

  if (schedule_) {
    if (!committed_) commit_from_schedule();
    return expected_query_value(q, inst_, committed_);
  }

  // Online variant: shrink the survivor pool by this query's distinguished
  // members, then answer from a committed survivor.
  if (!survivors_ready_) {
    survivors_ = enumerate_class(inst_.cls, cap_);
    survivors_ready_ = true;
  }
  const std::vector<IndexSet> dset = distinguishable_set(q, inst_, cfg_, cap_);
  if (!dset.empty()) {
    std::erase_if(survivors_, [&](const IndexSet& set) {
      return std::binary_search(dset.begin(), dset.end(), set);
    });
  }
  if (survivors_.empty())
    throw HypothesisError("worst-case oracle: no undistinguished member left");
  if (!committed_ || !std::binary_search(survivors_.begin(), survivors_.end(), *committed_))
    committed_ = survivors_[rng_->below(survivors_.size())];
  return expected_query_value(q, inst_, committed_);
}

ValidationReport validate_transcript(const Transcript& transcript, const ProblemInstance& inst,
                                     const std::optional<IndexSet>& truth,
                                     const OracleConfig& cfg) {
  ValidationReport report;
  for (const TranscriptEntry& entry : transcript) {
    const QueryMoments m = query_moments(entry.query, inst, truth);
    const double tol = tolerance(cfg, m.variance);
    const double excess = std::fabs(entry.response - m.mean) - tol;
    report.worst_excess = std::max(report.worst_excess, excess);
    if (excess > 0.0) {
      report.valid = false;
      ++report.violations;
    }
  }
  return report;
}

void write_transcript_jsonl(std::ostream& out, const Transcript& transcript,
                            const ProblemInstance& inst, const std::optional<IndexSet>& truth,
                            const OracleConfig& cfg) {
  for (const TranscriptEntry& entry : transcript) {
    const QueryMoments m = query_moments(entry.query, inst, truth);
    const double tol = tolerance(cfg, m.variance);
    const double dev = std::fabs(entry.response - m.mean);
    nlohmann::json rec{{"query", entry.query.name},
                       {"response", entry.response},
                       {"truth", m.mean},
                       {"tolerance", tol},
                       {"pass", dev <= tol}};
    out << rec.dump() << '\n';
  }
}

}  // namespace sqphase
