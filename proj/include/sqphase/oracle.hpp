#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "sqphase/common.hpp"
#include "sqphase/models.hpp"
#include "sqphase/query.hpp"
#include "sqphase/rng.hpp"

namespace sqphase {

// Protocol parameters shared by every oracle variant.  eta is the log of the
// algorithm's declared query-space size (0 for a single fixed query).
struct OracleConfig {
  long n;
  double xi;
  double eta = 0.0;
  double bound = 1.0;

  OracleConfig(long n, double xi, double eta = 0.0, double bound = 1.0);
};

// Largest response deviation the protocol admits for a query with the given
// variance: max of a range term and a variance term, both scaled by
// (eta + log(1/xi)) / n.
double tolerance(const OracleConfig& cfg, double variance);

// Same expression with eta forced to zero; callers pass the null variance.
// Never exceeds tolerance() at equal variance.
double reduced_tolerance(const OracleConfig& cfg, double variance_null);

// Sample-mean response over the rows of `data`.
double data_oracle_respond(const Query& q, const DataMatrix& data);

// Members whose query expectation is separated from the null by strictly more
// than the reduced tolerance.
std::vector<IndexSet> distinguishable_set(const Query& q, const ProblemInstance& inst,
                                          const OracleConfig& cfg,
                                          std::uint64_t cap = kDefaultEnumerationCap);

struct TranscriptEntry {
  Query query;
  double response = 0.0;
};
using Transcript = std::vector<TranscriptEntry>;

// A stateful responder; every respond() is recorded for later audit.
class OracleSession {
 public:
  virtual ~OracleSession() = default;
  double respond(const Query& q);
  const Transcript& transcript() const { return log_; }

 protected:
  virtual double respond_impl(const Query& q) = 0;

 private:
  Transcript log_;
};

// Answers with sample means of one fixed data set.
class DataOracleSession : public OracleSession {
 public:
  explicit DataOracleSession(DataMatrix data) : data_(std::move(data)) {}
  const DataMatrix& data() const { return data_; }

 protected:
  double respond_impl(const Query& q) override { return data_oracle_respond(q, data_); }

 private:
  DataMatrix data_;
};

// Answers with exact expectations under the instance (planted == nullopt for
// the null).  Non-canonical queries fall back to Monte Carlo.
class IdealOracleSession : public OracleSession {
 public:
  IdealOracleSession(ProblemInstance inst, std::optional<IndexSet> planted)
      : inst_(std::move(inst)), planted_(std::move(planted)) {}

 protected:
  double respond_impl(const Query& q) override {
    return expected_query_value(q, inst_, planted_);
  }

 private:
  ProblemInstance inst_;
  std::optional<IndexSet> planted_;
};

// Worst-case responder.  In null mode it commits, at the first query, to a
// planted set the declared schedule cannot distinguish: when every scheduled
// query owns a confusable set no other scheduled query distinguishes, each of
// those T designated sets is committed with probability 2 xi / T and the
// remaining mass is uniform over the undistinguished members; otherwise the
// commitment is uniform over the undistinguished members alone.  Every
// response is then the exact expectation under the committed set.  Without a
// schedule, a running survivor set replaces the upfront union: the committed
// set is redrawn uniformly from the survivors whenever the current query
// distinguishes it, so each response still deviates from the null by at most
// the reduced tolerance.  In alternative mode responses are exact
// expectations under the true planted set, matching the ideal oracle.
enum class AdversaryMode { NullWorstCase, Alternative };

class AdversarySession : public OracleSession {
 public:
  // Null worst case bound to a declared schedule (budget = schedule length).
  AdversarySession(ProblemInstance inst, OracleConfig cfg, std::vector<Query> schedule,
                   RngStream commit_rng, std::uint64_t cap = kDefaultEnumerationCap);
  // Null worst case without a schedule: online survivor variant.
  AdversarySession(ProblemInstance inst, OracleConfig cfg, long budget,
                   RngStream commit_rng, std::uint64_t cap = kDefaultEnumerationCap);
  // Alternative hypothesis with the true planted set.
  AdversarySession(ProblemInstance inst, OracleConfig cfg, long budget, IndexSet planted);

  AdversaryMode mode() const { return mode_; }
  // Valid after the first response in null mode.
  const std::optional<IndexSet>& committed() const { return committed_; }
  // True when the designated-sequence branch was selected (schedule form only).
  bool designated_sequence() const { return designated_sequence_; }
  long budget() const { return budget_; }

 protected:
  double respond_impl(const Query& q) override;

 private:
  void commit_from_schedule();

  ProblemInstance inst_;
  OracleConfig cfg_;
  AdversaryMode mode_;
  long budget_ = 0;
  long asked_ = 0;
  std::uint64_t cap_;
  std::optional<std::vector<Query>> schedule_;
  std::optional<RngStream> rng_;
  std::optional<IndexSet> committed_;
  bool designated_sequence_ = false;
  std::vector<IndexSet> survivors_;  // online variant only
  bool survivors_ready_ = false;
};

// Re-checks a transcript against exact truth: every response must lie within
// tolerance(cfg, Var[q]) of E[q] under the named distribution.
struct ValidationReport {
  bool valid = true;
  int violations = 0;
  double worst_excess = 0.0;  // max over entries of |Z - E[q]| - tolerance
};

ValidationReport validate_transcript(const Transcript& transcript, const ProblemInstance& inst,
                                     const std::optional<IndexSet>& truth,
                                     const OracleConfig& cfg);

// One JSON record per line: query name, response, truth, tolerance, pass.
void write_transcript_jsonl(std::ostream& out, const Transcript& transcript,
                            const ProblemInstance& inst, const std::optional<IndexSet>& truth,
                            const OracleConfig& cfg);

}  // namespace sqphase
