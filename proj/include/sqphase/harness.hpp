#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sqphase/bounds.hpp"
#include "sqphase/detectors.hpp"
#include "sqphase/models.hpp"
#include "sqphase/oracle.hpp"

namespace sqphase {

enum class OracleMode { Data, Ideal, Adversarial };

const char* oracle_mode_name(OracleMode m);
OracleMode oracle_mode_from_name(const std::string& name);

// Full description of one experiment.  Trials are counted per hypothesis and
// every trial draws from streams keyed by (seed, trial, role), so results do
// not depend on the worker count.
struct ExperimentConfig {
  DetectorSetting setting = DetectorSetting::SM2;
  ModelKind model = ModelKind::ShiftedMean;
  ClassKind cls_kind = ClassKind::SparseSupport;
  int d = 10;
  int s = 1;
  double beta = 0.5;
  double alpha = 1.0;
  double xi = 0.05;
  long n = 100;
  OracleMode oracle_mode = OracleMode::Data;
  long trials = 100;
  std::uint64_t seed = 1;
  int workers = 1;
  long budget_T = -1;  // >= 0 truncates the detector schedule
  double margin_constant = 8.0;
  std::uint64_t cap = kDefaultEnumerationCap;
  bool validate = false;  // audit data-mode transcripts against exact truth

  StructureClass structure() const;
  ProblemInstance instance() const;
  Detector detector() const;
  // Protocol parameters with the detector's declared eta.
  OracleConfig oracle_config() const;
};

struct RiskEstimate {
  double type1_hat = 0.0;
  double type2_hat = 0.0;
  double risk_hat = 0.0;
  double ci_halfwidth = 0.0;  // Wald 95% for type1 + type2
  long trials = 0;            // per hypothesis
  double valid_fraction = 1.0;
};

RiskEstimate estimate_risk(const ExperimentConfig& cfg);

// Plays the detector against the worst-case oracle (null episodes commit
// adversarially, alternative episodes answer exactly for a fresh uniform
// planted set) and compares realized risk with the protocol lower bound at
// the declared budget.  Optionally writes one JSON record per episode.
struct GameResult {
  double type1_hat = 0.0;
  double type2_hat = 0.0;
  double realized_risk = 0.0;
  double bound = 0.0;
  BigInt sup_cq = 0;
  long episodes = 0;  // per hypothesis
  long budget = 0;
};

GameResult adversary_game(const ExperimentConfig& cfg, std::ostream* record_out = nullptr);

// Frozen column set; callers append rows for sweeps.
std::string risk_csv_header();
std::string risk_csv_row(const ExperimentConfig& cfg, const RiskEstimate& est);
// "# key=value" metadata lines reproducing the resolved config (execution
// knobs like the worker count are deliberately not part of the output).
std::string config_echo_csv(const ExperimentConfig& cfg);
std::string config_echo_json(const ExperimentConfig& cfg);

// Phase-diagram sweep over (p_beta, p_n) at fixed (p_s, p_alpha).
struct PhaseSweep {
  ProblemFamily family = ProblemFamily::SparseShiftedMean;
  double p_s = 0.25;
  double p_alpha = 0.0;
  int resolution = 51;
  double p_beta_max = 1.0;
  double p_n_max = 2.0;
};

struct PhasePoint {
  Exponents e;
  Regime regime = Regime::Boundary;
};

std::vector<PhasePoint> sweep_phase_diagram(const PhaseSweep& sweep);
std::string phase_csv(const PhaseSweep& sweep, std::span<const PhasePoint> points);
std::string phase_svg(const PhaseSweep& sweep, std::span<const PhasePoint> points);

// Risk curve along a list of signal strengths.
std::vector<std::pair<double, RiskEstimate>> sweep_empirical_boundary(
    ExperimentConfig base, std::span<const double> betas);
std::string risk_csv(const ExperimentConfig& cfg,
                     std::span<const std::pair<double, RiskEstimate>> rows);
std::string risk_curve_svg(std::span<const std::pair<double, RiskEstimate>> rows);

}  // namespace sqphase
