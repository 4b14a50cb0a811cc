#include "sqphase/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace sqphase {

namespace {

std::string fmt_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// FNV-1a over the response bit patterns; stable digest for audit records.
std::string transcript_digest(const Transcript& transcript) {
  std::uint64_t h = 1469598103934665603ull;
  for (const TranscriptEntry& e : transcript) {
    std::uint64_t bits;
    static_assert(sizeof bits == sizeof e.response);
    std::memcpy(&bits, &e.response, sizeof bits);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xff;
      h *= 1099511628211ull;
    }
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Runs `work(unit)` for unit = 0..units-1 over `workers` threads; unit i is
// pinned to thread i % workers so the partition is scheduling-independent.
void parallel_units(long units, int workers, const std::function<void(long)>& work) {
  if (workers <= 1 || units <= 1) {
    for (long u = 0; u < units; ++u) work(u);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mu;
  const int w = std::min<long>(workers, units);
  pool.reserve(w);
  for (int k = 0; k < w; ++k) {
    pool.emplace_back([&, k] {
      try {
        for (long u = k; u < units; u += w) work(u);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

nlohmann::json config_json(const ExperimentConfig& cfg) {
  return {{"setting", detector_name(cfg.setting)},
          {"model", cfg.model == ModelKind::ShiftedMean ? "shifted-mean" : "spiked-covariance"},
          {"class", cfg.cls_kind == ClassKind::SparseSupport ? "sparse" : "matching"},
          {"d", cfg.d},
          {"s_star", cfg.s},
          {"beta_star", cfg.beta},
          {"alpha", cfg.alpha},
          {"n", cfg.n},
          {"xi", cfg.xi},
          {"oracle_mode", oracle_mode_name(cfg.oracle_mode)},
          {"trials", cfg.trials},
          {"seed", cfg.seed},
          {"budget_T", cfg.budget_T},
          {"margin_constant", cfg.margin_constant},
          {"enumeration_cap", cfg.cap},
          {"validate", cfg.validate}};
}

}  // namespace

const char* oracle_mode_name(OracleMode m) {
  switch (m) {
    case OracleMode::Data: return "data";
    case OracleMode::Ideal: return "ideal";
    case OracleMode::Adversarial: return "adversarial";
  }
  return "?";
}

OracleMode oracle_mode_from_name(const std::string& name) {
  if (name == "data") return OracleMode::Data;
  if (name == "ideal") return OracleMode::Ideal;
  if (name == "adversarial") return OracleMode::Adversarial;
  throw std::invalid_argument("unknown oracle mode: " + name);
}

StructureClass ExperimentConfig::structure() const {
  return cls_kind == ClassKind::SparseSupport ? StructureClass::sparse(d, s)
                                              : StructureClass::matching(d);
}

ProblemInstance ExperimentConfig::instance() const {
  return model == ModelKind::ShiftedMean ? ProblemInstance::shifted_mean(structure(), beta, alpha)
                                         : ProblemInstance::spiked(structure(), beta);
}

Detector ExperimentConfig::detector() const {
  return Detector::make(setting, instance(), n, margin_constant, budget_T, cap);
}

OracleConfig ExperimentConfig::oracle_config() const {
  return OracleConfig(n, xi, detector().eta());
}

namespace {

struct TrialOutcome {
  bool reject = false;
  bool valid = true;
  double statistic = 0.0;
  std::string record;  // JSON line, games only
};

// One trial; hypothesis index 0 = null, 1 = alternative.
TrialOutcome run_trial(const ExperimentConfig& cfg, const ProblemInstance& inst,
                       const Detector& det, const std::vector<Query>& schedule,
                       const OracleConfig& ocfg, long trial, bool alternative,
                       bool emit_record) {
  TrialOutcome out;
  const std::uint64_t trial_id =
      static_cast<std::uint64_t>(trial) + (alternative ? static_cast<std::uint64_t>(cfg.trials) : 0);
  std::optional<IndexSet> planted;
  if (alternative) {
    RngStream pick(cfg.seed, trial_id, StreamRole::PlantedDraw);
    planted = sample_uniform(inst.cls, pick);
  }

  std::unique_ptr<OracleSession> session;
  if (cfg.oracle_mode == OracleMode::Data || cfg.setting == DetectorSetting::LR) {
    RngStream data_rng(cfg.seed, trial_id, StreamRole::Data);
    DataMatrix data = sample_data(inst, planted, static_cast<int>(cfg.n), data_rng);
    if (cfg.setting == DetectorSetting::LR) {
      const Verdict v = det.run_on_data(data);
      out.reject = v.reject;
      out.statistic = v.statistic;
      return out;
    }
    session = std::make_unique<DataOracleSession>(std::move(data));
  } else if (cfg.oracle_mode == OracleMode::Ideal) {
    session = std::make_unique<IdealOracleSession>(inst, planted);
  } else if (alternative) {
    session = std::make_unique<AdversarySession>(inst, ocfg, det.budget(), *planted);
  } else {
    RngStream commit(cfg.seed, trial_id, StreamRole::AdversaryCommit);
    session = std::make_unique<AdversarySession>(inst, ocfg, schedule, commit, cfg.cap);
  }

  double stat = -std::numeric_limits<double>::infinity();
  for (const Query& q : schedule) stat = std::max(stat, session->respond(q));
  const double thr = det.threshold();
  out.reject = stat >= thr;
  out.statistic = stat;

  if (cfg.validate && cfg.oracle_mode == OracleMode::Data)
    out.valid = validate_transcript(session->transcript(), inst, planted, ocfg).valid;

  if (emit_record) {
    nlohmann::json rec{{"episode", trial},
                       {"hypothesis", alternative ? "alternative" : "null"},
                       {"reject", out.reject},
                       {"statistic", out.statistic},
                       {"digest", transcript_digest(session->transcript())}};
    if (alternative) {
      rec["planted"] = planted->indices;
    } else if (auto* adv = dynamic_cast<AdversarySession*>(session.get());
               adv && adv->committed()) {
      rec["committed"] = adv->committed()->indices;
      rec["designated_sequence"] = adv->designated_sequence();
    }
    out.record = rec.dump();
  }
  return out;
}

struct AggregateOutcome {
  double type1 = 0.0;
  double type2 = 0.0;
  double valid_fraction = 1.0;
  std::vector<std::string> records;
};

AggregateOutcome run_all_trials(const ExperimentConfig& cfg, bool emit_records) {
  if (cfg.trials < 1) throw std::invalid_argument("need trials >= 1");
  const ProblemInstance inst = cfg.instance();
  const Detector det = cfg.detector();
  const std::vector<Query> schedule = det.build_schedule();
  const OracleConfig ocfg = cfg.oracle_config();

  const long units = 2 * cfg.trials;
  std::vector<std::uint8_t> reject(units, 0), valid(units, 1);
  std::vector<std::string> records(emit_records ? units : 0);
  parallel_units(units, cfg.workers, [&](long u) {
    const bool alternative = u >= cfg.trials;
    const long trial = alternative ? u - cfg.trials : u;
    TrialOutcome out =
        run_trial(cfg, inst, det, schedule, ocfg, trial, alternative, emit_records);
    reject[u] = out.reject;
    valid[u] = out.valid;
    if (emit_records) records[u] = std::move(out.record);
  });

  AggregateOutcome agg;
  long rej_null = 0, acc_alt = 0, valid_count = 0;
  for (long u = 0; u < units; ++u) {
    if (u < cfg.trials) rej_null += reject[u];
    else acc_alt += !reject[u];
    valid_count += valid[u];
  }
  agg.type1 = static_cast<double>(rej_null) / cfg.trials;
  agg.type2 = static_cast<double>(acc_alt) / cfg.trials;
  agg.valid_fraction = static_cast<double>(valid_count) / units;
  agg.records = std::move(records);
  return agg;
}

}  // namespace

RiskEstimate estimate_risk(const ExperimentConfig& cfg) {
  const AggregateOutcome agg = run_all_trials(cfg, false);
  RiskEstimate est;
  est.type1_hat = agg.type1;
  est.type2_hat = agg.type2;
  est.risk_hat = agg.type1 + agg.type2;
  const double var = (agg.type1 * (1.0 - agg.type1) + agg.type2 * (1.0 - agg.type2)) /
                     static_cast<double>(cfg.trials);
  est.ci_halfwidth = 1.96 * std::sqrt(var);
  est.trials = cfg.trials;
  est.valid_fraction = agg.valid_fraction;
  return est;
}

GameResult adversary_game(const ExperimentConfig& cfg, std::ostream* record_out) {
  if (cfg.setting == DetectorSetting::LR)
    throw std::invalid_argument("the likelihood-ratio test consumes raw samples, not responses; "
                                "it cannot play the worst-case response game");
  ExperimentConfig game_cfg = cfg;
  game_cfg.oracle_mode = OracleMode::Adversarial;
  const ProblemInstance inst = game_cfg.instance();
  const Detector det = game_cfg.detector();

  GameResult result;
  result.budget = det.budget();
  result.episodes = game_cfg.trials;
  result.sup_cq = sup_distinguishable_numeric(inst, game_cfg.n, game_cfg.xi);
  result.bound =
      risk_lower_bound(result.budget, result.sup_cq, inst.cls.cardinality(), game_cfg.xi);

  if (record_out) *record_out << config_echo_json(game_cfg);
  const AggregateOutcome agg = run_all_trials(game_cfg, record_out != nullptr);
  result.type1_hat = agg.type1;
  result.type2_hat = agg.type2;
  result.realized_risk = agg.type1 + agg.type2;
  if (record_out)
    for (const std::string& line : agg.records) *record_out << line << '\n';
  return result;
}

std::string risk_csv_header() {
  return "setting,d,s_star,beta_star,alpha,n,xi,oracle_mode,trials,seed,type1_hat,type2_hat,"
         "risk_hat,ci_halfwidth";
}

std::string risk_csv_row(const ExperimentConfig& cfg, const RiskEstimate& est) {
  std::ostringstream out;
  out << detector_name(cfg.setting) << ',' << cfg.d << ',' << cfg.s << ',' << fmt_full(cfg.beta)
      << ',' << fmt_full(cfg.alpha) << ',' << cfg.n << ',' << fmt_full(cfg.xi) << ','
      << oracle_mode_name(cfg.oracle_mode) << ',' << cfg.trials << ',' << cfg.seed << ','
      << fmt_full(est.type1_hat) << ',' << fmt_full(est.type2_hat) << ','
      << fmt_full(est.risk_hat) << ',' << fmt_full(est.ci_halfwidth);
  return out.str();
}

std::string config_echo_csv(const ExperimentConfig& cfg) {
  const nlohmann::json resolved = config_json(cfg);
  std::string out;
  for (const auto& [key, value] : resolved.items())
    out += "# " + key + "=" + (value.is_string() ? value.get<std::string>() : value.dump()) + "\n";
  return out;
}

std::string config_echo_json(const ExperimentConfig& cfg) {
  return nlohmann::json{{"config", config_json(cfg)}}.dump() + "\n";
}

std::vector<PhasePoint> sweep_phase_diagram(const PhaseSweep& sweep) {
  if (sweep.resolution < 2) throw std::invalid_argument("phase sweep needs resolution >= 2");
  std::vector<PhasePoint> points;
  points.reserve(static_cast<std::size_t>(sweep.resolution) * sweep.resolution);
  const double p_s = sweep.family == ProblemFamily::MatchingShiftedMean ? 0.5 : sweep.p_s;
  for (int i = 0; i < sweep.resolution; ++i) {
    const double p_n = sweep.p_n_max * i / (sweep.resolution - 1);
    for (int j = 0; j < sweep.resolution; ++j) {
      const double p_beta = sweep.p_beta_max * j / (sweep.resolution - 1);
      PhasePoint point;
      point.e = Exponents{p_s, p_beta, p_n, sweep.p_alpha};
      point.regime = phase_classify(sweep.family, point.e);
      points.push_back(point);
    }
  }
  return points;
}

std::string phase_csv(const PhaseSweep& sweep, std::span<const PhasePoint> points) {
  std::ostringstream out;
  out << "# family=" << family_name(sweep.family) << "\n# p_s=" << fmt_full(sweep.p_s)
      << "\n# p_alpha=" << fmt_full(sweep.p_alpha) << "\n# resolution=" << sweep.resolution
      << "\n# p_beta_max=" << fmt_full(sweep.p_beta_max)
      << "\n# p_n_max=" << fmt_full(sweep.p_n_max) << "\n";
  out << "problem,p_s,p_beta,p_n,p_alpha,regime\n";
  for (const PhasePoint& p : points)
    out << family_name(sweep.family) << ',' << fmt_full(p.e.p_s) << ',' << fmt_full(p.e.p_beta)
        << ',' << fmt_full(p.e.p_n) << ',' << fmt_full(p.e.p_alpha) << ','
        << regime_name(p.regime) << '\n';
  return out.str();
}

namespace {

const char* regime_color(Regime r) {
  switch (r) {
    case Regime::Tractable: return "#2e7d32";
    case Regime::IntractablePossible: return "#f9a825";
    case Regime::Impossible: return "#c62828";
    case Regime::Boundary: return "#37474f";
  }
  return "#000000";
}

}  // namespace

std::string phase_svg(const PhaseSweep& sweep, std::span<const PhasePoint> points) {
  const int res = sweep.resolution;
  if (static_cast<int>(points.size()) != res * res)
    throw std::invalid_argument("phase_svg: points do not match the sweep resolution");
  const double plot = 440.0, margin = 60.0, cell = plot / res;
  const double width = plot + 2 * margin + 140.0, height = plot + 2 * margin;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\">\n";
  out << "<!-- " << family_name(sweep.family) << " p_s=" << sweep.p_s
      << " p_alpha=" << sweep.p_alpha << " -->\n";
  for (int i = 0; i < res; ++i) {
    for (int j = 0; j < res; ++j) {
      const PhasePoint& p = points[static_cast<std::size_t>(i) * res + j];
      const double x = margin + cell * j;
      const double y = margin + plot - cell * (i + 1);  // p_n grows upward
      out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\""
          << cell << "\" fill=\"" << regime_color(p.regime) << "\"/>\n";
    }
  }
  out << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << plot << "\" height=\""
      << plot << "\" fill=\"none\" stroke=\"#000\"/>\n";
  out << "<text x=\"" << margin + plot / 2 << "\" y=\"" << height - margin / 3
      << "\" text-anchor=\"middle\">p_beta (0 to " << sweep.p_beta_max << ")</text>\n";
  out << "<text x=\"" << margin / 3 << "\" y=\"" << margin + plot / 2
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 " << margin / 3 << " "
      << margin + plot / 2 << ")\">p_n (0 to " << sweep.p_n_max << ")</text>\n";
  const char* labels[] = {"tractable", "intractable_possible", "impossible", "boundary"};
  const Regime regimes[] = {Regime::Tractable, Regime::IntractablePossible, Regime::Impossible,
                            Regime::Boundary};
  for (int k = 0; k < 4; ++k) {
    const double y = margin + 24.0 * k;
    out << "<rect x=\"" << margin + plot + 16 << "\" y=\"" << y
        << "\" width=\"14\" height=\"14\" fill=\"" << regime_color(regimes[k]) << "\"/>\n";
    out << "<text x=\"" << margin + plot + 36 << "\" y=\"" << y + 12 << "\" font-size=\"12\">"
        << labels[k] << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::vector<std::pair<double, RiskEstimate>> sweep_empirical_boundary(
    ExperimentConfig base, std::span<const double> betas) {
  std::vector<std::pair<double, RiskEstimate>> rows;
  rows.reserve(betas.size());
  for (double beta : betas) {
    ExperimentConfig cfg = base;
    cfg.beta = beta;
    rows.emplace_back(beta, estimate_risk(cfg));
  }
  return rows;
}

std::string risk_csv(const ExperimentConfig& cfg,
                     std::span<const std::pair<double, RiskEstimate>> rows) {
  std::string out = config_echo_csv(cfg) + risk_csv_header() + "\n";
  for (const auto& [beta, est] : rows) {
    ExperimentConfig point = cfg;
    point.beta = beta;
    out += risk_csv_row(point, est) + "\n";
  }
  return out;
}

std::string risk_curve_svg(std::span<const std::pair<double, RiskEstimate>> rows) {
  if (rows.empty()) throw std::invalid_argument("risk_curve_svg: no rows");
  const double plot_w = 480.0, plot_h = 320.0, margin = 60.0;
  double beta_min = rows.front().first, beta_max = rows.front().first;
  for (const auto& [beta, est] : rows) {
    beta_min = std::min(beta_min, beta);
    beta_max = std::max(beta_max, beta);
  }
  const double span_beta = beta_max > beta_min ? beta_max - beta_min : 1.0;
  const double y_max = 2.0;  // risk lives in [0, 2]
  const auto px = [&](double beta) { return margin + (beta - beta_min) / span_beta * plot_w; };
  const auto py = [&](double risk) {
    return margin + plot_h - std::clamp(risk, 0.0, y_max) / y_max * plot_h;
  };
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << plot_w + 2 * margin
      << "\" height=\"" << plot_h + 2 * margin << "\">\n";
  out << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"#000\"/>\n";
  out << "<polyline fill=\"none\" stroke=\"#1565c0\" stroke-width=\"2\" points=\"";
  for (const auto& [beta, est] : rows) out << px(beta) << ',' << py(est.risk_hat) << ' ';
  out << "\"/>\n";
  for (const auto& [beta, est] : rows) {
    out << "<line x1=\"" << px(beta) << "\" y1=\"" << py(est.risk_hat - est.ci_halfwidth)
        << "\" x2=\"" << px(beta) << "\" y2=\"" << py(est.risk_hat + est.ci_halfwidth)
        << "\" stroke=\"#1565c0\"/>\n";
    out << "<circle cx=\"" << px(beta) << "\" cy=\"" << py(est.risk_hat)
        << "\" r=\"3\" fill=\"#1565c0\"/>\n";
  }
  out << "<text x=\"" << margin + plot_w / 2 << "\" y=\"" << plot_h + 2 * margin - 16
      << "\" text-anchor=\"middle\">beta_star</text>\n";
  out << "<text x=\"16\" y=\"" << margin + plot_h / 2 << "\" transform=\"rotate(-90 16 "
      << margin + plot_h / 2 << ")\" text-anchor=\"middle\">risk</text>\n";
  out << "</svg>\n";
  return out.str();
}

}  // namespace sqphase
