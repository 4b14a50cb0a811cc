#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sqphase/bounds.hpp"
#include "sqphase/common.hpp"
#include "sqphase/detectors.hpp"
#include "sqphase/harness.hpp"
#include "sqphase/models.hpp"
#include "sqphase/structure.hpp"

namespace {

using namespace sqphase;

// Human tables show 6 significant digits; CSV emitters keep full precision.
std::string fmt6(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

// Shortest round-trip representation, matching the JSON config echo.
std::string jnum(double x) { return nlohmann::json(x).dump(); }

// "# key=value" metadata lines, sorted by key.  Every subcommand prepends the
// resolved configuration (defaults included) to its output.
std::string echo_lines(const std::map<std::string, std::string>& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += "# " + k + "=" + v + "\n";
  return out;
}

void write_text(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file: " + path);
  f << content;
}

ModelKind model_from_name(const std::string& name) {
  if (name == "shifted-mean") return ModelKind::ShiftedMean;
  if (name == "spiked-covariance") return ModelKind::SpikedCovariance;
  throw std::invalid_argument("unknown model: " + name);
}

ClassKind class_from_name(const std::string& name) {
  if (name == "sparse") return ClassKind::SparseSupport;
  if (name == "matching") return ClassKind::PerfectMatching;
  throw std::invalid_argument("unknown class: " + name);
}

struct ProblemChoice {
  ProblemFamily family;
  ModelKind model;
  ClassKind cls;
};

ProblemChoice problem_choice(const std::string& tag) {
  if (tag == "sparse-sm")
    return {ProblemFamily::SparseShiftedMean, ModelKind::ShiftedMean, ClassKind::SparseSupport};
  if (tag == "matching-sm")
    return {ProblemFamily::MatchingShiftedMean, ModelKind::ShiftedMean,
            ClassKind::PerfectMatching};
  if (tag == "spca")
    return {ProblemFamily::SparsePca, ModelKind::SpikedCovariance, ClassKind::SparseSupport};
  throw std::invalid_argument("unknown problem: " + tag +
                              " (expected sparse-sm, matching-sm, or spca)");
}

StructureClass build_class(ClassKind kind, int d, int s) {
  if (kind == ClassKind::PerfectMatching) return StructureClass::matching(d);
  if (s < 1) throw std::invalid_argument("--s must be >= 1 for sparse-support problems");
  return StructureClass::sparse(d, s);
}

ProblemInstance build_instance(const ProblemChoice& pc, int d, int s, double beta,
                               double alpha) {
  StructureClass cls = build_class(pc.cls, d, s);
  if (pc.model == ModelKind::SpikedCovariance) return ProblemInstance::spiked(cls, beta);
  return ProblemInstance::shifted_mean(cls, beta, alpha);
}

// SPCA* batteries address the spiked model, PM_* the matching class; explicit
// --model / --class flags override the inference (needed for LR).
void infer_model_class(DetectorSetting setting, ModelKind& model, ClassKind& cls) {
  const std::string name = detector_name(setting);
  if (name.rfind("SPCA", 0) == 0) {
    model = ModelKind::SpikedCovariance;
    cls = ClassKind::SparseSupport;
  } else if (name.rfind("PM_", 0) == 0) {
    model = ModelKind::ShiftedMean;
    cls = ClassKind::PerfectMatching;
  } else {
    model = ModelKind::ShiftedMean;
    cls = ClassKind::SparseSupport;
  }
}

// --- risk / game -------------------------------------------------------------

struct ExperimentOpts {
  std::string detector = "SM2";
  std::string model;  // empty: inferred from the detector
  std::string cls;    // empty: inferred from the detector
  int d = 10;
  int s = 1;
  double beta = 0.5;
  double alpha = 1.0;
  long n = 100;
  double xi = 0.05;
  std::string oracle = "data";
  long trials = 100;
  std::uint64_t seed = 1;
  int workers = 1;
  long budget_T = -1;
  double margin_constant = 8.0;
  std::uint64_t cap = kDefaultEnumerationCap;
  bool validate = false;
  std::vector<double> betas;
  std::string out;
  std::string svg;
};

ExperimentConfig to_config(const ExperimentOpts& o) {
  ExperimentConfig cfg;
  cfg.setting = detector_from_name(o.detector);
  infer_model_class(cfg.setting, cfg.model, cfg.cls_kind);
  if (!o.model.empty()) cfg.model = model_from_name(o.model);
  if (!o.cls.empty()) cfg.cls_kind = class_from_name(o.cls);
  cfg.d = o.d;
  cfg.s = o.s;
  cfg.beta = o.beta;
  cfg.alpha = o.alpha;
  cfg.xi = o.xi;
  cfg.n = o.n;
  cfg.oracle_mode = oracle_mode_from_name(o.oracle);
  cfg.trials = o.trials;
  cfg.seed = o.seed;
  cfg.workers = o.workers;
  cfg.budget_T = o.budget_T;
  cfg.margin_constant = o.margin_constant;
  cfg.cap = o.cap;
  cfg.validate = o.validate;
  return cfg;
}

void add_experiment_flags(CLI::App* cmd, ExperimentOpts& o, bool with_oracle) {
  cmd->add_option("--detector", o.detector, "detector battery name")->capture_default_str();
  cmd->add_option("--model", o.model, "override the model inferred from the detector")
      ->check(CLI::IsMember({"shifted-mean", "spiked-covariance"}));
  cmd->add_option("--class", o.cls, "override the structure class inferred from the detector")
      ->check(CLI::IsMember({"sparse", "matching"}));
  cmd->add_option("--d", o.d, "ambient dimension")->capture_default_str();
  cmd->add_option("--s", o.s, "planted support size (sparse classes)")->capture_default_str();
  cmd->add_option("--beta", o.beta, "signal strength")->capture_default_str();
  cmd->add_option("--alpha", o.alpha, "mixture weight")->capture_default_str();
  cmd->add_option("--n", o.n, "declared sample size behind the oracle")->capture_default_str();
  cmd->add_option("--xi", o.xi, "oracle tail probability")->capture_default_str();
  if (with_oracle)
    cmd->add_option("--oracle", o.oracle, "oracle mode")
        ->check(CLI::IsMember({"data", "ideal", "adversarial"}))
        ->capture_default_str();
  cmd->add_option("--trials", o.trials, "trials per hypothesis")->capture_default_str();
  cmd->add_option("--seed", o.seed, "RNG seed")->capture_default_str();
  cmd->add_option("--workers", o.workers, "worker threads (never changes output)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--T", o.budget_T, "truncate the detector schedule to T queries (-1: full)")
      ->capture_default_str();
  cmd->add_option("--margin-constant", o.margin_constant,
                  "reduced-support constant for SM4b")
      ->capture_default_str();
  cmd->add_option("--cap", o.cap, "enumeration cap")->capture_default_str();
  cmd->add_option("--out", o.out, "output file (default: stdout)");
}

int do_risk(const ExperimentOpts& o) {
  ExperimentConfig cfg = to_config(o);
  std::vector<std::pair<double, RiskEstimate>> rows;
  if (o.betas.empty()) {
    rows.emplace_back(cfg.beta, estimate_risk(cfg));
  } else {
    rows = sweep_empirical_boundary(cfg, o.betas);
  }
  write_text(o.out, risk_csv(cfg, rows));
  if (!o.svg.empty()) write_text(o.svg, risk_curve_svg(rows));
  if (!o.out.empty()) {
    const RiskEstimate& last = rows.back().second;
    std::cout << "rows " << rows.size() << "\n"
              << "risk_hat " << fmt6(last.risk_hat) << "\n";
  }
  return 0;
}

int do_game(const ExperimentOpts& o) {
  ExperimentConfig cfg = to_config(o);
  std::ostringstream records;
  const GameResult g = adversary_game(cfg, &records);
  records << nlohmann::json{{"summary",
                             {{"type1_hat", g.type1_hat},
                              {"type2_hat", g.type2_hat},
                              {"realized_risk", g.realized_risk},
                              {"bound", g.bound},
                              {"sup_cq", g.sup_cq.str()},
                              {"episodes", g.episodes},
                              {"budget", g.budget}}}}
                 .dump()
          << "\n";
  write_text(o.out, records.str());
  if (!o.out.empty()) {
    std::cout << "realized_risk " << fmt6(g.realized_risk) << "\n"
              << "bound " << fmt6(g.bound) << "\n"
              << "budget " << g.budget << "\n";
  }
  return 0;
}

// --- bounds ------------------------------------------------------------------

struct BoundsOpts {
  std::string problem;
  int d = 0;
  int s = -1;
  double beta = 0.0;
  double alpha = 1.0;
  long n = 0;
  double xi = 0.05;
  long T = 0;
  double delta = 0.1;
  std::string out;
};

int do_bounds(const BoundsOpts& o) {
  const ProblemChoice pc = problem_choice(o.problem);
  const ProblemInstance inst = build_instance(pc, o.d, o.s, o.beta, o.alpha);
  const BigInt size = inst.cls.cardinality();
  const BigInt sup = sup_distinguishable_numeric(inst, o.n, o.xi);
  const double bound = risk_lower_bound(o.T, sup, size, o.xi);
  const double chi2 = chi2_mixture_exact(inst, o.n);

  const BoundParams p{.d = o.d,
                      .s = inst.cls.s,
                      .n = o.n,
                      .beta = o.beta,
                      .alpha = o.alpha,
                      .xi = o.xi,
                      .delta = o.delta};
  // Closed forms whose finite-scale hypotheses fail are reported, not evaluated.
  const auto closed = [](auto&& fn) -> std::string {
    try {
      return fmt6(fn());
    } catch (const HypothesisError& e) {
      return std::string("N/A (") + e.what() + ")";
    }
  };

  std::ostringstream table;
  table << std::left;
  const auto row = [&table](const std::string& name, const std::string& value) {
    table << std::setw(30) << name << value << "\n";
  };
  row("class_size", size.str());
  row("sup_distinguishable", sup.str());
  row("risk_bound_at_budget", fmt6(bound));
  row("chi2_mixture", fmt6(chi2));
  row("lecam_bound", fmt6(lecam_risk_lower_bound(chi2)));
  switch (pc.family) {
    case ProblemFamily::SparseShiftedMean:
      row("closed_form_small_support",
          closed([&] { return closed_form_bound_sparse(p, SparseRegimeSetting::SmallSupport); }));
      row("closed_form_large_support",
          closed([&] { return closed_form_bound_sparse(p, SparseRegimeSetting::LargeSupport); }));
      break;
    case ProblemFamily::MatchingShiftedMean:
      row("closed_form_matching", closed([&] { return closed_form_bound_matching(p); }));
      break;
    case ProblemFamily::SparsePca:
      row("closed_form_spca", closed([&] { return closed_form_bound_spca(p); }));
      break;
  }

  const std::string echo = echo_lines({{"alpha", jnum(o.alpha)},
                                       {"beta", jnum(o.beta)},
                                       {"budget_T", std::to_string(o.T)},
                                       {"d", std::to_string(o.d)},
                                       {"delta", jnum(o.delta)},
                                       {"n", std::to_string(o.n)},
                                       {"problem", o.problem},
                                       {"s", std::to_string(inst.cls.s)},
                                       {"xi", jnum(o.xi)}});
  write_text(o.out, echo + table.str());
  return 0;
}

// --- chi2 --------------------------------------------------------------------

struct Chi2Opts {
  std::string problem;
  int d = 0;
  int s = -1;
  double alpha = 1.0;
  double beta = std::numeric_limits<double>::quiet_NaN();
  double beta2 = std::numeric_limits<double>::quiet_NaN();
  long n = 1;
  std::string out;
};

int do_chi2(const Chi2Opts& o) {
  double beta = o.beta;
  if (std::isnan(beta)) {
    if (std::isnan(o.beta2)) throw std::invalid_argument("chi2 needs --beta or --beta2");
    if (o.beta2 <= 0.0) throw std::invalid_argument("--beta2 must be positive");
    beta = std::sqrt(o.beta2);
  }
  const ProblemChoice pc = problem_choice(o.problem);
  const ProblemInstance inst = build_instance(pc, o.d, o.s, beta, o.alpha);
  const double chi2 = chi2_mixture_exact(inst, o.n);

  const std::string echo = echo_lines({{"alpha", jnum(o.alpha)},
                                       {"beta", jnum(beta)},
                                       {"beta2", jnum(beta * beta)},
                                       {"d", std::to_string(o.d)},
                                       {"n", std::to_string(o.n)},
                                       {"problem", o.problem},
                                       {"s", std::to_string(inst.cls.s)}});
  std::ostringstream table;
  table << std::left << std::setw(30) << "chi2" << fmt6(chi2) << "\n"
        << std::setw(30) << "lecam_bound" << fmt6(lecam_risk_lower_bound(chi2)) << "\n";
  write_text(o.out, echo + table.str());
  return 0;
}

// --- phase -------------------------------------------------------------------

struct PhaseOpts {
  std::string problem;
  double p_s = 0.25;
  double p_alpha = 0.0;
  int res = 51;
  double p_beta_max = 1.0;
  double p_n_max = 2.0;
  std::vector<std::string> slice;
  std::string out;
  std::string svg;
};

int do_phase(const PhaseOpts& o) {
  PhaseSweep sweep;
  sweep.family = problem_choice(o.problem).family;
  sweep.p_s = o.p_s;
  sweep.p_alpha = o.p_alpha;
  sweep.resolution = o.res;
  sweep.p_beta_max = o.p_beta_max;
  sweep.p_n_max = o.p_n_max;
  for (const std::string& kv : o.slice) {
    const auto pos = kv.find('=');
    if (pos == std::string::npos)
      throw std::invalid_argument("--slice expects key=value, got: " + kv);
    const std::string key = kv.substr(0, pos);
    const double value = std::stod(kv.substr(pos + 1));
    if (key == "p_s")
      sweep.p_s = value;
    else if (key == "p_alpha")
      sweep.p_alpha = value;
    else if (key == "p_beta_max")
      sweep.p_beta_max = value;
    else if (key == "p_n_max")
      sweep.p_n_max = value;
    else
      throw std::invalid_argument("unknown slice key: " + key);
  }
  const std::vector<PhasePoint> points = sweep_phase_diagram(sweep);
  write_text(o.out, phase_csv(sweep, points));
  if (!o.svg.empty()) write_text(o.svg, phase_svg(sweep, points));
  return 0;
}

// --- enumerate ---------------------------------------------------------------

struct EnumOpts {
  std::string cls = "sparse";
  int d = 0;
  int s = -1;
  std::string what = "shells";
  std::uint64_t cap = kDefaultEnumerationCap;
  std::string out;
};

std::string enumerate_body(const StructureClass& cls, const std::string& what,
                           std::uint64_t cap) {
  std::string body;
  if (what == "shells") {
    const ShellTable table = shell_counts(cls);
    body = "j,overlap,count\n";
    for (std::size_t j = 0; j < table.counts.size(); ++j)
      body += std::to_string(j) + "," + std::to_string(cls.s - static_cast<int>(j)) + "," +
              table.counts[j].str() + "\n";
    body += "# total=" + table.total.str() + "\n";
  } else {
    for (const IndexSet& member : enumerate_class(cls, cap)) {
      std::string line;
      for (int idx : member.indices) {
        if (!line.empty()) line += ' ';
        line += std::to_string(idx);
      }
      body += line + "\n";
    }
  }
  return body;
}

int do_enumerate(const EnumOpts& o) {
  const StructureClass cls = build_class(class_from_name(o.cls), o.d, o.s);
  std::string body;
  std::filesystem::path cache_file;
  if (const char* dir = std::getenv("SQPHASE_CACHE_DIR"); dir != nullptr && *dir != '\0') {
    cache_file = std::filesystem::path(dir) /
                 (o.cls + "_" + std::to_string(cls.d) + "_" + std::to_string(cls.s) + "_" +
                  o.what + ".txt");
    if (std::filesystem::exists(cache_file)) {
      std::ifstream f(cache_file, std::ios::binary);
      std::ostringstream ss;
      ss << f.rdbuf();
      body = ss.str();
    }
  }
  if (body.empty()) {
    body = enumerate_body(cls, o.what, o.cap);
    if (!cache_file.empty()) {
      std::filesystem::create_directories(cache_file.parent_path());
      std::ofstream f(cache_file, std::ios::binary);
      f << body;
    }
  }
  const std::string echo = echo_lines({{"class", o.cls},
                                       {"d", std::to_string(cls.d)},
                                       {"enumeration_cap", std::to_string(o.cap)},
                                       {"s", std::to_string(cls.s)},
                                       {"what", o.what}});
  write_text(o.out, echo + body);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Oracle-model detection laboratory: protocol bounds, detector risk "
               "experiments, worst-case oracle games, and phase diagrams"};
  app.require_subcommand(1);
  app.set_config("--config", "", "config file; command-line flags take precedence");
  app.set_version_flag("--version", "sqphase 1.0.0");

  ExperimentOpts risk_opts;
  CLI::App* risk = app.add_subcommand("risk", "Monte Carlo risk estimate (CSV)");
  add_experiment_flags(risk, risk_opts, /*with_oracle=*/true);
  risk->add_flag("--validate", risk_opts.validate,
                 "audit data-mode transcripts against exact truth");
  risk->add_option("--betas", risk_opts.betas, "sweep signal strengths (one CSV row each)")
      ->delimiter(',');
  risk->add_option("--svg", risk_opts.svg, "write a risk-curve SVG (requires --betas)");
  risk->callback([&risk_opts] { do_risk(risk_opts); });

  ExperimentOpts game_opts;
  game_opts.oracle = "adversarial";
  CLI::App* game = app.add_subcommand(
      "game", "play the detector against the worst-case oracle (JSON lines)");
  add_experiment_flags(game, game_opts, /*with_oracle=*/false);
  game->callback([&game_opts] { do_game(game_opts); });

  BoundsOpts bounds_opts;
  CLI::App* bounds = app.add_subcommand("bounds", "protocol and statistical lower bounds");
  bounds->add_option("--problem", bounds_opts.problem, "sparse-sm, matching-sm, or spca")
      ->required();
  bounds->add_option("--d", bounds_opts.d, "ambient dimension")->required();
  bounds->add_option("--s", bounds_opts.s, "planted support size (sparse classes)");
  bounds->add_option("--beta", bounds_opts.beta, "signal strength")->required();
  bounds->add_option("--alpha", bounds_opts.alpha, "mixture weight")->capture_default_str();
  bounds->add_option("--n", bounds_opts.n, "declared sample size")->required();
  bounds->add_option("--xi", bounds_opts.xi, "oracle tail probability")->capture_default_str();
  bounds->add_option("--T", bounds_opts.T, "query budget")->capture_default_str();
  bounds->add_option("--delta", bounds_opts.delta, "free exponent of the matching-class form")
      ->capture_default_str();
  bounds->add_option("--out", bounds_opts.out, "output file (default: stdout)");
  bounds->callback([&bounds_opts] { do_bounds(bounds_opts); });

  Chi2Opts chi2_opts;
  CLI::App* chi2 = app.add_subcommand("chi2", "exact chi-squared divergence of the mixture");
  chi2->add_option("--problem", chi2_opts.problem, "sparse-sm, matching-sm, or spca")
      ->required();
  chi2->add_option("--d", chi2_opts.d, "ambient dimension")->required();
  chi2->add_option("--s", chi2_opts.s, "planted support size (sparse classes)");
  chi2->add_option("--alpha", chi2_opts.alpha, "mixture weight")->capture_default_str();
  CLI::Option* beta_opt = chi2->add_option("--beta", chi2_opts.beta, "signal strength");
  chi2->add_option("--beta2", chi2_opts.beta2, "squared signal strength")->excludes(beta_opt);
  chi2->add_option("--n", chi2_opts.n, "sample size")->capture_default_str();
  chi2->add_option("--out", chi2_opts.out, "output file (default: stdout)");
  chi2->callback([&chi2_opts] { do_chi2(chi2_opts); });

  PhaseOpts phase_opts;
  CLI::App* phase = app.add_subcommand("phase", "phase-diagram sweep (CSV, optional SVG)");
  phase->add_option("--problem", phase_opts.problem, "sparse-sm, matching-sm, or spca")
      ->required();
  phase->add_option("--p-s", phase_opts.p_s, "support-size exponent")->capture_default_str();
  phase->add_option("--p-alpha", phase_opts.p_alpha, "mixture-weight exponent")
      ->capture_default_str();
  phase->add_option("--res", phase_opts.res, "grid resolution per axis")
      ->check(CLI::Range(2, 2001))
      ->capture_default_str();
  phase->add_option("--p-beta-max", phase_opts.p_beta_max, "signal-exponent axis maximum")
      ->capture_default_str();
  phase->add_option("--p-n-max", phase_opts.p_n_max, "sample-exponent axis maximum")
      ->capture_default_str();
  phase->add_option("--slice", phase_opts.slice,
                    "key=value overrides (p_s, p_alpha, p_beta_max, p_n_max)");
  phase->add_option("--out", phase_opts.out, "CSV output file (default: stdout)");
  phase->add_option("--svg", phase_opts.svg, "write a heat-map SVG");
  phase->callback([&phase_opts] { do_phase(phase_opts); });

  EnumOpts enum_opts;
  CLI::App* enumerate = app.add_subcommand("enumerate", "dump shell tables or class members");
  enumerate->add_option("--class", enum_opts.cls, "structure class")
      ->check(CLI::IsMember({"sparse", "matching"}))
      ->capture_default_str();
  enumerate->add_option("--d", enum_opts.d, "ambient dimension")->required();
  enumerate->add_option("--s", enum_opts.s, "planted support size (sparse classes)");
  enumerate->add_option("--what", enum_opts.what, "shells or members")
      ->check(CLI::IsMember({"shells", "members"}))
      ->capture_default_str();
  enumerate->add_option("--cap", enum_opts.cap, "enumeration cap")->capture_default_str();
  enumerate->add_option("--out", enum_opts.out, "output file (default: stdout)");
  enumerate->callback([&enum_opts] { do_enumerate(enum_opts); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const CapExceededError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const HypothesisError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
