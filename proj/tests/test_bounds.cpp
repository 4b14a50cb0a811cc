#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "sqphase/bounds.hpp"
#include "sqphase/models.hpp"
#include "sqphase/structure.hpp"

using namespace sqphase;

namespace {

// Independent ball average: mean of h over the m members nearest an anchor.
double brute_quantity(const ProblemInstance& inst, const IndexSet& anchor, std::uint64_t m) {
  double acc = 0.0;
  for (const IndexSet& set : hamming_ball(inst.cls, anchor, m))
    acc += h_value(inst, overlap(anchor, set));
  return acc / static_cast<double>(m);
}

ProblemInstance cq_instance() {
  // alpha = 1 and beta^2 = 0.1: h(z) = exp(z / 10).
  return ProblemInstance::shifted_mean(StructureClass::sparse(4, 2), std::sqrt(0.1), 1.0);
}

}  // namespace

TEST_CASE("risk lower bound evaluates the three-way minimum") {
  CHECK(risk_lower_bound(2, 1, 20, 0.05) == doctest::Approx(0.95).epsilon(1e-12));
  // T = 0: the second branch 1 - 2 xi binds.
  CHECK(risk_lower_bound(0, 5, 20, 0.05) == doctest::Approx(0.9).epsilon(1e-12));
  // Huge budget: nothing positive survives, but the value is still a min with 1.
  CHECK(risk_lower_bound(1000, 10, 20, 0.05) <= 1.0);
  // sup = 0: queries distinguish nothing, risk 1 cannot be beaten.
  CHECK(risk_lower_bound(5, 0, 20, 0.05) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(risk_lower_bound(-1, 1, 20, 0.05), std::invalid_argument);
  CHECK_THROWS_AS(risk_lower_bound(1, 1, 20, 0.3), std::invalid_argument);
}

TEST_CASE("combinatorial quantity matches the direct ball average at every size") {
  const ProblemInstance inst = cq_instance();
  CHECK(combinatorial_quantity(inst, 6) == doctest::Approx(1.1070144050771267).epsilon(1e-12));
  CHECK(combinatorial_quantity(inst, 1) == doctest::Approx(1.2214027581601699).epsilon(1e-12));
  CHECK(combinatorial_quantity(inst, 3) == doctest::Approx(1.1439148647704884).epsilon(1e-12));
  for (std::uint64_t m = 1; m <= 6; ++m)
    CHECK(combinatorial_quantity(inst, m) ==
          doctest::Approx(brute_quantity(inst, {{1, 2}}, m)).epsilon(1e-12));
  CHECK_THROWS_AS(combinatorial_quantity(inst, 0), std::invalid_argument);
  CHECK_THROWS_AS(combinatorial_quantity(inst, 7), std::invalid_argument);
}

TEST_CASE("combinatorial quantity is anchor free and nonincreasing") {
  const ProblemInstance pm =
      ProblemInstance::shifted_mean(StructureClass::matching(9), 0.8, 0.7);
  const BigInt total = pm.cls.cardinality();
  double last = combinatorial_quantity(pm, 1);
  for (BigInt m = 1; m <= total; ++m) {
    const double v = combinatorial_quantity(pm, m);
    CHECK(v <= last + 1e-12);
    last = v;
    for (const IndexSet& anchor : enumerate_class(pm.cls))
      CHECK(v == doctest::Approx(brute_quantity(pm, anchor, m.convert_to<std::uint64_t>()))
                     .epsilon(1e-12));
  }
}

TEST_CASE("numeric sup agrees with a linear scan") {
  const ProblemInstance inst = cq_instance();
  for (long n : {1L, 3L, 10L, 40L})
    for (double xi : {0.05, 0.2}) {
      const double threshold = 1.0 + std::log(1.0 / xi) / static_cast<double>(n);
      BigInt scan = 0;
      for (BigInt m = 1; m <= 6; ++m)
        if (combinatorial_quantity(inst, m) >= threshold) scan = m;
      CHECK(sup_distinguishable_numeric(inst, n, xi) == scan);
    }
  // For very lax thresholds every member qualifies.
  CHECK(sup_distinguishable_numeric(inst, 1000000, 0.24) == 6);
}

TEST_CASE("chi-squared of the full mixture matches the pairwise definition") {
  const ProblemInstance inst = cq_instance();
  CHECK(chi2_mixture_exact(inst, 1) == doctest::Approx(0.10701440507712667).epsilon(1e-12));

  const std::vector<IndexSet> all = enumerate_class(inst.cls);
  for (long n : {1L, 2L, 7L}) {
    double acc = 0.0;
    for (const IndexSet& a : all)
      for (const IndexSet& b : all)
        acc += std::pow(h_value(inst, overlap(a, b)), static_cast<double>(n));
    const double brute = acc / 36.0 - 1.0;
    CHECK(chi2_mixture_exact(inst, n) == doctest::Approx(brute).epsilon(1e-12));
    CHECK(chi2_mixture_exact(inst, std::span<const IndexSet>(all), n) ==
          doctest::Approx(brute).epsilon(1e-12));
  }

  // Two disjoint supports: the diagonal pairs carry h(2)^n, the rest h(0) = 1.
  const std::vector<IndexSet> pair{{{1, 2}}, {{3, 4}}};
  const double sub = chi2_mixture_exact(inst, std::span<const IndexSet>(pair), 5);
  const double expect = (std::pow(h_value(inst, 2), 5.0) + 1.0) / 2.0 - 1.0;
  CHECK(sub == doctest::Approx(expect).epsilon(1e-12));
  CHECK(sub >= 0.0);
}

TEST_CASE("le cam conversion") {
  CHECK(lecam_risk_lower_bound(0.0) == 1.0);
  CHECK(lecam_risk_lower_bound(4.0) == 0.0);
  CHECK(lecam_risk_lower_bound(0.10701440507712667) ==
        doctest::Approx(0.6728694372622352).epsilon(1e-12));
  CHECK_THROWS_AS(lecam_risk_lower_bound(-0.1), std::invalid_argument);
}

TEST_CASE("small-support closed form at a frozen parameter point") {
  // zeta = 10, growth = log(2)/0.1; xi = e^{-20} keeps tau^2/alpha^2 = 1.
  BoundParams p{20, 1, 20, std::sqrt(0.1), 1.0, std::exp(-20.0), 0.1};
  CHECK(closed_form_bound_sparse(p, SparseRegimeSetting::SmallSupport) ==
        doctest::Approx(2.341845232313097e-05).epsilon(1e-10));
  // zeta < 2 violates the hypothesis.
  BoundParams near{4, 2, 20, 0.3, 1.0, 0.05, 0.1};
  CHECK_THROWS_AS(closed_form_bound_sparse(near, SparseRegimeSetting::SmallSupport),
                  HypothesisError);
}

TEST_CASE("large-support closed form at a frozen parameter point") {
  BoundParams p{8, 2, 2, 0.3, 1.0, 0.05, 0.1};
  CHECK(p.gamma() == doctest::Approx(5.085760122820886).epsilon(1e-12));
  CHECK(closed_form_bound_sparse(p, SparseRegimeSetting::LargeSupport) ==
        doctest::Approx(0.0026003352333294778).epsilon(1e-10));
  // Strong signal drives gamma below 2.
  BoundParams strong{8, 2, 2, 3.0, 1.0, 0.05, 0.1};
  CHECK_THROWS_AS(closed_form_bound_sparse(strong, SparseRegimeSetting::LargeSupport),
                  HypothesisError);
}

TEST_CASE("matching closed form at a frozen parameter point") {
  BoundParams p{16, 4, 1, 0.4, 1.0, 0.05, 0.5};
  CHECK(closed_form_bound_matching(p) == doctest::Approx(0.25).epsilon(1e-12));
  // Raising beta breaks the growth hypothesis.
  BoundParams strong{16, 4, 1, 2.0, 1.0, 0.05, 0.5};
  CHECK_THROWS_AS(closed_form_bound_matching(strong), HypothesisError);
}

TEST_CASE("spiked closed form at a frozen parameter point") {
  BoundParams p{100, 2, 100, 0.1, 1.0, 0.05, 0.1};
  CHECK(p.gamma_bar() == doctest::Approx(1.006373550817571).epsilon(1e-12));
  CHECK(p.delta_pca() == doctest::Approx(0.3494850021680094).epsilon(1e-12));
  CHECK(closed_form_bound_spca(p) == doctest::Approx(0.006259090904347871).epsilon(1e-10));
  CHECK(BoundParams{100, 2, 100, 0.5, 1.0, 0.05, 0.1}.gamma_bar() ==
        doctest::Approx(1.3093073414159544).epsilon(1e-12));
  // Tiny n makes tau^2 huge: precondition holds; tiny tau^2 breaks it.
  BoundParams small_tau{100, 2, 100000, 0.1, 1.0, 0.05, 0.1};
  CHECK_THROWS_AS(closed_form_bound_spca(small_tau), HypothesisError);
  // s^2 >= d leaves the exponent undefined.
  BoundParams wide{9, 3, 100, 0.1, 1.0, 0.05, 0.1};
  CHECK_THROWS_AS(closed_form_bound_spca(wide), HypothesisError);
}

TEST_CASE("closed forms dominate the numeric fraction where their hypotheses hold") {
  // Small support: d large relative to s^2, weak signal.
  for (double beta : {0.2, 0.3})
    for (long n : {5L, 20L}) {
      BoundParams p{40, 2, n, beta, 1.0, 0.05, 0.1};
      const ProblemInstance inst =
          ProblemInstance::shifted_mean(StructureClass::sparse(p.d, p.s), beta, 1.0);
      const double closed = closed_form_bound_sparse(p, SparseRegimeSetting::SmallSupport);
      const double numeric =
          ratio(sup_distinguishable_numeric(inst, n, p.xi), inst.cls.cardinality());
      CHECK(closed >= numeric - 1e-12);
    }
  // Matching family.
  for (long n : {1L, 2L}) {
    BoundParams p{16, 4, n, 0.3, 1.0, 0.05, 0.5};
    const ProblemInstance inst =
        ProblemInstance::shifted_mean(StructureClass::matching(p.d), p.beta, 1.0);
    const double closed = closed_form_bound_matching(p);
    const double numeric =
        ratio(sup_distinguishable_numeric(inst, n, p.xi), inst.cls.cardinality());
    CHECK(closed >= numeric - 1e-12);
  }
  // Spiked family.
  for (long n : {50L, 100L}) {
    BoundParams p{64, 2, n, 0.15, 1.0, 0.05, 0.1};
    const ProblemInstance inst =
        ProblemInstance::spiked(StructureClass::sparse(p.d, p.s), p.beta);
    const double closed = closed_form_bound_spca(p);
    const double numeric =
        ratio(sup_distinguishable_numeric(inst, n, p.xi), inst.cls.cardinality());
    CHECK(closed >= numeric - 1e-12);
  }
}

TEST_CASE("phase classification of the sparse shifted-mean family") {
  using F = ProblemFamily;
  CHECK(phase_classify(F::SparseShiftedMean, {0.25, 0.05, 0.3, 0.0}) == Regime::Tractable);
  CHECK(phase_classify(F::SparseShiftedMean, {0.25, 0.2, 0.3, 0.0}) == Regime::Impossible);
  CHECK(phase_classify(F::SparseShiftedMean, {0.5, 0.15, 0.7, 0.3}) ==
        Regime::IntractablePossible);
  CHECK(phase_classify(F::SparseShiftedMean, {0.25, 0.15, 0.3, 0.0}) == Regime::Boundary);
  // The spectral term rescues dense supports.
  CHECK(phase_classify(F::SparseShiftedMean, {0.9, 0.35, 0.2, 0.0}) == Regime::Tractable);
}

TEST_CASE("phase classification of the matching family pins the support exponent") {
  using F = ProblemFamily;
  // Same point is tractable for sparse supports, impossible for matchings.
  const Exponents e{0.9, 0.35, 0.2, 0.0};
  CHECK(phase_classify(F::SparseShiftedMean, e) == Regime::Tractable);
  CHECK(phase_classify(F::MatchingShiftedMean, e) == Regime::Impossible);
  CHECK(phase_classify(F::MatchingShiftedMean, {0.5, 0.2, 0.5, 0.0}) == Regime::Tractable);
}

TEST_CASE("phase classification of the spiked family") {
  using F = ProblemFamily;
  CHECK(phase_classify(F::SparsePca, {0.3, 0.05, 0.8, 0.0}) == Regime::Tractable);
  CHECK(phase_classify(F::SparsePca, {0.3, 0.3, 0.7, 0.0}) == Regime::Impossible);
  CHECK(phase_classify(F::SparsePca, {0.3, 0.15, 0.7, 0.0}) == Regime::IntractablePossible);
  CHECK(phase_classify(F::SparsePca, {0.3, 0.1, 0.5, 0.0}) == Regime::Boundary);
}

TEST_CASE("weighted monotone average orders the two weighted means") {
  const std::vector<double> b{1.0, 2.0, 4.0, 8.0};
  const std::vector<double> a{1.0, 3.0, 9.0, 27.0};
  const std::vector<double> h{5.0, 4.0, 2.0, 2.0};
  const auto [fast, slow] = weighted_monotone_average(a, b, h);
  CHECK(fast == doctest::Approx(89.0 / 40.0).epsilon(1e-12));
  CHECK(slow == doctest::Approx(37.0 / 15.0).epsilon(1e-12));
  CHECK(fast <= slow);

  const std::vector<double> not_geometric{1.0, 2.0, 3.0, 4.0};
  CHECK_THROWS_AS(weighted_monotone_average(a, not_geometric, h), std::invalid_argument);
  const std::vector<double> too_slow{1.0, 1.5, 2.0, 2.5};
  CHECK_THROWS_AS(weighted_monotone_average(too_slow, b, h), std::invalid_argument);
  const std::vector<double> rising{1.0, 2.0, 3.0, 4.0};
  CHECK_THROWS_AS(weighted_monotone_average(a, b, rising), std::invalid_argument);
}

TEST_CASE("heavier tails never raise the weighted average of a decaying sequence") {
  // Randomized inputs satisfying the hypotheses; the ordering must hold.
  std::uint64_t state = 88172645463325252ull;
  const auto next = [&state]() {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    return static_cast<double>(state >> 11) / 9007199254740992.0;
  };
  for (int round = 0; round < 200; ++round) {
    const std::size_t k = 3 + static_cast<std::size_t>(next() * 5);
    const double kappa = 1.2 + next();
    std::vector<double> a(k), b(k), h(k);
    a[0] = b[0] = 1.0;
    h[0] = 10.0 * next();
    for (std::size_t i = 1; i < k; ++i) {
      b[i] = b[i - 1] * kappa;
      a[i] = a[i - 1] * kappa * (1.0 + next());
      h[i] = h[i - 1] - next();
    }
    const auto [fast, slow] = weighted_monotone_average(a, b, h);
    CHECK(fast <= slow + 1e-12);
  }
}
