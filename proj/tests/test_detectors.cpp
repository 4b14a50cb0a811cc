#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "sqphase/detectors.hpp"
#include "sqphase/models.hpp"
#include "sqphase/oracle.hpp"
#include "sqphase/rng.hpp"
#include "sqphase/structure.hpp"

using namespace sqphase;

namespace {

ProblemInstance sm_instance(int d, int s, double beta, double alpha) {
  return ProblemInstance::shifted_mean(StructureClass::sparse(d, s), beta, alpha);
}

// Direct mixture-likelihood-ratio evaluation in plain double arithmetic.
double brute_lr(const DataMatrix& data, const ProblemInstance& inst) {
  double acc = 0.0;
  const std::vector<IndexSet> all = enumerate_class(inst.cls);
  for (const IndexSet& set : all) {
    double prod = 1.0;
    for (int i = 0; i < data.n; ++i) prod *= likelihood_ratio_point(inst, set, data.row(i));
    acc += prod;
  }
  return acc / static_cast<double>(all.size());
}

// Permanent by direct permutation enumeration.
double brute_permanent(const std::vector<std::vector<double>>& a) {
  std::vector<int> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  double total = 0.0;
  do {
    double prod = 1.0;
    for (std::size_t i = 0; i < a.size(); ++i) prod *= a[i][static_cast<std::size_t>(perm[i])];
    total += prod;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

// Fixed-response oracle for tie semantics.
class ConstantOracle : public OracleSession {
 public:
  explicit ConstantOracle(double value) : value_(value) {}

 protected:
  double respond_impl(const Query&) override { return value_; }

 private:
  double value_;
};

}  // namespace

TEST_CASE("detector names round-trip") {
  for (DetectorSetting s :
       {DetectorSetting::SM1, DetectorSetting::SM2, DetectorSetting::SM3, DetectorSetting::SM4a,
        DetectorSetting::SM4b, DetectorSetting::PM_SM1, DetectorSetting::PM_SM3,
        DetectorSetting::PM_SM4a, DetectorSetting::SPCA1, DetectorSetting::SPCA2,
        DetectorSetting::LR})
    CHECK(detector_from_name(detector_name(s)) == s);
  CHECK_THROWS_AS(detector_from_name("SM9"), std::invalid_argument);
}

TEST_CASE("detector construction enforces model and class compatibility") {
  const ProblemInstance sm = sm_instance(9, 3, 0.5, 1.0);
  const ProblemInstance pm =
      ProblemInstance::shifted_mean(StructureClass::matching(9), 0.5, 1.0);
  const ProblemInstance sp = ProblemInstance::spiked(StructureClass::sparse(9, 3), 0.5);
  CHECK_NOTHROW(Detector::make(DetectorSetting::SM2, sm, 100));
  CHECK_THROWS_AS(Detector::make(DetectorSetting::SM2, sp, 100), std::invalid_argument);
  CHECK_THROWS_AS(Detector::make(DetectorSetting::SPCA1, sm, 100), std::invalid_argument);
  CHECK_NOTHROW(Detector::make(DetectorSetting::SPCA1, sp, 100));
  CHECK_THROWS_AS(Detector::make(DetectorSetting::PM_SM1, sm, 100), std::invalid_argument);
  CHECK_NOTHROW(Detector::make(DetectorSetting::PM_SM1, pm, 100));
  CHECK_THROWS_AS(Detector::make(DetectorSetting::SM4a, pm, 100), std::invalid_argument);
  CHECK_THROWS_AS(Detector::make(DetectorSetting::SM2, sm, 0), std::invalid_argument);
  // LR runs under either model.
  CHECK_NOTHROW(Detector::make(DetectorSetting::LR, sp, 100));
}

TEST_CASE("schedules have the declared shape") {
  const ProblemInstance sm = sm_instance(5, 2, 0.6, 0.5);
  const Detector sm1 = Detector::make(DetectorSetting::SM1, sm, 100);
  REQUIRE(sm1.build_schedule().size() == 1);
  CHECK(sm1.build_schedule()[0].descriptor->family == QueryFamily::ScaledSumThreshold);
  CHECK(sm1.build_schedule()[0].descriptor->threshold ==
        doctest::Approx(std::sqrt(2.0 * std::log(100.0))).epsilon(1e-12));

  const Detector sm2 = Detector::make(DetectorSetting::SM2, sm, 100);
  const std::vector<Query> cols = sm2.build_schedule();
  REQUIRE(cols.size() == 5);
  for (int t = 0; t < 5; ++t) {
    CHECK(cols[t].descriptor->coordinate == t + 1);
    CHECK(cols[t].descriptor->threshold == doctest::Approx(0.3).epsilon(1e-12));
  }

  const Detector sm3 = Detector::make(DetectorSetting::SM3, sm, 100);
  REQUIRE(sm3.build_schedule().size() == 1);
  CHECK(sm3.build_schedule()[0].descriptor->subset == std::vector<int>{1, 2, 3, 4, 5});

  const Detector sm4a = Detector::make(DetectorSetting::SM4a, sm, 100);
  CHECK(sm4a.build_schedule().size() == 10);  // C(5, 2)
  CHECK(sm4a.budget() == 10);

  const ProblemInstance pm =
      ProblemInstance::shifted_mean(StructureClass::matching(9), 0.6, 1.0);
  const Detector pm4 = Detector::make(DetectorSetting::PM_SM4a, pm, 100);
  CHECK(pm4.build_schedule().size() == 6);  // 3!

  const ProblemInstance sp = ProblemInstance::spiked(StructureClass::sparse(5, 2), 0.4);
  const Detector spca1 = Detector::make(DetectorSetting::SPCA1, sp, 100);
  CHECK(spca1.build_schedule().size() == 5);
  CHECK(spca1.build_schedule()[0].descriptor->threshold == doctest::Approx(1.2).epsilon(1e-12));
  const Detector spca2 = Detector::make(DetectorSetting::SPCA2, sp, 100);
  CHECK(spca2.build_schedule().size() == 10);
  CHECK(spca2.build_schedule()[0].descriptor->threshold == doctest::Approx(1.4).epsilon(1e-12));

  CHECK(Detector::make(DetectorSetting::LR, sm, 100).build_schedule().empty());
}

TEST_CASE("budget limit truncates the schedule and the declared budget") {
  const ProblemInstance sm = sm_instance(6, 2, 0.6, 0.5);
  const Detector ltd = Detector::make(DetectorSetting::SM4a, sm, 100, 8.0, 4);
  CHECK(ltd.build_schedule().size() == 4);
  CHECK(ltd.budget() == 4);
  // The cap guards enumeration-sized batteries.
  const ProblemInstance wide = sm_instance(40, 10, 0.6, 0.5);
  const Detector big = Detector::make(DetectorSetting::SM4a, wide, 100);
  CHECK_THROWS_AS(big.budget(), CapExceededError);
  CHECK_THROWS_AS(big.build_schedule(), CapExceededError);
}

TEST_CASE("reduced support interpolates between one and s") {
  const Detector sm4b = Detector::make(DetectorSetting::SM4b, sm_instance(100, 5, 0.6, 0.5), 100);
  CHECK(sm4b.reduced_support() == 3);  // ceil(100 / (8 log 100))
  // Tiny n clamps to 1, huge n clamps to s.
  CHECK(Detector::make(DetectorSetting::SM4b, sm_instance(100, 5, 0.6, 0.5), 1)
            .reduced_support() == 1);
  CHECK(Detector::make(DetectorSetting::SM4b, sm_instance(100, 5, 0.6, 0.5), 100000)
            .reduced_support() == 5);
  const Detector d = Detector::make(DetectorSetting::SM4b, sm_instance(100, 5, 0.6, 0.5), 100);
  CHECK(d.build_schedule().size() == 161700);  // C(100, 3)
}

TEST_CASE("thresholds match their closed forms") {
  CHECK(Detector::make(DetectorSetting::SM1, sm_instance(5, 2, 0.6, 1.0), 100).threshold() ==
        doctest::Approx(0.12620325972941138).epsilon(1e-12));
  CHECK(Detector::make(DetectorSetting::SM2, sm_instance(5, 2, 0.8, 0.5), 100).threshold() ==
        doctest::Approx(0.3764092470080549).epsilon(1e-12));
  CHECK(Detector::make(DetectorSetting::SM3, sm_instance(16, 2, 0.6, 0.5), 100).threshold() ==
        doctest::Approx(0.45231892836164966).epsilon(1e-12));
  CHECK(Detector::make(DetectorSetting::SM4a, sm_instance(5, 2, 0.6, 0.5), 100).threshold() ==
        doctest::Approx(0.4606866202704363).epsilon(1e-12));
  CHECK(Detector::make(DetectorSetting::SM4b, sm_instance(100, 5, 0.6, 0.5), 100).threshold() ==
        doctest::Approx(0.4266658861459333).epsilon(1e-12));
  const ProblemInstance sp = ProblemInstance::spiked(StructureClass::sparse(5, 2), 0.4);
  CHECK(Detector::make(DetectorSetting::SPCA1, sp, 100).threshold() ==
        doctest::Approx(0.28127942544689294).epsilon(1e-12));
  CHECK(Detector::make(DetectorSetting::SPCA2, sp, 100).threshold() ==
        doctest::Approx(0.25263906494704697).epsilon(1e-12));
  CHECK(Detector::make(DetectorSetting::LR, sp, 100).threshold() == 0.0);
}

TEST_CASE("eta reflects the declared query-space size") {
  const ProblemInstance sm = sm_instance(100, 5, 0.6, 0.5);
  CHECK(Detector::make(DetectorSetting::SM1, sm, 100).eta() == 0.0);
  CHECK(Detector::make(DetectorSetting::SM3, sm, 100).eta() == 0.0);
  CHECK(Detector::make(DetectorSetting::SM2, sm, 100).eta() ==
        doctest::Approx(std::log(100.0)).epsilon(1e-12));
  CHECK(Detector::make(DetectorSetting::SM4a, sm, 100).eta() ==
        doctest::Approx(18.136824941982425).epsilon(1e-12));  // log C(100, 5)
  const ProblemInstance pm =
      ProblemInstance::shifted_mean(StructureClass::matching(16), 0.6, 1.0);
  CHECK(Detector::make(DetectorSetting::PM_SM4a, pm, 100).eta() ==
        doctest::Approx(std::log(24.0)).epsilon(1e-12));  // log 4!
}

TEST_CASE("detectors separate strongly signaled instances through the ideal oracle") {
  struct Case {
    DetectorSetting setting;
    ProblemInstance inst;
    IndexSet planted;
    long n;
  };
  // The single scaled-sum batteries need the planted shift to clear
  // sqrt(2 log n), so they run with a smaller declared sample size.
  const std::vector<Case> cases{
      {DetectorSetting::SM1, sm_instance(4, 2, 3.0, 1.0), {{1, 2}}, 100},
      {DetectorSetting::SM2, sm_instance(4, 2, 3.0, 1.0), {{1, 2}}, 100000},
      {DetectorSetting::SM3, sm_instance(4, 2, 3.0, 1.0), {{2, 3}}, 100000},
      {DetectorSetting::SM4a, sm_instance(4, 2, 3.0, 1.0), {{2, 4}}, 100000},
      {DetectorSetting::PM_SM1,
       ProblemInstance::shifted_mean(StructureClass::matching(4), 3.0, 1.0),
       {{1, 4}},
       100},
      {DetectorSetting::PM_SM3,
       ProblemInstance::shifted_mean(StructureClass::matching(4), 3.0, 1.0),
       {{2, 3}},
       100000},
      {DetectorSetting::PM_SM4a,
       ProblemInstance::shifted_mean(StructureClass::matching(4), 3.0, 1.0),
       {{1, 4}},
       100000},
      {DetectorSetting::SPCA1, ProblemInstance::spiked(StructureClass::sparse(4, 1), 0.9),
       {{3}},
       100000},
      {DetectorSetting::SPCA2, ProblemInstance::spiked(StructureClass::sparse(4, 1), 0.9),
       {{3}},
       100000},
  };
  for (const Case& c : cases) {
    const Detector det = Detector::make(c.setting, c.inst, c.n);
    IdealOracleSession null_session(c.inst, std::nullopt);
    const Verdict v0 = det.run(null_session);
    CHECK_FALSE(v0.reject);  // null stays below: margin > 0
    IdealOracleSession alt_session(c.inst, c.planted);
    const Verdict v1 = det.run(alt_session);
    CHECK(v1.reject);  // planted gap beats the margin
  }
}

TEST_CASE("ties reject") {
  const ProblemInstance sm = sm_instance(4, 2, 0.6, 0.5);
  const Detector det = Detector::make(DetectorSetting::SM2, sm, 100);
  ConstantOracle at_threshold(det.threshold());
  CHECK(det.run(at_threshold).reject);
  ConstantOracle below(det.threshold() - 1e-9);
  CHECK_FALSE(det.run(below).reject);
}

TEST_CASE("LR detector thresholds the log likelihood ratio at zero") {
  const ProblemInstance sm = sm_instance(4, 2, 1.0, 1.0);
  const Detector det = Detector::make(DetectorSetting::LR, sm, 3);
  RngStream rng(61, 0, StreamRole::Data);
  const DataMatrix data = sample_data(sm, std::nullopt, 3, rng);
  const Verdict v = det.run_on_data(data);
  CHECK(v.statistic == doctest::Approx(log_lr_statistic(data, sm)).epsilon(1e-12));
  CHECK(v.reject == (v.statistic >= 0.0));
  IdealOracleSession session(sm, std::nullopt);
  CHECK_THROWS_AS(det.run(session), std::invalid_argument);
}

TEST_CASE("log likelihood ratio matches direct enumeration") {
  RngStream rng(67, 0, StreamRole::Data);
  const ProblemInstance sm = sm_instance(5, 2, 0.7, 0.4);
  const DataMatrix data = sample_data(sm, IndexSet{{1, 5}}, 4, rng);
  CHECK(log_lr_statistic(data, sm) == doctest::Approx(std::log(brute_lr(data, sm))).epsilon(1e-10));

  const ProblemInstance sp = ProblemInstance::spiked(StructureClass::sparse(4, 2), 0.5);
  const DataMatrix data2 = sample_data(sp, IndexSet{{2, 3}}, 4, rng);
  CHECK(log_lr_statistic(data2, sp) ==
        doctest::Approx(std::log(brute_lr(data2, sp))).epsilon(1e-10));

  const ProblemInstance pm =
      ProblemInstance::shifted_mean(StructureClass::matching(9), 0.6, 1.0);
  const DataMatrix data3 = sample_data(pm, IndexSet{{3, 5, 7}}, 3, rng);
  CHECK(log_lr_statistic(data3, pm) ==
        doctest::Approx(std::log(brute_lr(data3, pm))).epsilon(1e-10));
}

TEST_CASE("degenerate mixtures have closed-form likelihood ratios") {
  const StructureClass cls = StructureClass::sparse(4, 2);
  // alpha = 0: the alternative equals the null, LR = 1 identically.
  const ProblemInstance off = ProblemInstance::shifted_mean(cls, 0.9, 0.0);
  RngStream rng(68, 0, StreamRole::Data);
  const DataMatrix data = sample_data(off, std::nullopt, 5, rng);
  CHECK(lr_statistic(data, off) == doctest::Approx(1.0).epsilon(1e-12));
  // alpha = 1 on all-zero data: every member contributes exp(-n s beta^2 / 2).
  const ProblemInstance full = ProblemInstance::shifted_mean(cls, 0.9, 1.0);
  DataMatrix zeros;
  zeros.n = 3;
  zeros.d = 4;
  zeros.values.assign(12, 0.0);
  CHECK(log_lr_statistic(zeros, full) ==
        doctest::Approx(-3.0 * 2.0 * 0.81 / 2.0).epsilon(1e-12));
}

TEST_CASE("permanent agrees with permutation enumeration") {
  CHECK(permanent({{1.0, 2.0}, {3.0, 4.0}}) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(permanent({{1, 1, 1}, {1, 1, 1}, {1, 1, 1}}) == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(permanent({}) == 1.0);
  std::vector<std::vector<double>> id4(4, std::vector<double>(4, 0.0));
  for (int i = 0; i < 4; ++i) id4[i][i] = 1.0;
  CHECK(permanent(id4) == doctest::Approx(1.0).epsilon(1e-12));

  std::uint64_t state = 0x243f6a8885a308d3ull;
  const auto next = [&state]() {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    return static_cast<double>(state >> 40) / 16777216.0;
  };
  for (int round = 0; round < 20; ++round) {
    const std::size_t r = 2 + round % 4;
    std::vector<std::vector<double>> a(r, std::vector<double>(r));
    for (auto& row : a)
      for (double& v : row) v = 2.0 * next() - 1.0;
    CHECK(permanent(a) == doctest::Approx(brute_permanent(a)).epsilon(1e-9));
  }
  CHECK_THROWS_AS(permanent(std::vector<std::vector<double>>(13, std::vector<double>(13, 1.0))),
                  CapExceededError);
  CHECK_THROWS_AS(permanent({{1.0, 2.0}}), std::invalid_argument);
}

TEST_CASE("matching likelihood ratio via one permanent matches enumeration") {
  RngStream rng(71, 0, StreamRole::Data);
  for (int d : {4, 9, 16}) {
    const ProblemInstance pm =
        ProblemInstance::shifted_mean(StructureClass::matching(d), 0.5, 1.0);
    const DataMatrix data = sample_data(pm, std::nullopt, 3, rng);
    CHECK(log_matching_lr_via_permanent(data, pm) ==
          doctest::Approx(log_lr_statistic(data, pm)).epsilon(1e-10));
  }
  const ProblemInstance partial =
      ProblemInstance::shifted_mean(StructureClass::matching(4), 0.5, 0.7);
  DataMatrix data;
  data.n = 1;
  data.d = 4;
  data.values.assign(4, 0.0);
  CHECK_THROWS_AS(log_matching_lr_via_permanent(data, partial), std::invalid_argument);
}

TEST_CASE("row-subset expansion reproduces the likelihood ratio") {
  RngStream rng(73, 0, StreamRole::Data);
  const ProblemInstance sm = sm_instance(5, 2, 0.6, 0.35);
  const DataMatrix data = sample_data(sm, IndexSet{{2, 4}}, 5, rng);
  CHECK(generalized_permanent_sum(data, sm) ==
        doctest::Approx(lr_statistic(data, sm)).epsilon(1e-9));

  const ProblemInstance pm =
      ProblemInstance::shifted_mean(StructureClass::matching(9), 0.5, 1.0);
  const DataMatrix data2 = sample_data(pm, std::nullopt, 4, rng);
  CHECK(generalized_permanent_sum(data2, pm) ==
        doctest::Approx(lr_statistic(data2, pm)).epsilon(1e-9));

  const ProblemInstance off = sm_instance(5, 2, 0.6, 0.0);
  const DataMatrix data3 = sample_data(off, std::nullopt, 4, rng);
  CHECK(generalized_permanent_sum(data3, off) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(generalized_permanent_sum(data, sm, 3), CapExceededError);
  const ProblemInstance sp = ProblemInstance::spiked(StructureClass::sparse(5, 2), 0.5);
  CHECK_THROWS_AS(generalized_permanent_sum(data, sp), std::invalid_argument);
}

TEST_CASE("query batteries running on data match a manual data-oracle pass") {
  const ProblemInstance sm = sm_instance(6, 2, 0.8, 1.0);
  const Detector det = Detector::make(DetectorSetting::SM2, sm, 400);
  RngStream rng(79, 0, StreamRole::Data);
  const DataMatrix data = sample_data(sm, IndexSet{{1, 2}}, 400, rng);
  const Verdict v = det.run_on_data(data);
  double stat = -1.0;
  for (const Query& q : det.build_schedule())
    stat = std::max(stat, data_oracle_respond(q, data));
  CHECK(v.statistic == stat);
  CHECK(v.threshold == det.threshold());
  CHECK(v.reject == (stat >= det.threshold()));
}
