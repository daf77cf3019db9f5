//
// Copyright 2026 The dpacct Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "dpacct/filters.h"

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "dpacct/analytic_gdp.h"
#include "dpacct/distributions.h"
#include "dpacct/rdp_accountant.h"
#include "gtest/gtest.h"
#include "json.hpp"

namespace dpacct {
namespace {

GdpBudget Budget(double b) { return *GdpBudget::Create(b); }

MuProvider Constant(std::vector<double> mus) {
  return [mus](int64_t, const std::vector<bool>&)
             -> absl::StatusOr<std::vector<double>> { return mus; };
}

TEST(GdpBudgetTest, Validation) {
  EXPECT_FALSE(GdpBudget::Create(0.0).ok());
  EXPECT_FALSE(GdpBudget::Create(-1.0).ok());
  EXPECT_FALSE(GdpBudget::Create(INFINITY).ok());
  EXPECT_EQ(Budget(2.0).remaining_sq(), 4.0);
}

TEST(FilterStepTest, RepeatedPointThree) {
  GdpBudget b = Budget(1.0);
  for (int i = 1; i <= 11; ++i) {
    EXPECT_EQ(FilterStep(b, 0.3), FilterDecision::kCont) << i;
  }
  EXPECT_NEAR(b.spent_sq(), 0.99, 1e-15);
  EXPECT_EQ(FilterStep(b, 0.3), FilterDecision::kHalt);
  EXPECT_NEAR(b.spent_sq(), 0.99, 1e-15);  // unchanged by HALT
}

TEST(FilterStepTest, ZeroAlwaysContinues) {
  GdpBudget b = Budget(0.5);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(FilterStep(b, 0.0), FilterDecision::kCont);
  EXPECT_EQ(b.spent_sq(), 0.0);
}

TEST(FilterStepTest, ExactExhaustion) {
  GdpBudget b = Budget(1.0);
  EXPECT_EQ(FilterStep(b, 1.0), FilterDecision::kCont);
  EXPECT_EQ(b.spent_sq(), 1.0);
  EXPECT_EQ(FilterStep(b, 1e-7), FilterDecision::kHalt);
  EXPECT_EQ(FilterStep(b, 0.0), FilterDecision::kCont);
  GdpBudget quarters = Budget(1.0);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(FilterStep(quarters, 0.5), FilterDecision::kCont);
  }
  EXPECT_EQ(quarters.spent_sq(), 1.0);
  EXPECT_EQ(FilterStep(quarters, 0.5), FilterDecision::kHalt);
}

TEST(GdpFilterTest, HaltIsAbsorbing) {
  GdpFilter f(Budget(1.0));
  EXPECT_EQ(f.Step(0.9), FilterDecision::kCont);
  EXPECT_EQ(f.Step(0.9), FilterDecision::kHalt);
  EXPECT_TRUE(f.halted());
  EXPECT_EQ(f.Step(0.0), FilterDecision::kHalt);
  EXPECT_EQ(f.Step(0.1), FilterDecision::kHalt);
  EXPECT_EQ(f.accepted_steps(), 1);
  EXPECT_STREQ(FilterDecisionName(FilterDecision::kHalt), "HALT");
}

TEST(IndividualFilterTest, SingleConstantStream) {
  const FilterTranscript t = *RunIndividualFilter(1, 20, 1.0, Constant({0.3}));
  EXPECT_EQ(t.active_steps[0], 11);
  EXPECT_EQ(t.steps.size(), 11u);
  EXPECT_NEAR(t.final_spent_sq[0], 0.99, 1e-15);
}

TEST(IndividualFilterTest, AllZeroStaysActive) {
  const FilterTranscript t =
      *RunIndividualFilter(5, 37, 1.0, Constant(std::vector<double>(5, 0.0)));
  EXPECT_EQ(t.steps.size(), 37u);
  for (int64_t a : t.active_steps) EXPECT_EQ(a, 37);
}

TEST(IndividualFilterTest, HeterogeneousConstants) {
  // mu_i = i / 100 with B = 1: individual i is active floor(1e4 / i^2) steps.
  const int64_t n = 101;
  std::vector<double> mus(n);
  for (int64_t i = 0; i < n; ++i) mus[i] = static_cast<double>(i) / 100.0;
  const int64_t k = 10005;
  const FilterTranscript t = *RunIndividualFilter(n, k, 1.0, Constant(mus));
  EXPECT_EQ(t.active_steps[0], k);
  for (int64_t i = 1; i < n; ++i) {
    const int64_t closed = 10000 / (i * i);
    if (10000 % (i * i) != 0) {
      EXPECT_EQ(t.active_steps[i], closed) << "i=" << i;
    } else {
      // Exact-boundary cases: the double nearest i/100 can exceed i/100, so
      // the last step may not fit. The filter must never overspend.
      EXPECT_TRUE(t.active_steps[i] == closed || t.active_steps[i] == closed - 1)
          << "i=" << i;
    }
    double sum = 0.0;
    for (int64_t s = 0; s < t.active_steps[i]; ++s) sum += mus[i] * mus[i];
    EXPECT_LE(sum, 1.0);
    EXPECT_GT(sum + mus[i] * mus[i], 1.0);
  }
}

TEST(IndividualFilterTest, ProviderViolations) {
  EXPECT_EQ(RunIndividualFilter(2, 5, 1.0, Constant({0.1, -0.1})).status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(RunIndividualFilter(2, 5, 1.0, Constant({0.1, NAN})).status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(
      RunIndividualFilter(2, 5, 1.0, Constant({0.1, INFINITY})).status().code(),
      absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(RunIndividualFilter(2, 5, 1.0, Constant({0.1})).status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_FALSE(RunIndividualFilter(0, 5, 1.0, Constant({})).ok());
  EXPECT_FALSE(RunIndividualFilter(1, 5, 0.0, Constant({0.1})).ok());
}

TEST(IndividualFilterTest, StoppingTimeContract) {
  // The provider for step j may only run after step j - 1 was released.
  int64_t last_released = 0;
  int64_t last_queried = 0;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 0.4);
  const MuProvider provider =
      [&](int64_t step,
          const std::vector<bool>& active) -> absl::StatusOr<std::vector<double>> {
    EXPECT_EQ(step, last_queried + 1);
    EXPECT_EQ(step, last_released + 1);
    last_queried = step;
    EXPECT_EQ(active.size(), 3u);
    return std::vector<double>{u(rng), u(rng), u(rng)};
  };
  const ReleaseFn release = [&](int64_t step, const std::vector<bool>&) {
    EXPECT_EQ(step, last_queried);
    last_released = step;
    return absl::OkStatus();
  };
  const FilterTranscript t = *RunIndividualFilter(3, 50, 1.0, provider, release);
  EXPECT_EQ(static_cast<int64_t>(t.steps.size()), last_released);
}

TEST(IndividualFilterTest, ReleaseErrorsPropagate) {
  const ReleaseFn release = [](int64_t step, const std::vector<bool>&) {
    return step == 3 ? absl::InternalError("boom") : absl::OkStatus();
  };
  EXPECT_EQ(RunIndividualFilter(1, 10, 1.0, Constant({0.1}), release)
                .status()
                .code(),
            absl::StatusCode::kInternal);
}

TEST(IndividualFilterTest, DroppedIndividualsContributeZero) {
  const FilterTranscript t =
      *RunIndividualFilter(2, 10, 1.0, Constant({0.6, 0.1}));
  ASSERT_EQ(t.steps.size(), 10u);
  EXPECT_EQ(t.active_steps[0], 2);
  for (const TranscriptStep& s : t.steps) {
    if (s.step > 2) {
      EXPECT_FALSE(s.active[0]);
      EXPECT_EQ(s.mu[0], 0.0);
    }
    EXPECT_TRUE(s.active[1]);
  }
}

TEST(IndividualFilterTest, SingleIndividualMatchesGlobalFilter) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> stream(60);
    for (double& m : stream) m = u(rng);
    const FilterTranscript ind = *RunIndividualFilter(
        1, 60, 1.0,
        [&](int64_t step, const std::vector<bool>&)
            -> absl::StatusOr<std::vector<double>> {
          return std::vector<double>{stream[step - 1]};
        });
    const FilterTranscript glob = *RunGlobalFilter(
        60, 1.0,
        [&](int64_t step) -> absl::StatusOr<double> { return stream[step - 1]; });
    ASSERT_EQ(ind.steps.size(), glob.steps.size());
    for (size_t s = 0; s < ind.steps.size(); ++s) {
      EXPECT_EQ(ind.steps[s].mu, glob.steps[s].mu);
      EXPECT_EQ(ind.steps[s].spent_sq, glob.steps[s].spent_sq);
    }
    EXPECT_EQ(ind.final_spent_sq, glob.final_spent_sq);
    EXPECT_EQ(TranscriptToJsonLines(ind), TranscriptToJsonLines(glob));
  }
}

TEST(IndividualFilterTest, SafetyOnRandomAdaptiveStreams) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const int64_t n = 4;
    const double budget = 0.5 + 2.0 * u(rng);
    std::vector<double> released_sum(n, 0.0);
    // Adaptive: the next mu depends on what has been spent so far.
    const FilterTranscript t = *RunIndividualFilter(
        n, 80, budget,
        [&](int64_t, const std::vector<bool>&)
            -> absl::StatusOr<std::vector<double>> {
          std::vector<double> mus(n);
          for (int64_t i = 0; i < n; ++i) {
            const double r = u(rng);
            mus[i] = r < 0.1 ? 0.0
                     : r < 0.2 ? std::sqrt(std::max(
                                     0.0, budget * budget - released_sum[i]))
                               : u(rng) * 0.6;
          }
          return mus;
        },
        [&](int64_t step, const std::vector<bool>& active) {
          (void)step;
          (void)active;
          return absl::OkStatus();
        });
    std::vector<double> sum(n, 0.0);
    for (const TranscriptStep& s : t.steps) {
      for (int64_t i = 0; i < n; ++i) {
        sum[i] += s.mu[i] * s.mu[i];
        EXPECT_LE(sum[i], budget * budget);
        EXPECT_EQ(sum[i], s.spent_sq[i]);
        released_sum[i] = s.spent_sq[i];
      }
    }
  }
}

TEST(TranscriptJsonTest, Schema) {
  const FilterTranscript t = *RunIndividualFilter(3, 5, 0.5, Constant({0.3, 0.0, 0.2}));
  std::istringstream lines(TranscriptToJsonLines(t));
  std::string line;
  std::vector<nlohmann::json> records;
  while (std::getline(lines, line)) records.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(records.size(), t.steps.size() + 2);
  EXPECT_EQ(records.front()["type"], "header");
  EXPECT_EQ(records.front()["budget"], 0.5);
  EXPECT_EQ(records.front()["data_size"], 3);
  EXPECT_EQ(records[1]["type"], "step");
  EXPECT_EQ(records[1]["step"], 1);
  EXPECT_EQ(records[1]["active"], "111");
  EXPECT_EQ(records[1]["mu"][0], 0.3);
  EXPECT_EQ(records[3]["active"], "011");
  EXPECT_EQ(records.back()["type"], "summary");
  EXPECT_EQ(records.back()["released_steps"], 5);
  EXPECT_EQ(records.back()["active_steps"][0], 2);
}

TEST(OdometerTest, UnitWindowsUnitSteps) {
  GdpOdometer odo = *GdpOdometer::CreateUniform(1.0);
  for (int m = 1; m <= 10; ++m) {
    const OdometerEvent e = odo.Advance(1.0);
    EXPECT_TRUE(e.accepted);
    ASSERT_TRUE(e.checkpoint.has_value());
    EXPECT_EQ(e.checkpoint->index, m);
    EXPECT_EQ(e.checkpoint->last_step, m);
    EXPECT_NEAR(e.checkpoint->guarantee, std::sqrt(m), 1e-15);
  }
}

TEST(OdometerTest, NoStepsNoCheckpoints) {
  GdpOdometer odo = *GdpOdometer::CreateUniform(1.0);
  EXPECT_EQ(odo.released(), 0);
  EXPECT_EQ(odo.guarantee(), 0.0);
}

TEST(OdometerTest, TwoAndAHalfUnitsGiveTwoCheckpoints) {
  GdpOdometer odo = *GdpOdometer::CreateUniform(1.0);
  int checkpoints = 0;
  for (int i = 0; i < 10; ++i) {
    const OdometerEvent e = odo.Advance(0.5);
    EXPECT_TRUE(e.accepted);
    checkpoints += e.checkpoint.has_value();
  }
  EXPECT_EQ(checkpoints, 2);
  EXPECT_EQ(odo.released(), 2);
  EXPECT_EQ(odo.window_spent_sq(), 0.5);
}

TEST(OdometerTest, OverflowClosesWindowAndOversizedStepIsRefused) {
  GdpOdometer odo = *GdpOdometer::Create({1.0, 2.0, 1.0});
  EXPECT_FALSE(odo.Advance(0.8).checkpoint.has_value());
  // 0.64 + 0.64 > 1: window 1 closes at step 1, the step opens window 2.
  OdometerEvent e = odo.Advance(0.8);
  EXPECT_TRUE(e.accepted);
  ASSERT_TRUE(e.checkpoint.has_value());
  EXPECT_EQ(e.checkpoint->last_step, 1);
  EXPECT_NEAR(e.checkpoint->guarantee, 1.0, 1e-15);
  // Exhaust window 2 exactly (budget 4).
  e = odo.Advance(std::sqrt(4.0 - 0.64));
  ASSERT_TRUE(e.checkpoint.has_value());
  EXPECT_NEAR(e.checkpoint->guarantee, std::sqrt(5.0), 1e-12);
  // Window 3 has budget 1; a step of 1.5 never fits.
  e = odo.Advance(1.5);
  EXPECT_FALSE(e.accepted);
  EXPECT_TRUE(odo.Advance(1.0).checkpoint.has_value());
  EXPECT_NEAR(odo.guarantee(), std::sqrt(6.0), 1e-12);
  // The schedule is used up.
  EXPECT_FALSE(odo.Advance(0.1).accepted);
}

TEST(OdometerTest, GuaranteeIsNondecreasing) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 0.9);
  GdpOdometer odo = *GdpOdometer::CreateUniform(1.0);
  double last = 0.0;
  double released_sq = 0.0;
  double since_checkpoint = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const double mu = u(rng);
    const OdometerEvent e = odo.Advance(mu);
    ASSERT_TRUE(e.accepted);
    if (e.checkpoint) {
      EXPECT_GE(e.checkpoint->guarantee, last);
      last = e.checkpoint->guarantee;
      released_sq = last * last;
    }
    since_checkpoint = odo.window_spent_sq();
    EXPECT_LE(since_checkpoint, 1.0);
  }
  EXPECT_GT(released_sq, 0.0);
  EXPECT_FALSE(GdpOdometer::Create({}).ok());
  EXPECT_FALSE(GdpOdometer::Create({1.0, -1.0}).ok());
}

// ---------------------------------------------------------------------------
// Approximative filter.

DiscretePld Gauss(double ratio, const GridSpec& grid, Rounding r) {
  return *Discretize(*GaussianPair::Create(ratio, 1.0), grid, r);
}

TEST(FitMuTest, DefaultEpsilonGrid) {
  const std::vector<double> e = DefaultFitEpsilons(GridSpec::Default());
  ASSERT_EQ(e.size(), 513u);
  EXPECT_EQ(e[0], 0.0);
  EXPECT_NEAR(e[1], 1e-3, 1e-15);
  EXPECT_EQ(e.back(), 10.0);
  EXPECT_TRUE(std::is_sorted(e.begin(), e.end()));
}

TEST(FitMuTest, SelfFitSingleGaussian) {
  const GridSpec g = GridSpec::Default();
  const std::vector<double> eps = DefaultFitEpsilons(g);
  const DiscretePld est = Gauss(0.7, g, Rounding::kEstimate);
  const WeightedPld a[] = {{&est, 1}};
  EXPECT_NEAR(*ApproxFilterMu(a, eps), 0.7, 1e-4);
  // A rounded-up PLD is slightly pessimistic: the fit lands just above.
  const DiscretePld up = Gauss(0.7, g, Rounding::kUp);
  const WeightedPld b[] = {{&up, 1}};
  const double mu_up = *ApproxFilterMu(b, eps);
  EXPECT_GE(mu_up, 0.7);
  EXPECT_LE(mu_up, 0.7 + 5e-4);
}

TEST(FitMuTest, HundredFoldGaussian) {
  const GridSpec g = GridSpec::Default();
  const std::vector<double> eps = DefaultFitEpsilons(g);
  const DiscretePld est = Gauss(0.1, g, Rounding::kEstimate);
  const WeightedPld a[] = {{&est, 100}};
  const double mu = *ApproxFilterMu(a, eps);
  EXPECT_NEAR(mu, 1.0, 1e-3);
  // The converted bound is the RDP bound of rho(alpha) = alpha / 2.
  const double converted = *ApproxFilterEpsilon(mu, 1e-5);
  const double reference =
      RdpToEpsilon(*GaussianRdp(1.0, DefaultOrders()), 1e-5)->epsilon;
  EXPECT_NEAR(converted, reference, 1e-2);
  EXPECT_EQ(*ApproxFilterEpsilon(1.0, 1e-5), reference);

  const DiscretePld up = Gauss(0.1, g, Rounding::kUp);
  const WeightedPld b[] = {{&up, 100}};
  const double mu_up = *ApproxFilterMu(b, eps);
  // Rounding up shifts each factor's loss by at most dx, so the mean of the
  // composition grows by at most 100 dx.
  EXPECT_GE(mu_up, 1.0);
  EXPECT_LE(mu_up, std::sqrt(1.0 + 2.0 * 100 * g.step()));
}

TEST(FitMuTest, ZeroAndEnvelopeFailure) {
  const GridSpec g = GridSpec::Default();
  const std::vector<double> eps = DefaultFitEpsilons(g);
  const DiscretePld id = IdentityPld(g);
  const WeightedPld a[] = {{&id, 1}};
  EXPECT_EQ(*ApproxFilterMu(a, eps), 0.0);
  // A delta of one at every epsilon cannot be dominated by any finite mu.
  const std::vector<double> ones(eps.size(), 1.0);
  ApproxFilterOptions small;
  small.mu_max = 5.0;
  EXPECT_EQ(FitMuToCurve(eps, ones, small).status().code(),
            absl::StatusCode::kOutOfRange);
  EXPECT_FALSE(FitMuToCurve(eps, std::vector<double>(3, 0.0)).ok());
}

TEST(FitMuTest, EnvelopeDominatesAndIsTight) {
  const GridSpec g = *GridSpec::Create(20.0, 1 << 15);
  const std::vector<double> eps = DefaultFitEpsilons(g);
  const DiscretePld sub = *Discretize(
      *SubsampledGaussianPair::Create(0.05, 1.0, Direction::kAdd), g,
      Rounding::kUp);
  const DiscretePld composed = *ComposeFft({{WeightedPld{&sub, 200}}});
  const std::vector<double> deltas = DeltaCurveFromPld(composed, eps);
  const double mu = *FitMuToCurve(eps, deltas);
  bool tight = false;
  for (size_t i = 0; i < eps.size(); ++i) {
    if (deltas[i] <= ApproxFilterOptions().delta_floor) continue;
    EXPECT_LE(deltas[i], GdpDelta(mu, eps[i]));
    tight |= deltas[i] > GdpDelta(mu - 1e-5, eps[i]);
  }
  EXPECT_TRUE(tight);
}

TEST(FitMuTest, AddingFactorsNeverDecreasesMu) {
  const GridSpec g = *GridSpec::Create(20.0, 1 << 14);
  const std::vector<double> eps = DefaultFitEpsilons(g);
  const DiscretePld a = *Discretize(
      *SubsampledGaussianPair::Create(0.1, 1.2, Direction::kAdd), g,
      Rounding::kUp);
  const DiscretePld b = Gauss(0.2, g, Rounding::kUp);
  double previous = 0.0;
  for (int k = 1; k <= 12; ++k) {
    const WeightedPld f[] = {{&a, k}, {&b, k / 2}};
    const double mu = *ApproxFilterMu(f, eps);
    EXPECT_GE(mu, previous - 1e-6) << k;
    previous = mu;
  }
}

TEST(FitMuTest, SubsampledPldAgainstSubsampledRdp) {
  const GridSpec g = GridSpec::Default();
  const std::vector<double> eps = DefaultFitEpsilons(g);
  const RdpCurve rdp = SubsampledRdp(*SubsampledGaussianPair::Create(
                                         0.01, 2.0, Direction::kAdd),
                                     IntegerOrders())
                           ->Scaled(5000);
  const double via_rdp = RdpToEpsilon(rdp, 1e-6)->epsilon;
  double fitted[2];
  for (Direction d : {Direction::kAdd, Direction::kRemove}) {
    const DiscretePld pld = *Discretize(
        *SubsampledGaussianPair::Create(0.01, 2.0, d), g, Rounding::kEstimate);
    const WeightedPld f[] = {{&pld, 5000}};
    absl::StatusOr<double> mu = ApproxFilterMu(f, eps);
    ASSERT_TRUE(mu.ok()) << mu.status();
    EXPECT_TRUE(std::isfinite(*mu));
    fitted[static_cast<int>(d == Direction::kRemove)] = *mu;
  }
  EXPECT_LE(*ApproxFilterEpsilon(fitted[1], 1e-6), via_rdp);
  // The add direction has a heavier upper tail. Its Gaussian envelope costs a
  // few percent more than the RDP bound here.
  EXPECT_LE(*ApproxFilterEpsilon(fitted[0], 1e-6), 1.05 * via_rdp);
  EXPECT_GT(fitted[0], fitted[1]);
}

TEST(ApproxFilterEpsilonTest, Lossiness) {
  EXPECT_GT(*ApproxFilterEpsilon(1.0, 1e-5), *GdpEpsilon(1.0, 1e-5));
  const double overhead = *ApproxFilterEpsilon(0.0, 1e-5);
  EXPECT_GT(overhead, 0.0);
  EXPECT_LT(overhead, 0.1);
}

TEST(ApproxPldFilterTest, PerPrefixHaltsAtBudget) {
  const GridSpec g = *GridSpec::Create(20.0, 1 << 15);
  const FourierPld step = ToFourier(Gauss(0.1, g, Rounding::kEstimate));
  ApproxPldFilter f =
      *ApproxPldFilter::Create(g, 1.0, ApproxCheckMode::kPerPrefix);
  int64_t accepted = 0;
  for (int i = 0; i < 120; ++i) {
    const FilterDecision d = *f.Step(step);
    if (d == FilterDecision::kHalt) break;
    ++accepted;
  }
  // 100 steps of 0.1 compose to exactly mu = 1.
  EXPECT_GE(accepted, 99);
  EXPECT_LE(accepted, 100);
  EXPECT_LE(f.fitted_mu(), 1.0);
  EXPECT_EQ(*f.Step(step), FilterDecision::kHalt);
  EXPECT_EQ(*f.Finish(), FilterDecision::kCont);
}

TEST(ApproxPldFilterTest, AtTerminationChecksOnce) {
  const GridSpec g = *GridSpec::Create(20.0, 1 << 15);
  const FourierPld step = ToFourier(Gauss(0.1, g, Rounding::kEstimate));
  ApproxPldFilter f =
      *ApproxPldFilter::Create(g, 1.0, ApproxCheckMode::kAtTermination);
  for (int i = 0; i < 150; ++i) {
    EXPECT_EQ(*f.Step(step), FilterDecision::kCont);
  }
  EXPECT_EQ(f.accepted_steps(), 150);
  EXPECT_EQ(*f.Finish(), FilterDecision::kHalt);
  EXPECT_NEAR(f.fitted_mu(), std::sqrt(1.5), 1e-3);
  EXPECT_FALSE(
      ApproxPldFilter::Create(g, 0.0, ApproxCheckMode::kPerPrefix).ok());
}

}  // namespace
}  // namespace dpacct
