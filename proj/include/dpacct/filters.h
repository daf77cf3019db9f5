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

// Fully adaptive privacy filters and odometers with GDP budgets.
//
// A sequence of adaptively chosen mechanisms whose conditional GDP parameters
// satisfy sum mu_m^2 <= B^2 almost surely is B-GDP. The filters below enforce
// that condition, globally or per individual, and stop before it would be
// violated.

#ifndef DPACCT_FILTERS_H_
#define DPACCT_FILTERS_H_

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/types/span.h"
#include "dpacct/fft_engine.h"

namespace dpacct {

enum class FilterDecision { kCont, kHalt };

const char* FilterDecisionName(FilterDecision decision);

// Running sum of squared GDP parameters against a budget B.
class GdpBudget {
 public:
  static absl::StatusOr<GdpBudget> Create(double budget);

  double budget() const { return budget_; }
  double spent_sq() const { return spent_sq_; }
  double remaining_sq() const { return budget_ * budget_ - spent_sq_; }
  bool CanSpend(double mu) const {
    return spent_sq_ + mu * mu <= budget_ * budget_;
  }
  void Spend(double mu) { spent_sq_ += mu * mu; }

 private:
  explicit GdpBudget(double budget) : budget_(budget) {}

  double budget_;
  double spent_sq_ = 0.0;
};

// Commits mu^2 and returns kCont iff it fits the budget; otherwise returns
// kHalt and leaves the budget untouched.
FilterDecision FilterStep(GdpBudget& budget, double mu);

// The global GDP filter. Once it halts it stays halted.
class GdpFilter {
 public:
  explicit GdpFilter(GdpBudget budget) : budget_(budget) {}

  FilterDecision Step(double mu);

  const GdpBudget& budget() const { return budget_; }
  bool halted() const { return halted_; }
  int64_t accepted_steps() const { return accepted_steps_; }

 private:
  GdpBudget budget_;
  bool halted_ = false;
  int64_t accepted_steps_ = 0;
};

struct TranscriptStep {
  int64_t step;  // 1-based
  // Charged GDP parameter per individual; 0 for inactive individuals.
  std::vector<double> mu;
  std::vector<bool> active;
  // Cumulative sum of squares per individual after this step.
  std::vector<double> spent_sq;
};

struct FilterTranscript {
  double budget = 0.0;
  int64_t data_size = 0;
  int64_t max_steps = 0;
  // Released steps only.
  std::vector<TranscriptStep> steps;
  std::vector<double> final_spent_sq;
  // Number of released steps each individual took part in.
  std::vector<int64_t> active_steps;
};

// Returns the per-individual GDP parameters of step `step` (1-based) given
// the active set of the previous step. Values may depend only on releases of
// earlier steps; entries for inactive individuals are ignored.
using MuProvider = std::function<absl::StatusOr<std::vector<double>>(
    int64_t step, const std::vector<bool>& active)>;
// Computes and releases the output of step `step` on the given active set.
using ReleaseFn =
    std::function<absl::Status(int64_t step, const std::vector<bool>& active)>;

// The individual GDP filter. At every step each active individual's filter
// sees the upcoming mu; individuals whose budget would be exceeded are dropped
// for good and contribute mu = 0 from then on. The run ends after
// `max_steps` steps or once nobody is active.
absl::StatusOr<FilterTranscript> RunIndividualFilter(
    int64_t data_size, int64_t max_steps, double budget,
    const MuProvider& provider, const ReleaseFn& release = nullptr);

// The global GDP filter run as a transcript with a single column.
absl::StatusOr<FilterTranscript> RunGlobalFilter(
    int64_t max_steps, double budget,
    const std::function<absl::StatusOr<double>(int64_t step)>& provider,
    const ReleaseFn& release = nullptr);

// Line-delimited JSON: one "header" record, one "step" record per released
// step and a closing "summary" record.
std::string TranscriptToJsonLines(const FilterTranscript& transcript);

struct OdometerCheckpoint {
  int64_t index;       // 1-based checkpoint number m
  int64_t last_step;   // last step covered by the checkpoint
  double guarantee;    // sqrt(Delta_1^2 + ... + Delta_m^2)
};

struct OdometerEvent {
  bool accepted;
  std::optional<OdometerCheckpoint> checkpoint;
};

// Releases a checkpoint whenever a window with GDP budget Delta_m is used up.
// A step that would overflow the current window first closes it; a step that
// does not fit even an empty window is refused.
class GdpOdometer {
 public:
  static absl::StatusOr<GdpOdometer> Create(std::vector<double> windows);
  static absl::StatusOr<GdpOdometer> CreateUniform(double window);

  OdometerEvent Advance(double mu);

  int64_t released() const { return released_; }
  // Guarantee of the latest checkpoint, 0 before the first one.
  double guarantee() const { return std::sqrt(released_sq_); }
  double window_spent_sq() const { return window_sq_; }

 private:
  GdpOdometer(std::vector<double> windows, bool repeat_last)
      : windows_(std::move(windows)), repeat_last_(repeat_last) {}

  std::optional<double> WindowBudget(int64_t index) const;
  OdometerCheckpoint Close();

  std::vector<double> windows_;
  bool repeat_last_;
  int64_t released_ = 0;
  int64_t steps_ = 0;
  int64_t steps_in_window_ = 0;
  double released_sq_ = 0.0;
  double window_sq_ = 0.0;
};

struct ApproxFilterOptions {
  double mu_max = 50.0;
  double tolerance = 1e-6;
  // Samples with delta at or below this are ignored. Transform round-off
  // leaves an absolute floor near 1e-15 that no GDP curve can dominate.
  double delta_floor = 1e-12;
};

// {0} followed by 512 geometrically spaced values in [1e-3, L/2].
std::vector<double> DefaultFitEpsilons(const GridSpec& grid);

// Least mu (up to `tolerance`, rounded up) such that
// GdpDelta(mu, eps) >= deltas[i] for every eps = epsilons[i] whose delta is
// above options.delta_floor.
absl::StatusOr<double> FitMuToCurve(absl::Span<const double> epsilons,
                                    absl::Span<const double> deltas,
                                    const ApproxFilterOptions& options = {});

// FitMuToCurve applied to the composition of `factors`.
absl::StatusOr<double> ApproxFilterMu(absl::Span<const WeightedPld> factors,
                                      absl::Span<const double> epsilons,
                                      const ApproxFilterOptions& options = {});

// The (eps, delta) bound implied by a fitted mu. Only Renyi domination by the
// Gaussian pair is implied, so the RDP conversion is used rather than the
// exact GDP inversion.
absl::StatusOr<double> ApproxFilterEpsilon(double mu, double delta);

enum class ApproxCheckMode {
  // Fit mu after every step and halt before the budget would be exceeded.
  kPerPrefix,
  // Accept all steps; the budget is checked once by Finish().
  kAtTermination,
};

// The approximative filter over general dominating pairs, each step given by
// the spectrum of its PLD.
class ApproxPldFilter {
 public:
  static absl::StatusOr<ApproxPldFilter> Create(
      const GridSpec& grid, double budget_mu, ApproxCheckMode mode,
      ApproxFilterOptions options = {});

  absl::StatusOr<FilterDecision> Step(const FourierPld& next);
  // mu fitted to the accepted prefix.
  double fitted_mu() const { return fitted_mu_; }
  int64_t accepted_steps() const { return accepted_steps_; }
  // kAtTermination: fits the whole run and reports whether it is within
  // budget. kPerPrefix: always within budget.
  absl::StatusOr<FilterDecision> Finish();

 private:
  ApproxPldFilter(const GridSpec& grid, double budget_mu, ApproxCheckMode mode,
                  ApproxFilterOptions options);
  absl::StatusOr<double> Fit(const FourierPld& product) const;

  GridSpec grid_;
  double budget_mu_;
  ApproxCheckMode mode_;
  ApproxFilterOptions options_;
  std::vector<double> epsilons_;
  FourierPld product_;
  bool halted_ = false;
  double fitted_mu_ = 0.0;
  int64_t accepted_steps_ = 0;
};

}  // namespace dpacct

#endif  // DPACCT_FILTERS_H_
