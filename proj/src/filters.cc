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

#include "absl/strings/str_cat.h"
#include "dpacct/analytic_gdp.h"
#include "dpacct/rdp_accountant.h"
#include "json.hpp"

namespace dpacct {
namespace {

constexpr int kFitEpsilonCount = 512;

// Relative slack for recognising an exactly used-up odometer window.
constexpr double kExhaustionSlack = 1e-12;

absl::Status CheckMus(const std::vector<double>& mus, int64_t expected,
                      int64_t step) {
  if (static_cast<int64_t>(mus.size()) != expected) {
    return absl::InvalidArgumentError(
        absl::StrCat("ProviderViolation: step ", step, " returned ",
                     mus.size(), " values, expected ", expected));
  }
  for (size_t i = 0; i < mus.size(); ++i) {
    if (!(mus[i] >= 0.0) || !std::isfinite(mus[i])) {
      return absl::InvalidArgumentError(
          absl::StrCat("ProviderViolation: step ", step, " individual ", i,
                       " has mu = ", mus[i]));
    }
  }
  return absl::OkStatus();
}

bool Dominated(double mu, absl::Span<const double> epsilons,
               absl::Span<const double> deltas, double floor) {
  for (size_t i = 0; i < epsilons.size(); ++i) {
    if (deltas[i] <= floor) continue;
    if (deltas[i] > GdpDelta(mu, epsilons[i])) return false;
  }
  return true;
}

}  // namespace

const char* FilterDecisionName(FilterDecision decision) {
  return decision == FilterDecision::kCont ? "CONT" : "HALT";
}

absl::StatusOr<GdpBudget> GdpBudget::Create(double budget) {
  if (!(budget > 0.0) || !std::isfinite(budget)) {
    return absl::InvalidArgumentError(
        absl::StrCat("GDP budget must be finite and positive, got ", budget));
  }
  return GdpBudget(budget);
}

FilterDecision FilterStep(GdpBudget& budget, double mu) {
  if (!budget.CanSpend(mu)) return FilterDecision::kHalt;
  budget.Spend(mu);
  return FilterDecision::kCont;
}

FilterDecision GdpFilter::Step(double mu) {
  if (halted_) return FilterDecision::kHalt;
  if (FilterStep(budget_, mu) == FilterDecision::kHalt) {
    halted_ = true;
    return FilterDecision::kHalt;
  }
  ++accepted_steps_;
  return FilterDecision::kCont;
}

absl::StatusOr<FilterTranscript> RunIndividualFilter(
    int64_t data_size, int64_t max_steps, double budget,
    const MuProvider& provider, const ReleaseFn& release) {
  if (data_size < 1 || max_steps < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("Need data_size >= 1 and max_steps >= 1, got ",
                     data_size, " and ", max_steps));
  }
  absl::StatusOr<GdpBudget> initial = GdpBudget::Create(budget);
  if (!initial.ok()) return initial.status();

  std::vector<GdpFilter> filters(data_size, GdpFilter(*initial));
  FilterTranscript transcript;
  transcript.budget = budget;
  transcript.data_size = data_size;
  transcript.max_steps = max_steps;
  transcript.active_steps.assign(data_size, 0);
  std::vector<bool> active(data_size, true);

  for (int64_t step = 1; step <= max_steps; ++step) {
    absl::StatusOr<std::vector<double>> mus = provider(step, active);
    if (!mus.ok()) return mus.status();
    if (absl::Status status = CheckMus(*mus, data_size, step); !status.ok()) {
      return status;
    }
    TranscriptStep record{.step = step,
                          .mu = std::vector<double>(data_size, 0.0),
                          .active = std::vector<bool>(data_size, false),
                          .spent_sq = std::vector<double>(data_size, 0.0)};
    bool any_active = false;
    for (int64_t i = 0; i < data_size; ++i) {
      if (active[i] && filters[i].Step((*mus)[i]) == FilterDecision::kCont) {
        record.mu[i] = (*mus)[i];
        record.active[i] = true;
        any_active = true;
      }
      record.spent_sq[i] = filters[i].budget().spent_sq();
    }
    active = record.active;
    if (!any_active) break;
    if (release) {
      if (absl::Status status = release(step, active); !status.ok()) {
        return status;
      }
    }
    for (int64_t i = 0; i < data_size; ++i) {
      if (active[i]) ++transcript.active_steps[i];
    }
    transcript.steps.push_back(std::move(record));
  }
  transcript.final_spent_sq.reserve(data_size);
  for (const GdpFilter& filter : filters) {
    transcript.final_spent_sq.push_back(filter.budget().spent_sq());
  }
  return transcript;
}

absl::StatusOr<FilterTranscript> RunGlobalFilter(
    int64_t max_steps, double budget,
    const std::function<absl::StatusOr<double>(int64_t step)>& provider,
    const ReleaseFn& release) {
  if (max_steps < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("Need max_steps >= 1, got ", max_steps));
  }
  absl::StatusOr<GdpBudget> initial = GdpBudget::Create(budget);
  if (!initial.ok()) return initial.status();
  GdpFilter filter(*initial);
  FilterTranscript transcript;
  transcript.budget = budget;
  transcript.data_size = 1;
  transcript.max_steps = max_steps;
  transcript.active_steps.assign(1, 0);
  for (int64_t step = 1; step <= max_steps; ++step) {
    absl::StatusOr<double> mu = provider(step);
    if (!mu.ok()) return mu.status();
    if (absl::Status status = CheckMus({*mu}, 1, step); !status.ok()) {
      return status;
    }
    if (filter.Step(*mu) == FilterDecision::kHalt) break;
    if (release) {
      if (absl::Status status = release(step, {true}); !status.ok()) {
        return status;
      }
    }
    ++transcript.active_steps[0];
    transcript.steps.push_back({.step = step,
                                .mu = {*mu},
                                .active = {true},
                                .spent_sq = {filter.budget().spent_sq()}});
  }
  transcript.final_spent_sq = {filter.budget().spent_sq()};
  return transcript;
}

std::string TranscriptToJsonLines(const FilterTranscript& transcript) {
  using nlohmann::json;
  std::string out;
  out += json{{"type", "header"},
              {"budget", transcript.budget},
              {"data_size", transcript.data_size},
              {"max_steps", transcript.max_steps}}
             .dump();
  out += '\n';
  for (const TranscriptStep& step : transcript.steps) {
    std::string bitmap;
    bitmap.reserve(step.active.size());
    for (bool a : step.active) bitmap += a ? '1' : '0';
    out += json{{"type", "step"},
                {"step", step.step},
                {"mu", step.mu},
                {"active", bitmap},
                {"spent_sq", step.spent_sq}}
               .dump();
    out += '\n';
  }
  out += json{{"type", "summary"},
              {"released_steps", transcript.steps.size()},
              {"final_spent_sq", transcript.final_spent_sq},
              {"active_steps", transcript.active_steps}}
             .dump();
  out += '\n';
  return out;
}

absl::StatusOr<GdpOdometer> GdpOdometer::Create(std::vector<double> windows) {
  if (windows.empty()) {
    return absl::InvalidArgumentError("Odometer needs at least one window");
  }
  for (double w : windows) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      return absl::InvalidArgumentError(
          absl::StrCat("Odometer window budgets must be positive, got ", w));
    }
  }
  return GdpOdometer(std::move(windows), /*repeat_last=*/false);
}

absl::StatusOr<GdpOdometer> GdpOdometer::CreateUniform(double window) {
  absl::StatusOr<GdpOdometer> odometer = Create({window});
  if (!odometer.ok()) return odometer.status();
  odometer->repeat_last_ = true;
  return odometer;
}

std::optional<double> GdpOdometer::WindowBudget(int64_t index) const {
  if (index < static_cast<int64_t>(windows_.size())) return windows_[index];
  if (repeat_last_) return windows_.back();
  return std::nullopt;
}

OdometerCheckpoint GdpOdometer::Close() {
  const double delta = *WindowBudget(released_);
  released_sq_ += delta * delta;
  ++released_;
  window_sq_ = 0.0;
  steps_in_window_ = 0;
  return {.index = released_, .last_step = steps_, .guarantee = guarantee()};
}

OdometerEvent GdpOdometer::Advance(double mu) {
  OdometerEvent event{.accepted = false, .checkpoint = std::nullopt};
  std::optional<double> window = WindowBudget(released_);
  if (!window.has_value() || !(mu >= 0.0) || !std::isfinite(mu)) return event;
  const double mu_sq = mu * mu;
  if (window_sq_ + mu_sq > *window * *window && steps_in_window_ > 0) {
    event.checkpoint = Close();
    window = WindowBudget(released_);
    if (!window.has_value()) return event;
  }
  if (mu_sq > *window * *window) return event;

  event.accepted = true;
  ++steps_;
  ++steps_in_window_;
  window_sq_ += mu_sq;
  if (window_sq_ >= *window * *window * (1.0 - kExhaustionSlack)) {
    event.checkpoint = Close();
  }
  return event;
}

std::vector<double> DefaultFitEpsilons(const GridSpec& grid) {
  std::vector<double> epsilons;
  epsilons.reserve(kFitEpsilonCount + 1);
  epsilons.push_back(0.0);
  const double lo = 1e-3;
  const double hi = 0.5 * grid.half_width();
  const double ratio = std::pow(hi / lo, 1.0 / (kFitEpsilonCount - 1));
  for (int i = 0; i < kFitEpsilonCount; ++i) {
    epsilons.push_back(i == kFitEpsilonCount - 1 ? hi : lo * std::pow(ratio, i));
  }
  return epsilons;
}

absl::StatusOr<double> FitMuToCurve(absl::Span<const double> epsilons,
                                    absl::Span<const double> deltas,
                                    const ApproxFilterOptions& options) {
  if (epsilons.size() != deltas.size() || epsilons.empty()) {
    return absl::InvalidArgumentError(
        "Epsilon and delta samples must be nonempty and of equal length");
  }
  if (Dominated(0.0, epsilons, deltas, options.delta_floor)) return 0.0;
  double lo = 0.0;
  double hi = options.mu_max;
  if (!Dominated(hi, epsilons, deltas, options.delta_floor)) {
    return absl::OutOfRangeError(absl::StrCat(
        "EnvelopeFailure: no mu <= ", options.mu_max,
        " dominates the privacy profile"));
  }
  while (hi - lo > options.tolerance) {
    const double mid = 0.5 * (lo + hi);
    if (Dominated(mid, epsilons, deltas, options.delta_floor)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

absl::StatusOr<double> ApproxFilterMu(absl::Span<const WeightedPld> factors,
                                      absl::Span<const double> epsilons,
                                      const ApproxFilterOptions& options) {
  absl::StatusOr<DiscretePld> composed = ComposeFft(factors);
  if (!composed.ok()) return composed.status();
  const std::vector<double> deltas = DeltaCurveFromPld(*composed, epsilons);
  return FitMuToCurve(epsilons, deltas, options);
}

absl::StatusOr<double> ApproxFilterEpsilon(double mu, double delta) {
  absl::StatusOr<RdpCurve> curve = GaussianRdp(mu, DefaultOrders());
  if (!curve.ok()) return curve.status();
  absl::StatusOr<RdpEpsilon> eps = RdpToEpsilon(*curve, delta);
  if (!eps.ok()) return eps.status();
  return eps->epsilon;
}

ApproxPldFilter::ApproxPldFilter(const GridSpec& grid, double budget_mu,
                                 ApproxCheckMode mode,
                                 ApproxFilterOptions options)
    : grid_(grid),
      budget_mu_(budget_mu),
      mode_(mode),
      options_(options),
      epsilons_(DefaultFitEpsilons(grid)),
      product_(*MultiplySpectra({}, grid)) {}

absl::StatusOr<ApproxPldFilter> ApproxPldFilter::Create(
    const GridSpec& grid, double budget_mu, ApproxCheckMode mode,
    ApproxFilterOptions options) {
  if (!(budget_mu > 0.0) || !std::isfinite(budget_mu)) {
    return absl::InvalidArgumentError(
        absl::StrCat("GDP budget must be finite and positive, got ", budget_mu));
  }
  return ApproxPldFilter(grid, budget_mu, mode, options);
}

absl::StatusOr<double> ApproxPldFilter::Fit(const FourierPld& product) const {
  const DiscretePld composed = FromFourier(product);
  const std::vector<double> deltas = DeltaCurveFromPld(composed, epsilons_);
  return FitMuToCurve(epsilons_, deltas, options_);
}

absl::StatusOr<FilterDecision> ApproxPldFilter::Step(const FourierPld& next) {
  if (halted_) return FilterDecision::kHalt;
  const WeightedFourierPld factors[] = {{&product_, 1}, {&next, 1}};
  absl::StatusOr<FourierPld> tentative = MultiplySpectra(factors, grid_);
  if (!tentative.ok()) return tentative.status();
  if (mode_ == ApproxCheckMode::kPerPrefix) {
    absl::StatusOr<double> mu = Fit(*tentative);
    if (!mu.ok()) return mu.status();
    if (*mu > budget_mu_) {
      halted_ = true;
      return FilterDecision::kHalt;
    }
    fitted_mu_ = *mu;
  }
  product_ = *std::move(tentative);
  ++accepted_steps_;
  return FilterDecision::kCont;
}

absl::StatusOr<FilterDecision> ApproxPldFilter::Finish() {
  if (mode_ == ApproxCheckMode::kPerPrefix) return FilterDecision::kCont;
  absl::StatusOr<double> mu = Fit(product_);
  if (!mu.ok()) return mu.status();
  fitted_mu_ = *mu;
  return *mu <= budget_mu_ ? FilterDecision::kCont : FilterDecision::kHalt;
}

}  // namespace dpacct
