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

// Noisy clipped-gradient descent on a synthetic grouped logistic regression
// task, with per-example gradient-norm tracking, optional individual or
// global GDP filtering, and per-example epsilon reports.

#ifndef DPACCT_DPGD_HARNESS_H_
#define DPACCT_DPGD_HARNESS_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/types/span.h"
#include "dpacct/fft_engine.h"

namespace dpacct {

struct SyntheticTaskOptions {
  int64_t examples_per_group = 100;
  int64_t test_examples_per_group = 100;
  int64_t dimension = 8;
  // One feature scale per group.
  std::vector<double> group_scales = {0.5, 0.75, 1.0, 1.5, 2.0};
  // Spread of the group-specific weight offsets around the shared weights.
  double group_weight_spread = 0.5;
};

// Row-major features, labels in {0, 1}, group index per example.
struct Dataset {
  std::vector<double> features;
  std::vector<int> labels;
  std::vector<int> groups;

  int64_t size() const { return static_cast<int64_t>(labels.size()); }
};

struct SyntheticTask {
  int64_t dimension = 0;
  int num_groups = 0;
  Dataset train;
  Dataset test;
};

// Fully determined by `seed`.
absl::StatusOr<SyntheticTask> GenerateTask(const SyntheticTaskOptions& options,
                                           uint64_t seed);

// Mean logistic loss of `weights` on example i.
double ExampleLoss(const Dataset& data, int64_t dimension, int64_t i,
                   absl::Span<const double> weights);

enum class FilterMode { kNone, kGlobal, kIndividual };

const char* FilterModeName(FilterMode mode);

struct RunConfig {
  // sigma / C = 10 keeps the per-step mu at most 0.1. C is large enough that
  // clipping rarely binds, so gradient norms track the feature scale.
  double noise_std = 40.0;     // sigma, absolute scale of the gradient noise
  double clip = 4.0;           // C
  double learning_rate = 1.0;  // eta
  int64_t max_steps = 100;     // k
  double budget = 1.0;         // B
  FilterMode mode = FilterMode::kNone;
  double sampling_rate = 1.0;  // q; 1 is full-batch GD
};

// Replaces the logistic gradient of example i at step `step` (1-based); used
// to drive the harness with synthetic gradient streams.
using GradientOverride =
    std::function<void(int64_t step, int64_t example,
                       absl::Span<const double> weights, absl::Span<double> out)>;

struct RunReport {
  RunConfig config;
  uint64_t seed = 0;
  int64_t dimension = 0;
  int num_groups = 0;
  std::vector<int> groups;  // train group per example
  // Steps actually run.
  int64_t steps = 0;
  // Per step (index step - 1):
  std::vector<int64_t> active_count;
  // group_train_loss[step][g], mean over all train examples of group g after
  // the step's update; same for test. Index 0 holds the initial losses, so
  // these have steps + 1 rows.
  std::vector<std::vector<double>> group_train_loss;
  std::vector<std::vector<double>> group_test_loss;
  // mu[step - 1][i]: GDP parameter charged to example i (0 when inactive).
  std::vector<std::vector<double>> mu;
  // Whether example i took part (was active and, for q < 1, sampled) in the
  // step's gradient sum; sampling is recorded for diagnostics only.
  std::vector<std::vector<bool>> active;
  std::vector<double> spent_sq;
  // First step at which some example was filtered out, if any.
  std::optional<int64_t> first_filter_step;
  std::vector<double> final_weights;
  // Empty unless the run aborted (e.g. NonFiniteLoss); the report then holds
  // every step completed so far.
  std::string error;
};

// Runs up to config.max_steps steps. Invalid configurations are
// InvalidArgument (ConfigError); a divergent run is returned with `error`
// set rather than as a failure.
absl::StatusOr<RunReport> RunHarness(const SyntheticTask& task,
                                     const RunConfig& config, uint64_t seed,
                                     const GradientOverride& gradient = nullptr);

enum class Accountant { kRdp, kPld, kGdp };

const char* AccountantName(Accountant accountant);

struct HistogramOptions {
  // sigma grid for the subsampled accountants: num_intervals intervals on
  // [sigma / C, min(max observed noise ratio, sigma_max_factor * sigma / C)].
  int64_t sigma_intervals = 50;
  double sigma_max_factor = 8.0;
  GridSpec pld_grid = GridSpec::Default();
};

struct GroupSummary {
  int group;
  int64_t count;
  double mean;
  double median;
  double max;
};

struct EpsilonReport {
  Accountant accountant;
  double delta;
  std::vector<double> epsilon;  // per train example
  std::vector<GroupSummary> groups;
};

// Per-example epsilon of the charged mu traces. Gdp needs q = 1
// (InvalidArgument, UnsupportedCombination otherwise); Rdp and Pld use the
// subsampled Gaussian pair with noise ratio 1 / mu when q < 1.
absl::StatusOr<EpsilonReport> EpsilonHistogram(
    const RunReport& report, double delta, Accountant accountant,
    const HistogramOptions& options = {});

// Config echo, per-step scalars and group losses.
std::string ReportToJson(const RunReport& report);
// step,example,group,mu
std::string MuTraceCsv(const RunReport& report);
// step,group,split,loss
std::string LossCurveCsv(const RunReport& report);
// example,group,epsilon
std::string EpsilonCsv(const RunReport& report, const EpsilonReport& eps);
std::string EpsilonReportToJson(const EpsilonReport& eps);

}  // namespace dpacct

#endif  // DPACCT_DPGD_HARNESS_H_
