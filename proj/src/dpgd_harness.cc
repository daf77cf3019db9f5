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

#include "dpacct/dpgd_harness.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>

#include "absl/strings/match.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "dpacct/analytic_gdp.h"
#include "dpacct/distributions.h"
#include "dpacct/filters.h"
#include "dpacct/individual_accountant.h"
#include "dpacct/rdp_accountant.h"
#include "json.hpp"

namespace dpacct {
namespace {

constexpr char kNonFiniteLoss[] = "NonFiniteLoss";

double Sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double Dot(const double* x, absl::Span<const double> w) {
  double s = 0.0;
  for (size_t d = 0; d < w.size(); ++d) s += x[d] * w[d];
  return s;
}

// Per-step generator, independent of the filter mode so that runs with
// different modes share noise and sampling draws.
std::mt19937_64 StepRng(uint64_t seed, int64_t step) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(step), 0x5eedu};
  return std::mt19937_64(seq);
}

absl::Status CheckConfig(const RunConfig& c) {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(c.noise_std) || !positive(c.clip) ||
      !positive(c.learning_rate) || !positive(c.budget)) {
    return absl::InvalidArgumentError(
        "ConfigError: noise_std, clip, learning_rate and budget must be "
        "finite and positive");
  }
  if (c.max_steps < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("ConfigError: max_steps must be >= 1, got ", c.max_steps));
  }
  if (!(c.sampling_rate > 0.0 && c.sampling_rate <= 1.0)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "ConfigError: sampling_rate must be in (0, 1], got ", c.sampling_rate));
  }
  return absl::OkStatus();
}

std::vector<double> GroupLosses(const Dataset& data, int64_t dimension,
                                int num_groups,
                                absl::Span<const double> weights) {
  std::vector<double> sum(num_groups, 0.0);
  std::vector<int64_t> count(num_groups, 0);
  for (int64_t i = 0; i < data.size(); ++i) {
    sum[data.groups[i]] += ExampleLoss(data, dimension, i, weights);
    ++count[data.groups[i]];
  }
  for (int g = 0; g < num_groups; ++g) {
    if (count[g] > 0) sum[g] /= static_cast<double>(count[g]);
  }
  return sum;
}

// State shared by the three filter modes.
class Trainer {
 public:
  Trainer(const SyntheticTask& task, const RunConfig& config, uint64_t seed,
          const GradientOverride& gradient, RunReport& report)
      : task_(task),
        config_(config),
        seed_(seed),
        gradient_(gradient),
        report_(report),
        n_(task.train.size()),
        dim_(task.dimension),
        weights_(dim_, 0.0),
        clipped_(n_ * dim_, 0.0),
        mu_(n_, 0.0) {}

  // Clipped per-example gradients at the current weights; returns mu_i.
  const std::vector<double>& ComputeMus(int64_t step) {
    for (int64_t i = 0; i < n_; ++i) {
      absl::Span<double> g(&clipped_[i * dim_], dim_);
      if (gradient_) {
        gradient_(step, i, weights_, g);
      } else {
        const double* x = &task_.train.features[i * dim_];
        const double r = Sigmoid(Dot(x, weights_)) - task_.train.labels[i];
        for (int64_t d = 0; d < dim_; ++d) g[d] = r * x[d];
      }
      // Scaled so that huge components do not overflow the sum of squares.
      double largest = 0.0;
      for (double v : g) largest = std::max(largest, std::abs(v));
      double norm = 0.0;
      if (largest > 0.0) {
        for (double v : g) norm += (v / largest) * (v / largest);
        norm = largest * std::sqrt(norm);
      }
      if (norm > config_.clip) {
        const double scale = config_.clip / norm;
        for (double& v : g) v *= scale;
        norm = config_.clip;
      }
      mu_[i] = norm / config_.noise_std;
    }
    return mu_;
  }

  absl::Status Release(int64_t step, const std::vector<bool>& active) {
    std::mt19937_64 rng = StepRng(seed_, step);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, config_.noise_std);
    std::vector<bool> included(n_, true);
    if (config_.sampling_rate < 1.0) {
      for (int64_t i = 0; i < n_; ++i) {
        included[i] = unif(rng) < config_.sampling_rate;
      }
    }
    std::vector<double> sum(dim_, 0.0);
    std::vector<double> charged(n_, 0.0);
    int64_t active_count = 0;
    for (int64_t i = 0; i < n_; ++i) {
      if (!active[i]) continue;
      ++active_count;
      charged[i] = mu_[i];
      report_.spent_sq[i] += mu_[i] * mu_[i];
      if (!included[i]) continue;
      for (int64_t d = 0; d < dim_; ++d) sum[d] += clipped_[i * dim_ + d];
    }
    const double denom = config_.sampling_rate * static_cast<double>(n_);
    for (int64_t d = 0; d < dim_; ++d) {
      weights_[d] -= config_.learning_rate * (sum[d] + normal(rng)) / denom;
    }
    std::vector<bool> took_part(n_);
    for (int64_t i = 0; i < n_; ++i) took_part[i] = active[i] && included[i];

    if (!report_.first_filter_step.has_value() && active_count < n_ &&
        config_.mode == FilterMode::kIndividual) {
      report_.first_filter_step = step;
    }
    report_.steps = step;
    report_.active_count.push_back(active_count);
    report_.mu.push_back(std::move(charged));
    report_.active.push_back(std::move(took_part));
    report_.group_train_loss.push_back(
        GroupLosses(task_.train, dim_, task_.num_groups, weights_));
    report_.group_test_loss.push_back(
        GroupLosses(task_.test, dim_, task_.num_groups, weights_));
    for (double loss : report_.group_train_loss.back()) {
      if (!std::isfinite(loss)) {
        return absl::InternalError(
            absl::StrCat(kNonFiniteLoss, ": training loss diverged at step ",
                         step));
      }
    }
    return absl::OkStatus();
  }

  const std::vector<double>& weights() const { return weights_; }
  int64_t size() const { return n_; }

 private:
  const SyntheticTask& task_;
  const RunConfig& config_;
  uint64_t seed_;
  const GradientOverride& gradient_;
  RunReport& report_;
  int64_t n_;
  int64_t dim_;
  std::vector<double> weights_;
  std::vector<double> clipped_;
  std::vector<double> mu_;
};

double Median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string Num(double v) { return absl::StrFormat("%.17g", v); }

}  // namespace

absl::StatusOr<SyntheticTask> GenerateTask(const SyntheticTaskOptions& options,
                                           uint64_t seed) {
  if (options.examples_per_group < 1 || options.test_examples_per_group < 0 ||
      options.dimension < 1 || options.group_scales.empty()) {
    return absl::InvalidArgumentError(
        "ConfigError: task needs at least one group, one example per group "
        "and one dimension");
  }
  for (double s : options.group_scales) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      return absl::InvalidArgumentError(
          absl::StrCat("ConfigError: group scale must be positive, got ", s));
    }
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int64_t dim = options.dimension;
  const int num_groups = static_cast<int>(options.group_scales.size());

  std::vector<double> shared(dim);
  for (double& w : shared) w = normal(rng);
  std::vector<std::vector<double>> group_weights(num_groups, shared);
  for (std::vector<double>& w : group_weights) {
    for (double& v : w) v += options.group_weight_spread * normal(rng);
  }

  SyntheticTask task;
  task.dimension = dim;
  task.num_groups = num_groups;
  auto fill = [&](Dataset& data, int64_t per_group) {
    for (int g = 0; g < num_groups; ++g) {
      for (int64_t j = 0; j < per_group; ++j) {
        // Labels follow the unscaled latent vector, so a larger feature
        // scale means larger gradients at the same residual.
        std::vector<double> latent(dim);
        for (double& z : latent) z = normal(rng);
        for (double z : latent) data.features.push_back(options.group_scales[g] * z);
        const double p = Sigmoid(Dot(latent.data(), group_weights[g]));
        data.labels.push_back(unif(rng) < p ? 1 : 0);
        data.groups.push_back(g);
      }
    }
  };
  fill(task.train, options.examples_per_group);
  fill(task.test, options.test_examples_per_group);
  return task;
}

double ExampleLoss(const Dataset& data, int64_t dimension, int64_t i,
                   absl::Span<const double> weights) {
  const double z = Dot(&data.features[i * dimension], weights);
  // log(1 + e^z) - y z, stable for large |z|.
  const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z))
                                  : std::log1p(std::exp(z));
  return softplus - data.labels[i] * z;
}

const char* FilterModeName(FilterMode mode) {
  switch (mode) {
    case FilterMode::kNone:
      return "none";
    case FilterMode::kGlobal:
      return "global";
    case FilterMode::kIndividual:
      return "individual";
  }
  return "unknown";
}

const char* AccountantName(Accountant accountant) {
  switch (accountant) {
    case Accountant::kRdp:
      return "rdp";
    case Accountant::kPld:
      return "pld";
    case Accountant::kGdp:
      return "gdp";
  }
  return "unknown";
}

absl::StatusOr<RunReport> RunHarness(const SyntheticTask& task,
                                     const RunConfig& config, uint64_t seed,
                                     const GradientOverride& gradient) {
  if (absl::Status status = CheckConfig(config); !status.ok()) return status;
  if (task.train.size() < 1 || task.dimension < 1) {
    return absl::InvalidArgumentError("ConfigError: empty training set");
  }
  RunReport report;
  report.config = config;
  report.seed = seed;
  report.dimension = task.dimension;
  report.num_groups = task.num_groups;
  report.groups = task.train.groups;
  report.spent_sq.assign(task.train.size(), 0.0);

  Trainer trainer(task, config, seed, gradient, report);
  const int64_t n = trainer.size();
  report.group_train_loss.push_back(
      GroupLosses(task.train, task.dimension, task.num_groups,
                  trainer.weights()));
  report.group_test_loss.push_back(GroupLosses(
      task.test, task.dimension, task.num_groups, trainer.weights()));

  absl::Status status;
  switch (config.mode) {
    case FilterMode::kNone: {
      const std::vector<bool> all(n, true);
      for (int64_t step = 1; step <= config.max_steps && status.ok(); ++step) {
        trainer.ComputeMus(step);
        status = trainer.Release(step, all);
      }
      break;
    }
    case FilterMode::kGlobal: {
      // Worst case over all possible data sets: every step costs C / sigma.
      const double worst = config.clip / config.noise_std;
      const std::vector<bool> all(n, true);
      status = RunGlobalFilter(
                   config.max_steps, config.budget,
                   [&](int64_t step) -> absl::StatusOr<double> {
                     trainer.ComputeMus(step);
                     return worst;
                   },
                   [&](int64_t step, const std::vector<bool>&) {
                     return trainer.Release(step, all);
                   })
                   .status();
      break;
    }
    case FilterMode::kIndividual: {
      status = RunIndividualFilter(
                   n, config.max_steps, config.budget,
                   [&](int64_t step, const std::vector<bool>&)
                       -> absl::StatusOr<std::vector<double>> {
                     return trainer.ComputeMus(step);
                   },
                   [&](int64_t step, const std::vector<bool>& active) {
                     return trainer.Release(step, active);
                   })
                   .status();
      break;
    }
  }
  report.final_weights = trainer.weights();
  if (!status.ok()) {
    if (absl::StartsWith(status.message(), kNonFiniteLoss)) {
      report.error = std::string(status.message());
    } else {
      return status;
    }
  }
  return report;
}

absl::StatusOr<EpsilonReport> EpsilonHistogram(const RunReport& report,
                                               double delta,
                                               Accountant accountant,
                                               const HistogramOptions& options) {
  if (!(delta > 0.0 && delta < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta must be in (0, 1), got ", delta));
  }
  const double q = report.config.sampling_rate;
  if (accountant == Accountant::kGdp && q < 1.0) {
    return absl::InvalidArgumentError(
        "UnsupportedCombination: the GDP accountant needs q = 1");
  }
  const int64_t n = static_cast<int64_t>(report.groups.size());
  EpsilonReport out{.accountant = accountant,
                    .delta = delta,
                    .epsilon = std::vector<double>(n, 0.0),
                    .groups = {}};

  std::vector<double> total_sq(n, 0.0);
  // Noise ratios sigma / clipped norm = 1 / mu of the steps with mu > 0.
  std::vector<std::vector<double>> ratios(n);
  double min_ratio = report.config.noise_std / report.config.clip;
  double max_ratio = min_ratio;
  for (const std::vector<double>& row : report.mu) {
    for (int64_t i = 0; i < n; ++i) {
      if (row[i] <= 0.0) continue;
      total_sq[i] += row[i] * row[i];
      const double r = 1.0 / row[i];
      ratios[i].push_back(r);
      min_ratio = std::min(min_ratio, r);
      max_ratio = std::max(max_ratio, r);
    }
  }

  const bool gaussian = q == 1.0 && accountant != Accountant::kPld;
  if (accountant == Accountant::kGdp) {
    for (int64_t i = 0; i < n; ++i) {
      absl::StatusOr<double> eps = GdpEpsilon(std::sqrt(total_sq[i]), delta);
      if (!eps.ok()) return eps.status();
      out.epsilon[i] = *eps;
    }
  } else if (gaussian) {
    for (int64_t i = 0; i < n; ++i) {
      absl::StatusOr<RdpCurve> curve =
          GaussianRdp(std::sqrt(total_sq[i]), DefaultOrders());
      if (!curve.ok()) return curve.status();
      absl::StatusOr<RdpEpsilon> eps = RdpToEpsilon(*curve, delta);
      if (!eps.ok()) return eps.status();
      out.epsilon[i] = eps->epsilon;
    }
  } else {
    const double sigma_max = std::max(
        min_ratio * 1.01, std::min(max_ratio, options.sigma_max_factor * min_ratio));
    absl::StatusOr<SigmaGrid> grid =
        SigmaGrid::Create(min_ratio, sigma_max, options.sigma_intervals, q,
                          options.pld_grid);
    if (!grid.ok()) return grid.status();
    std::vector<BucketCounts> counts;
    counts.reserve(n);
    for (int64_t i = 0; i < n; ++i) {
      absl::StatusOr<BucketCounts> c = Encode(ratios[i], *grid);
      if (!c.ok()) return c.status();
      counts.push_back(*std::move(c));
    }
    if (accountant == Accountant::kRdp) {
      const std::vector<double> orders = IntegerOrders();
      std::vector<RdpCurve> per_bucket;
      for (int64_t b = 0; b < grid->num_points(); ++b) {
        absl::StatusOr<SubsampledGaussianPair> pair =
            SubsampledGaussianPair::Create(q, grid->point(b), Direction::kAdd);
        if (!pair.ok()) return pair.status();
        absl::StatusOr<RdpCurve> curve = SubsampledRdp(*pair, orders);
        if (!curve.ok()) return curve.status();
        per_bucket.push_back(*std::move(curve));
      }
      for (int64_t i = 0; i < n; ++i) {
        RdpCurve total = RdpCurve::Zero(orders);
        for (int64_t b = 0; b < grid->num_points(); ++b) {
          const int64_t k = counts[i].counts[b];
          for (size_t a = 0; a < orders.size() && k > 0; ++a) {
            total.rho[a] += static_cast<double>(k) * per_bucket[b].rho[a];
          }
        }
        absl::StatusOr<RdpEpsilon> eps = RdpToEpsilon(total, delta);
        if (!eps.ok()) return eps.status();
        out.epsilon[i] = eps->epsilon;
      }
    } else {
      absl::StatusOr<FftCache> cache = FftCache::Build(*grid);
      if (!cache.ok()) return cache.status();
      for (int64_t i = 0; i < n; ++i) {
        absl::StatusOr<double> eps =
            IndividualEpsilon(counts[i], *cache, delta);
        if (!eps.ok()) return eps.status();
        out.epsilon[i] = *eps;
      }
    }
  }

  for (int g = 0; g < report.num_groups; ++g) {
    std::vector<double> values;
    for (int64_t i = 0; i < n; ++i) {
      if (report.groups[i] == g) values.push_back(out.epsilon[i]);
    }
    GroupSummary summary{.group = g,
                         .count = static_cast<int64_t>(values.size()),
                         .mean = 0.0,
                         .median = Median(values),
                         .max = 0.0};
    for (double v : values) {
      summary.mean += v;
      summary.max = std::max(summary.max, v);
    }
    if (!values.empty()) summary.mean /= static_cast<double>(values.size());
    out.groups.push_back(summary);
  }
  return out;
}

std::string ReportToJson(const RunReport& report) {
  using nlohmann::json;
  const RunConfig& c = report.config;
  json j;
  j["config"] = {{"noise_std", c.noise_std},
                 {"clip", c.clip},
                 {"learning_rate", c.learning_rate},
                 {"max_steps", c.max_steps},
                 {"budget", c.budget},
                 {"mode", FilterModeName(c.mode)},
                 {"sampling_rate", c.sampling_rate}};
  j["seed"] = report.seed;
  j["num_examples"] = report.groups.size();
  j["num_groups"] = report.num_groups;
  j["steps"] = report.steps;
  j["active_count"] = report.active_count;
  j["group_train_loss"] = report.group_train_loss;
  j["group_test_loss"] = report.group_test_loss;
  j["first_filter_step"] = report.first_filter_step.has_value()
                               ? json(*report.first_filter_step)
                               : json(nullptr);
  double max_spent = 0.0;
  for (double s : report.spent_sq) max_spent = std::max(max_spent, s);
  j["max_spent_sq"] = max_spent;
  j["final_weights"] = report.final_weights;
  j["error"] = report.error.empty() ? json(nullptr) : json(report.error);
  return j.dump();
}

std::string MuTraceCsv(const RunReport& report) {
  std::string out = "step,example,group,mu\n";
  for (size_t s = 0; s < report.mu.size(); ++s) {
    for (size_t i = 0; i < report.mu[s].size(); ++i) {
      absl::StrAppend(&out, s + 1, ",", i, ",", report.groups[i], ",",
                      Num(report.mu[s][i]), "\n");
    }
  }
  return out;
}

std::string LossCurveCsv(const RunReport& report) {
  std::string out = "step,group,split,loss\n";
  for (size_t s = 0; s < report.group_train_loss.size(); ++s) {
    for (int g = 0; g < report.num_groups; ++g) {
      absl::StrAppend(&out, s, ",", g, ",train,",
                      Num(report.group_train_loss[s][g]), "\n");
      absl::StrAppend(&out, s, ",", g, ",test,",
                      Num(report.group_test_loss[s][g]), "\n");
    }
  }
  return out;
}

std::string EpsilonCsv(const RunReport& report, const EpsilonReport& eps) {
  std::string out = "example,group,epsilon\n";
  for (size_t i = 0; i < eps.epsilon.size(); ++i) {
    absl::StrAppend(&out, i, ",", report.groups[i], ",", Num(eps.epsilon[i]),
                    "\n");
  }
  return out;
}

std::string EpsilonReportToJson(const EpsilonReport& eps) {
  using nlohmann::json;
  json groups = json::array();
  for (const GroupSummary& g : eps.groups) {
    groups.push_back({{"group", g.group},
                      {"count", g.count},
                      {"mean", g.mean},
                      {"median", g.median},
                      {"max", g.max}});
  }
  return json{{"accountant", AccountantName(eps.accountant)},
              {"delta", eps.delta},
              {"epsilon", eps.epsilon},
              {"groups", groups}}
      .dump();
}

}  // namespace dpacct
