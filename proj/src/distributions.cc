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

#include "dpacct/distributions.h"

#include <cmath>
#include <limits>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace dpacct {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)).
double LogAddExp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

// log(expm1(s) + q) for s > log(1 - q), without overflow for large s.
double LogExpm1PlusQ(double s, double q) {
  if (s > 30.0) return s + std::log1p(-(1.0 - q) * std::exp(-s));
  return std::log(std::expm1(s) + q);
}

// Threshold t* with PRV <= s  <=>  t <= t*, for pairs with 0 < q.
// Returns -inf when the event is empty and +inf when it is certain.
double SubsampledThreshold(const SubsampledGaussianPair& pair, double s) {
  const double q = pair.sampling_rate();
  const double var = pair.noise_ratio() * pair.noise_ratio();
  if (pair.direction() == Direction::kAdd) {
    // Loss is log(q e^u + 1 - q) > log(1 - q), u = (2t - 1) / (2 var).
    if (q < 1.0 && s <= std::log1p(-q)) return -kInf;
    const double u = LogExpm1PlusQ(s, q) - std::log(q);
    return var * u + 0.5;
  }
  // Loss is -log(q e^u + 1 - q) < -log(1 - q), u = (1 - 2t) / (2 var).
  if (q < 1.0 && s >= -std::log1p(-q)) return kInf;
  const double u = LogExpm1PlusQ(-s, q) - std::log(q);
  return 0.5 - var * u;
}

}  // namespace

const char* DirectionName(Direction direction) {
  return direction == Direction::kAdd ? "add" : "remove";
}

absl::StatusOr<GaussianPair> GaussianPair::Create(double sensitivity,
                                                  double noise_scale) {
  if (!(sensitivity >= 0.0) || !std::isfinite(sensitivity)) {
    return absl::InvalidArgumentError(
        absl::StrCat("Sensitivity must be finite and nonnegative, got ",
                     sensitivity));
  }
  if (!(noise_scale > 0.0) || !std::isfinite(noise_scale)) {
    return absl::InvalidArgumentError(
        absl::StrCat("Noise scale must be finite and positive, got ",
                     noise_scale));
  }
  if (!std::isfinite(sensitivity / noise_scale)) {
    return absl::InvalidArgumentError("Ratio sensitivity / noise_scale overflows");
  }
  return GaussianPair(sensitivity, noise_scale);
}

absl::StatusOr<SubsampledGaussianPair> SubsampledGaussianPair::Create(
    double sampling_rate, double noise_ratio, Direction direction) {
  if (!(sampling_rate >= 0.0 && sampling_rate <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("Sampling rate must be in [0, 1], got ", sampling_rate));
  }
  if (!(noise_ratio > 0.0) || !std::isfinite(noise_ratio)) {
    return absl::InvalidArgumentError(
        absl::StrCat("Noise ratio must be finite and positive, got ",
                     noise_ratio));
  }
  return SubsampledGaussianPair(sampling_rate, noise_ratio, direction);
}

PrvGaussianStats GaussianPrvStats(const GaussianPair& pair) {
  const double mu = pair.ratio();
  return {.mean = 0.5 * mu * mu, .variance = mu * mu};
}

double LossAt(const GaussianPair& pair, double t) {
  const double d = pair.sensitivity();
  const double var = pair.noise_scale() * pair.noise_scale();
  return (2.0 * t * d - d * d) / (2.0 * var);
}

double SubsampledLossAt(const SubsampledGaussianPair& pair, double t) {
  const double q = pair.sampling_rate();
  if (q == 0.0) return 0.0;
  const double var = pair.noise_ratio() * pair.noise_ratio();
  const double log_q = std::log(q);
  const double log_1mq = q == 1.0 ? -kInf : std::log1p(-q);
  if (pair.direction() == Direction::kAdd) {
    const double u = (2.0 * t - 1.0) / (2.0 * var);
    return LogAddExp(log_q + u, log_1mq);
  }
  const double u = (1.0 - 2.0 * t) / (2.0 * var);
  return -LogAddExp(log_q + u, log_1mq);
}

double LossAt(const DominatingPair& pair, double t) {
  return std::visit(
      [t](const auto& p) -> double {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, GaussianPair>) {
          return LossAt(p, t);
        } else {
          return SubsampledLossAt(p, t);
        }
      },
      pair);
}

double NormalCdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double NormalSurvival(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double LogNormalCdf(double x) {
  if (x > 0.0) return std::log1p(-NormalSurvival(x));
  if (x > -30.0) return std::log(NormalCdf(x));
  // Asymptotic expansion of the Mills ratio.
  const double inv2 = 1.0 / (x * x);
  const double series =
      1.0 - inv2 + 3.0 * inv2 * inv2 - 15.0 * inv2 * inv2 * inv2;
  return -0.5 * x * x - 0.5 * std::log(2.0 * M_PI) - std::log(-x) +
         std::log(series);
}

double PrvCdf(const GaussianPair& pair, double s) {
  const PrvGaussianStats stats = GaussianPrvStats(pair);
  if (stats.variance == 0.0) return s >= 0.0 ? 1.0 : 0.0;
  return NormalCdf((s - stats.mean) / std::sqrt(stats.variance));
}

double PrvSurvival(const GaussianPair& pair, double s) {
  const PrvGaussianStats stats = GaussianPrvStats(pair);
  if (stats.variance == 0.0) return s >= 0.0 ? 0.0 : 1.0;
  return NormalSurvival((s - stats.mean) / std::sqrt(stats.variance));
}

double PrvCdf(const SubsampledGaussianPair& pair, double s) {
  const double q = pair.sampling_rate();
  if (q == 0.0) return s >= 0.0 ? 1.0 : 0.0;
  const double t = SubsampledThreshold(pair, s);
  if (t == -kInf) return 0.0;
  if (t == kInf) return 1.0;
  const double sd = pair.noise_ratio();
  if (pair.direction() == Direction::kAdd) {
    return q * NormalCdf((t - 1.0) / sd) + (1.0 - q) * NormalCdf(t / sd);
  }
  return NormalCdf((t - 1.0) / sd);
}

double PrvSurvival(const SubsampledGaussianPair& pair, double s) {
  const double q = pair.sampling_rate();
  if (q == 0.0) return s >= 0.0 ? 0.0 : 1.0;
  const double t = SubsampledThreshold(pair, s);
  if (t == -kInf) return 1.0;
  if (t == kInf) return 0.0;
  const double sd = pair.noise_ratio();
  if (pair.direction() == Direction::kAdd) {
    return q * NormalSurvival((t - 1.0) / sd) +
           (1.0 - q) * NormalSurvival(t / sd);
  }
  return NormalSurvival((t - 1.0) / sd);
}

double PrvCdf(const DominatingPair& pair, double s) {
  return std::visit([s](const auto& p) { return PrvCdf(p, s); }, pair);
}

double PrvSurvival(const DominatingPair& pair, double s) {
  return std::visit([s](const auto& p) { return PrvSurvival(p, s); }, pair);
}

}  // namespace dpacct
