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

#include "dpacct/analytic_gdp.h"

#include <cmath>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace dpacct {
namespace {

constexpr int kMaxBisectionSteps = 400;

}  // namespace

absl::StatusOr<GdpParam> GdpParam::Create(double mu) {
  if (!(mu >= 0.0) || !std::isfinite(mu)) {
    return absl::InvalidArgumentError(
        absl::StrCat("GDP parameter must be finite and nonnegative, got ", mu));
  }
  return GdpParam(mu);
}

bool EpsDeltaCurve::IsValid() const {
  for (size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].delta >= 0.0 && points[i].delta <= 1.0)) return false;
    if (i > 0 && (points[i].epsilon < points[i - 1].epsilon ||
                  points[i].delta > points[i - 1].delta)) {
      return false;
    }
  }
  return true;
}

double GdpDelta(double mu, double epsilon) {
  if (mu == 0.0) return std::max(0.0, -std::expm1(epsilon));
  // delta = Phi(a) (1 - exp(eps + log Phi(b) - log Phi(a))), evaluated in log
  // space so that values far below 1e-300 do not collapse to 0 - 0.
  const double a = -epsilon / mu + 0.5 * mu;
  const double b = -epsilon / mu - 0.5 * mu;
  const double log_a = LogNormalCdf(a);
  const double log_b = LogNormalCdf(b);
  const double ratio = epsilon + log_b - log_a;
  if (ratio >= 0.0) return 0.0;
  const double delta = std::exp(log_a) * -std::expm1(ratio);
  return std::clamp(delta, 0.0, 1.0);
}

absl::StatusOr<double> GdpEpsilon(double mu, double delta) {
  if (!(mu >= 0.0) || !std::isfinite(mu)) {
    return absl::InvalidArgumentError(
        absl::StrCat("GDP parameter must be finite and nonnegative, got ", mu));
  }
  if (delta >= 1.0) {
    return absl::OutOfRangeError(
        absl::StrCat("NoSolution: delta must be below 1, got ", delta));
  }
  if (!(delta > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta must be positive, got ", delta));
  }
  if (mu == 0.0) return 0.0;
  if (GdpDelta(mu, 0.0) <= delta) return 0.0;

  // The bracket starts at mu^2/2 + mu * Phi^{-1}(1 - delta) <= mu^2/2 +
  // mu * sqrt(2 log(1/delta)) and is widened geometrically.
  double lo = 0.0;
  double hi = 0.5 * mu * mu + mu * std::sqrt(2.0 * -std::log(delta)) + 1e-3;
  while (GdpDelta(mu, hi) > delta) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) {
      return absl::InternalError("GdpEpsilon bracket expansion overflowed");
    }
  }
  for (int i = 0; i < kMaxBisectionSteps; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (GdpDelta(mu, mid) > delta) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-14 * std::max(1.0, hi)) break;
  }
  return hi;
}

double GdpCompose(absl::Span<const double> mus) {
  double sum_sq = 0.0;
  for (double mu : mus) sum_sq += mu * mu;
  return std::sqrt(sum_sq);
}

GdpParam GdpCompose(absl::Span<const GdpParam> mus) {
  double sum_sq = 0.0;
  for (const GdpParam& mu : mus) sum_sq += mu.mu() * mu.mu();
  return *GdpParam::Create(std::sqrt(sum_sq));
}

absl::StatusOr<GdpParam> GdStepMu(double gradient_norm, double noise_std) {
  if (!(noise_std > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("Noise std must be positive, got ", noise_std));
  }
  return GdpParam::Create(gradient_norm / noise_std);
}

EpsDeltaCurve GdpCurve(double mu, absl::Span<const double> epsilons) {
  EpsDeltaCurve curve;
  curve.direction = "symmetric";
  curve.points.reserve(epsilons.size());
  for (double eps : epsilons) curve.points.push_back({eps, GdpDelta(mu, eps)});
  return curve;
}

}  // namespace dpacct
