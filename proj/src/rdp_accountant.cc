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

#include "dpacct/rdp_accountant.h"

#include <cmath>
#include <limits>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace dpacct {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

absl::Status CheckOrders(absl::Span<const double> orders) {
  if (orders.empty()) return absl::InvalidArgumentError("Empty order grid");
  for (size_t i = 0; i < orders.size(); ++i) {
    if (!(orders[i] > 1.0) || !std::isfinite(orders[i])) {
      return absl::InvalidArgumentError(
          absl::StrCat("RDP orders must be finite and > 1, got ", orders[i]));
    }
    if (i > 0 && orders[i] <= orders[i - 1]) {
      return absl::InvalidArgumentError("RDP orders must be strictly increasing");
    }
  }
  return absl::OkStatus();
}

double LogBinomial(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

RdpCurve RdpCurve::Zero(std::vector<double> orders) {
  RdpCurve curve;
  curve.rho.assign(orders.size(), 0.0);
  curve.orders = std::move(orders);
  return curve;
}

RdpCurve RdpCurve::Scaled(double k) const {
  RdpCurve scaled = *this;
  for (double& r : scaled.rho) r *= k;
  return scaled;
}

std::vector<double> DefaultOrders() {
  std::vector<double> orders;
  for (int i = 1; i < 20; ++i) orders.push_back(1.0 + 0.05 * i);
  for (int a = 2; a <= 256; ++a) orders.push_back(a);
  return orders;
}

std::vector<double> IntegerOrders() {
  std::vector<double> orders;
  for (int a = 2; a <= 256; ++a) orders.push_back(a);
  return orders;
}

absl::StatusOr<RdpCurve> GaussianRdp(double mu,
                                     absl::Span<const double> orders) {
  if (!(mu >= 0.0) || !std::isfinite(mu)) {
    return absl::InvalidArgumentError(
        absl::StrCat("GDP parameter must be finite and nonnegative, got ", mu));
  }
  if (absl::Status status = CheckOrders(orders); !status.ok()) return status;
  RdpCurve curve;
  curve.orders.assign(orders.begin(), orders.end());
  curve.rho.reserve(orders.size());
  for (double alpha : orders) curve.rho.push_back(0.5 * alpha * mu * mu);
  return curve;
}

absl::StatusOr<RdpCurve> RdpCompose(absl::Span<const RdpCurve> curves) {
  if (curves.empty()) return RdpCurve::Zero(DefaultOrders());
  RdpCurve total = RdpCurve::Zero(curves.front().orders);
  for (const RdpCurve& curve : curves) {
    if (curve.orders != total.orders || curve.rho.size() != total.rho.size()) {
      return absl::FailedPreconditionError(
          "GridMismatch: RDP curves use different order grids");
    }
    for (size_t i = 0; i < curve.rho.size(); ++i) total.rho[i] += curve.rho[i];
  }
  return total;
}

absl::StatusOr<RdpEpsilon> RdpToEpsilon(const RdpCurve& curve, double delta,
                                        RdpConversion conversion) {
  if (!(delta > 0.0 && delta < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta must be in (0, 1), got ", delta));
  }
  if (curve.orders.empty() || curve.orders.size() != curve.rho.size()) {
    return absl::InvalidArgumentError("Malformed RDP curve");
  }
  RdpEpsilon best{.epsilon = kInf, .order = 0.0};
  const double log_delta = std::log(delta);
  for (size_t i = 0; i < curve.orders.size(); ++i) {
    const double alpha = curve.orders[i];
    const double rho = curve.rho[i];
    if (!std::isfinite(rho)) continue;
    double eps;
    if (conversion == RdpConversion::kClassic) {
      eps = rho - log_delta / (alpha - 1.0);
    } else {
      eps = rho + std::log1p(-1.0 / alpha) -
            (log_delta + std::log(alpha)) / (alpha - 1.0);
    }
    if (eps < best.epsilon) best = {.epsilon = eps, .order = alpha};
  }
  if (!std::isfinite(best.epsilon)) {
    return absl::OutOfRangeError("NoFiniteBound: every RDP order is infinite");
  }
  best.epsilon = std::max(best.epsilon, 0.0);
  return best;
}

absl::StatusOr<RdpCurve> SubsampledRdp(const SubsampledGaussianPair& pair,
                                       absl::Span<const double> orders) {
  if (absl::Status status = CheckOrders(orders); !status.ok()) return status;
  const double q = pair.sampling_rate();
  const double var = pair.noise_ratio() * pair.noise_ratio();
  RdpCurve curve;
  curve.orders.assign(orders.begin(), orders.end());
  curve.rho.reserve(orders.size());
  for (double alpha : orders) {
    if (alpha != std::floor(alpha) || alpha < 2.0) {
      return absl::InvalidArgumentError(absl::StrCat(
          "Subsampled RDP needs integer orders >= 2, got ", alpha));
    }
    if (q == 0.0) {
      curve.rho.push_back(0.0);
      continue;
    }
    // log A = log sum_j C(a, j) (1-q)^{a-j} q^j exp((j^2 - j) / (2 var)).
    const double log_q = std::log(q);
    const double log_1mq = q == 1.0 ? -kInf : std::log1p(-q);
    const int a = static_cast<int>(alpha);
    std::vector<double> terms;
    terms.reserve(a + 1);
    double max_term = -kInf;
    for (int j = 0; j <= a; ++j) {
      const double rest = a - j == 0 ? 0.0 : (a - j) * log_1mq;
      const double term = LogBinomial(a, j) + rest + j * log_q +
                          (static_cast<double>(j) * j - j) / (2.0 * var);
      if (std::isnan(term) || term == kInf) {
        return absl::OutOfRangeError(absl::StrCat(
            "OrderOverflow: log-domain term at order ", a, " is ", term));
      }
      terms.push_back(term);
      max_term = std::max(max_term, term);
    }
    double sum = 0.0;
    for (double term : terms) sum += std::exp(term - max_term);
    const double log_a = max_term + std::log(sum);
    if (!std::isfinite(log_a)) {
      return absl::OutOfRangeError(
          absl::StrCat("OrderOverflow at order ", a));
    }
    curve.rho.push_back(std::max(0.0, log_a / (alpha - 1.0)));
  }
  return curve;
}

}  // namespace dpacct
