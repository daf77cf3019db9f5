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

// Renyi DP baseline accountant for Gaussian and Poisson-subsampled Gaussian
// mechanisms.

#ifndef DPACCT_RDP_ACCOUNTANT_H_
#define DPACCT_RDP_ACCOUNTANT_H_

#include <vector>

#include "absl/status/statusor.h"
#include "absl/types/span.h"
#include "dpacct/distributions.h"

namespace dpacct {

// rho(alpha) on a finite grid of orders alpha > 1, orders sorted ascending.
struct RdpCurve {
  std::vector<double> orders;
  std::vector<double> rho;

  static RdpCurve Zero(std::vector<double> orders);

  // k-fold composition of the curve with itself.
  RdpCurve Scaled(double k) const;
};

// {1.05, 1.10, ..., 1.95} followed by the integers 2..256.
std::vector<double> DefaultOrders();
// The integers 2..256.
std::vector<double> IntegerOrders();

// rho(alpha) = alpha mu^2 / 2.
absl::StatusOr<RdpCurve> GaussianRdp(double mu, absl::Span<const double> orders);

// Pointwise sum. The empty composition is the zero curve on DefaultOrders().
absl::StatusOr<RdpCurve> RdpCompose(absl::Span<const RdpCurve> curves);

enum class RdpConversion {
  // eps(alpha) = rho + log(1/delta) / (alpha - 1).
  kClassic,
  // eps(alpha) = rho + log((alpha-1)/alpha) - (log delta + log alpha)/(alpha-1).
  kImproved,
};

struct RdpEpsilon {
  double epsilon;
  double order;
};

// Minimum of eps(alpha) over the curve's orders, floored at 0.
absl::StatusOr<RdpEpsilon> RdpToEpsilon(
    const RdpCurve& curve, double delta,
    RdpConversion conversion = RdpConversion::kClassic);

// Integer-order RDP of the Poisson-subsampled Gaussian via the binomial
// expansion of E_Q[(P/Q)^alpha], summed in log space. Orders must be integers
// >= 2.
absl::StatusOr<RdpCurve> SubsampledRdp(const SubsampledGaussianPair& pair,
                                       absl::Span<const double> orders);

}  // namespace dpacct

#endif  // DPACCT_RDP_ACCOUNTANT_H_
