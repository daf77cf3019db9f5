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

// Parametric dominating pairs of distributions and their privacy loss random
// variables (PRVs).
//
// A pair (P, Q) is represented by its privacy loss function
// L(t) = log(P(t) / Q(t)); the PRV is L(t) with t ~ P. Both families below
// have a loss that is nondecreasing in t, which lets the PRV CDF be computed
// by inverting the loss to a threshold in t.

#ifndef DPACCT_DISTRIBUTIONS_H_
#define DPACCT_DISTRIBUTIONS_H_

#include <variant>

#include "absl/status/statusor.h"

namespace dpacct {

// Neighbouring relation for the subsampled pair.
enum class Direction { kAdd, kRemove };

const char* DirectionName(Direction direction);

// P = N(sensitivity, noise_scale^2), Q = N(0, noise_scale^2).
class GaussianPair {
 public:
  static absl::StatusOr<GaussianPair> Create(double sensitivity,
                                             double noise_scale);

  double sensitivity() const { return sensitivity_; }
  double noise_scale() const { return noise_scale_; }
  // The GDP parameter mu = sensitivity / noise_scale.
  double ratio() const { return sensitivity_ / noise_scale_; }

 private:
  GaussianPair(double sensitivity, double noise_scale)
      : sensitivity_(sensitivity), noise_scale_(noise_scale) {}

  double sensitivity_;
  double noise_scale_;
};

// Poisson-subsampled Gaussian mechanism with unit sensitivity and noise ratio
// s = sigma / C.
//
//   kAdd:    P = q N(1, s^2) + (1 - q) N(0, s^2),  Q = N(0, s^2)
//   kRemove: P = N(1, s^2),  Q = q N(0, s^2) + (1 - q) N(1, s^2)
//
// kRemove is the mixture-in-second-slot pair, reflected t -> 1 - t so that
// its loss is nondecreasing in t. At q = 1 both reduce to the Gaussian pair
// with ratio 1 / s.
class SubsampledGaussianPair {
 public:
  static absl::StatusOr<SubsampledGaussianPair> Create(double sampling_rate,
                                                       double noise_ratio,
                                                       Direction direction);

  double sampling_rate() const { return sampling_rate_; }
  double noise_ratio() const { return noise_ratio_; }
  Direction direction() const { return direction_; }

 private:
  SubsampledGaussianPair(double q, double s, Direction d)
      : sampling_rate_(q), noise_ratio_(s), direction_(d) {}

  double sampling_rate_;
  double noise_ratio_;
  Direction direction_;
};

using DominatingPair = std::variant<GaussianPair, SubsampledGaussianPair>;

struct PrvGaussianStats {
  double mean;
  double variance;
};

// Mean and variance of the (Gaussian) PRV of a Gaussian pair.
PrvGaussianStats GaussianPrvStats(const GaussianPair& pair);

// Privacy loss log(P(t) / Q(t)).
double LossAt(const GaussianPair& pair, double t);
double SubsampledLossAt(const SubsampledGaussianPair& pair, double t);
double LossAt(const DominatingPair& pair, double t);

// P(PRV <= s) and P(PRV > s). The survival function is evaluated directly
// rather than as 1 - cdf so that upper-tail cell masses keep their relative
// precision.
double PrvCdf(const GaussianPair& pair, double s);
double PrvCdf(const SubsampledGaussianPair& pair, double s);
double PrvCdf(const DominatingPair& pair, double s);
double PrvSurvival(const GaussianPair& pair, double s);
double PrvSurvival(const SubsampledGaussianPair& pair, double s);
double PrvSurvival(const DominatingPair& pair, double s);

// Standard normal helpers shared with the analytic GDP code.
double NormalCdf(double x);
double NormalSurvival(double x);
// log Phi(x), accurate far into the lower tail.
double LogNormalCdf(double x);

}  // namespace dpacct

#endif  // DPACCT_DISTRIBUTIONS_H_
