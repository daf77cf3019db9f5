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

// Closed-form Gaussian differential privacy (GDP).
//
// A mechanism is mu-GDP iff it is dominated, for every hockey-stick order, by
// the pair (N(mu, 1), N(0, 1)). Its tight privacy profile is
//
//   delta(eps) = Phi(-eps / mu + mu / 2) - e^eps Phi(-eps / mu - mu / 2),
//
// and GDP parameters of adaptively chosen Gaussian mechanisms compose as
// sqrt(sum mu_i^2).

#ifndef DPACCT_ANALYTIC_GDP_H_
#define DPACCT_ANALYTIC_GDP_H_

#include <vector>

#include "absl/status/statusor.h"
#include "absl/types/span.h"
#include "dpacct/distributions.h"

namespace dpacct {

// Nonnegative, finite GDP parameter.
class GdpParam {
 public:
  static absl::StatusOr<GdpParam> Create(double mu);
  static GdpParam Zero() { return GdpParam(0.0); }

  double mu() const { return mu_; }

 private:
  explicit GdpParam(double mu) : mu_(mu) {}
  double mu_;
};

struct EpsDeltaPoint {
  double epsilon;
  double delta;
};

// A sampled privacy profile, sorted by epsilon.
struct EpsDeltaCurve {
  std::vector<EpsDeltaPoint> points;
  // Neighbouring relation the curve was computed for; "max" when it is the
  // pointwise maximum over both directions.
  std::string direction = "max";

  // Checks that delta is within [0, 1] and nonincreasing in epsilon.
  bool IsValid() const;
};

// Tight delta(eps) of a mu-GDP mechanism. For mu = 0 this is the
// total-variation limit max(0, 1 - e^eps).
double GdpDelta(double mu, double epsilon);

// Smallest eps >= 0 with GdpDelta(mu, eps) <= delta. Returns 0 when mu = 0 or
// when delta already holds at eps = 0.
absl::StatusOr<double> GdpEpsilon(double mu, double delta);

// sqrt(sum mu_i^2).
double GdpCompose(absl::Span<const double> mus);
GdpParam GdpCompose(absl::Span<const GdpParam> mus);

// Per-step GDP parameter of the noisy-sum gradient step: the sensitivity of
// the deterministic part divided by the noise standard deviation.
absl::StatusOr<GdpParam> GdStepMu(double gradient_norm, double noise_std);

EpsDeltaCurve GdpCurve(double mu, absl::Span<const double> epsilons);

}  // namespace dpacct

#endif  // DPACCT_ANALYTIC_GDP_H_
