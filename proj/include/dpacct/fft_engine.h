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

// Numerical privacy loss distributions (PLDs) on an equidistant grid and their
// composition by FFT.
//
// A grid with half-width L and n cells has points x_l = -L + l * dx,
// l = 0..n-1, dx = 2L / n. Loss 0 sits at index n/2. Before transforming, the
// two halves of the mass array are swapped (the operator D) so that loss 0
// sits at index 0 and circular convolution adds losses.
//
// Spectra are stored as the n/2 + 1 nonredundant coefficients of the real
// transform; the remaining half follows from Hermitian symmetry.

#ifndef DPACCT_FFT_ENGINE_H_
#define DPACCT_FFT_ENGINE_H_

#include <complex>
#include <cstdint>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/types/span.h"
#include "dpacct/distributions.h"

namespace dpacct {

class GridSpec {
 public:
  static constexpr double kDefaultHalfWidth = 20.0;
  static constexpr int64_t kDefaultSize = int64_t{1} << 17;

  // `size` must be a power of two, at least 2.
  static absl::StatusOr<GridSpec> Create(double half_width, int64_t size);
  static GridSpec Default();

  double half_width() const { return half_width_; }
  int64_t size() const { return size_; }
  double step() const { return 2.0 * half_width_ / static_cast<double>(size_); }
  double point(int64_t index) const {
    return -half_width_ + static_cast<double>(index) * step();
  }
  int64_t zero_index() const { return size_ / 2; }
  int64_t spectrum_size() const { return size_ / 2 + 1; }

  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    return a.half_width_ == b.half_width_ && a.size_ == b.size_;
  }

 private:
  GridSpec(double half_width, int64_t size)
      : half_width_(half_width), size_(size) {}

  double half_width_;
  int64_t size_;
};

// How PRV mass inside a cell is assigned to grid points.
//  kUp:       (x_{l-1}, x_l] -> x_l. delta computed from it is an upper bound.
//  kDown:     [x_l, x_{l+1}) -> x_l. delta computed from it is a lower bound.
//  kEstimate: mass split between both cell ends so that the mean is kept, then
//             sharpened with a 3-tap kernel so that the variance is kept too.
//             Not a bound, but second-order accurate under composition.
enum class Rounding { kUp, kDown, kEstimate };

const char* RoundingName(Rounding rounding);

struct DiscretePld {
  GridSpec grid;
  std::vector<double> mass;
  // PRV mass outside the grid. Counted fully into delta unless the rounding
  // is kDown.
  double truncated_tail = 0.0;
  Rounding rounding = Rounding::kUp;

  double TotalMass() const;
};

struct FourierPld {
  GridSpec grid;
  // Transform of the half-swapped mass array, n/2 + 1 coefficients.
  std::vector<std::complex<double>> coefficients;
  double truncated_tail = 0.0;
  Rounding rounding = Rounding::kUp;
  // Loss mean and variance of the on-grid mass. Composition adds them up and
  // refuses products whose mean +- 6 sd leaves [-L, L], since that mass
  // would wrap around the circular convolution.
  double mean = 0.0;
  double variance = 0.0;
};

// Transform of the half-swapped hinge weights
// w_l = max(0, 1 - exp(eps - x_l)).
struct FourierWeight {
  GridSpec grid;
  double epsilon = 0.0;
  std::vector<std::complex<double>> coefficients;
};

struct WeightedPld {
  const DiscretePld* pld;
  int64_t multiplicity;
};

struct WeightedFourierPld {
  const FourierPld* pld;
  int64_t multiplicity;
};

// Places the PRV of `pair` on `grid`. Fails with FailedPrecondition
// (GridTooNarrow) when more than a six-sigma share of the PRV falls outside
// [-L, L].
absl::StatusOr<DiscretePld> Discretize(const DominatingPair& pair,
                                       const GridSpec& grid, Rounding rounding);

// The PLD of the identity mechanism: a point mass at loss 0.
DiscretePld IdentityPld(const GridSpec& grid);

FourierPld ToFourier(const DiscretePld& pld);
DiscretePld FromFourier(const FourierPld& spectrum);

// Composition sum_i k_i * PRV_i, computed as the elementwise product of
// powered spectra. Negative round-off is clamped; truncated tails add.
absl::StatusOr<DiscretePld> ComposeFft(absl::Span<const WeightedPld> factors);

// Elementwise product of powered spectra, without the inverse transform.
// An empty (or all-zero multiplicity) input yields the identity spectrum on
// `grid`. FailedPrecondition (GridTooNarrow) when the composed loss would
// wrap around the grid.
absl::StatusOr<FourierPld> MultiplySpectra(
    absl::Span<const WeightedFourierPld> factors, const GridSpec& grid);

// z^k for every coefficient, by repeated squaring.
void PowerInPlace(std::vector<std::complex<double>>& coefficients, int64_t k);

// sum over grid points x > eps of (1 - e^{eps - x}) * mass, plus the
// truncated tail unless the PLD was rounded down. Clipped to [0, 1].
double DeltaFromPld(const DiscretePld& pld, double epsilon);

// DeltaFromPld for many epsilons at once.
std::vector<double> DeltaCurveFromPld(const DiscretePld& pld,
                                      absl::Span<const double> epsilons);

// Smallest eps in [0, L] with DeltaFromPld(pld, eps) <= delta, by bisection
// on the monotone profile. OutOfRange when even eps = L does not suffice.
absl::StatusOr<double> EpsilonFromPld(const DiscretePld& pld, double delta);

FourierWeight MakeWeight(const GridSpec& grid, double epsilon);

// delta via the inner product (1/n) <F(D w), prod_i F(D a_i)^{k_i}>, with no
// inverse transform.
absl::StatusOr<double> DeltaPlancherel(
    absl::Span<const WeightedFourierPld> factors, const FourierWeight& weight);

// Inner product of an already multiplied spectrum with a weight.
absl::StatusOr<double> DeltaPlancherel(const FourierPld& product,
                                       const FourierWeight& weight);

// Number of forward and inverse transforms executed by this process.
int64_t TransformCount();

}  // namespace dpacct

#endif  // DPACCT_FFT_ENGINE_H_
