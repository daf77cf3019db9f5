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

#include "dpacct/fft_engine.h"

#include <fftw3.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace dpacct {
namespace {

using Complex = std::complex<double>;

// Two-sided six-sigma Gaussian tail share allowed outside the grid.
const double kSixSigmaTail = NormalSurvival(6.0);

// PRVs narrower than this many cells are not sharpened; the 3-tap kernel
// would leave negative lobes around a near point mass.
constexpr double kMinSharpenWidthCells = 8.0;

std::atomic<int64_t> transform_count{0};

// FFTW's planner is not thread safe; execution is.
std::mutex& PlannerMutex() {
  static std::mutex* mutex = new std::mutex;
  return *mutex;
}

std::vector<Complex> ForwardReal(std::vector<double> input) {
  const int n = static_cast<int>(input.size());
  std::vector<Complex> output(n / 2 + 1);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    plan = fftw_plan_dft_r2c_1d(n, input.data(),
                                reinterpret_cast<fftw_complex*>(output.data()),
                                FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    fftw_destroy_plan(plan);
  }
  transform_count.fetch_add(1, std::memory_order_relaxed);
  return output;
}

// Unnormalized inverse of ForwardReal.
std::vector<double> InverseReal(std::vector<Complex> spectrum, int64_t size) {
  const int n = static_cast<int>(size);
  std::vector<double> output(n);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    plan = fftw_plan_dft_c2r_1d(
        n, reinterpret_cast<fftw_complex*>(spectrum.data()), output.data(),
        FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    fftw_destroy_plan(plan);
  }
  transform_count.fetch_add(1, std::memory_order_relaxed);
  return output;
}

// The operator D: swaps the two halves of the array.
std::vector<double> SwapHalves(absl::Span<const double> values) {
  const size_t half = values.size() / 2;
  std::vector<double> swapped(values.size());
  std::copy(values.begin() + half, values.end(), swapped.begin());
  std::copy(values.begin(), values.begin() + half, swapped.begin() + half);
  return swapped;
}

Complex IntPow(Complex z, int64_t k) {
  Complex result(1.0, 0.0);
  while (k > 0) {
    if (k & 1) result *= z;
    z *= z;
    k >>= 1;
  }
  return result;
}

Rounding CombineRounding(Rounding a, Rounding b) {
  return a == b ? a : Rounding::kEstimate;
}

bool IsDegenerate(const DominatingPair& pair) {
  if (const auto* g = std::get_if<GaussianPair>(&pair)) {
    return g->sensitivity() == 0.0;
  }
  return std::get<SubsampledGaussianPair>(pair).sampling_rate() == 0.0;
}

absl::Status CheckGridCoverage(const DominatingPair& pair,
                               const GridSpec& grid) {
  const double half_width = grid.half_width();
  if (const auto* g = std::get_if<GaussianPair>(&pair)) {
    const PrvGaussianStats stats = GaussianPrvStats(*g);
    const double sd = std::sqrt(stats.variance);
    if (stats.mean - 6.0 * sd < -half_width ||
        stats.mean + 6.0 * sd > half_width) {
      return absl::FailedPreconditionError(absl::StrCat(
          "GridTooNarrow: PRV mean ", stats.mean, " +- 6 sd ", 6.0 * sd,
          " exceeds [-", half_width, ", ", half_width, "]"));
    }
    return absl::OkStatus();
  }
  const double below = PrvCdf(pair, -half_width);
  const double above = PrvSurvival(pair, half_width);
  if (below > kSixSigmaTail || above > kSixSigmaTail) {
    return absl::FailedPreconditionError(absl::StrCat(
        "GridTooNarrow: PRV mass outside [-", half_width, ", ", half_width,
        "] is ", below, " below and ", above, " above"));
  }
  return absl::OkStatus();
}

// CDF and survival function sampled on a set of points; cell masses are taken
// from whichever side keeps relative precision.
class SampledPrv {
 public:
  SampledPrv(const DominatingPair& pair, absl::Span<const double> points) {
    cdf_.reserve(points.size());
    survival_.reserve(points.size());
    for (double s : points) {
      cdf_.push_back(PrvCdf(pair, s));
      survival_.push_back(PrvSurvival(pair, s));
    }
  }

  double Below(size_t i) const { return cdf_[i]; }
  double Above(size_t i) const { return survival_[i]; }
  // Mass of (points[i], points[j]].
  double Between(size_t i, size_t j) const {
    const double mass = cdf_[j] <= 0.5 ? cdf_[j] - cdf_[i]
                                       : survival_[i] - survival_[j];
    return std::max(mass, 0.0);
  }

 private:
  std::vector<double> cdf_;
  std::vector<double> survival_;
};

void Sharpen(DiscretePld& pld) {
  const std::vector<double>& m = pld.mass;
  const double dx = pld.grid.step();
  double total = 0.0, first = 0.0, second = 0.0;
  for (size_t l = 0; l < m.size(); ++l) {
    const double x = pld.grid.point(static_cast<int64_t>(l));
    total += m[l];
    first += m[l] * x;
    second += m[l] * x * x;
  }
  if (total <= 0.0) return;
  const double mean = first / total;
  const double var = std::max(0.0, second / total - mean * mean);
  if (std::sqrt(var) < kMinSharpenWidthCells * dx) return;

  // The two-point split adds dx^2/6 of variance per unit mass; the kernel
  // [-1/12, 7/6, -1/12] removes exactly that and keeps mass and mean. It is
  // applied as fluxes f_l = (m_{l+1} - m_l) / 12 from cell l to l + 1, each
  // scaled down where its donor cell would otherwise go negative, so mass is
  // conserved exactly even next to the singular edge of a subsampled PRV.
  const size_t n = m.size();
  std::vector<double> flux(n > 0 ? n - 1 : 0);
  std::vector<double> outgoing(n, 0.0);
  for (size_t l = 0; l + 1 < n; ++l) {
    flux[l] = (m[l + 1] - m[l]) / 12.0;
    if (flux[l] > 0.0) {
      outgoing[l] += flux[l];
    } else {
      outgoing[l + 1] -= flux[l];
    }
  }
  std::vector<double> sharpened = m;
  for (size_t l = 0; l + 1 < n; ++l) {
    const size_t donor = flux[l] > 0.0 ? l : l + 1;
    const double scale =
        outgoing[donor] > m[donor] ? m[donor] / outgoing[donor] : 1.0;
    const double f = flux[l] * scale;
    sharpened[l] -= f;
    sharpened[l + 1] += f;
  }
  for (double& v : sharpened) v = std::max(0.0, v);
  pld.mass = std::move(sharpened);
}

}  // namespace

const char* RoundingName(Rounding rounding) {
  switch (rounding) {
    case Rounding::kUp:
      return "up";
    case Rounding::kDown:
      return "down";
    case Rounding::kEstimate:
      return "estimate";
  }
  return "unknown";
}

absl::StatusOr<GridSpec> GridSpec::Create(double half_width, int64_t size) {
  if (!(half_width > 0.0) || !std::isfinite(half_width)) {
    return absl::InvalidArgumentError(
        absl::StrCat("Grid half-width must be positive, got ", half_width));
  }
  if (size < 2 || (size & (size - 1)) != 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("Grid size must be a power of two >= 2, got ", size));
  }
  if (size > (int64_t{1} << 30)) {
    return absl::InvalidArgumentError(
        absl::StrCat("Grid size ", size, " exceeds 2^30"));
  }
  return GridSpec(half_width, size);
}

GridSpec GridSpec::Default() {
  return GridSpec(kDefaultHalfWidth, kDefaultSize);
}

double DiscretePld::TotalMass() const {
  double total = truncated_tail;
  for (double m : mass) total += m;
  return total;
}

DiscretePld IdentityPld(const GridSpec& grid) {
  DiscretePld pld{.grid = grid,
                  .mass = std::vector<double>(grid.size(), 0.0),
                  .truncated_tail = 0.0,
                  .rounding = Rounding::kEstimate};
  pld.mass[grid.zero_index()] = 1.0;
  return pld;
}

absl::StatusOr<DiscretePld> Discretize(const DominatingPair& pair,
                                       const GridSpec& grid,
                                       Rounding rounding) {
  if (IsDegenerate(pair)) {
    DiscretePld pld = IdentityPld(grid);
    pld.rounding = rounding;
    return pld;
  }
  if (absl::Status status = CheckGridCoverage(pair, grid); !status.ok()) {
    return status;
  }

  const int64_t n = grid.size();
  DiscretePld pld{.grid = grid,
                  .mass = std::vector<double>(n, 0.0),
                  .truncated_tail = 0.0,
                  .rounding = rounding};

  if (rounding == Rounding::kEstimate) {
    // Half-cell edges y_j = -L + j dx / 2, j = 0..2n.
    std::vector<double> edges(2 * n + 1);
    for (int64_t j = 0; j <= 2 * n; ++j) {
      edges[j] = -grid.half_width() + 0.5 * static_cast<double>(j) * grid.step();
    }
    const SampledPrv prv(pair, edges);
    pld.mass[0] += prv.Below(0);
    for (int64_t l = 0; l < n; ++l) {
      // Simpson's rule on the CDF over the cell gives the share of the cell
      // mass that the mean-preserving split sends to the upper end.
      const double lower_half = prv.Between(2 * l, 2 * l + 1);
      const double upper_half = prv.Between(2 * l + 1, 2 * l + 2);
      pld.mass[l] += (5.0 * lower_half + upper_half) / 6.0;
      const double up_share = (lower_half + 5.0 * upper_half) / 6.0;
      if (l + 1 < n) {
        pld.mass[l + 1] += up_share;
      } else {
        pld.truncated_tail += up_share;
      }
    }
    pld.truncated_tail += prv.Above(2 * n);
    Sharpen(pld);
    return pld;
  }

  // Cell edges x_0..x_{n-1} and x_n = L.
  std::vector<double> edges(n + 1);
  for (int64_t l = 0; l <= n; ++l) edges[l] = grid.point(l);
  const SampledPrv prv(pair, edges);
  if (rounding == Rounding::kUp) {
    pld.mass[0] = prv.Below(0);
    for (int64_t l = 1; l < n; ++l) pld.mass[l] = prv.Between(l - 1, l);
    pld.truncated_tail = prv.Above(n - 1);
  } else {
    for (int64_t l = 0; l < n; ++l) pld.mass[l] = prv.Between(l, l + 1);
    pld.truncated_tail = prv.Below(0) + prv.Above(n);
  }
  return pld;
}

FourierPld ToFourier(const DiscretePld& pld) {
  FourierPld spectrum{.grid = pld.grid,
                      .coefficients = ForwardReal(SwapHalves(pld.mass)),
                      .truncated_tail = pld.truncated_tail,
                      .rounding = pld.rounding};
  long double total = 0.0L, first = 0.0L, second = 0.0L;
  for (int64_t l = 0; l < pld.grid.size(); ++l) {
    const long double m = std::max(0.0, pld.mass[l]);
    const long double x = pld.grid.point(l);
    total += m;
    first += m * x;
    second += m * x * x;
  }
  if (total > 0.0L) {
    const long double mean = first / total;
    spectrum.mean = static_cast<double>(mean);
    spectrum.variance =
        std::max(0.0, static_cast<double>(second / total - mean * mean));
  }
  return spectrum;
}

DiscretePld FromFourier(const FourierPld& spectrum) {
  const int64_t n = spectrum.grid.size();
  std::vector<double> swapped = InverseReal(spectrum.coefficients, n);
  const double scale = 1.0 / static_cast<double>(n);
  for (double& v : swapped) v = std::max(0.0, v * scale);
  return DiscretePld{.grid = spectrum.grid,
                     .mass = SwapHalves(swapped),
                     .truncated_tail = spectrum.truncated_tail,
                     .rounding = spectrum.rounding};
}

void PowerInPlace(std::vector<std::complex<double>>& coefficients, int64_t k) {
  for (Complex& z : coefficients) z = IntPow(z, k);
}

absl::StatusOr<FourierPld> MultiplySpectra(
    absl::Span<const WeightedFourierPld> factors, const GridSpec& grid) {
  FourierPld product{
      .grid = grid,
      .coefficients = std::vector<Complex>(grid.spectrum_size(), Complex(1.0)),
      .truncated_tail = 0.0,
      .rounding = Rounding::kEstimate};
  bool first = true;
  for (const WeightedFourierPld& factor : factors) {
    if (factor.multiplicity < 0) {
      return absl::InvalidArgumentError(
          absl::StrCat("Negative multiplicity ", factor.multiplicity));
    }
    if (factor.multiplicity == 0) continue;
    if (!(factor.pld->grid == grid)) {
      return absl::FailedPreconditionError(
          "GridMismatch: all PLDs in a composition must share one grid");
    }
    product.rounding =
        first ? factor.pld->rounding
              : CombineRounding(product.rounding, factor.pld->rounding);
    first = false;
    const double k = static_cast<double>(factor.multiplicity);
    product.truncated_tail += k * factor.pld->truncated_tail;
    product.mean += k * factor.pld->mean;
    product.variance += k * factor.pld->variance;
    const std::vector<Complex>& coefficients = factor.pld->coefficients;
    for (size_t i = 0; i < coefficients.size(); ++i) {
      product.coefficients[i] *= IntPow(coefficients[i], factor.multiplicity);
    }
  }
  product.truncated_tail = std::min(product.truncated_tail, 1.0);
  const double spread = 6.0 * std::sqrt(product.variance);
  if (product.mean - spread < -grid.half_width() ||
      product.mean + spread > grid.half_width()) {
    return absl::FailedPreconditionError(absl::StrCat(
        "GridTooNarrow: composed loss mean ", product.mean, " +- 6 sd ", spread,
        " wraps around [-", grid.half_width(), ", ", grid.half_width(), "]"));
  }
  return product;
}

absl::StatusOr<DiscretePld> ComposeFft(absl::Span<const WeightedPld> factors) {
  if (factors.empty()) {
    return absl::InvalidArgumentError("ComposeFft needs at least one factor");
  }
  const GridSpec grid = factors.front().pld->grid;
  std::vector<FourierPld> spectra;
  spectra.reserve(factors.size());
  std::vector<WeightedFourierPld> weighted;
  weighted.reserve(factors.size());
  for (const WeightedPld& factor : factors) {
    if (!(factor.pld->grid == grid)) {
      return absl::FailedPreconditionError(
          "GridMismatch: all PLDs in a composition must share one grid");
    }
    if (factor.multiplicity < 0) {
      return absl::InvalidArgumentError(
          absl::StrCat("Negative multiplicity ", factor.multiplicity));
    }
  }
  for (const WeightedPld& factor : factors) {
    if (factor.multiplicity == 0) continue;
    spectra.push_back(ToFourier(*factor.pld));
  }
  size_t next = 0;
  for (const WeightedPld& factor : factors) {
    if (factor.multiplicity == 0) continue;
    weighted.push_back({&spectra[next++], factor.multiplicity});
  }
  if (weighted.empty()) return IdentityPld(grid);
  absl::StatusOr<FourierPld> product = MultiplySpectra(weighted, grid);
  if (!product.ok()) return product.status();
  return FromFourier(*product);
}

double DeltaFromPld(const DiscretePld& pld, double epsilon) {
  const GridSpec& grid = pld.grid;
  const int64_t n = grid.size();
  int64_t start = static_cast<int64_t>(
      std::floor((epsilon + grid.half_width()) / grid.step()));
  start = std::clamp<int64_t>(start, 0, n);
  while (start > 0 && grid.point(start - 1) > epsilon) --start;
  while (start < n && grid.point(start) <= epsilon) ++start;
  double delta = 0.0;
  for (int64_t l = start; l < n; ++l) {
    const double m = pld.mass[l];
    if (m > 0.0) delta += -std::expm1(epsilon - grid.point(l)) * m;
  }
  if (pld.rounding != Rounding::kDown) delta += pld.truncated_tail;
  return std::clamp(delta, 0.0, 1.0);
}

std::vector<double> DeltaCurveFromPld(const DiscretePld& pld,
                                      absl::Span<const double> epsilons) {
  const GridSpec& grid = pld.grid;
  const int64_t n = grid.size();
  // Suffix sums of m_l and m_l e^{-x_l}:
  //   delta(eps) = sum_{x > eps} m - e^eps sum_{x > eps} m e^{-x}.
  std::vector<long double> mass_suffix(n + 1, 0.0L);
  std::vector<long double> tilted_suffix(n + 1, 0.0L);
  for (int64_t l = n - 1; l >= 0; --l) {
    const long double m = std::max(0.0, pld.mass[l]);
    mass_suffix[l] = mass_suffix[l + 1] + m;
    tilted_suffix[l] =
        tilted_suffix[l + 1] + m * std::exp(-static_cast<long double>(grid.point(l)));
  }
  const double tail = pld.rounding != Rounding::kDown ? pld.truncated_tail : 0.0;
  std::vector<double> deltas;
  deltas.reserve(epsilons.size());
  for (double eps : epsilons) {
    int64_t start = static_cast<int64_t>(
        std::floor((eps + grid.half_width()) / grid.step()));
    start = std::clamp<int64_t>(start, 0, n);
    while (start > 0 && grid.point(start - 1) > eps) --start;
    while (start < n && grid.point(start) <= eps) ++start;
    const long double value =
        mass_suffix[start] -
        std::exp(static_cast<long double>(eps)) * tilted_suffix[start];
    deltas.push_back(
        std::clamp(static_cast<double>(value) + tail, 0.0, 1.0));
  }
  return deltas;
}

absl::StatusOr<double> EpsilonFromPld(const DiscretePld& pld, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta must be in (0, 1), got ", delta));
  }
  if (DeltaFromPld(pld, 0.0) <= delta) return 0.0;
  double lo = 0.0;
  double hi = pld.grid.half_width();
  if (DeltaFromPld(pld, hi) > delta) {
    return absl::OutOfRangeError(absl::StrCat(
        "delta ", delta, " not reached for eps <= ", hi,
        "; widen the grid"));
  }
  for (int i = 0; i < 100 && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (DeltaFromPld(pld, mid) > delta) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

FourierWeight MakeWeight(const GridSpec& grid, double epsilon) {
  const int64_t n = grid.size();
  std::vector<double> weights(n, 0.0);
  for (int64_t l = 0; l < n; ++l) {
    const double x = grid.point(l);
    if (x > epsilon) weights[l] = -std::expm1(epsilon - x);
  }
  return FourierWeight{.grid = grid,
                       .epsilon = epsilon,
                       .coefficients = ForwardReal(SwapHalves(weights))};
}

absl::StatusOr<double> DeltaPlancherel(const FourierPld& product,
                                       const FourierWeight& weight) {
  if (!(product.grid == weight.grid)) {
    return absl::FailedPreconditionError(
        "GridMismatch: weight and PLD spectra use different grids");
  }
  const int64_t n = product.grid.size();
  const std::vector<Complex>& a = product.coefficients;
  const std::vector<Complex>& w = weight.coefficients;
  const int64_t half = n / 2;
  // <x, y> = (1/n) sum_k X_k conj(Y_k); the bins 1..n/2-1 appear twice in the
  // full spectrum as conjugate pairs.
  double interior = 0.0;
  for (int64_t k = 1; k < half; ++k) {
    interior += a[k].real() * w[k].real() + a[k].imag() * w[k].imag();
  }
  const Complex dc = a[0] * std::conj(w[0]);
  const Complex nyquist = a[half] * std::conj(w[half]);
  const double scale = 1.0 / static_cast<double>(n);
  const double residue =
      (std::abs(dc.imag()) + std::abs(nyquist.imag())) * scale;
  if (residue > 1e-8) {
    return absl::InternalError(absl::StrCat(
        "Plancherel inner product has imaginary residue ", residue));
  }
  double delta = (dc.real() + nyquist.real() + 2.0 * interior) * scale;
  if (product.rounding != Rounding::kDown) delta += product.truncated_tail;
  return std::clamp(delta, 0.0, 1.0);
}

absl::StatusOr<double> DeltaPlancherel(
    absl::Span<const WeightedFourierPld> factors, const FourierWeight& weight) {
  absl::StatusOr<FourierPld> product = MultiplySpectra(factors, weight.grid);
  if (!product.ok()) return product.status();
  return DeltaPlancherel(*product, weight);
}

int64_t TransformCount() {
  return transform_count.load(std::memory_order_relaxed);
}

}  // namespace dpacct
