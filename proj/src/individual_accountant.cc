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

#include "dpacct/individual_accountant.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <optional>
#include <utility>

#include "absl/strings/str_cat.h"

namespace dpacct {
namespace {

constexpr char kMagic[8] = {'D', 'P', 'A', 'C', 'C', 'T', 'F', 'C'};
constexpr uint32_t kVersion = 1;
constexpr int kWeightEpsilonCount = 256;

template <typename T>
T ToLittleEndian(T value) {
  if constexpr (std::endian::native == std::endian::little) {
    return value;
  } else {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    std::reverse(bytes, bytes + sizeof(T));
    std::memcpy(&value, bytes, sizeof(T));
    return value;
  }
}

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}

  template <typename T>
  void Put(T value) {
    value = ToLittleEndian(value);
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  explicit Reader(std::ifstream& in) : in_(in) {}

  template <typename T>
  bool Get(T& value) {
    if (!in_.read(reinterpret_cast<char*>(&value), sizeof(T))) return false;
    value = ToLittleEndian(value);
    return true;
  }

 private:
  std::ifstream& in_;
};

absl::Status Corrupt(const std::string& path, const std::string& what) {
  return absl::DataLossError(
      absl::StrCat("Malformed cache file ", path, ": ", what));
}

}  // namespace

absl::StatusOr<SigmaGrid> SigmaGrid::Create(double sigma_min, double sigma_max,
                                            int64_t num_intervals,
                                            double sampling_rate,
                                            const GridSpec& pld_grid) {
  if (!(sigma_min > 0.0) || !(sigma_max > sigma_min) ||
      !std::isfinite(sigma_max)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "Need 0 < sigma_min < sigma_max < inf, got ", sigma_min, ", ",
        sigma_max));
  }
  if (num_intervals < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("Need at least one sigma interval, got ", num_intervals));
  }
  if (!(sampling_rate > 0.0 && sampling_rate <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("Sampling rate must be in (0, 1], got ", sampling_rate));
  }
  return SigmaGrid(sigma_min, sigma_max, num_intervals, sampling_rate,
                   pld_grid);
}

double SigmaGrid::point(int64_t i) const {
  if (i == num_intervals_) return sigma_max_;
  return sigma_min_ + static_cast<double>(i) * (sigma_max_ - sigma_min_) /
                          static_cast<double>(num_intervals_);
}

int64_t BucketCounts::Total() const {
  int64_t total = 0;
  for (int64_t c : counts) total += c;
  return total;
}

absl::StatusOr<int64_t> BucketIndex(double noise_ratio, const SigmaGrid& grid) {
  if (std::isnan(noise_ratio) || noise_ratio < grid.sigma_min()) {
    return absl::OutOfRangeError(
        absl::StrCat("BelowGridError: noise ratio ", noise_ratio,
                     " is below sigma_min = ", grid.sigma_min()));
  }
  const int64_t last = grid.num_intervals();
  if (noise_ratio >= grid.sigma_max()) return last;
  const double width = (grid.sigma_max() - grid.sigma_min()) /
                       static_cast<double>(grid.num_intervals());
  int64_t i = static_cast<int64_t>(
      std::floor((noise_ratio - grid.sigma_min()) / width));
  i = std::clamp<int64_t>(i, 0, last);
  // The division can land one bin off; settle on the exact grid points.
  while (i < last && grid.point(i + 1) <= noise_ratio) ++i;
  while (i > 0 && grid.point(i) > noise_ratio) --i;
  return i;
}

absl::StatusOr<BucketCounts> Encode(absl::Span<const double> noise_ratios,
                                    const SigmaGrid& grid) {
  BucketCounts result;
  result.counts.assign(grid.num_points(), 0);
  for (double s : noise_ratios) {
    absl::StatusOr<int64_t> i = BucketIndex(s, grid);
    if (!i.ok()) return i.status();
    ++result.counts[*i];
  }
  return result;
}

const char* DirectionSetName(DirectionSet directions) {
  switch (directions) {
    case DirectionSet::kAdd:
      return "add";
    case DirectionSet::kRemove:
      return "remove";
    case DirectionSet::kBoth:
      return "both";
  }
  return "unknown";
}

std::vector<double> DefaultWeightEpsilons(const GridSpec& grid) {
  const double lo = 1e-3;
  const double hi = std::min(20.0, grid.half_width());
  std::vector<double> epsilons(kWeightEpsilonCount);
  const double log_ratio = std::log(hi / lo) / (kWeightEpsilonCount - 1);
  for (int i = 0; i < kWeightEpsilonCount; ++i) {
    epsilons[i] = lo * std::exp(log_ratio * i);
  }
  epsilons.back() = hi;
  return epsilons;
}

std::vector<Direction> FftCache::StoredDirections() const {
  switch (directions_) {
    case DirectionSet::kAdd:
      return {Direction::kAdd};
    case DirectionSet::kRemove:
      return {Direction::kRemove};
    case DirectionSet::kBoth:
      break;
  }
  return {Direction::kAdd, Direction::kRemove};
}

absl::Status FftCache::BuildWeights() {
  for (size_t i = 0; i < epsilons_.size(); ++i) {
    if (!(epsilons_[i] >= 0.0) || !std::isfinite(epsilons_[i]) ||
        (i > 0 && !(epsilons_[i] > epsilons_[i - 1]))) {
      return absl::InvalidArgumentError(
          "Weight epsilons must be finite, nonnegative and increasing");
    }
  }
  if (epsilons_.empty()) {
    return absl::InvalidArgumentError("Weight epsilon table is empty");
  }
  weights_.clear();
  weights_.reserve(epsilons_.size());
  for (double eps : epsilons_) {
    weights_.push_back(MakeWeight(sigma_grid_.pld_grid(), eps));
  }
  return absl::OkStatus();
}

absl::StatusOr<FftCache> FftCache::Build(const SigmaGrid& grid,
                                         DirectionSet directions) {
  return Build(grid, directions, DefaultWeightEpsilons(grid.pld_grid()));
}

absl::StatusOr<FftCache> FftCache::Build(const SigmaGrid& grid,
                                         DirectionSet directions,
                                         std::vector<double> epsilons) {
  FftCache cache(grid, directions);
  cache.epsilons_ = std::move(epsilons);
  if (absl::Status status = cache.BuildWeights(); !status.ok()) return status;
  for (Direction direction : cache.StoredDirections()) {
    std::vector<FourierPld>& spectra =
        direction == Direction::kAdd ? cache.add_ : cache.remove_;
    spectra.reserve(grid.num_points());
    for (int64_t i = 0; i < grid.num_points(); ++i) {
      absl::StatusOr<SubsampledGaussianPair> pair =
          SubsampledGaussianPair::Create(grid.sampling_rate(), grid.point(i),
                                         direction);
      if (!pair.ok()) return pair.status();
      absl::StatusOr<DiscretePld> pld =
          Discretize(*pair, grid.pld_grid(), Rounding::kUp);
      if (!pld.ok()) return pld.status();
      spectra.push_back(ToFourier(*pld));
    }
  }
  return cache;
}

const FourierWeight* FftCache::FindWeight(double epsilon) const {
  auto it = std::lower_bound(epsilons_.begin(), epsilons_.end(), epsilon);
  if (it == epsilons_.end() || *it != epsilon) return nullptr;
  return &weights_[it - epsilons_.begin()];
}

const FourierPld& FftCache::spectrum(int64_t bucket,
                                     Direction direction) const {
  return direction == Direction::kAdd ? add_[bucket] : remove_[bucket];
}

absl::Status FftCache::Save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    return absl::UnavailableError(
        absl::StrCat("CacheIoError: cannot open ", path, " for writing"));
  }
  Writer w(out);
  out.write(kMagic, sizeof(kMagic));
  w.Put<uint32_t>(kVersion);
  w.Put<double>(sigma_grid_.sigma_min());
  w.Put<double>(sigma_grid_.sigma_max());
  w.Put<uint64_t>(sigma_grid_.num_intervals());
  w.Put<double>(sigma_grid_.sampling_rate());
  w.Put<double>(sigma_grid_.pld_grid().half_width());
  w.Put<uint64_t>(sigma_grid_.pld_grid().size());
  w.Put<uint32_t>(static_cast<uint32_t>(directions_));
  w.Put<uint64_t>(epsilons_.size());
  for (double eps : epsilons_) w.Put<double>(eps);
  for (int64_t i = 0; i < sigma_grid_.num_points(); ++i) {
    for (Direction direction : StoredDirections()) {
      const FourierPld& s = spectrum(i, direction);
      w.Put<double>(s.truncated_tail);
      for (const std::complex<double>& c : s.coefficients) {
        w.Put<double>(c.real());
        w.Put<double>(c.imag());
      }
    }
  }
  out.flush();
  if (!out) {
    return absl::UnavailableError(
        absl::StrCat("CacheIoError: write to ", path, " failed"));
  }
  return absl::OkStatus();
}

absl::StatusOr<FftCache> FftCache::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return absl::UnavailableError(
        absl::StrCat("CacheIoError: cannot open ", path, " for reading"));
  }
  Reader r(in);
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    return Corrupt(path, "bad magic");
  }
  uint32_t version = 0;
  if (!r.Get(version) || version != kVersion) {
    return Corrupt(path, absl::StrCat("unsupported version ", version));
  }
  double sigma_min, sigma_max, q, half_width;
  uint64_t num_intervals, size, num_eps;
  uint32_t directions;
  if (!r.Get(sigma_min) || !r.Get(sigma_max) || !r.Get(num_intervals) ||
      !r.Get(q) || !r.Get(half_width) || !r.Get(size) || !r.Get(directions) ||
      !r.Get(num_eps)) {
    return Corrupt(path, "truncated header");
  }
  if (directions > 2 || num_eps > (uint64_t{1} << 24) ||
      num_intervals > (uint64_t{1} << 24)) {
    return Corrupt(path, "header out of range");
  }
  absl::StatusOr<GridSpec> grid = GridSpec::Create(half_width, size);
  if (!grid.ok()) return Corrupt(path, std::string(grid.status().message()));
  absl::StatusOr<SigmaGrid> sigma_grid =
      SigmaGrid::Create(sigma_min, sigma_max, num_intervals, q, *grid);
  if (!sigma_grid.ok()) {
    return Corrupt(path, std::string(sigma_grid.status().message()));
  }
  FftCache cache(*sigma_grid, static_cast<DirectionSet>(directions));
  cache.epsilons_.resize(num_eps);
  for (double& eps : cache.epsilons_) {
    if (!r.Get(eps)) return Corrupt(path, "truncated epsilon table");
  }
  if (absl::Status status = cache.BuildWeights(); !status.ok()) {
    return Corrupt(path, std::string(status.message()));
  }
  const std::vector<Direction> stored = cache.StoredDirections();
  for (int64_t i = 0; i < sigma_grid->num_points(); ++i) {
    for (Direction direction : stored) {
      std::vector<FourierPld>& spectra =
          direction == Direction::kAdd ? cache.add_ : cache.remove_;
      spectra.push_back(FourierPld{.grid = *grid, .coefficients = {}});
      FourierPld& s = spectra.back();
      s.rounding = Rounding::kUp;
      if (!r.Get(s.truncated_tail)) return Corrupt(path, "truncated spectra");
      s.coefficients.resize(grid->spectrum_size());
      for (std::complex<double>& c : s.coefficients) {
        double re, im;
        if (!r.Get(re) || !r.Get(im)) return Corrupt(path, "truncated spectra");
        c = {re, im};
      }
      // Moments are not stored; recover them from the mass.
      const FourierPld moments = ToFourier(FromFourier(s));
      s.mean = moments.mean;
      s.variance = moments.variance;
    }
  }
  if (in.peek() != std::ifstream::traits_type::eof()) {
    return Corrupt(path, "trailing bytes");
  }
  return cache;
}

absl::StatusOr<IndividualComposition> ComposeBuckets(const BucketCounts& counts,
                                                     const FftCache& cache) {
  const SigmaGrid& grid = cache.sigma_grid();
  if (static_cast<int64_t>(counts.counts.size()) != grid.num_points()) {
    return absl::FailedPreconditionError(absl::StrCat(
        "GridMismatch: ", counts.counts.size(), " bucket counts for ",
        grid.num_points(), " sigma points"));
  }
  IndividualComposition composition;
  composition.directions = cache.StoredDirections();
  for (Direction direction : composition.directions) {
    std::vector<WeightedFourierPld> factors;
    for (int64_t i = 0; i < grid.num_points(); ++i) {
      if (counts.counts[i] < 0) {
        return absl::InvalidArgumentError("Bucket counts must be nonnegative");
      }
      if (counts.counts[i] > 0) {
        factors.push_back({&cache.spectrum(i, direction), counts.counts[i]});
      }
    }
    absl::StatusOr<FourierPld> product =
        MultiplySpectra(factors, grid.pld_grid());
    if (!product.ok()) return product.status();
    composition.products.push_back(*std::move(product));
  }
  return composition;
}

absl::StatusOr<IndividualDeltaResult> IndividualDelta(
    const IndividualComposition& composition, const FftCache& cache,
    double epsilon) {
  if (!std::isfinite(epsilon)) {
    return absl::InvalidArgumentError(
        absl::StrCat("Epsilon must be finite, got ", epsilon));
  }
  IndividualDeltaResult result{.delta = 0.0, .cache_miss = false};
  const FourierWeight* weight = cache.FindWeight(epsilon);
  std::optional<FourierWeight> computed;
  if (weight == nullptr) {
    computed = MakeWeight(cache.sigma_grid().pld_grid(), epsilon);
    weight = &*computed;
    result.cache_miss = true;
  }
  for (const FourierPld& product : composition.products) {
    absl::StatusOr<double> delta = DeltaPlancherel(product, *weight);
    if (!delta.ok()) return delta.status();
    result.delta = std::max(result.delta, *delta);
  }
  return result;
}

absl::StatusOr<IndividualDeltaResult> IndividualDelta(
    const BucketCounts& counts, const FftCache& cache, double epsilon) {
  absl::StatusOr<IndividualComposition> composition =
      ComposeBuckets(counts, cache);
  if (!composition.ok()) return composition.status();
  return IndividualDelta(*composition, cache, epsilon);
}

absl::StatusOr<double> IndividualEpsilon(
    const IndividualComposition& composition, const FftCache& cache,
    double delta_target) {
  if (!(delta_target > 0.0 && delta_target < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("Target delta must be in (0, 1), got ", delta_target));
  }
  const std::vector<double>& epsilons = cache.epsilons();
  auto fits = [&](size_t i) -> absl::StatusOr<bool> {
    absl::StatusOr<IndividualDeltaResult> r =
        IndividualDelta(composition, cache, epsilons[i]);
    if (!r.ok()) return r.status();
    return r->delta <= delta_target;
  };
  absl::StatusOr<bool> top = fits(epsilons.size() - 1);
  if (!top.ok()) return top.status();
  if (!*top) {
    return absl::OutOfRangeError(absl::StrCat(
        "delta(", epsilons.back(), ") exceeds the target ", delta_target));
  }
  // Invariant: fits(hi); lo is the last index known not to fit.
  int64_t lo = -1;
  int64_t hi = static_cast<int64_t>(epsilons.size()) - 1;
  while (hi - lo > 1) {
    const int64_t mid = lo + (hi - lo) / 2;
    absl::StatusOr<bool> ok = fits(mid);
    if (!ok.ok()) return ok.status();
    if (*ok) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return epsilons[hi];
}

absl::StatusOr<double> IndividualEpsilon(const BucketCounts& counts,
                                         const FftCache& cache,
                                         double delta_target) {
  absl::StatusOr<IndividualComposition> composition =
      ComposeBuckets(counts, cache);
  if (!composition.ok()) return composition.status();
  return IndividualEpsilon(*composition, cache, delta_target);
}

absl::StatusOr<GdpParam> FitMuUpper(const IndividualComposition& composition,
                                    absl::Span<const double> epsilons,
                                    const ApproxFilterOptions& options) {
  std::vector<double> deltas(epsilons.size(), 0.0);
  for (const FourierPld& product : composition.products) {
    const std::vector<double> curve =
        DeltaCurveFromPld(FromFourier(product), epsilons);
    for (size_t i = 0; i < deltas.size(); ++i) {
      deltas[i] = std::max(deltas[i], curve[i]);
    }
  }
  absl::StatusOr<double> mu = FitMuToCurve(epsilons, deltas, options);
  if (!mu.ok()) return mu.status();
  return GdpParam::Create(*mu);
}

absl::StatusOr<GdpParam> FitMuUpper(const BucketCounts& counts,
                                    const FftCache& cache,
                                    absl::Span<const double> epsilons,
                                    const ApproxFilterOptions& options) {
  absl::StatusOr<IndividualComposition> composition =
      ComposeBuckets(counts, cache);
  if (!composition.ok()) return composition.status();
  return FitMuUpper(*composition, epsilons, options);
}

}  // namespace dpacct
