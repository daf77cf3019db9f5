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

// Individual (per data element) accounting for the subsampled Gaussian
// mechanism. Each element's per-step noise ratios are rounded down onto a
// fixed sigma grid, so its composed PLD is a product of powers of spectra
// computed once per grid point. A query then costs O(n) per occupied bucket
// and no transform.

#ifndef DPACCT_INDIVIDUAL_ACCOUNTANT_H_
#define DPACCT_INDIVIDUAL_ACCOUNTANT_H_

#include <cstdint>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/types/span.h"
#include "dpacct/analytic_gdp.h"
#include "dpacct/distributions.h"
#include "dpacct/fft_engine.h"
#include "dpacct/filters.h"

namespace dpacct {

// Points sigma_i = sigma_min + i * (sigma_max - sigma_min) / num_intervals,
// i = 0..num_intervals, for a fixed sampling rate q and PLD grid.
class SigmaGrid {
 public:
  static absl::StatusOr<SigmaGrid> Create(double sigma_min, double sigma_max,
                                          int64_t num_intervals,
                                          double sampling_rate,
                                          const GridSpec& pld_grid);

  double sigma_min() const { return sigma_min_; }
  double sigma_max() const { return sigma_max_; }
  int64_t num_intervals() const { return num_intervals_; }
  int64_t num_points() const { return num_intervals_ + 1; }
  double sampling_rate() const { return sampling_rate_; }
  const GridSpec& pld_grid() const { return pld_grid_; }
  double point(int64_t i) const;

  friend bool operator==(const SigmaGrid& a, const SigmaGrid& b) {
    return a.sigma_min_ == b.sigma_min_ && a.sigma_max_ == b.sigma_max_ &&
           a.num_intervals_ == b.num_intervals_ &&
           a.sampling_rate_ == b.sampling_rate_ && a.pld_grid_ == b.pld_grid_;
  }

 private:
  SigmaGrid(double sigma_min, double sigma_max, int64_t num_intervals,
            double sampling_rate, const GridSpec& pld_grid)
      : sigma_min_(sigma_min),
        sigma_max_(sigma_max),
        num_intervals_(num_intervals),
        sampling_rate_(sampling_rate),
        pld_grid_(pld_grid) {}

  double sigma_min_;
  double sigma_max_;
  int64_t num_intervals_;
  double sampling_rate_;
  GridSpec pld_grid_;
};

struct BucketCounts {
  // One entry per sigma grid point.
  std::vector<int64_t> counts;

  int64_t Total() const;
};

// Index of the grid point a noise ratio rounds down to. Values at or above
// sigma_max land in the last bucket. OutOfRange (BelowGridError) below
// sigma_min.
absl::StatusOr<int64_t> BucketIndex(double noise_ratio, const SigmaGrid& grid);

absl::StatusOr<BucketCounts> Encode(absl::Span<const double> noise_ratios,
                                    const SigmaGrid& grid);

enum class DirectionSet { kAdd, kRemove, kBoth };

const char* DirectionSetName(DirectionSet directions);

// 256 log-spaced values in [1e-3, min(20, L)].
std::vector<double> DefaultWeightEpsilons(const GridSpec& grid);

// Spectra of the rounded-up PLDs of every sigma grid point, plus weight
// spectra for a table of epsilons. Immutable once built; safe to query from
// several threads.
class FftCache {
 public:
  static absl::StatusOr<FftCache> Build(const SigmaGrid& grid,
                                        DirectionSet directions,
                                        std::vector<double> epsilons);
  static absl::StatusOr<FftCache> Build(const SigmaGrid& grid,
                                        DirectionSet directions = DirectionSet::kBoth);

  // Binary layout, all little-endian:
  //   char[8]  magic "DPACCTFC"
  //   u32      version (1)
  //   f64      sigma_min, sigma_max
  //   u64      num_intervals
  //   f64      sampling rate q
  //   f64      grid half-width L
  //   u64      grid size n
  //   u32      direction set (0 add, 1 remove, 2 both)
  //   u64      number of epsilons m, then f64[m]
  //   for each sigma point, for each stored direction (add first):
  //     f64    truncated tail
  //     f64[2 * (n/2 + 1)] coefficients as (re, im) pairs
  // Weight spectra are not stored; Load recomputes them.
  // I/O failures are Unavailable (CacheIoError), malformed files DataLoss.
  absl::Status Save(const std::string& path) const;
  static absl::StatusOr<FftCache> Load(const std::string& path);

  const SigmaGrid& sigma_grid() const { return sigma_grid_; }
  DirectionSet directions() const { return directions_; }
  std::vector<Direction> StoredDirections() const;
  const std::vector<double>& epsilons() const { return epsilons_; }
  // nullptr unless `epsilon` is in the table.
  const FourierWeight* FindWeight(double epsilon) const;
  const FourierPld& spectrum(int64_t bucket, Direction direction) const;

 private:
  FftCache(const SigmaGrid& grid, DirectionSet directions)
      : sigma_grid_(grid), directions_(directions) {}
  absl::Status BuildWeights();

  SigmaGrid sigma_grid_;
  DirectionSet directions_;
  std::vector<double> epsilons_;
  std::vector<FourierWeight> weights_;
  // add_[i] / remove_[i] per sigma point; empty when not stored.
  std::vector<FourierPld> add_;
  std::vector<FourierPld> remove_;
};

// Product spectra of one element's bucketed composition, one per stored
// direction. Build once and reuse across queries.
struct IndividualComposition {
  std::vector<Direction> directions;
  std::vector<FourierPld> products;
};

absl::StatusOr<IndividualComposition> ComposeBuckets(const BucketCounts& counts,
                                                     const FftCache& cache);

struct IndividualDeltaResult {
  double delta;
  // The epsilon was not tabulated and a weight transform had to be computed.
  bool cache_miss;
};

// Max over stored directions of the Plancherel delta.
absl::StatusOr<IndividualDeltaResult> IndividualDelta(
    const IndividualComposition& composition, const FftCache& cache,
    double epsilon);
absl::StatusOr<IndividualDeltaResult> IndividualDelta(
    const BucketCounts& counts, const FftCache& cache, double epsilon);

// Smallest tabulated epsilon with delta <= delta_target. OutOfRange if even
// the largest one does not suffice.
absl::StatusOr<double> IndividualEpsilon(
    const IndividualComposition& composition, const FftCache& cache,
    double delta_target);
absl::StatusOr<double> IndividualEpsilon(const BucketCounts& counts,
                                         const FftCache& cache,
                                         double delta_target);

// GDP parameter whose curve upper-bounds the bucketed composition at every
// epsilon in `epsilons`, for both stored directions.
absl::StatusOr<GdpParam> FitMuUpper(const IndividualComposition& composition,
                                    absl::Span<const double> epsilons,
                                    const ApproxFilterOptions& options = {});
absl::StatusOr<GdpParam> FitMuUpper(const BucketCounts& counts,
                                    const FftCache& cache,
                                    absl::Span<const double> epsilons,
                                    const ApproxFilterOptions& options = {});

}  // namespace dpacct

#endif  // DPACCT_INDIVIDUAL_ACCOUNTANT_H_
