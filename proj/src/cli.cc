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

#include "dpacct/cli.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <utility>

#include "CLI11.hpp"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "dpacct/analytic_gdp.h"
#include "dpacct/distributions.h"
#include "dpacct/dpgd_harness.h"
#include "dpacct/fft_engine.h"
#include "dpacct/filters.h"
#include "dpacct/individual_accountant.h"
#include "json.hpp"

namespace dpacct {
namespace {

using Json = nlohmann::ordered_json;
// One output record: column name and value, in order.
using Record = std::vector<std::pair<std::string, Json>>;

enum class Format { kJson, kCsv };

std::string CsvValue(const Json& v) {
  if (v.is_number_float()) return absl::StrFormat("%.17g", v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

void Emit(std::ostream& out, Format format, const Record& record) {
  if (format == Format::kJson) {
    Json j = Json::object();
    for (const auto& [key, value] : record) j[key] = value;
    out << j.dump() << "\n";
    return;
  }
  std::vector<std::string> keys, values;
  for (const auto& [key, value] : record) {
    keys.push_back(key);
    values.push_back(CsvValue(value));
  }
  out << absl::StrJoin(keys, ",") << "\n" << absl::StrJoin(values, ",") << "\n";
}

// Flags shared by the PLD subcommands.
struct PldFlags {
  double q = 1.0;
  double sigma = 1.0;
  int64_t steps = 1;
  std::string direction = "both";
  std::string rounding = "up";
  double half_width = GridSpec::kDefaultHalfWidth;
  int64_t grid_size = GridSpec::kDefaultSize;
  std::string cache;
};

void AddPldFlags(CLI::App* cmd, PldFlags& f, bool with_cache) {
  cmd->add_option("--q", f.q, "Poisson sampling rate")
      ->required()
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--sigma", f.sigma, "Noise ratio sigma / C")
      ->required()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--steps", f.steps, "Number of composed steps")
      ->required()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--direction", f.direction)
      ->check(CLI::IsMember({"add", "remove", "both"}));
  cmd->add_option("--rounding", f.rounding)
      ->check(CLI::IsMember({"up", "down", "estimate"}));
  cmd->add_option("--grid-l", f.half_width, "PLD grid half-width L")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--grid-n", f.grid_size, "PLD grid size, a power of two")
      ->check(CLI::PositiveNumber);
  if (with_cache) {
    cmd->add_option("--cache", f.cache, "FFT cache file from build-cache");
  }
}

std::vector<Direction> Directions(const std::string& name) {
  if (name == "add") return {Direction::kAdd};
  if (name == "remove") return {Direction::kRemove};
  return {Direction::kAdd, Direction::kRemove};
}

Rounding ParseRounding(const std::string& name) {
  if (name == "down") return Rounding::kDown;
  if (name == "estimate") return Rounding::kEstimate;
  return Rounding::kUp;
}

// steps-fold composition of the subsampled pair, one PLD per direction.
absl::StatusOr<std::vector<DiscretePld>> ComposePld(const PldFlags& f) {
  absl::StatusOr<GridSpec> grid = GridSpec::Create(f.half_width, f.grid_size);
  if (!grid.ok()) return grid.status();
  std::vector<DiscretePld> out;
  for (Direction direction : Directions(f.direction)) {
    absl::StatusOr<SubsampledGaussianPair> pair =
        SubsampledGaussianPair::Create(f.q, f.sigma, direction);
    if (!pair.ok()) return pair.status();
    absl::StatusOr<DiscretePld> pld =
        Discretize(*pair, *grid, ParseRounding(f.rounding));
    if (!pld.ok()) return pld.status();
    const WeightedPld factor{&*pld, f.steps};
    absl::StatusOr<DiscretePld> composed = ComposeFft({&factor, 1});
    if (!composed.ok()) return composed.status();
    out.push_back(*std::move(composed));
  }
  return out;
}

absl::StatusOr<FftCache> LoadCacheFor(const PldFlags& f, BucketCounts& counts) {
  absl::StatusOr<FftCache> cache = FftCache::Load(ResolveCachePath(f.cache));
  if (!cache.ok()) return cache.status();
  if (cache->sigma_grid().sampling_rate() != f.q) {
    return absl::InvalidArgumentError(absl::StrCat(
        "Cache was built for q = ", cache->sigma_grid().sampling_rate(),
        ", requested q = ", f.q));
  }
  absl::StatusOr<int64_t> bucket = BucketIndex(f.sigma, cache->sigma_grid());
  if (!bucket.ok()) return bucket.status();
  counts.counts.assign(cache->sigma_grid().num_points(), 0);
  counts.counts[*bucket] = f.steps;
  return cache;
}

absl::StatusOr<Record> PldDelta(const PldFlags& f, double eps) {
  if (!f.cache.empty()) {
    BucketCounts counts;
    absl::StatusOr<FftCache> cache = LoadCacheFor(f, counts);
    if (!cache.ok()) return cache.status();
    absl::StatusOr<IndividualDeltaResult> r =
        IndividualDelta(counts, *cache, eps);
    if (!r.ok()) return r.status();
    return Record{{"delta", r->delta}, {"cache_miss", r->cache_miss}};
  }
  absl::StatusOr<std::vector<DiscretePld>> plds = ComposePld(f);
  if (!plds.ok()) return plds.status();
  double delta = 0.0;
  for (const DiscretePld& pld : *plds) {
    delta = std::max(delta, DeltaFromPld(pld, eps));
  }
  return Record{{"delta", delta}};
}

absl::StatusOr<Record> PldEps(const PldFlags& f, double delta) {
  if (!f.cache.empty()) {
    BucketCounts counts;
    absl::StatusOr<FftCache> cache = LoadCacheFor(f, counts);
    if (!cache.ok()) return cache.status();
    absl::StatusOr<double> eps = IndividualEpsilon(counts, *cache, delta);
    if (!eps.ok()) return eps.status();
    return Record{{"epsilon", *eps}};
  }
  absl::StatusOr<std::vector<DiscretePld>> plds = ComposePld(f);
  if (!plds.ok()) return plds.status();
  double epsilon = 0.0;
  for (const DiscretePld& pld : *plds) {
    absl::StatusOr<double> eps = EpsilonFromPld(pld, delta);
    if (!eps.ok()) return eps.status();
    epsilon = std::max(epsilon, *eps);
  }
  return Record{{"epsilon", epsilon}};
}

absl::StatusOr<Record> FitMu(const PldFlags& f, double delta) {
  absl::StatusOr<std::vector<DiscretePld>> plds = ComposePld(f);
  if (!plds.ok()) return plds.status();
  const std::vector<double> epsilons = DefaultFitEpsilons(plds->front().grid);
  std::vector<double> deltas(epsilons.size(), 0.0);
  for (const DiscretePld& pld : *plds) {
    const std::vector<double> curve = DeltaCurveFromPld(pld, epsilons);
    for (size_t i = 0; i < deltas.size(); ++i) {
      deltas[i] = std::max(deltas[i], curve[i]);
    }
  }
  absl::StatusOr<double> mu = FitMuToCurve(epsilons, deltas);
  if (!mu.ok()) return mu.status();
  absl::StatusOr<double> eps = ApproxFilterEpsilon(*mu, delta);
  if (!eps.ok()) return eps.status();
  return Record{{"mu", *mu}, {"epsilon", *eps}};
}

struct FilterSimFlags {
  std::string mode = "individual";
  int64_t individuals = 1;
  int64_t steps = 100;
  double budget = 1.0;
  double mu_max = 0.2;
  uint64_t seed = 0;
};

absl::Status FilterSim(const FilterSimFlags& f, Format format,
                       std::ostream& out) {
  std::mt19937_64 rng(f.seed);
  std::uniform_real_distribution<double> unif(0.0, f.mu_max);
  absl::StatusOr<FilterTranscript> transcript;
  if (f.mode == "global") {
    transcript = RunGlobalFilter(
        f.steps, f.budget,
        [&](int64_t) -> absl::StatusOr<double> { return unif(rng); });
  } else {
    transcript = RunIndividualFilter(
        f.individuals, f.steps, f.budget,
        [&](int64_t, const std::vector<bool>&)
            -> absl::StatusOr<std::vector<double>> {
          std::vector<double> mus(f.individuals);
          for (double& mu : mus) mu = unif(rng);
          return mus;
        });
  }
  if (!transcript.ok()) return transcript.status();
  if (format == Format::kJson) {
    out << TranscriptToJsonLines(*transcript);
    return absl::OkStatus();
  }
  out << "step,individual,mu,active,spent_sq\n";
  for (const TranscriptStep& s : transcript->steps) {
    for (size_t i = 0; i < s.mu.size(); ++i) {
      out << s.step << "," << i << "," << absl::StrFormat("%.17g", s.mu[i])
          << "," << (s.active[i] ? 1 : 0) << ","
          << absl::StrFormat("%.17g", s.spent_sq[i]) << "\n";
    }
  }
  return absl::OkStatus();
}

struct HarnessFlags {
  uint64_t seed = 0;
  int64_t examples_per_group = 100;
  RunConfig config;
  std::string mode = "none";
  std::string accountant = "gdp";
  double delta = 1e-5;
  std::string out_dir;
  int64_t grid_size = int64_t{1} << 16;
  double half_width = 10.0;
};

absl::Status WriteFile(const std::filesystem::path& path,
                       const std::string& text) {
  std::ofstream f(path);
  f << text;
  if (!f) {
    return absl::UnavailableError(
        absl::StrCat("CacheIoError: cannot write ", path.string()));
  }
  return absl::OkStatus();
}

absl::Status Harness(HarnessFlags f, Format format, std::ostream& out) {
  f.config.mode = f.mode == "global"       ? FilterMode::kGlobal
                  : f.mode == "individual" ? FilterMode::kIndividual
                                           : FilterMode::kNone;
  const Accountant accountant = f.accountant == "rdp"   ? Accountant::kRdp
                                : f.accountant == "pld" ? Accountant::kPld
                                                        : Accountant::kGdp;
  SyntheticTaskOptions task_options;
  task_options.examples_per_group = f.examples_per_group;
  task_options.test_examples_per_group = f.examples_per_group;
  absl::StatusOr<SyntheticTask> task = GenerateTask(task_options, f.seed);
  if (!task.ok()) return task.status();
  absl::StatusOr<RunReport> report = RunHarness(*task, f.config, f.seed);
  if (!report.ok()) return report.status();
  HistogramOptions hist;
  absl::StatusOr<GridSpec> grid = GridSpec::Create(f.half_width, f.grid_size);
  if (!grid.ok()) return grid.status();
  hist.pld_grid = *grid;
  absl::StatusOr<EpsilonReport> eps =
      EpsilonHistogram(*report, f.delta, accountant, hist);
  if (!eps.ok()) return eps.status();

  if (!f.out_dir.empty()) {
    const std::filesystem::path dir(f.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
      return absl::UnavailableError(
          absl::StrCat("CacheIoError: cannot create ", f.out_dir));
    }
    for (const auto& [name, text] :
         std::vector<std::pair<std::string, std::string>>{
             {"report.json", ReportToJson(*report) + "\n"},
             {"epsilon.json", EpsilonReportToJson(*eps) + "\n"},
             {"mu_trace.csv", MuTraceCsv(*report)},
             {"loss_curve.csv", LossCurveCsv(*report)},
             {"epsilon.csv", EpsilonCsv(*report, *eps)}}) {
      if (absl::Status s = WriteFile(dir / name, text); !s.ok()) return s;
    }
  }
  if (format == Format::kCsv) {
    out << EpsilonCsv(*report, *eps);
  } else {
    Json j;
    j["run"] = Json::parse(ReportToJson(*report));
    j["epsilon"] = Json::parse(EpsilonReportToJson(*eps));
    out << j.dump() << "\n";
  }
  return absl::OkStatus();
}

struct CacheFlags {
  double sigma_min = 1.0;
  double sigma_max = 2.0;
  int64_t intervals = 50;
  double q = 1.0;
  double half_width = GridSpec::kDefaultHalfWidth;
  int64_t grid_size = GridSpec::kDefaultSize;
  std::string directions = "both";
  std::string cache;
};

absl::StatusOr<Record> BuildCache(const CacheFlags& f) {
  absl::StatusOr<GridSpec> grid = GridSpec::Create(f.half_width, f.grid_size);
  if (!grid.ok()) return grid.status();
  absl::StatusOr<SigmaGrid> sigma_grid =
      SigmaGrid::Create(f.sigma_min, f.sigma_max, f.intervals, f.q, *grid);
  if (!sigma_grid.ok()) return sigma_grid.status();
  const DirectionSet directions = f.directions == "add" ? DirectionSet::kAdd
                                  : f.directions == "remove"
                                      ? DirectionSet::kRemove
                                      : DirectionSet::kBoth;
  absl::StatusOr<FftCache> cache = FftCache::Build(*sigma_grid, directions);
  if (!cache.ok()) return cache.status();
  const std::string path = ResolveCachePath(f.cache);
  if (absl::Status s = cache->Save(path); !s.ok()) return s;
  return Record{{"path", path},
                {"sigma_points", sigma_grid->num_points()},
                {"epsilons", cache->epsilons().size()},
                {"directions", DirectionSetName(directions)}};
}

}  // namespace

int ExitCodeFor(const absl::Status& status) {
  switch (status.code()) {
    case absl::StatusCode::kOk:
      return kExitOk;
    case absl::StatusCode::kUnavailable:
    case absl::StatusCode::kDataLoss:
    case absl::StatusCode::kNotFound:
    case absl::StatusCode::kPermissionDenied:
      return kExitCacheIo;
    case absl::StatusCode::kInvalidArgument:
    case absl::StatusCode::kOutOfRange:
    case absl::StatusCode::kFailedPrecondition:
      return kExitNumeric;
    default:
      return kExitInternal;
  }
}

std::string ResolveCachePath(const std::string& path) {
  const std::filesystem::path p(path);
  const char* dir = std::getenv("ACCT_CACHE_DIR");
  if (p.is_absolute() || dir == nullptr || *dir == '\0') return path;
  return (std::filesystem::path(dir) / p).string();
}

int Dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
  CLI::App app{"Differential privacy accounting: GDP, PLD and RDP"};
  app.name("dpacct");
  app.require_subcommand(1);
  app.fallthrough();
  std::string format_name = "json";
  app.add_option("--format", format_name, "Output format")
      ->check(CLI::IsMember({"json", "csv"}));

  double mu = 0.0, eps = 0.0, delta = 0.0;
  CLI::App* gdp_delta = app.add_subcommand("gdp-delta", "delta(eps) of mu-GDP");
  gdp_delta->add_option("--mu", mu)->required()->check(CLI::NonNegativeNumber);
  gdp_delta->add_option("--eps", eps)->required()->check(CLI::NonNegativeNumber);

  CLI::App* gdp_eps = app.add_subcommand("gdp-eps", "eps(delta) of mu-GDP");
  gdp_eps->add_option("--mu", mu)->required()->check(CLI::NonNegativeNumber);
  gdp_eps->add_option("--delta", delta)->required()->check(CLI::PositiveNumber);

  std::vector<double> mus;
  CLI::App* compose = app.add_subcommand("compose", "Compose GDP parameters");
  compose->add_option("--mu", mus)->required()->check(CLI::NonNegativeNumber);

  PldFlags pld_flags;
  CLI::App* pld_delta =
      app.add_subcommand("pld-delta", "delta(eps) of a composed subsampled Gaussian");
  AddPldFlags(pld_delta, pld_flags, /*with_cache=*/true);
  pld_delta->add_option("--eps", eps)->required()->check(CLI::NonNegativeNumber);

  CLI::App* pld_eps =
      app.add_subcommand("pld-eps", "eps(delta) of a composed subsampled Gaussian");
  AddPldFlags(pld_eps, pld_flags, /*with_cache=*/true);
  pld_eps->add_option("--delta", delta)->required()->check(CLI::PositiveNumber);

  CLI::App* fit_mu = app.add_subcommand(
      "fit-mu", "Smallest mu-GDP curve above a composed subsampled Gaussian");
  AddPldFlags(fit_mu, pld_flags, /*with_cache=*/false);
  delta = 1e-5;
  fit_mu->add_option("--delta", delta, "delta for the RDP-converted epsilon")
      ->check(CLI::PositiveNumber);

  FilterSimFlags sim;
  CLI::App* filter_sim =
      app.add_subcommand("filter-sim", "Run a GDP filter on random mu streams");
  filter_sim->add_option("--mode", sim.mode)
      ->check(CLI::IsMember({"individual", "global"}));
  filter_sim->add_option("--individuals", sim.individuals)
      ->check(CLI::PositiveNumber);
  filter_sim->add_option("--steps", sim.steps)->check(CLI::PositiveNumber);
  filter_sim->add_option("--budget", sim.budget)->check(CLI::PositiveNumber);
  filter_sim->add_option("--mu-max", sim.mu_max)->check(CLI::NonNegativeNumber);
  filter_sim->add_option("--seed", sim.seed);

  HarnessFlags harness;
  CLI::App* harness_cmd =
      app.add_subcommand("harness", "Private GD on the synthetic task");
  harness_cmd->add_option("--seed", harness.seed);
  harness_cmd->add_option("--examples-per-group", harness.examples_per_group)
      ->check(CLI::PositiveNumber);
  harness_cmd->add_option("--sigma", harness.config.noise_std)
      ->check(CLI::PositiveNumber);
  harness_cmd->add_option("--clip", harness.config.clip)
      ->check(CLI::PositiveNumber);
  harness_cmd->add_option("--lr", harness.config.learning_rate)
      ->check(CLI::PositiveNumber);
  harness_cmd->add_option("--steps", harness.config.max_steps)
      ->check(CLI::PositiveNumber);
  harness_cmd->add_option("--budget", harness.config.budget)
      ->check(CLI::PositiveNumber);
  harness_cmd->add_option("--q", harness.config.sampling_rate)
      ->check(CLI::Range(0.0, 1.0));
  harness_cmd->add_option("--mode", harness.mode)
      ->check(CLI::IsMember({"none", "global", "individual"}));
  harness_cmd->add_option("--accountant", harness.accountant)
      ->check(CLI::IsMember({"gdp", "rdp", "pld"}));
  harness_cmd->add_option("--delta", harness.delta)->check(CLI::PositiveNumber);
  harness_cmd->add_option("--grid-l", harness.half_width)
      ->check(CLI::PositiveNumber);
  harness_cmd->add_option("--grid-n", harness.grid_size)
      ->check(CLI::PositiveNumber);
  harness_cmd->add_option("--out-dir", harness.out_dir,
                          "Also write report and plot CSVs here");

  CacheFlags cache_flags;
  CLI::App* build_cache =
      app.add_subcommand("build-cache", "Precompute and save an FFT cache");
  build_cache->add_option("--sigma-min", cache_flags.sigma_min)
      ->required()
      ->check(CLI::PositiveNumber);
  build_cache->add_option("--sigma-max", cache_flags.sigma_max)
      ->required()
      ->check(CLI::PositiveNumber);
  build_cache->add_option("--intervals", cache_flags.intervals)
      ->check(CLI::PositiveNumber);
  build_cache->add_option("--q", cache_flags.q)
      ->required()
      ->check(CLI::Range(0.0, 1.0));
  build_cache->add_option("--grid-l", cache_flags.half_width)
      ->check(CLI::PositiveNumber);
  build_cache->add_option("--grid-n", cache_flags.grid_size)
      ->check(CLI::PositiveNumber);
  build_cache->add_option("--directions", cache_flags.directions)
      ->check(CLI::IsMember({"add", "remove", "both"}));
  build_cache->add_option("--cache", cache_flags.cache)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  const Format format = format_name == "csv" ? Format::kCsv : Format::kJson;

  absl::StatusOr<Record> record = absl::InternalError("no subcommand");
  absl::Status status;
  bool streamed = false;
  if (gdp_delta->parsed()) {
    record = Record{{"delta", GdpDelta(mu, eps)}};
  } else if (gdp_eps->parsed()) {
    absl::StatusOr<double> e = GdpEpsilon(mu, delta);
    if (e.ok()) {
      record = Record{{"epsilon", *e}};
    } else {
      record = e.status();
    }
  } else if (compose->parsed()) {
    record = Record{{"mu", GdpCompose(mus)}};
  } else if (pld_delta->parsed()) {
    record = PldDelta(pld_flags, eps);
  } else if (pld_eps->parsed()) {
    record = PldEps(pld_flags, delta);
  } else if (fit_mu->parsed()) {
    record = FitMu(pld_flags, delta);
  } else if (filter_sim->parsed()) {
    streamed = true;
    status = FilterSim(sim, format, out);
  } else if (harness_cmd->parsed()) {
    streamed = true;
    status = Harness(harness, format, out);
  } else if (build_cache->parsed()) {
    record = BuildCache(cache_flags);
  }
  if (!streamed) status = record.status();
  if (!status.ok()) {
    err << "dpacct: " << status.message() << "\n";
    return ExitCodeFor(status);
  }
  if (!streamed) Emit(out, format, *record);
  return kExitOk;
}

}  // namespace dpacct
