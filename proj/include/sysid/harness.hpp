// Copyright 2026 The sysid Authors. All Rights Reserved.
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

#ifndef SYSID_HARNESS_HPP
#define SYSID_HARNESS_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "sysid/config.hpp"
#include "sysid/identification.hpp"

namespace sysid {

// Random plant: A entries i.i.d. N(0, 1/d), scaled down to spectral radius
// eigen_scale when larger; B = I (b_identity, m = d) or i.i.d. N(0, 1/d).
// Uncontrollable draws are redrawn, at most 10 times.
LtiSystem random_system(std::uint64_t seed, Eigen::Index d, Eigen::Index m, double eigen_scale,
                        bool b_identity, double sigma, double gamma);

// Lateral dynamics of a Lockheed JetStar (4 states, 2 inputs), discretized
// and normalized.
Matrix jetstar_lateral_a();
Matrix jetstar_lateral_b();

LtiSystem make_system(const ExperimentConfig& cfg, std::uint64_t seed);

// Published reference numbers of the frequency-domain baseline, for reports.
struct ReferenceBaseline {
  static constexpr double kAircraftError = 8.6e-2;
  static constexpr double kAircraftTime = 55.7;
  static constexpr double kRateFactor = 0.02;  // c = n_iterations * 0.02
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::string policy;
  long t = 0;
  double sq_error = 0.0;
  double plan_seconds = 0.0;  // cumulative learner time up to t
  double energy = 0.0;        // cumulative sum |u_s|^2, s < t
};

struct EnsembleResult {
  std::vector<RunRecord> records;  // sorted by (policy, seed, t)
  std::vector<std::string> failures;
  int trials = 0;
  int fallback_segments = 0;  // summed over trials
};

struct EnsembleOptions {
  int workers = 1;
  bool deterministic = false;  // zero the timing column
};

EnsembleResult run_ensemble(const ExperimentConfig& cfg, const EnsembleOptions& options = {});

// Runs `job(i)` for i < count on a pool of `workers` threads.
void parallel_for(int count, int workers, const std::function<void(int)>& job);

// Shortest decimal that parses back to the same double.
std::string format_double(double v);

inline constexpr const char* kCsvHeader = "seed,policy,t,sq_error,plan_seconds,energy";

// Header line, then one row per record; failures become '#' comment lines.
void write_csv(std::ostream& out, const EnsembleResult& result, const std::string& preamble = "");
std::vector<RunRecord> read_csv(std::istream& in);

// One cell of the (T, computational rate) grid.
struct PerfSample {
  std::string policy;
  int n_grad = 0;  // 0 for policies without gradient iterations
  Eigen::Index horizon = 0;
  double error = 0.0;      // median final squared error over seeds
  double plan_rate = 0.0;  // mean learner seconds per step
};

struct PerfFit {
  std::string policy;
  int n_grad = 0;
  double plan_rate = 0.0;
  double eta = 0.0;        // fit of error = eta / T (slope pinned at -1)
  double slope = 0.0;      // free log-log slope
  double intercept = 0.0;  // free log-log intercept
  int points = 0;
};

// Groups by (policy, n_grad); groups with fewer than 3 distinct T are
// skipped and reported in `warnings`.
std::vector<PerfFit> fit_performance_model(const std::vector<PerfSample>& samples,
                                           std::vector<std::string>* warnings = nullptr);

// Runs every (policy, n_grad, T) cell of the sweep described by `cfg`.
std::vector<PerfSample> run_performance_grid(const ExperimentConfig& cfg,
                                             const EnsembleOptions& options = {});

double median(std::vector<double> values);

}  // namespace sysid

#endif  // SYSID_HARNESS_HPP
