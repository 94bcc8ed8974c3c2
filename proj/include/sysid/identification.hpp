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

#ifndef SYSID_IDENTIFICATION_HPP
#define SYSID_IDENTIFICATION_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sysid/design_criteria.hpp"
#include "sysid/estimation.hpp"
#include "sysid/greedy_planner.hpp"
#include "sysid/lti_core.hpp"

namespace sysid {

enum class Policy { kRandom, kGreedy, kGradient, kOracle };

Policy parse_policy(std::string_view name);
std::string to_string(Policy policy);

// Breakpoints 0 = t_0 < t_1 < ... < t_n = T.
class Schedule {
 public:
  explicit Schedule(std::vector<Eigen::Index> breakpoints);

  // Comma list of integers and the tokens "T", "T/2" (e.g. "0,10,T/2,T").
  // Duplicates created by the substitution (small T) are merged.
  static Schedule parse(std::string_view text, Eigen::Index horizon);
  static Schedule one_step(Eigen::Index horizon);
  static Schedule single(Eigen::Index horizon);

  const std::vector<Eigen::Index>& breakpoints() const { return points_; }
  Eigen::Index horizon() const { return points_.back(); }
  std::size_t segments() const { return points_.size() - 1; }

 private:
  std::vector<Eigen::Index> points_;
};

enum class GradientObjectiveKind { kDesign, kMse };

struct GradientSettings {
  std::optional<double> eta;
  int n_grad = 120;
  int batch = 100;
  std::string schedule = "0,10,T/2,T";
  GradientObjectiveKind objective = GradientObjectiveKind::kDesign;
};

struct OracleSettings {
  std::optional<double> eta;
  int n_grad = 120;
  int batch = 100;
};

struct IdentifyConfig {
  IdentMode mode = IdentMode::full_theta();
  Eigen::Index horizon = 0;
  double ridge = kDefaultRidge;
  std::uint64_t seed = 0;
  Criterion crit = Criterion::kA;
  double qp_tol = kDefaultQpTol;
  GradientSettings gradient;
  OracleSettings oracle;
};

/**
 * Outcome of one identification run. Per-time vectors are indexed by t:
 * sq_error and energy have T+1 entries (t = 0 is before any input),
 * step_seconds has T entries (learner time spent deciding u_t and absorbing
 * x_{t+1}).
 */
struct IdentificationRun {
  Matrix theta;
  std::vector<double> sq_error;
  std::vector<double> step_seconds;
  std::vector<double> energy;
  Trajectory trajectory;
  // Planned segments that fell back to power-projected random inputs because
  // the covariates at the current estimate were numerically rank deficient.
  int fallback_segments = 0;
};

// Algorithm-2 loop: greedy one-step design, true-system step, RLS update.
IdentificationRun greedy_identify(const LtiSystem& sys, const IdentifyConfig& cfg);

// Alternating estimation and planning over `schedule` for any policy.
IdentificationRun sequential_identify(const LtiSystem& sys, Policy policy, const Schedule& schedule,
                                      const IdentifyConfig& cfg);

// sequential_identify with the policy's natural schedule: one-step for
// random and greedy, the configured schedule for gradient, {0, T} for oracle.
IdentificationRun identify(const LtiSystem& sys, Policy policy, const IdentifyConfig& cfg);

}  // namespace sysid

#endif  // SYSID_IDENTIFICATION_HPP
