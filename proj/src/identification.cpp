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

#include "sysid/identification.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "sysid/errors.hpp"
#include "sysid/gradient_planner.hpp"
#include "sysid/noise.hpp"

namespace sysid {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return std::string(s.substr(first, last - first + 1));
}

// Planning seed of the segment starting at t0.
std::uint64_t segment_seed(std::uint64_t seed, Eigen::Index t0) {
  return mix64(seed ^ (0x632be59bd9b4e019ULL * static_cast<std::uint64_t>(t0 + 1)));
}

}  // namespace

Policy parse_policy(std::string_view name) {
  if (name == "random") return Policy::kRandom;
  if (name == "greedy") return Policy::kGreedy;
  if (name == "gradient") return Policy::kGradient;
  if (name == "oracle") return Policy::kOracle;
  throw ContractError("unknown policy '" + std::string(name) +
                      "' (expected random, greedy, gradient or oracle)");
}

std::string to_string(Policy policy) {
  switch (policy) {
    case Policy::kRandom: return "random";
    case Policy::kGreedy: return "greedy";
    case Policy::kGradient: return "gradient";
    case Policy::kOracle: return "oracle";
  }
  return "?";
}

Schedule::Schedule(std::vector<Eigen::Index> breakpoints) : points_(std::move(breakpoints)) {
  if (points_.size() < 2) throw ContractError("schedule needs at least two breakpoints");
  if (points_.front() != 0) throw ContractError("schedule must start at 0");
  for (std::size_t i = 1; i < points_.size(); ++i)
    if (points_[i] <= points_[i - 1])
      throw ContractError("schedule breakpoints must be strictly increasing");
}

Schedule Schedule::parse(std::string_view text, Eigen::Index horizon) {
  if (horizon < 1) throw ContractError("schedule: horizon must be >= 1");
  std::vector<Eigen::Index> points;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const std::string token =
        trim(text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    if (token.empty()) throw ContractError("schedule: empty token in '" + std::string(text) + "'");
    Eigen::Index value = 0;
    if (token == "T") {
      value = horizon;
    } else if (token == "T/2") {
      value = horizon / 2;
    } else {
      std::size_t used = 0;
      long long parsed = 0;
      try {
        parsed = std::stoll(token, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != token.size() || parsed < 0)
        throw ContractError("schedule: bad token '" + token + "'");
      value = static_cast<Eigen::Index>(parsed);
    }
    if (value <= horizon) points.push_back(value);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  if (points.empty() || points.front() != 0 || points.back() != horizon)
    throw ContractError("schedule: must contain 0 and T");
  return Schedule(std::move(points));
}

Schedule Schedule::one_step(Eigen::Index horizon) {
  if (horizon < 1) throw ContractError("schedule: horizon must be >= 1");
  std::vector<Eigen::Index> points(static_cast<std::size_t>(horizon) + 1);
  for (Eigen::Index t = 0; t <= horizon; ++t) points[static_cast<std::size_t>(t)] = t;
  return Schedule(std::move(points));
}

Schedule Schedule::single(Eigen::Index horizon) { return Schedule({0, horizon}); }

IdentificationRun sequential_identify(const LtiSystem& sys, Policy policy, const Schedule& schedule,
                                      const IdentifyConfig& cfg) {
  const Eigen::Index horizon = cfg.horizon;
  if (horizon < 1) throw ContractError("identify: horizon T must be >= 1");
  if (schedule.horizon() != horizon) throw ContractError("identify: schedule does not end at T");
  if (policy == Policy::kGreedy && cfg.crit == Criterion::kE)
    throw ContractError("greedy policy supports A- and D-optimality only");
  const Eigen::Index d = sys.state_dim();
  const Eigen::Index m = sys.input_dim();
  const IdentMode& mode = cfg.mode;
  if (mode.is_known_b() && (mode.b().rows() != d || mode.b().cols() != m))
    throw ContractError("identify: known B has the wrong shape");
  const Eigen::Index q = mode.covariate_dim(d, m);
  const Matrix theta_star = mode.true_theta(sys);
  const double sigma = sys.sigma();
  const double gamma = sys.gamma();

  EstimatorState est(d, q, cfg.ridge);
  IdentificationRun run;
  run.trajectory.states = Matrix::Zero(horizon + 1, d);
  run.trajectory.inputs = Matrix::Zero(horizon, m);
  run.trajectory.noises = Matrix::Zero(horizon, d);
  run.sq_error.reserve(static_cast<std::size_t>(horizon) + 1);
  run.energy.reserve(static_cast<std::size_t>(horizon) + 1);
  run.step_seconds.reserve(static_cast<std::size_t>(horizon));
  run.sq_error.push_back(squared_error(est.theta(), theta_star));
  run.energy.push_back(0.0);

  const KeyedNormal random_inputs(cfg.seed, KeyedNormal::kRandomPolicy);
  const auto& points = schedule.breakpoints();
  std::size_t segment = 0;
  Matrix planned;  // inputs of the current segment
  Vector x = Vector::Zero(d);
  double energy = 0.0;

  for (Eigen::Index t = 0; t < horizon; ++t) {
    const auto start = Clock::now();
    if (segment + 1 < points.size() && t == points[segment]) {
      const Eigen::Index t0 = points[segment];
      const Eigen::Index len = points[segment + 1] - t0;
      ++segment;
      if (policy == Policy::kGradient || policy == Policy::kOracle) {
        PlanningContext ctx;
        PlanObjective objective;
        GradientPlanOptions options;
        options.seed = segment_seed(cfg.seed, t0);
        if (policy == Policy::kOracle) {
          ctx = PlanningContext::fresh(theta_star, mode, sigma);
          ctx.x_start = x;
          objective = OracleMseObjective{cfg.oracle.batch, options.seed};
          options.n_grad = cfg.oracle.n_grad;
          options.eta = cfg.oracle.eta;
        } else {
          ctx = PlanningContext::fresh(est.theta(), mode, sigma);
          ctx.x_start = x;
          if (cfg.gradient.objective == GradientObjectiveKind::kDesign) {
            ctx.prior_information = est.moment();
            objective = DesignObjective{cfg.crit};
          } else {
            ctx.past_covariates = covariates(run.trajectory, mode).topRows(t0);
            objective = OracleMseObjective{cfg.gradient.batch, options.seed};
          }
          options.n_grad = cfg.gradient.n_grad;
          options.eta = cfg.gradient.eta;
        }
        try {
          planned = plan_gradient(objective, ctx, len, gamma, options).inputs;
        } catch (const SingularityError&) {
          if (policy == Policy::kOracle) throw;
          Matrix draw(len, m);
          for (Eigen::Index s = 0; s < len; ++s)
            draw.row(s) = random_inputs.vector(m, static_cast<std::uint64_t>(t0 + s)).transpose();
          planned = project_power(draw, gamma, len);
          ++run.fallback_segments;
        }
      }
    }

    Vector u(m);
    switch (policy) {
      case Policy::kRandom:
        u = (gamma / std::sqrt(static_cast<double>(m))) *
            random_inputs.vector(m, static_cast<std::uint64_t>(t));
        break;
      case Policy::kGreedy:
        u = greedy_step(mode, est, x, sigma, t, gamma, cfg.crit, cfg.qp_tol);
        break;
      case Policy::kGradient:
      case Policy::kOracle:
        u = planned.row(t - points[segment - 1]).transpose();
        break;
    }
    double learner_seconds = seconds_since(start);

    const Vector w = process_noise(cfg.seed, t, d, sigma);
    const Vector x_next = step(sys, x, u, w);

    const auto update_start = Clock::now();
    est = rls_update(std::move(est), mode.covariate(x, u), mode.target(x_next, u));
    learner_seconds += seconds_since(update_start);

    run.trajectory.inputs.row(t) = u.transpose();
    run.trajectory.noises->row(t) = w.transpose();
    run.trajectory.states.row(t + 1) = x_next.transpose();
    energy += u.squaredNorm();
    run.energy.push_back(energy);
    run.step_seconds.push_back(learner_seconds);
    run.sq_error.push_back(squared_error(est.theta(), theta_star));
    x = x_next;
  }
  run.theta = est.theta();
  return run;
}

IdentificationRun greedy_identify(const LtiSystem& sys, const IdentifyConfig& cfg) {
  return sequential_identify(sys, Policy::kGreedy, Schedule::one_step(cfg.horizon), cfg);
}

IdentificationRun identify(const LtiSystem& sys, Policy policy, const IdentifyConfig& cfg) {
  switch (policy) {
    case Policy::kRandom:
    case Policy::kGreedy:
      return sequential_identify(sys, policy, Schedule::one_step(cfg.horizon), cfg);
    case Policy::kGradient:
      return sequential_identify(sys, policy, Schedule::parse(cfg.gradient.schedule, cfg.horizon),
                                 cfg);
    case Policy::kOracle:
      return sequential_identify(sys, policy, Schedule::single(cfg.horizon), cfg);
  }
  throw ContractError("identify: unknown policy");
}

}  // namespace sysid
