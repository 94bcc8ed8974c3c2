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

#ifndef SYSID_GRADIENT_PLANNER_HPP
#define SYSID_GRADIENT_PLANNER_HPP

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "sysid/design_criteria.hpp"
#include "sysid/lti_core.hpp"

namespace sysid {

// Optimal-design cost F_Phi of the planned segment.
struct DesignObjective {
  Criterion crit = Criterion::kA;
};

// Sample-average squared OLS error under a fixed batch of noise draws.
// Meant to be evaluated at the true parameter (oracle planning).
struct OracleMseObjective {
  int batch = 100;
  std::uint64_t seed = 0;
  // Fresh noise batch at every iteration; false keeps one batch per call.
  bool resample = true;
};

using PlanObjective = std::variant<DesignObjective, OracleMseObjective>;

/**
 * What the planner knows when it plans the inputs of one segment: the model
 * (A, B) it rolls out, the state at the segment start, and the data already
 * collected (its moment matrix for the design functional, its covariate rows
 * for the MSE objective).
 */
struct PlanningContext {
  Matrix a;
  Matrix b;
  IdentMode mode = IdentMode::full_theta();
  double sigma = 0.0;
  Vector x_start;
  Matrix prior_information;  // q x q, may be empty (zero)
  Matrix past_covariates;    // h x q, may be empty

  // Whole-horizon planning from x_0 = 0 with no history.
  static PlanningContext fresh(const Matrix& theta, const IdentMode& mode, double sigma);

  Eigen::Index state_dim() const { return a.rows(); }
  Eigen::Index input_dim() const { return b.cols(); }
  Eigen::Index covariate_dim() const { return mode.covariate_dim(a.rows(), b.cols()); }
};

struct ObjectiveValue {
  double value = 0.0;
  Matrix gradient;  // empty when only the value was requested
  int stabilized_samples = 0;
};

// U scaled to Frobenius norm gamma sqrt(T'). U = 0 maps to the sequence with
// constant first coordinate (logged).
Matrix project_power(const Matrix& u, double gamma, Eigen::Index horizon);

// Information prior + sum_{s<T'} (zbar_s zbar_s^T + sigma^2 G_s(A) on the state block).
Matrix planned_information(const PlanningContext& ctx, const Matrix& u);

ObjectiveValue evaluate_design(Criterion crit, const PlanningContext& ctx, const Matrix& u,
                               bool with_gradient);

/**
 * Fixed batch of noise matrices W_1..W_b ((h + T') x d each, sigma-scaled)
 * for the sample-average MSE objective. Drawn once per planning call.
 */
std::vector<Matrix> draw_noise_batch(const PlanningContext& ctx, Eigen::Index horizon, int batch,
                                     std::uint64_t seed);

// (1/b) sum_i |(Z_i^T Z_i)^{-1} Z_i^T W_i|_F^2 with Z_i the stochastic rollout
// driven by W_i. Rank-deficient samples switch to a 1e-8 ridge and are
// counted; more than 10% of them throws SingularityError.
ObjectiveValue evaluate_oracle_mse(const PlanningContext& ctx, const Matrix& u,
                                   const std::vector<Matrix>& noise_batch, bool with_gradient);

// Gradient of F_Phi w.r.t. U for whole-horizon planning from x_0 = 0.
Matrix grad_design_functional(const Matrix& theta, const Matrix& u, double sigma, Criterion crit,
                              const IdentMode& mode);

// Sampled MSE gradient at theta_star for whole-horizon planning.
Matrix grad_oracle_mse(const Matrix& theta_star, const Matrix& u, double sigma, int batch,
                       std::uint64_t seed, const IdentMode& mode);

struct GradientPlanOptions {
  std::optional<double> eta;  // default 0.1 gamma sqrt(T') / |grad G(U_0)|
  int n_grad = 120;
  bool backtracking = true;
  std::uint64_t seed = 0;  // initial U and Monte-Carlo batch
};

struct GradientPlan {
  Matrix inputs;                   // T' x m, |U|_F = gamma sqrt(T')
  std::vector<double> objective;   // value after each accepted iteration, [0] at init
  double eta = 0.0;
};

// Projected gradient descent U <- project(U - eta grad G(U)) with Armijo
// backtracking (factor 0.5, at most 20 halvings).
GradientPlan plan_gradient(const PlanObjective& objective, const PlanningContext& ctx,
                           Eigen::Index horizon, double gamma, const GradientPlanOptions& options);

}  // namespace sysid

#endif  // SYSID_GRADIENT_PLANNER_HPP
