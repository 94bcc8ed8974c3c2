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

#ifndef SYSID_GREEDY_PLANNER_HPP
#define SYSID_GREEDY_PLANNER_HPP

#include <optional>

#include "sysid/design_criteria.hpp"
#include "sysid/estimation.hpp"
#include "sysid/lti_core.hpp"

namespace sysid {

inline constexpr double kDefaultQpTol = 1e-10;

/**
 * One-step-ahead design problem: maximize Phi(Mbar + z(u) z(u)^T) over
 * |u| <= gamma, where the next informative covariate is affine in the input,
 * z(u) = offset + input_map * u.
 */
struct OneStepProblem {
  Matrix information;  // Mbar, q x q symmetric PD
  Vector offset;       // z0
  Matrix input_map;    // L, q x m
  double gamma = 1.0;
  Criterion crit = Criterion::kD;

  Vector covariate(const Vector& u) const { return offset + input_map * u; }
};

// min u^T Q u - 2 b^T u subject to |u| = gamma.
struct SphereQp {
  Matrix q;
  Vector b;
  double gamma = 1.0;

  double objective(const Vector& u) const { return u.dot(q * u) - 2.0 * b.dot(u); }
};

struct SphereQpSolution {
  Vector u;
  double multiplier = 0.0;  // mu, with (Q + mu I) u = b
  int iterations = 0;
  bool hard_case = false;
  bool interior = false;
};

/**
 * Assembles Mbar and the covariate map at time t from the running estimator.
 * FullTheta: Mbar = M_{t-1} + sigma^2 blockdiag(G_t(A_t), 0), z(u) = (x_t; u).
 * KnownB:    Mbar = M_{t-1} + x_t x_t^T + sigma^2 G_{t+1}(A_t),
 *            z(u) = A_t x_t + B u.
 * `est.moment()` already carries the ridge floor.
 */
OneStepProblem build_one_step(const IdentMode& mode, const EstimatorState& est, const Vector& x_t,
                              double sigma, Eigen::Index t, double gamma, Criterion crit);

// Q = -L^T Mbar^{-1} L, b = L^T Mbar^{-1} z0, so that
// -z(u)^T Mbar^{-1} z(u) = u^T Q u - 2 b^T u + const.
SphereQp reduce_to_qp(const OneStepProblem& problem);

// Global minimizer on the sphere |u| = gamma (eigendecomposition plus a
// safeguarded Newton iteration on the secular equation).
SphereQpSolution solve_sphere_qp(const SphereQp& qp, double tol = kDefaultQpTol);

// Same problem over the ball |u| <= gamma: the interior stationary point is
// returned instead when Q is PD, |Q^{-1} b| < gamma and it scores better.
SphereQpSolution solve_ball_qp(const SphereQp& qp, double tol = kDefaultQpTol);

// One greedy input for A- or D-optimality; |u| = gamma.
Vector greedy_step(const IdentMode& mode, const EstimatorState& est, const Vector& x_t,
                   double sigma, Eigen::Index t, double gamma, Criterion crit,
                   double tol = kDefaultQpTol);

}  // namespace sysid

#endif  // SYSID_GREEDY_PLANNER_HPP
