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

#include "sysid/gradient_planner.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "sysid/errors.hpp"
#include "sysid/estimation.hpp"
#include "sysid/identification.hpp"
#include "test_util.hpp"

namespace sysid {
namespace {

using testing::gaussian;

// Central differences of `f` over every entry of U.
template <typename F>
Matrix central_differences(F f, const Matrix& u, double h) {
  Matrix grad(u.rows(), u.cols());
  for (Eigen::Index i = 0; i < u.rows(); ++i)
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
      Matrix plus = u;
      Matrix minus = u;
      plus(i, j) += h;
      minus(i, j) -= h;
      grad(i, j) = (f(plus) - f(minus)) / (2.0 * h);
    }
  return grad;
}

struct Instance {
  Matrix theta;
  IdentMode mode;
};

Instance random_instance(std::mt19937_64& rng, Eigen::Index d, Eigen::Index m, bool known_b) {
  const Matrix a = testing::random_stable(rng, d, 0.9);
  const Matrix b = gaussian(rng, d, m);
  if (known_b) return {a, IdentMode::known_b(b)};
  return {(Matrix(d, d + m) << a, b).finished(), IdentMode::full_theta()};
}

double angle_degrees(const Matrix& x, const Matrix& y) {
  const double c = (x.array() * y.array()).sum() / (x.norm() * y.norm());
  return std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

TEST_CASE("project_power") {
  std::mt19937_64 rng(1);
  const Matrix u = gaussian(rng, 7, 2);
  const double target = 1.5 * std::sqrt(7.0);
  const Matrix at_target = u * (target / u.norm());
  CHECK((project_power(at_target, 1.5, 7) - at_target).norm() <= 1e-12 * target);
  CHECK((project_power(2.0 * at_target, 1.5, 7) - at_target).norm() <= 1e-12 * target);
  const Matrix p = project_power(u, 1.5, 7);
  CHECK(std::abs(p.norm() - target) <= 1e-12 * target);
  CHECK((project_power(p, 1.5, 7) - p).norm() <= 1e-12 * target);

  const Matrix zero = project_power(Matrix::Zero(4, 2), 1.0, 4);
  CHECK(zero.col(1).norm() == 0.0);
  CHECK((zero.col(0).array() == zero(0, 0)).all());
  CHECK(zero.norm() == doctest::Approx(2.0));
}

TEST_CASE("design functional gradient") {
  std::mt19937_64 rng(2);

  SUBCASE("finite differences on random instances") {
    for (int k = 0; k < 50; ++k) {
      const Eigen::Index d = 2 + k % 3;
      const Eigen::Index m = 1 + k % 2;
      const Eigen::Index horizon = d + m + 1 + k % 4;
      const bool known_b = k % 2 == 1;
      const Instance inst = random_instance(rng, d, m, known_b);
      const Criterion crit = k % 3 == 0 ? Criterion::kD : (k % 3 == 1 ? Criterion::kA : Criterion::kE);
      const Matrix u = gaussian(rng, horizon, m);
      const double sigma = 0.3;
      const Matrix grad = grad_design_functional(inst.theta, u, sigma, crit, inst.mode);
      const Matrix fd = central_differences(
          [&](const Matrix& v) {
            return od_functional(crit, inst.theta, v, sigma, horizon, inst.mode);
          },
          u, 1e-5);
      CHECK(testing::rel_frobenius(grad, fd) <= 1e-4);
    }
  }

  SUBCASE("zero inputs are stationary for the D criterion in known-B mode") {
    const Instance inst = random_instance(rng, 3, 2, true);
    const Matrix grad = grad_design_functional(inst.theta, Matrix::Zero(6, 2), 0.5, Criterion::kD, inst.mode);
    CHECK(grad.norm() <= 1e-12);
  }

  SUBCASE("noise enters only through the Gramian term") {
    const Instance inst = random_instance(rng, 3, 2, false);
    const Matrix u = gaussian(rng, 8, 2);
    for (const double sigma : {0.2, 0.4}) {
      PlanningContext noisy = PlanningContext::fresh(inst.theta, inst.mode, sigma);
      PlanningContext quiet = PlanningContext::fresh(inst.theta, inst.mode, 0.0);
      quiet.prior_information = Matrix::Zero(5, 5);
      for (Eigen::Index t = 0; t < 8; ++t)
        quiet.prior_information.topLeftCorner(3, 3) += sigma * sigma * gramian(noisy.a, t);
      const ObjectiveValue lhs = evaluate_design(Criterion::kA, noisy, u, true);
      const ObjectiveValue rhs = evaluate_design(Criterion::kA, quiet, u, true);
      CHECK(lhs.value == doctest::Approx(rhs.value).epsilon(1e-12));
      CHECK((lhs.gradient - rhs.gradient).norm() <= 1e-10 * rhs.gradient.norm());
    }
  }

  SUBCASE("singular information is reported") {
    const Instance inst = random_instance(rng, 3, 1, false);
    CHECK_THROWS_AS(grad_design_functional(inst.theta, Matrix::Zero(3, 1), 0.0, Criterion::kA, inst.mode),
                    SingularityError);
  }
}

TEST_CASE("oracle MSE gradient") {
  std::mt19937_64 rng(3);

  SUBCASE("finite differences of the sampled objective") {
    for (int k = 0; k < 50; ++k) {
      const Eigen::Index d = 2 + k % 2;
      const Eigen::Index m = 1 + k % 2;
      const bool known_b = k % 2 == 0;
      const Instance inst = random_instance(rng, d, m, known_b);
      const Eigen::Index horizon = d + m + 2 + k % 5;
      const PlanningContext ctx = PlanningContext::fresh(inst.theta, inst.mode, 0.2);
      const std::vector<Matrix> batch = draw_noise_batch(ctx, horizon, 3, 17 + k);
      const Matrix u = gaussian(rng, horizon, m);
      const Matrix grad = evaluate_oracle_mse(ctx, u, batch, true).gradient;
      const Matrix fd = central_differences(
          [&](const Matrix& v) { return evaluate_oracle_mse(ctx, v, batch, false).value; }, u, 1e-5);
      CHECK(testing::rel_frobenius(grad, fd) <= 1e-4);
      CHECK((grad_oracle_mse(inst.theta, u, 0.2, 3, 17 + k, inst.mode) - grad).norm() == 0.0);
    }
  }

  SUBCASE("same seed gives the same gradient") {
    const Instance inst = random_instance(rng, 3, 2, false);
    const Matrix u = gaussian(rng, 9, 2);
    const Matrix one = grad_oracle_mse(inst.theta, u, 0.1, 4, 5, inst.mode);
    const Matrix two = grad_oracle_mse(inst.theta, u, 0.1, 4, 5, inst.mode);
    CHECK((one.array() == two.array()).all());
    CHECK((grad_oracle_mse(inst.theta, u, 0.1, 4, 6, inst.mode) - one).norm() > 0.0);
  }

  SUBCASE("small-noise direction agrees with the A-optimal functional") {
    const double gamma = 1.0;
    const double sigma = 1e-3 * gamma;
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) {
      const Instance inst = random_instance(rng, 2, 2, true);
      const Matrix u = project_power(gaussian(rng, 8, 2), gamma, 8);
      const Matrix mse = grad_oracle_mse(inst.theta, u, sigma, 2000, 100 + k, inst.mode);
      const Matrix design = grad_design_functional(inst.theta, u, sigma, Criterion::kA, inst.mode);
      worst = std::max(worst, angle_degrees(mse, design));
    }
    MESSAGE("largest angle: " << worst << " degrees");
    CHECK(worst <= 5.0);
  }

  SUBCASE("rank-deficient samples are stabilized and counted") {
    const Instance inst = random_instance(rng, 2, 1, true);
    const PlanningContext ctx = PlanningContext::fresh(inst.theta, inst.mode, 0.0);
    const std::vector<Matrix> batch(2, Matrix::Zero(3, 2));
    CHECK_THROWS_AS(evaluate_oracle_mse(ctx, Matrix::Zero(3, 1), batch, true), SingularityError);
  }
}

TEST_CASE("plan_gradient") {
  std::mt19937_64 rng(4);

  SUBCASE("zero step returns the projected initial draw") {
    const Instance inst = random_instance(rng, 3, 2, false);
    const PlanningContext ctx = PlanningContext::fresh(inst.theta, inst.mode, 0.1);
    GradientPlanOptions opts;
    opts.eta = 0.0;
    opts.n_grad = 1;
    opts.seed = 9;
    const GradientPlan plan = plan_gradient(DesignObjective{Criterion::kA}, ctx, 12, 1.0, opts);
    CHECK(plan.inputs.norm() == doctest::Approx(std::sqrt(12.0)));
    CHECK(plan.objective.front() == plan.objective.back());
    opts.n_grad = 5;
    CHECK((plan_gradient(DesignObjective{Criterion::kD}, ctx, 12, 1.0, opts).inputs - plan.inputs).norm() == 0.0);
  }

  SUBCASE("objective never increases") {
    for (int k = 0; k < 100; ++k) {
      const bool mse = k % 4 == 3;
      const Instance inst = random_instance(rng, 2 + k % 2, 1 + k % 2, k % 2 == 0);
      const PlanningContext ctx = PlanningContext::fresh(inst.theta, inst.mode, 0.1);
      GradientPlanOptions opts;
      opts.n_grad = mse ? 5 : 20;
      opts.seed = static_cast<std::uint64_t>(k);
      const PlanObjective objective =
          mse ? PlanObjective(OracleMseObjective{5, static_cast<std::uint64_t>(k), false})
              : PlanObjective(DesignObjective{k % 3 == 0 ? Criterion::kD : Criterion::kA});
      const GradientPlan plan = plan_gradient(objective, ctx, 10, 1.0, opts);
      CHECK(plan.objective.back() <= plan.objective.front());
      for (std::size_t i = 1; i < plan.objective.size(); ++i)
        CHECK(plan.objective[i] <= plan.objective[i - 1]);
      CHECK(std::abs(plan.inputs.norm() - std::sqrt(10.0)) <= 1e-12 * std::sqrt(10.0));
    }
  }

  SUBCASE("deterministic given the seed") {
    const Instance inst = random_instance(rng, 3, 2, true);
    const PlanningContext ctx = PlanningContext::fresh(inst.theta, inst.mode, 0.1);
    GradientPlanOptions opts;
    opts.n_grad = 10;
    opts.seed = 3;
    const GradientPlan one = plan_gradient(OracleMseObjective{4, 8}, ctx, 9, 1.0, opts);
    const GradientPlan two = plan_gradient(OracleMseObjective{4, 8}, ctx, 9, 1.0, opts);
    CHECK((one.inputs.array() == two.inputs.array()).all());
  }

  SUBCASE("resampled batches still improve the expected objective") {
    const Instance inst = random_instance(rng, 3, 3, true);
    const PlanningContext ctx = PlanningContext::fresh(inst.theta, inst.mode, 0.05);
    GradientPlanOptions opts;
    opts.n_grad = 40;
    opts.seed = 12;
    const std::vector<Matrix> held_out = draw_noise_batch(ctx, 30, 200, 999);
    const double before =
        evaluate_oracle_mse(ctx, plan_gradient(OracleMseObjective{10, 3}, ctx, 30, 1.0, {0.0, 1, true, 12}).inputs,
                            held_out, false)
            .value;
    const double after =
        evaluate_oracle_mse(ctx, plan_gradient(OracleMseObjective{10, 3}, ctx, 30, 1.0, opts).inputs, held_out, false)
            .value;
    CHECK(after < before);
  }

  SUBCASE("n_grad must be positive") {
    const Instance inst = random_instance(rng, 2, 1, false);
    GradientPlanOptions opts;
    opts.n_grad = 0;
    CHECK_THROWS_AS(plan_gradient(DesignObjective{}, PlanningContext::fresh(inst.theta, inst.mode, 0.1),
                                  5, 1.0, opts),
                    ContractError);
  }
}

TEST_CASE("sequential identification") {
  std::mt19937_64 rng(5);
  const LtiSystem sys(testing::random_stable(rng, 3), Matrix::Identity(3, 3), 0.05, 1.0);

  SUBCASE("random policy spends the budget in expectation") {
    IdentifyConfig cfg;
    cfg.horizon = 200;
    cfg.seed = 4;
    const IdentificationRun run = identify(sys, Policy::kRandom, cfg);
    const double realized = run.trajectory.inputs.norm();
    CHECK(std::abs(realized - std::sqrt(200.0)) <= 0.1 * std::sqrt(200.0));
  }

  SUBCASE("planned policies meet the power budget exactly") {
    IdentifyConfig cfg;
    cfg.horizon = 40;
    cfg.seed = 2;
    cfg.gradient.n_grad = 10;
    cfg.gradient.batch = 5;
    cfg.oracle.n_grad = 10;
    cfg.oracle.batch = 5;
    for (const Policy p : {Policy::kGreedy, Policy::kGradient, Policy::kOracle}) {
      const IdentificationRun run = identify(sys, p, cfg);
      CHECK(run.energy.size() == 41);
      CHECK(std::abs(run.energy.back() / 40.0 - 1.0) <= 1e-9);
      CHECK(run.sq_error.back() < run.sq_error.front());
    }
  }

  SUBCASE("schedules") {
    const Schedule s = Schedule::parse("0,10,T/2,T", 200);
    CHECK(s.breakpoints() == std::vector<Eigen::Index>{0, 10, 100, 200});
    CHECK(Schedule::parse("0,10,T/2,T", 12).breakpoints() == std::vector<Eigen::Index>{0, 6, 10, 12});
    CHECK(Schedule::parse("0,10,T/2,T", 8).breakpoints() == std::vector<Eigen::Index>{0, 4, 8});
    CHECK_THROWS_AS(Schedule::parse("0,x,T", 10), ContractError);
    CHECK_THROWS_AS(Schedule({0, 5, 3}), ContractError);
    CHECK(Schedule::one_step(3).segments() == 3);
  }
}

}  // namespace
}  // namespace sysid
