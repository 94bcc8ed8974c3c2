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

#include "sysid/greedy_planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "sysid/errors.hpp"
#include "sysid/identification.hpp"
#include "test_util.hpp"

namespace sysid {
namespace {

using testing::gaussian;
using testing::gaussian_vector;
using testing::random_spd;

// Minimum of the QP objective over `points` equally spaced angles (m = 2).
double grid_minimum(const SphereQp& qp, int points) {
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < points; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / points;
    const Eigen::Vector2d u = qp.gamma * Eigen::Vector2d(std::cos(angle), std::sin(angle));
    best = std::min(best, qp.objective(u));
  }
  return best;
}

void check_kkt(const SphereQp& qp, const SphereQpSolution& sol) {
  const Eigen::Index m = qp.b.size();
  CHECK(std::abs(sol.u.norm() - qp.gamma) <= 1e-10 * qp.gamma);
  const Vector residual = (qp.q + sol.multiplier * Matrix::Identity(m, m)) * sol.u - qp.b;
  CHECK(residual.norm() <= 1e-8 * (qp.b.norm() + qp.q.norm() * qp.gamma));
  CHECK(testing::min_eigenvalue(qp.q + sol.multiplier * Matrix::Identity(m, m)) >= -1e-10);
}

TEST_CASE("solve_sphere_qp examples") {
  SUBCASE("linear objective") {
    const SphereQp qp{Matrix::Zero(2, 2), Eigen::Vector2d(3.0, 4.0), 1.0};
    const Vector u = solve_sphere_qp(qp).u;
    CHECK(u(0) == doctest::Approx(0.6));
    CHECK(u(1) == doctest::Approx(0.8));
  }

  SUBCASE("pure Rayleigh quotient") {
    const SphereQp qp{Eigen::Vector2d(1.0, -1.0).asDiagonal().toDenseMatrix(), Vector::Zero(2), 2.0};
    const SphereQpSolution sol = solve_sphere_qp(qp);
    CHECK(std::abs(sol.u(0)) < 1e-14);
    CHECK(std::abs(sol.u(1)) == doctest::Approx(2.0));
    CHECK(sol.hard_case);
    check_kkt(qp, sol);
    // Deterministic across calls.
    CHECK((solve_sphere_qp(qp).u - sol.u).norm() == 0.0);
  }

  SUBCASE("isotropic tie-break returns the first axis") {
    const SphereQp qp{-Matrix::Identity(3, 3), Vector::Zero(3), 1.5};
    const Vector u = solve_sphere_qp(qp).u;
    CHECK((u - 1.5 * Vector::Unit(3, 0)).norm() < 1e-14);
  }

  SUBCASE("hard case") {
    const SphereQp qp{Eigen::Vector2d(0.0, 1.0).asDiagonal().toDenseMatrix(),
                      Eigen::Vector2d(0.0, 0.1), 10.0};
    const SphereQpSolution sol = solve_sphere_qp(qp);
    CHECK(sol.hard_case);
    CHECK(std::abs(sol.u(0)) > 1.0);
    CHECK(sol.u(0) > 0.0);
    CHECK(qp.objective(sol.u) <= grid_minimum(qp, 1000000) + 1e-6);
    check_kkt(qp, sol);
  }

  SUBCASE("asymmetric Q is rejected") {
    Matrix q = Matrix::Identity(2, 2);
    q(0, 1) = 1.0;
    CHECK_THROWS_AS(solve_sphere_qp({q, Vector::Ones(2), 1.0}), ContractError);
  }
}

TEST_CASE("solve_sphere_qp against an angular grid") {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 100; ++k) {
    Matrix q = gaussian(rng, 2, 2);
    q = (0.5 * (q + q.transpose())).eval();
    const SphereQp qp{q, gaussian_vector(rng, 2), 1.0};
    const SphereQpSolution sol = solve_sphere_qp(qp);
    const double grid = grid_minimum(qp, 1000000);
    CHECK(std::abs(qp.objective(sol.u) - grid) <= 1e-6);
    CHECK(qp.objective(sol.u) <= grid + 1e-9);
    check_kkt(qp, sol);
  }
}

TEST_CASE("solve_sphere_qp certificates in higher dimension") {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 200; ++k) {
    const Eigen::Index m = 1 + k % 6;
    Matrix q = gaussian(rng, m, m);
    q = (0.5 * (q + q.transpose())).eval();
    const double gamma = 0.1 + 3.0 * std::uniform_real_distribution<double>(0, 1)(rng);
    const SphereQp qp{q, gaussian_vector(rng, m, k % 3 == 0 ? 1e-6 : 1.0), gamma};
    const SphereQpSolution sol = solve_sphere_qp(qp);
    check_kkt(qp, sol);
    for (int s = 0; s < 50; ++s) {
      const Vector u = gamma * gaussian_vector(rng, m).normalized();
      CHECK(qp.objective(sol.u) <= qp.objective(u) + 1e-9);
    }
  }
}

TEST_CASE("solve_ball_qp keeps interior minimizers") {
  const SphereQp qp{Matrix::Identity(2, 2), Eigen::Vector2d(0.1, 0.0), 1.0};
  const SphereQpSolution sol = solve_ball_qp(qp);
  CHECK(sol.interior);
  CHECK((sol.u - Eigen::Vector2d(0.1, 0.0)).norm() < 1e-14);
  const SphereQp concave{-Matrix::Identity(2, 2), Eigen::Vector2d(0.1, 0.0), 1.0};
  CHECK_FALSE(solve_ball_qp(concave).interior);
}

TEST_CASE("build_one_step") {
  const double eps = 1e-6;
  const double sigma = 0.3;

  SUBCASE("known B at t = 0") {
    const Matrix b = Matrix::Identity(2, 2);
    const EstimatorState est(2, 2, eps);
    const OneStepProblem p =
        build_one_step(IdentMode::known_b(b), est, Vector::Zero(2), sigma, 0, 1.0, Criterion::kD);
    CHECK((p.information - (eps + sigma * sigma) * Matrix::Identity(2, 2)).norm() < 1e-15);
    CHECK((p.input_map - b).norm() == 0.0);
  }

  SUBCASE("full theta shapes") {
    const EstimatorState est(3, 5, eps);
    const OneStepProblem p =
        build_one_step(IdentMode::full_theta(), est, Vector::Ones(3), sigma, 1, 1.0, Criterion::kA);
    CHECK(p.information.rows() == 5);
    CHECK(p.input_map.rows() == 5);
    CHECK(p.input_map.cols() == 2);
    CHECK(p.offset.size() == 5);
  }

  SUBCASE("hand assembly") {
    std::mt19937_64 rng(3);
    const Matrix b_true = gaussian(rng, 3, 2);
    EstimatorState est(gaussian(rng, 3, 5, 0.3), eps);
    for (int k = 0; k < 7; ++k) est = rls_update(est, gaussian_vector(rng, 5), gaussian_vector(rng, 3));
    const Vector x = gaussian_vector(rng, 3);
    const Matrix a_t = est.theta().leftCols(3);

    const OneStepProblem full =
        build_one_step(IdentMode::full_theta(), est, x, sigma, 7, 1.0, Criterion::kD);
    Matrix want = est.moment();
    want.topLeftCorner(3, 3) += sigma * sigma * gramian(a_t, 7);
    CHECK((full.information - want).norm() <= 1e-12 * want.norm());
    const Vector u = gaussian_vector(rng, 2);
    Vector z(5);
    z << x, u;
    CHECK((full.covariate(u) - z).norm() < 1e-15);

    EstimatorState known(gaussian(rng, 3, 3, 0.3), eps);
    for (int k = 0; k < 7; ++k) known = rls_update(known, gaussian_vector(rng, 3), gaussian_vector(rng, 3));
    const OneStepProblem pk =
        build_one_step(IdentMode::known_b(b_true), known, x, sigma, 7, 1.0, Criterion::kD);
    const Matrix want_k =
        known.moment() + x * x.transpose() + sigma * sigma * gramian(known.theta(), 8);
    CHECK((pk.information - want_k).norm() <= 1e-12 * want_k.norm());
    CHECK((pk.covariate(u) - (known.theta() * x + b_true * u)).norm() < 1e-12);
  }
}

TEST_CASE("reduce_to_qp") {
  SUBCASE("identity reductions") {
    const Vector v = Eigen::Vector2d(0.3, -1.2);
    const OneStepProblem known{Matrix::Identity(2, 2), v, Matrix::Identity(2, 2), 1.0, Criterion::kD};
    const SphereQp qk = reduce_to_qp(known);
    CHECK((qk.q + Matrix::Identity(2, 2)).norm() < 1e-15);
    CHECK((qk.b - v).norm() < 1e-15);

    Matrix map = Matrix::Zero(5, 2);
    map.bottomRows(2).setIdentity();
    Vector offset = Vector::Zero(5);
    offset.head(3) << 1, 2, 3;
    const SphereQp qf = reduce_to_qp({Matrix::Identity(5, 5), offset, map, 1.0, Criterion::kA});
    CHECK((qf.q + Matrix::Identity(2, 2)).norm() < 1e-15);
    CHECK(qf.b.norm() < 1e-15);
  }

  SUBCASE("objective matches the quadratic form up to a constant") {
    std::mt19937_64 rng(4);
    const OneStepProblem p{random_spd(rng, 3), gaussian_vector(rng, 3), gaussian(rng, 3, 2), 1.0,
                           Criterion::kD};
    const SphereQp qp = reduce_to_qp(p);
    const Matrix p_inv = p.information.inverse();
    const auto exact = [&](const Vector& u) {
      const Vector z = p.covariate(u);
      return -z.dot(p_inv * z);
    };
    const double offset = exact(Vector::Zero(2)) - qp.objective(Vector::Zero(2));
    for (int k = 0; k < 100; ++k) {
      const Vector u = gaussian_vector(rng, 2);
      CHECK(std::abs(qp.objective(u) + offset - exact(u)) <= 1e-10 * (1.0 + std::abs(exact(u))));
    }
  }
}

TEST_CASE("greedy_step") {
  std::mt19937_64 rng(5);

  SUBCASE("energy is exactly gamma") {
    for (int k = 0; k < 50; ++k) {
      EstimatorState est(gaussian(rng, 3, 5, 0.4), 1e-6);
      for (int s = 0; s < k % 9; ++s)
        est = rls_update(est, gaussian_vector(rng, 5), gaussian_vector(rng, 3));
      const Vector u = greedy_step(IdentMode::full_theta(), est, gaussian_vector(rng, 3), 0.1, k % 9,
                                   2.5, Criterion::kA);
      CHECK(std::abs(u.norm() - 2.5) <= 1e-10 * 2.5);
    }
  }

  SUBCASE("maximizes the one-step D criterion over sphere samples") {
    for (int trial = 0; trial < 5; ++trial) {
      const Matrix b_true = gaussian(rng, 2, 2);
      EstimatorState est(gaussian(rng, 2, 2, 0.5), 1e-6);
      for (int s = 0; s < 3; ++s) est = rls_update(est, gaussian_vector(rng, 2), gaussian_vector(rng, 2));
      const IdentMode mode = IdentMode::known_b(b_true);
      const Vector x = gaussian_vector(rng, 2);
      const Vector u_star = greedy_step(mode, est, x, 0.0, 3, 1.0, Criterion::kD);
      const OneStepProblem p = build_one_step(mode, est, x, 0.0, 3, 1.0, Criterion::kD);
      const auto value = [&](const Vector& u) {
        const Vector z = p.covariate(u);
        return criterion_value(Criterion::kD, p.information + z * z.transpose());
      };
      const double best = value(u_star);
      for (int s = 0; s < 100000; ++s) {
        const Vector u = gaussian_vector(rng, 2).normalized();
        if (value(u) > best + 1e-10) {
          FAIL("sampled input beats the greedy step");
          break;
        }
      }
    }
  }

  SUBCASE("A and D criteria choose the same input") {
    for (int k = 0; k < 50; ++k) {
      EstimatorState est(gaussian(rng, 3, 3, 0.4), 1e-6);
      for (int s = 0; s < 4; ++s) est = rls_update(est, gaussian_vector(rng, 3), gaussian_vector(rng, 3));
      const IdentMode mode = IdentMode::known_b(gaussian(rng, 3, 2));
      const Vector x = gaussian_vector(rng, 3);
      const Vector ua = greedy_step(mode, est, x, 0.2, 4, 1.0, Criterion::kA);
      const Vector ud = greedy_step(mode, est, x, 0.2, 4, 1.0, Criterion::kD);
      CHECK((ua - ud).norm() < 1e-10);
    }
  }

  SUBCASE("E criterion is rejected") {
    const EstimatorState est(2, 4, 1e-6);
    CHECK_THROWS_AS(greedy_step(IdentMode::full_theta(), est, Vector::Zero(2), 0.1, 0, 1.0,
                                Criterion::kE),
                    ContractError);
  }
}

TEST_CASE("greedy identification") {
  SUBCASE("noiseless system is identified exactly") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 3; ++trial) {
      const LtiSystem sys(testing::random_stable(rng, 4, 0.95), gaussian(rng, 4, 2, 0.5), 0.0, 1.0);
      IdentifyConfig cfg;
      cfg.horizon = 30;
      cfg.seed = static_cast<std::uint64_t>(trial);
      const IdentificationRun run = greedy_identify(sys, cfg);
      CHECK(run.sq_error.back() <= 1e-10);
      CHECK(run.sq_error.size() == 31);
    }
  }

  SUBCASE("deterministic given the seed") {
    std::mt19937_64 rng(7);
    const LtiSystem sys(testing::random_stable(rng, 3), gaussian(rng, 3, 3), 0.1, 1.0);
    IdentifyConfig cfg;
    cfg.horizon = 25;
    cfg.seed = 11;
    const IdentificationRun one = greedy_identify(sys, cfg);
    const IdentificationRun two = greedy_identify(sys, cfg);
    CHECK(one.sq_error == two.sq_error);
    CHECK((one.theta - two.theta).norm() == 0.0);
  }
}

TEST_CASE("greedy step time does not grow with history") {
  std::mt19937_64 rng(8);
  const Matrix a = testing::random_stable(rng, 4);
  const IdentMode mode = IdentMode::full_theta();
  const auto state_after = [&](int count) {
    EstimatorState est((Matrix(4, 6) << a, gaussian(rng, 4, 2)).finished(), 1e-6);
    for (int s = 0; s < count; ++s) est = rls_update(est, gaussian_vector(rng, 6), gaussian_vector(rng, 4));
    return est;
  };
  const EstimatorState early = state_after(10);
  const EstimatorState late = state_after(200);
  const Vector x = gaussian_vector(rng, 4);

  const auto median_seconds = [&](const EstimatorState& est, Eigen::Index t) {
    std::vector<double> samples;
    for (int rep = 0; rep < 15; ++rep) {
      const auto start = std::chrono::steady_clock::now();
      for (int k = 0; k < 200; ++k) {
        const Vector u = greedy_step(mode, est, x, 0.1, t, 1.0, Criterion::kD);
        REQUIRE(u.size() == 2);
      }
      samples.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    }
    std::nth_element(samples.begin(), samples.begin() + 7, samples.end());
    return samples[7];
  };
  const double t10 = median_seconds(early, 10);
  const double t200 = median_seconds(late, 200);
  MESSAGE("step time t=10: " << t10 / 200 << " s, t=200: " << t200 / 200 << " s");
  CHECK(t200 <= 2.0 * t10);
}

}  // namespace
}  // namespace sysid
