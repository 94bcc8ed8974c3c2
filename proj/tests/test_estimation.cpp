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

#include "sysid/estimation.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "sysid/errors.hpp"
#include "sysid/matcalc.hpp"
#include "test_util.hpp"

namespace sysid {
namespace {

using testing::gaussian;

struct Fixture {
  LtiSystem sys;
  Trajectory traj;
};

Fixture random_run(std::uint64_t seed, Eigen::Index horizon, double sigma = 0.1) {
  std::mt19937_64 rng(seed);
  LtiSystem sys(testing::random_stable(rng, 3), gaussian(rng, 3, 2), sigma, 1.0);
  Trajectory traj = simulate(sys, gaussian(rng, horizon, 2), seed);
  return {std::move(sys), std::move(traj)};
}

EstimatorState fold(const Matrix& z, const Matrix& y, const std::vector<Eigen::Index>& order,
                    double ridge) {
  EstimatorState est(y.cols(), z.cols(), ridge);
  for (const Eigen::Index t : order) est = rls_update(est, z.row(t).transpose(), y.row(t).transpose());
  return est;
}

TEST_CASE("ols_fit") {
  SUBCASE("noiseless interpolation with canonical inputs") {
    // T = q = 5 with a basis sweep gives Z of full rank.
    std::mt19937_64 rng(1);
    const double gamma = 2.0;
    const LtiSystem sys(testing::random_stable(rng, 3), gaussian(rng, 3, 2), 0.0, gamma);
    Matrix inputs = Matrix::Zero(5, 2);
    for (Eigen::Index t = 0; t < 5; ++t) inputs(t, t % 2) = gamma;
    const Trajectory traj = simulate(sys, inputs, 0);
    const IdentMode mode = IdentMode::full_theta();
    const Matrix z = covariates(traj, mode);
    REQUIRE(Eigen::FullPivLU<Matrix>(z).rank() == 5);
    CHECK((ols_fit(traj, mode, 0.0) - sys.theta()).norm() < 1e-8);
  }

  SUBCASE("residual equals (Z^+ W)^T") {
    const auto [sys, traj] = random_run(2, 40);
    const IdentMode mode = IdentMode::full_theta();
    const Matrix z = covariates(traj, mode);
    const Matrix oracle = (matcalc::pinv(z) * *traj.noises).transpose();
    CHECK(((ols_fit(traj, mode, 0.0) - sys.theta()) - oracle).norm() < 1e-10);
  }

  SUBCASE("known-B residual") {
    const auto [sys, traj] = random_run(3, 30);
    const IdentMode mode = IdentMode::known_b(sys.b());
    const Matrix z = covariates(traj, mode);
    const Matrix oracle = (matcalc::pinv(z) * *traj.noises).transpose();
    CHECK(((ols_fit(traj, mode, 0.0) - sys.a()) - oracle).norm() < 1e-10);
  }

  SUBCASE("underdetermined") {
    const auto [sys, traj] = random_run(4, 3);
    try {
      ols_fit(traj, IdentMode::full_theta(), 0.0);
      FAIL("expected SingularityError");
    } catch (const SingularityError& e) {
      CHECK(e.rank() <= 3);
    }
  }

  SUBCASE("ridge solves the regularized normal equations") {
    const auto [sys, traj] = random_run(5, 12);
    const IdentMode mode = IdentMode::full_theta();
    const Matrix z = covariates(traj, mode);
    const Matrix y = targets(traj, mode);
    const Matrix want =
        ((z.transpose() * z + 0.3 * Matrix::Identity(5, 5)).inverse() * z.transpose() * y).transpose();
    CHECK((ols_fit(traj, mode, 0.3) - want).norm() < 1e-10);
  }
}

TEST_CASE("rls_update") {
  SUBCASE("single step from the zero state") {
    EstimatorState est(2, 2, 1e-6);
    est = rls_update(est, Vector::Unit(2, 0), Vector::Unit(2, 0));
    CHECK(est.theta()(0, 0) == doctest::Approx(1.0 / (1.0 + 1e-6)).epsilon(1e-12));
    CHECK(est.theta()(1, 1) == 0.0);
    CHECK(est.count() == 1);
  }

  SUBCASE("zero covariate leaves the estimate unchanged") {
    const auto [sys, traj] = random_run(6, 10);
    const IdentMode mode = IdentMode::full_theta();
    const Matrix z = covariates(traj, mode);
    const Matrix y = targets(traj, mode);
    std::vector<Eigen::Index> order(10);
    std::iota(order.begin(), order.end(), 0);
    const EstimatorState est = fold(z, y, order, 1e-6);
    const EstimatorState same = rls_update(est, Vector::Zero(5), Vector::Ones(3));
    CHECK((same.theta() - est.theta()).norm() < 1e-14);
  }

  SUBCASE("recursive equals batch, and order does not matter") {
    for (const double ridge : {1e-10, 1e-6, 1e-2}) {
      const auto [sys, traj] = random_run(7, 300, 0.5);
      const IdentMode mode = IdentMode::full_theta();
      const Matrix z = covariates(traj, mode);
      const Matrix y = targets(traj, mode);
      std::vector<Eigen::Index> order(300);
      std::iota(order.begin(), order.end(), 0);
      const EstimatorState forward = fold(z, y, order, ridge);
      const Matrix batch = ols_fit(z, y, ridge);
      CHECK(testing::rel_frobenius(forward.theta(), batch) < 1e-8);

      Matrix m = ridge * Matrix::Identity(5, 5) + z.transpose() * z;
      CHECK(testing::rel_frobenius(forward.moment(), m) < 1e-12);
      CHECK(testing::rel_frobenius(forward.moment_inverse(), m.inverse()) < 1e-6);

      std::mt19937_64 rng(8);
      std::shuffle(order.begin(), order.end(), rng);
      CHECK(testing::rel_frobenius(fold(z, y, order, ridge).theta(), forward.theta()) < 1e-8);
    }
  }

  SUBCASE("noiseless data identifies exactly once count reaches q") {
    const auto [sys, traj] = random_run(9, 20, 0.0);
    const IdentMode mode = IdentMode::full_theta();
    const Matrix z = covariates(traj, mode);
    const Matrix y = targets(traj, mode);
    EstimatorState est(3, 5, 1e-14);
    for (Eigen::Index t = 0; t < 20; ++t) {
      est = rls_update(est, z.row(t).transpose(), y.row(t).transpose());
      if (est.count() < 5) continue;
      CHECK(squared_error(ols_fit(z.topRows(t + 1), y.topRows(t + 1), 0.0), sys.theta()) <= 1e-12);
      CHECK(squared_error(est.theta(), sys.theta()) <= 1e-12);
    }
  }

  SUBCASE("ridge must be positive") {
    CHECK_THROWS_AS(EstimatorState(2, 2, 0.0), ContractError);
  }
}

TEST_CASE("squared_error") {
  std::mt19937_64 rng(10);
  const Matrix a = gaussian(rng, 3, 5);
  CHECK(squared_error(a, a) == 0.0);
  Matrix diff = Matrix::Zero(3, 5);
  diff.topLeftCorner(2, 2).setIdentity();
  CHECK(squared_error(a + diff, a) == doctest::Approx(2.0));
  const Matrix b = gaussian(rng, 3, 5);
  const double trace_form = ((a - b).transpose() * (a - b)).trace();
  CHECK(std::abs(squared_error(a, b) - trace_form) <= 1e-12 * trace_form);
  CHECK_THROWS_AS(squared_error(a, Matrix::Zero(3, 4)), ContractError);
}

}  // namespace
}  // namespace sysid
