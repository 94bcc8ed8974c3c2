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

#ifndef SYSID_ESTIMATION_HPP
#define SYSID_ESTIMATION_HPP

#include "sysid/lti_core.hpp"

namespace sysid {

inline constexpr double kDefaultRidge = 1e-6;

/**
 * Recursive least-squares state: the (ridge-floored) moment matrix
 * M = eps I + sum z z^T, its inverse maintained by rank-one updates, and the
 * running estimate theta (d x q).
 */
class EstimatorState {
 public:
  // Fresh state with M = ridge * I and theta = theta0 (zero when omitted).
  EstimatorState(Eigen::Index state_dim, Eigen::Index covariate_dim, double ridge = kDefaultRidge);
  EstimatorState(const Matrix& theta0, double ridge);

  const Matrix& moment() const { return moment_; }
  const Matrix& moment_inverse() const { return moment_inv_; }
  const Matrix& theta() const { return theta_; }
  long count() const { return count_; }
  double ridge() const { return ridge_; }

  // Rank-one updates between full refactorizations of M.
  static constexpr long kRefreshPeriod = 64;

 private:
  friend EstimatorState rls_update(EstimatorState est, const Vector& z, const Vector& y);

  Matrix moment_;
  Matrix moment_inv_;
  Matrix root_;        // upper triangular R with R^T R = M
  Matrix root_cross_;  // S with R^T S = M theta^T
  Matrix theta_;
  long count_ = 0;
  double ridge_;
};

// theta' with M' = M + z z^T and theta'^T = M'^{-1} (M theta^T + z y^T).
EstimatorState rls_update(EstimatorState est, const Vector& z, const Vector& y);

// ((Z^T Z + eps I)^{-1} Z^T Y)^T. With eps = 0 a rank-deficient Z throws
// SingularityError carrying the numerical rank.
Matrix ols_fit(const Trajectory& traj, const IdentMode& mode, double ridge);
Matrix ols_fit(const Matrix& z, const Matrix& y, double ridge);

// |theta_hat - theta_star|_F^2.
double squared_error(const Matrix& theta_hat, const Matrix& theta_star);

}  // namespace sysid

#endif  // SYSID_ESTIMATION_HPP
