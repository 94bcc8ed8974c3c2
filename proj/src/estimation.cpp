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

#include <cmath>
#include <string>

#include "sysid/errors.hpp"
#include "sysid/matcalc.hpp"

namespace sysid {

EstimatorState::EstimatorState(Eigen::Index state_dim, Eigen::Index covariate_dim, double ridge)
    : EstimatorState(Matrix::Zero(state_dim, covariate_dim), ridge) {}

EstimatorState::EstimatorState(const Matrix& theta0, double ridge) : theta_(theta0), ridge_(ridge) {
  if (!(ridge > 0.0)) throw ContractError("EstimatorState: recursive estimation needs ridge > 0");
  const Eigen::Index q = theta0.cols();
  moment_ = ridge * Matrix::Identity(q, q);
  moment_inv_ = Matrix::Identity(q, q) / ridge;
  root_ = std::sqrt(ridge) * Matrix::Identity(q, q);
  root_cross_ = std::sqrt(ridge) * theta0.transpose();
}

EstimatorState rls_update(EstimatorState est, const Vector& z, const Vector& y) {
  const Eigen::Index q = est.moment_.rows();
  if (z.size() != q || y.size() != est.theta_.rows())
    throw ContractError("rls_update: dimension mismatch");
  est.moment_.noalias() += z * z.transpose();
  ++est.count_;

  // Square-root update: rotate the row (z^T, y^T) into (R, S).
  Eigen::RowVectorXd row_z = z.transpose();
  Eigen::RowVectorXd row_y = y.transpose();
  for (Eigen::Index i = 0; i < q; ++i) {
    if (row_z(i) == 0.0) continue;
    const double r = std::hypot(est.root_(i, i), row_z(i));
    const double c = est.root_(i, i) / r;
    const double s = row_z(i) / r;
    const Eigen::RowVectorXd root_row = est.root_.row(i);
    est.root_.row(i) = c * root_row + s * row_z;
    row_z = c * row_z - s * root_row;
    const Eigen::RowVectorXd cross_row = est.root_cross_.row(i);
    est.root_cross_.row(i) = c * cross_row + s * row_y;
    row_y = c * row_y - s * cross_row;
  }
  if (est.count_ % EstimatorState::kRefreshPeriod == 0) {
    est.moment_inv_ = est.moment_.llt().solve(Matrix::Identity(q, q));
  } else {
    est.moment_inv_ = matcalc::sm_inverse(est.moment_inv_, {z, z});
  }
  est.theta_ = est.root_.triangularView<Eigen::Upper>().solve(est.root_cross_).transpose();
  return est;
}

Matrix ols_fit(const Matrix& z, const Matrix& y, double ridge) {
  if (z.rows() != y.rows()) throw ContractError("ols_fit: Z and Y row counts differ");
  if (z.rows() < 1) throw ContractError("ols_fit: empty trajectory");
  if (ridge < 0.0) throw ContractError("ols_fit: ridge must be >= 0");
  if (ridge == 0.0) {
    const Eigen::Index q = z.cols();
    const Eigen::ColPivHouseholderQR<Matrix> qr(z);
    if (qr.rank() < q)
      throw SingularityError("ols_fit: covariates have rank " + std::to_string(qr.rank()) +
                                 " < " + std::to_string(q),
                             qr.rank());
    return qr.solve(y).transpose();
  }
  // Ridge solution from the SVD, theta^T = V diag(s / (s^2 + eps)) U^T Y.
  const Eigen::JacobiSVD<Matrix> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const Vector gain = s.array() / (s.array().square() + ridge);
  return (svd.matrixV() * gain.asDiagonal() * (svd.matrixU().transpose() * y)).transpose();
}

Matrix ols_fit(const Trajectory& traj, const IdentMode& mode, double ridge) {
  return ols_fit(covariates(traj, mode), targets(traj, mode), ridge);
}

double squared_error(const Matrix& theta_hat, const Matrix& theta_star) {
  if (theta_hat.rows() != theta_star.rows() || theta_hat.cols() != theta_star.cols())
    throw ContractError("squared_error: shape mismatch");
  return (theta_hat - theta_star).squaredNorm();
}

}  // namespace sysid
