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

#include "sysid/matcalc.hpp"

#include <cmath>
#include <string>

#include "sysid/errors.hpp"

namespace sysid::matcalc {

namespace {

void check_update(const Matrix& m_inv, const RankOneUpdate& upd) {
  const Eigen::Index n = m_inv.rows();
  if (m_inv.cols() != n || upd.x.size() != n || upd.y.size() != n)
    throw ContractError("rank-one update: dimension mismatch");
  if (!upd.x.allFinite() || !upd.y.allFinite()) throw ContractError("rank-one update: non-finite");
}

// 1 + y^T M^{-1} x, rejected when it is negligible at the scale of the update.
double checked_denominator(const Matrix& m_inv, const RankOneUpdate& upd) {
  const double denom = 1.0 + upd.y.dot(m_inv * upd.x);
  const double scale = 1.0 + upd.x.norm() * m_inv.operatorNorm() * upd.y.norm();
  if (std::abs(denom) < 1e-12 * scale)
    throw DegenerateUpdateError("rank-one update makes the matrix singular (denominator " +
                                    std::to_string(denom) + ")",
                                denom);
  return denom;
}

void check_full_column_rank(const Matrix& x) {
  if (x.rows() < x.cols()) throw SingularityError("pinv: fewer rows than columns", x.rows());
  // Cheap screen on the Gram matrix, exact singular values only when borderline.
  Eigen::SelfAdjointEigenSolver<Matrix> gram(x.transpose() * x, Eigen::EigenvaluesOnly);
  const Vector& lambda = gram.eigenvalues();
  if (lambda(0) >= 1e-12 * lambda(lambda.size() - 1) && lambda(0) > 0.0) return;
  Eigen::JacobiSVD<Matrix> svd(x);
  const Vector& s = svd.singularValues();
  if (s.size() > 0 && s(s.size() - 1) >= 1e-8 * s(0) && s(0) > 0.0) return;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(0) > 0.0 && s(i) >= 1e-8 * s(0)) ++rank;
  throw SingularityError("pinv: matrix is not of full column rank (rank " + std::to_string(rank) +
                             " < " + std::to_string(x.cols()) + ")",
                         rank);
}

Matrix pinv_unchecked(const Matrix& x) {
  // X = QR (thin), X^+ = R^{-1} Q^T.
  const Eigen::Index q = x.cols();
  const Eigen::HouseholderQR<Matrix> qr(x);
  const Matrix thin_q = qr.householderQ() * Matrix::Identity(x.rows(), q);
  const Matrix r = qr.matrixQR().topRows(q).triangularView<Eigen::Upper>();
  return r.triangularView<Eigen::Upper>().solve(thin_q.transpose());
}

}  // namespace

double det_rank_one(double det_m, const Matrix& m_inv, const RankOneUpdate& upd) {
  check_update(m_inv, upd);
  return det_m * (1.0 + upd.y.dot(m_inv * upd.x));
}

Matrix sm_inverse(const Matrix& m_inv, const RankOneUpdate& upd) {
  check_update(m_inv, upd);
  const double denom = checked_denominator(m_inv, upd);
  const Vector left = m_inv * upd.x;
  const Vector right = m_inv.transpose() * upd.y;
  return m_inv - (left * right.transpose()) / denom;
}

double trace_rank_one(double trace_m_inv, const Matrix& m_inv, const RankOneUpdate& upd) {
  check_update(m_inv, upd);
  const double denom = checked_denominator(m_inv, upd);
  const Vector left = m_inv * upd.x;
  const Vector right = m_inv.transpose() * upd.y;
  return trace_m_inv - right.dot(left) / denom;
}

double logdet_gain(const Matrix& m_inv, const Vector& x) {
  if (m_inv.rows() != x.size()) throw ContractError("logdet_gain: dimension mismatch");
  return std::log1p(x.dot(m_inv * x));
}

Matrix pinv(const Matrix& x) {
  check_full_column_rank(x);
  return pinv_unchecked(x);
}

Matrix pinv_differential(const Matrix& x, const Matrix& dx) {
  if (dx.rows() != x.rows() || dx.cols() != x.cols())
    throw ContractError("pinv_differential: dX must have the shape of X");
  check_full_column_rank(x);
  const Matrix xp = pinv_unchecked(x);
  const Matrix residual_proj = Matrix::Identity(x.rows(), x.rows()) - x * xp;
  return -xp * dx * xp + xp * xp.transpose() * dx.transpose() * residual_proj;
}

Matrix pinv_vjp(const Matrix& x, const Matrix& cotangent) {
  if (cotangent.rows() != x.cols() || cotangent.cols() != x.rows())
    throw ContractError("pinv_vjp: cotangent must have the shape of X^+");
  check_full_column_rank(x);
  return pinv_vjp(x, pinv_unchecked(x), cotangent);
}

Matrix pinv_vjp(const Matrix& x, const Matrix& x_pinv, const Matrix& cotangent) {
  // (I - X X^+) C^T X^+ X^{+T}, without forming the T x T projector.
  const Matrix ct_g = cotangent.transpose() * (x_pinv * x_pinv.transpose());
  return -x_pinv.transpose() * (cotangent * x_pinv.transpose()) + ct_g - x * (x_pinv * ct_g);
}

}  // namespace sysid::matcalc
