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

#ifndef SYSID_MATCALC_HPP
#define SYSID_MATCALC_HPP

#include <Eigen/Dense>

namespace sysid::matcalc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// The update M -> M + x y^T.
struct RankOneUpdate {
  Vector x;
  Vector y;
};

// det(M + x y^T) = det(M) (1 + y^T M^{-1} x).
double det_rank_one(double det_m, const Matrix& m_inv, const RankOneUpdate& upd);

// (M + x y^T)^{-1} from M^{-1} by Sherman-Morrison. Throws
// DegenerateUpdateError when |1 + y^T M^{-1} x| < 1e-12 (1 + |x| |M^{-1}| |y|).
Matrix sm_inverse(const Matrix& m_inv, const RankOneUpdate& upd);

// tr[(M + x y^T)^{-1}] = tr[M^{-1}] - y^T M^{-2} x / (1 + y^T M^{-1} x).
double trace_rank_one(double trace_m_inv, const Matrix& m_inv, const RankOneUpdate& upd);

// log det(M + x x^T) - log det(M) for symmetric PD M, from M^{-1}.
double logdet_gain(const Matrix& m_inv, const Vector& x);

// Moore-Penrose inverse of a full-column-rank matrix. Throws SingularityError
// when sigma_min < 1e-8 sigma_max.
Matrix pinv(const Matrix& x);

/**
 * Directional derivative of the pseudo-inverse,
 *
 *   dX^+ = -X^+ dX X^+ + X^+ X^{+T} dX^T (I - X X^+),
 *
 * valid on full column rank X (same conditioning requirement as pinv).
 */
Matrix pinv_differential(const Matrix& x, const Matrix& dx);

// Adjoint of pinv_differential: for a cotangent C of X^+ (q x T), returns
// the cotangent of X (T x q), i.e. <C, D(dX)> = <pinv_vjp(X, C), dX>.
Matrix pinv_vjp(const Matrix& x, const Matrix& cotangent);

// Same, reusing a pseudo-inverse the caller already holds (no rank check).
Matrix pinv_vjp(const Matrix& x, const Matrix& x_pinv, const Matrix& cotangent);

}  // namespace sysid::matcalc

#endif  // SYSID_MATCALC_HPP
