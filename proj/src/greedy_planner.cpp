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

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "sysid/errors.hpp"

namespace sysid {

namespace {

constexpr int kMaxSecularIterations = 200;

// Unit vector of the eigenspace spanned by `basis` closest to the first
// canonical axis with a nonzero projection, leading coordinate positive.
Vector canonical_direction(const Matrix& basis) {
  const Eigen::Index m = basis.rows();
  for (Eigen::Index j = 0; j < m; ++j) {
    Vector v = basis * basis.row(j).transpose();
    const double n = v.norm();
    if (n < 1e-8) continue;
    v /= n;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (std::abs(v(i)) > 1e-12) {
        if (v(i) < 0.0) v = -v;
        break;
      }
    }
    return v;
  }
  return basis.col(0);
}

}  // namespace

OneStepProblem build_one_step(const IdentMode& mode, const EstimatorState& est, const Vector& x_t,
                              double sigma, Eigen::Index t, double gamma, Criterion crit) {
  const Eigen::Index d = x_t.size();
  const Eigen::Index q = est.moment().rows();
  if (est.theta().rows() != d) throw ContractError("build_one_step: state dimension mismatch");
  OneStepProblem p;
  p.gamma = gamma;
  p.crit = crit;
  p.information = est.moment();
  const double s2 = sigma * sigma;
  if (mode.is_known_b()) {
    const Matrix& a_t = est.theta();
    const Matrix& b = mode.b();
    p.information.noalias() += x_t * x_t.transpose();
    if (s2 > 0.0) p.information += s2 * gramian_doubling(a_t, t + 1);
    p.offset = a_t * x_t;
    p.input_map = b;
  } else {
    const Eigen::Index m = q - d;
    const Matrix a_t = est.theta().leftCols(d);
    if (s2 > 0.0) p.information.topLeftCorner(d, d) += s2 * gramian_doubling(a_t, t);
    p.offset = Vector::Zero(q);
    p.offset.head(d) = x_t;
    p.input_map = Matrix::Zero(q, m);
    p.input_map.bottomRows(m).setIdentity();
  }
  return p;
}

SphereQp reduce_to_qp(const OneStepProblem& problem) {
  const Matrix& info = problem.information;
  const Vector diag = info.diagonal();
  if (!info.allFinite() || !(diag.minCoeff() > 0.0))
    throw SingularityError("reduce_to_qp: information matrix is not positive definite");
  // Equilibrate, then factor; the Gramian term can dwarf the ridge by many
  // orders of magnitude when the current estimate is unstable.
  const Vector scale = diag.cwiseSqrt().cwiseInverse();
  const Matrix balanced = scale.asDiagonal() * info * scale.asDiagonal();
  const Matrix scaled_map = scale.asDiagonal() * problem.input_map;
  Matrix solved_map;  // Mbar^{-1} L
  const Eigen::LLT<Matrix> llt(balanced);
  if (llt.info() == Eigen::Success) {
    solved_map = scale.asDiagonal() * llt.solve(scaled_map);
  } else {
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (balanced + balanced.transpose()));
    const Vector lambda = eig.eigenvalues().cwiseMax(1e-15 * eig.eigenvalues().cwiseAbs().maxCoeff());
    solved_map = scale.asDiagonal() * eig.eigenvectors() * lambda.cwiseInverse().asDiagonal() *
                 eig.eigenvectors().transpose() * scaled_map;
  }
  SphereQp qp;
  qp.q = -(problem.input_map.transpose() * solved_map);
  qp.q = 0.5 * (qp.q + qp.q.transpose()).eval();
  qp.b = solved_map.transpose() * problem.offset;
  qp.gamma = problem.gamma;
  return qp;
}

SphereQpSolution solve_sphere_qp(const SphereQp& qp, double tol) {
  const Eigen::Index m = qp.q.rows();
  if (qp.q.cols() != m || qp.b.size() != m || m == 0)
    throw ContractError("solve_sphere_qp: Q must be m x m and b an m-vector");
  if (!(qp.gamma > 0.0)) throw ContractError("solve_sphere_qp: gamma must be > 0");
  const double qscale = std::max(1.0, qp.q.cwiseAbs().maxCoeff());
  if ((qp.q - qp.q.transpose()).cwiseAbs().maxCoeff() > 1e-10 * qscale)
    throw ContractError("solve_sphere_qp: Q is not symmetric");

  const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (qp.q + qp.q.transpose()));
  const Vector& alpha = eig.eigenvalues();
  const Matrix& v = eig.eigenvectors();
  const Vector beta = v.transpose() * qp.b;
  const double gamma = qp.gamma;
  const double alpha_min = alpha(0);
  const double spread = 1.0 + alpha.cwiseAbs().maxCoeff();

  std::vector<Eigen::Index> min_space;
  for (Eigen::Index i = 0; i < m; ++i)
    if (alpha(i) - alpha_min <= 1e-10 * spread) min_space.push_back(i);
  const auto in_min_space = [&](Eigen::Index i) { return alpha(i) - alpha_min <= 1e-10 * spread; };

  double beta_min_sq = 0.0;
  for (Eigen::Index i : min_space) beta_min_sq += beta(i) * beta(i);
  const double b_norm = qp.b.norm();

  // Hard case: mu = -alpha_min, partial solution off the minimal eigenspace
  // completed along it up to the sphere.
  const auto hard_case = [&]() {
    Vector coords = Vector::Zero(m);
    for (Eigen::Index i = 0; i < m; ++i)
      if (!in_min_space(i)) coords(i) = beta(i) / (alpha(i) - alpha_min);
    const double partial = coords.norm();
    SphereQpSolution sol;
    sol.hard_case = true;
    sol.multiplier = -alpha_min;
    Matrix basis(m, static_cast<Eigen::Index>(min_space.size()));
    for (std::size_t k = 0; k < min_space.size(); ++k)
      basis.col(static_cast<Eigen::Index>(k)) = v.col(min_space[k]);
    Vector direction = canonical_direction(basis);
    if (beta_min_sq > 0.0) {
      // Follow the residual linear term when it is not exactly orthogonal.
      Vector toward = Vector::Zero(m);
      for (Eigen::Index i : min_space) toward += beta(i) * v.col(i);
      direction = toward.normalized();
    }
    const double tau = std::sqrt(std::max(0.0, gamma * gamma - partial * partial));
    sol.u = v * coords + tau * direction;
    return sol;
  };

  if (b_norm == 0.0) return hard_case();

  const auto secular = [&](double mu, double* derivative) {
    double n2 = 0.0;
    double dn2 = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double r = 1.0 / (alpha(i) + mu);
      const double c = beta(i) * beta(i) * r * r;
      n2 += c;
      dn2 -= 2.0 * c * r;
    }
    if (derivative) *derivative = dn2;
    return n2;
  };

  double lo = -alpha_min + 1e-14 * (1.0 + std::abs(alpha_min));
  double hi = -alpha_min + b_norm / gamma;
  const double gamma2 = gamma * gamma;
  if (secular(lo, nullptr) <= gamma2) return hard_case();

  SphereQpSolution sol;
  double mu = hi;
  double residual = std::numeric_limits<double>::infinity();
  int iter = 0;
  for (; iter < kMaxSecularIterations; ++iter) {
    double dn2 = 0.0;
    const double n2 = secular(mu, &dn2);
    residual = n2 - gamma2;
    if (std::abs(residual) <= tol * gamma2) break;
    if (residual > 0.0) {
      lo = mu;
    } else {
      hi = mu;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(mu)))
      break;
    // Newton on 1/|u(mu)| - 1/gamma, which is close to linear in mu.
    const double n = std::sqrt(n2);
    const double psi = 1.0 / n - 1.0 / gamma;
    const double dpsi = -0.5 * dn2 / (n2 * n);
    double next = mu - psi / dpsi;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    mu = next;
  }
  if (iter == kMaxSecularIterations)
    throw ConvergenceError("solve_sphere_qp: secular equation did not converge (residual " +
                               std::to_string(residual) + ")",
                           residual);
  Vector coords(m);
  for (Eigen::Index i = 0; i < m; ++i) coords(i) = beta(i) / (alpha(i) + mu);
  sol.u = v * coords;
  // Land exactly on the sphere; the correction is at round-off level.
  sol.u *= gamma / sol.u.norm();
  sol.multiplier = mu;
  sol.iterations = iter;
  return sol;
}

SphereQpSolution solve_ball_qp(const SphereQp& qp, double tol) {
  SphereQpSolution boundary = solve_sphere_qp(qp, tol);
  const Eigen::LLT<Matrix> llt(qp.q);
  if (llt.info() != Eigen::Success) return boundary;
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(qp.q, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues()(0) <= 0.0) return boundary;
  const Vector inner = llt.solve(qp.b);
  if (inner.norm() >= qp.gamma) return boundary;
  if (qp.objective(inner) < qp.objective(boundary.u)) {
    SphereQpSolution sol;
    sol.u = inner;
    sol.interior = true;
    return sol;
  }
  return boundary;
}

Vector greedy_step(const IdentMode& mode, const EstimatorState& est, const Vector& x_t,
                   double sigma, Eigen::Index t, double gamma, Criterion crit, double tol) {
  if (crit == Criterion::kE)
    throw ContractError("greedy policy supports A- and D-optimality only");
  const OneStepProblem problem = build_one_step(mode, est, x_t, sigma, t, gamma, crit);
  return solve_ball_qp(reduce_to_qp(problem), tol).u;
}

}  // namespace sysid
