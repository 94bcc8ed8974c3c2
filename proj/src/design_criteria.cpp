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

#include "sysid/design_criteria.hpp"

#include <cmath>

#include "sysid/errors.hpp"

namespace sysid {

namespace {

// Relative eigenvalue floor below which a PSD matrix is treated as singular.
constexpr double kSingularRatio = 1e-14;

Eigen::SelfAdjointEigenSolver<Matrix> symmetric_eigen(const Matrix& m, bool vectors) {
  if (m.rows() != m.cols() || m.rows() == 0) throw ContractError("criterion: matrix must be square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw ContractError("criterion: matrix is not symmetric");
  const Matrix sym = 0.5 * (m + m.transpose());
  return Eigen::SelfAdjointEigenSolver<Matrix>(
      sym, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
}

bool is_singular(const Vector& lambda) {
  const double top = std::max(lambda.cwiseAbs().maxCoeff(), 0.0);
  return lambda(0) <= kSingularRatio * top;
}

}  // namespace

Criterion parse_criterion(std::string_view tag) {
  if (tag == "A") return Criterion::kA;
  if (tag == "D") return Criterion::kD;
  if (tag == "E") return Criterion::kE;
  throw ContractError("unknown design criterion '" + std::string(tag) + "' (expected A, D or E)");
}

std::string to_string(Criterion crit) {
  switch (crit) {
    case Criterion::kA: return "A";
    case Criterion::kD: return "D";
    case Criterion::kE: return "E";
  }
  return "?";
}

double criterion_value(Criterion crit, const Matrix& m) {
  const auto eig = symmetric_eigen(m, false);
  const Vector& lambda = eig.eigenvalues();
  if (is_singular(lambda)) return crit == Criterion::kE ? 0.0 : kNoInformation;
  switch (crit) {
    case Criterion::kA: return -lambda.cwiseInverse().sum();
    case Criterion::kD: return lambda.array().log().sum();
    case Criterion::kE: return lambda(0);
  }
  return kNoInformation;
}

Matrix criterion_gradient(Criterion crit, const Matrix& m) {
  const auto eig = symmetric_eigen(m, true);
  const Vector& lambda = eig.eigenvalues();
  if (is_singular(lambda))
    throw SingularityError("criterion gradient: information matrix is singular; "
                           "add a warm-up segment or a ridge");
  const Matrix& v = eig.eigenvectors();
  switch (crit) {
    case Criterion::kA:  // d(-tr M^{-1}) = tr(M^{-2} dM)
      return v * lambda.array().square().inverse().matrix().asDiagonal() * v.transpose();
    case Criterion::kD:  // d logdet M = tr(M^{-1} dM)
      return v * lambda.cwiseInverse().asDiagonal() * v.transpose();
    case Criterion::kE:
      return v.col(0) * v.col(0).transpose();
  }
  return Matrix();
}

double od_functional(Criterion crit, const Matrix& theta, const Matrix& inputs, double sigma,
                     Eigen::Index t, const IdentMode& mode) {
  if (inputs.rows() < t) throw ContractError("od_functional: fewer inputs than t");
  const Matrix info = expected_information(theta, inputs, sigma, t, mode);
  return -criterion_value(crit, info);
}

}  // namespace sysid
