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

#include "sysid/lti_core.hpp"

#include <cmath>
#include <string>

#include "sysid/errors.hpp"
#include "sysid/noise.hpp"

namespace sysid {

namespace {

void require_shape(const Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols,
                   const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ContractError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                        std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                        std::to_string(m.cols()));
  }
}

}  // namespace

LtiSystem::LtiSystem(Matrix a, Matrix b, double sigma, double gamma)
    : a_(std::move(a)), b_(std::move(b)), sigma_(sigma), gamma_(gamma) {
  if (a_.rows() < 1 || a_.rows() != a_.cols()) throw ContractError("A must be square, d >= 1");
  if (b_.rows() != a_.rows() || b_.cols() < 1) throw ContractError("B must be d x m, m >= 1");
  if (!a_.allFinite() || !b_.allFinite()) throw ContractError("A and B must be finite");
  if (!(sigma_ >= 0.0) || !std::isfinite(sigma_)) throw ContractError("sigma must be >= 0");
  if (!(gamma_ > 0.0) || !std::isfinite(gamma_)) throw ContractError("gamma must be > 0");
  if (!is_controllable(a_, b_)) throw ContractError("(A, B) is not controllable");
}

Matrix LtiSystem::theta() const {
  Matrix t(state_dim(), state_dim() + input_dim());
  t << a_, b_;
  return t;
}

Matrix controllability_matrix(const Matrix& a, const Matrix& b) {
  const Eigen::Index d = a.rows();
  const Eigen::Index m = b.cols();
  Matrix r(d, d * m);
  Matrix block = b;
  for (Eigen::Index k = 0; k < d; ++k) {
    r.middleCols(k * m, m) = block;
    block = a * block;
  }
  return r;
}

bool is_controllable(const Matrix& a, const Matrix& b) {
  const Matrix r = controllability_matrix(a, b);
  Eigen::JacobiSVD<Matrix> svd(r);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) <= 0.0) return false;
  const double threshold = 1e-10 * s(0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > threshold) ++rank;
  return rank == a.rows();
}

IdentMode IdentMode::known_b(Matrix b) {
  if (b.size() == 0) throw ContractError("known B must be non-empty");
  return IdentMode(std::move(b));
}

const Matrix& IdentMode::b() const {
  if (!known_b_) throw ContractError("IdentMode::b() on a FullTheta mode");
  return *known_b_;
}

Eigen::Index IdentMode::covariate_dim(Eigen::Index d, Eigen::Index m) const {
  return is_known_b() ? d : d + m;
}

Vector IdentMode::covariate(const Vector& x, const Vector& u) const {
  if (is_known_b()) return x;
  Vector z(x.size() + u.size());
  z << x, u;
  return z;
}

Vector IdentMode::target(const Vector& x_next, const Vector& u) const {
  if (is_known_b()) return x_next - (*known_b_) * u;
  return x_next;
}

std::pair<Matrix, Matrix> IdentMode::split(const Matrix& theta) const {
  const Eigen::Index d = theta.rows();
  if (is_known_b()) {
    require_shape(theta, known_b_->rows(), known_b_->rows(), "theta (KnownB)");
    return {theta, *known_b_};
  }
  if (theta.cols() <= d) throw ContractError("theta (FullTheta) must be d x (d+m)");
  return {theta.leftCols(d), theta.rightCols(theta.cols() - d)};
}

Matrix IdentMode::true_theta(const LtiSystem& sys) const {
  return is_known_b() ? sys.a() : sys.theta();
}

Vector step(const LtiSystem& sys, const Vector& x, const Vector& u, const Vector& w) {
  const Eigen::Index d = sys.state_dim();
  if (x.size() != d || w.size() != d || u.size() != sys.input_dim())
    throw ContractError("step: dimension mismatch");
  return sys.a() * x + sys.b() * u + w;
}

Vector process_noise(std::uint64_t seed, Eigen::Index t, Eigen::Index d, double sigma) {
  const KeyedNormal normal(seed, KeyedNormal::kProcessNoise);
  return sigma * normal.vector(d, static_cast<std::uint64_t>(t));
}

Trajectory simulate(const LtiSystem& sys, const Matrix& inputs, std::uint64_t seed) {
  if (inputs.cols() != sys.input_dim()) throw ContractError("simulate: inputs must be T x m");
  if (!inputs.allFinite()) throw ContractError("simulate: non-finite input");
  const Eigen::Index horizon = inputs.rows();
  const Eigen::Index d = sys.state_dim();
  Trajectory traj;
  traj.inputs = inputs;
  traj.states = Matrix::Zero(horizon + 1, d);
  Matrix noises(horizon, d);
  for (Eigen::Index t = 0; t < horizon; ++t) {
    const Vector w = process_noise(seed, t, d, sys.sigma());
    noises.row(t) = w.transpose();
    traj.states.row(t + 1) =
        (sys.a() * traj.states.row(t).transpose() + sys.b() * inputs.row(t).transpose() + w)
            .transpose();
  }
  traj.noises = std::move(noises);
  return traj;
}

std::pair<Matrix, Matrix> mean_fluct_decomposition(const LtiSystem& sys, const Trajectory& traj) {
  if (!traj.noises) throw ContractError("mean_fluct_decomposition: trajectory has no noise record");
  const Eigen::Index horizon = traj.horizon();
  const Eigen::Index d = sys.state_dim();
  Matrix mean = Matrix::Zero(horizon + 1, d);
  Matrix fluct = Matrix::Zero(horizon + 1, d);
  for (Eigen::Index t = 0; t < horizon; ++t) {
    mean.row(t + 1) =
        (sys.a() * mean.row(t).transpose() + sys.b() * traj.inputs.row(t).transpose()).transpose();
    fluct.row(t + 1) =
        (sys.a() * fluct.row(t).transpose() + traj.noises->row(t).transpose()).transpose();
  }
  return {mean, fluct};
}

Matrix gramian(const Matrix& a, Eigen::Index t) {
  if (t < 0) throw ContractError("gramian: t must be >= 0");
  const Eigen::Index d = a.rows();
  Matrix g = Matrix::Zero(d, d);
  for (Eigen::Index s = 0; s < t; ++s) g = Matrix::Identity(d, d) + a * g * a.transpose();
  return g;
}

Matrix gramian_doubling(const Matrix& a, Eigen::Index t) {
  if (t < 0) throw ContractError("gramian_doubling: t must be >= 0");
  const Eigen::Index d = a.rows();
  // (power, gram) = (A^k, G_k) for k = 2^j; result accumulates the set bits of t.
  Matrix power = a;
  Matrix gram = Matrix::Identity(d, d);
  Matrix result_power = Matrix::Identity(d, d);
  Matrix result = Matrix::Zero(d, d);
  Eigen::Index remaining = t;
  while (remaining > 0) {
    if (remaining & 1) {
      result += result_power * gram * result_power.transpose();
      result_power = result_power * power;
    }
    remaining >>= 1;
    if (remaining > 0) {
      gram += power * gram * power.transpose();
      power = power * power;
    }
  }
  return result;
}

Matrix covariates(const Trajectory& traj, const IdentMode& mode) {
  const Eigen::Index horizon = traj.horizon();
  const Eigen::Index d = traj.states.cols();
  const Eigen::Index q = mode.covariate_dim(d, traj.inputs.cols());
  Matrix z(horizon, q);
  z.leftCols(d) = traj.states.topRows(horizon);
  if (!mode.is_known_b()) z.rightCols(q - d) = traj.inputs;
  return z;
}

Matrix targets(const Trajectory& traj, const IdentMode& mode) {
  const Eigen::Index horizon = traj.horizon();
  Matrix y = traj.states.bottomRows(horizon);
  if (mode.is_known_b()) y -= traj.inputs * mode.b().transpose();
  return y;
}

Matrix moment_matrix(const Trajectory& traj, const IdentMode& mode, Eigen::Index t) {
  if (t < 0 || t >= traj.horizon()) throw ContractError("moment_matrix: need 0 <= t < T");
  const Matrix z = covariates(traj, mode).topRows(t + 1);
  return z.transpose() * z;
}

Matrix mean_states(const Matrix& a, const Matrix& b, const Matrix& inputs, const Vector& x_start) {
  const Eigen::Index horizon = inputs.rows();
  Matrix xbar(horizon + 1, a.rows());
  xbar.row(0) = x_start.transpose();
  for (Eigen::Index t = 0; t < horizon; ++t)
    xbar.row(t + 1) = (a * xbar.row(t).transpose() + b * inputs.row(t).transpose()).transpose();
  return xbar;
}

Matrix expected_information(const Matrix& theta, const Matrix& inputs, double sigma,
                            Eigen::Index horizon, const IdentMode& mode) {
  const auto [a, b] = mode.split(theta);
  const Eigen::Index d = a.rows();
  const Eigen::Index m = b.cols();
  if (inputs.rows() < horizon || inputs.cols() != m)
    throw ContractError("expected_information: inputs must be at least T x m");
  const Eigen::Index q = mode.covariate_dim(d, m);
  const Matrix xbar = mean_states(a, b, inputs.topRows(horizon), Vector::Zero(d));
  Matrix info = Matrix::Zero(q, q);
  Matrix g = Matrix::Zero(d, d);
  const double s2 = sigma * sigma;
  for (Eigen::Index t = 0; t < horizon; ++t) {
    const Vector z = mode.covariate(xbar.row(t).transpose(), inputs.row(t).transpose());
    info.noalias() += z * z.transpose();
    info.topLeftCorner(d, d) += s2 * g;
    g = Matrix::Identity(d, d) + a * g * a.transpose();
  }
  return info;
}

Matrix expected_gramian(const Matrix& theta, const Matrix& inputs, double sigma,
                        Eigen::Index horizon, const IdentMode& mode) {
  if (horizon < 1) throw ContractError("expected_gramian: T must be >= 1");
  return expected_information(theta, inputs, sigma, horizon, mode) / static_cast<double>(horizon);
}

Matrix fisher_information(const Matrix& gamma_t, Eigen::Index horizon, double sigma,
                          Eigen::Index state_dim) {
  if (!(sigma > 0.0)) throw ContractError("fisher_information: sigma must be > 0");
  const Eigen::Index q = gamma_t.rows();
  Matrix fisher = Matrix::Zero(q * state_dim, q * state_dim);
  const double scale = static_cast<double>(horizon) / (sigma * sigma);
  for (Eigen::Index j = 0; j < state_dim; ++j) fisher.block(j * q, j * q, q, q) = scale * gamma_t;
  return fisher;
}

}  // namespace sysid
