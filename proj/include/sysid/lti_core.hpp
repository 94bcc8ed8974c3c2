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

#ifndef SYSID_LTI_CORE_HPP
#define SYSID_LTI_CORE_HPP

#include <cstdint>
#include <optional>
#include <utility>

#include <Eigen/Dense>

namespace sysid {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/**
 * Controlled discrete-time LTI plant
 *
 *   x_{t+1} = A x_t + B u_t + w_t,   w_t ~ N(0, sigma^2 I),   x_0 = 0,
 *
 * together with the per-run power budget gamma, (1/T) sum |u_t|^2 <= gamma^2.
 * The pair (A, B) is checked for controllability at construction.
 */
class LtiSystem {
 public:
  LtiSystem(Matrix a, Matrix b, double sigma, double gamma);

  const Matrix& a() const { return a_; }
  const Matrix& b() const { return b_; }
  double sigma() const { return sigma_; }
  double gamma() const { return gamma_; }
  Eigen::Index state_dim() const { return a_.rows(); }
  Eigen::Index input_dim() const { return b_.cols(); }

  // (A B), the full parameter.
  Matrix theta() const;

 private:
  Matrix a_;
  Matrix b_;
  double sigma_;
  double gamma_;
};

// The block matrix (B, AB, ..., A^{d-1} B).
Matrix controllability_matrix(const Matrix& a, const Matrix& b);

// Rank test on the singular values with threshold 1e-10 * sigma_max.
bool is_controllable(const Matrix& a, const Matrix& b);

/**
 * Which parameter is regressed. FullTheta estimates (A B) from
 * y_t = x_{t+1}, z_t = (x_t; u_t). KnownB estimates A alone from
 * y_t = x_{t+1} - B u_t, z_t = x_t.
 */
class IdentMode {
 public:
  static IdentMode full_theta() { return IdentMode(); }
  static IdentMode known_b(Matrix b);

  bool is_known_b() const { return known_b_.has_value(); }
  const Matrix& b() const;

  // q = d + m (FullTheta) or d (KnownB).
  Eigen::Index covariate_dim(Eigen::Index d, Eigen::Index m) const;
  Vector covariate(const Vector& x, const Vector& u) const;
  Vector target(const Vector& x_next, const Vector& u) const;

  // (A, B) from an estimate theta (d x q); KnownB supplies its own B.
  std::pair<Matrix, Matrix> split(const Matrix& theta) const;
  // The true parameter as seen by this mode.
  Matrix true_theta(const LtiSystem& sys) const;

 private:
  IdentMode() = default;
  explicit IdentMode(Matrix b) : known_b_(std::move(b)) {}

  std::optional<Matrix> known_b_;
};

/**
 * Sampled trajectory. Rows are time: states is (T+1) x d holding x_0..x_T,
 * inputs is T x m holding u_0..u_{T-1}, noises (when recorded) is T x d.
 */
struct Trajectory {
  Matrix states;
  Matrix inputs;
  std::optional<Matrix> noises;

  Eigen::Index horizon() const { return inputs.rows(); }
  Vector state(Eigen::Index t) const { return states.row(t).transpose(); }
  Vector input(Eigen::Index t) const { return inputs.row(t).transpose(); }
};

Vector step(const LtiSystem& sys, const Vector& x, const Vector& u, const Vector& w);

// The process noise w_t drawn for (seed, t); the same key always yields the
// same vector.
Vector process_noise(std::uint64_t seed, Eigen::Index t, Eigen::Index d, double sigma);

// Open-loop rollout of `inputs` (T x m) from x_0 = 0 with recorded noise.
Trajectory simulate(const LtiSystem& sys, const Matrix& inputs, std::uint64_t seed);

// x_t = xbar_t + xtilde_t, the input-driven mean and the noise-driven
// fluctuation. Both returned as (T+1) x d.
std::pair<Matrix, Matrix> mean_fluct_decomposition(const LtiSystem& sys, const Trajectory& traj);

// G_t(A) = sum_{s<t} A^s (A^s)^T via G_{t+1} = I + A G_t A^T.
Matrix gramian(const Matrix& a, Eigen::Index t);

// Same quantity in O(log t) products, G_{j+k} = G_j + A^j G_k (A^j)^T.
Matrix gramian_doubling(const Matrix& a, Eigen::Index t);

// Regression design Z (T x q) and targets Y (T x d) of a trajectory.
Matrix covariates(const Trajectory& traj, const IdentMode& mode);
Matrix targets(const Trajectory& traj, const IdentMode& mode);

// M_t = sum_{s=0}^{t} z_s z_s^T.
Matrix moment_matrix(const Trajectory& traj, const IdentMode& mode, Eigen::Index t);

// Deterministic rollout of (A, B) from x_start: rows xbar_0..xbar_T.
Matrix mean_states(const Matrix& a, const Matrix& b, const Matrix& inputs,
                   const Vector& x_start);

/**
 * Gamma_T = (1/T) sum_{t<T} (zbar_t zbar_t^T + sigma^2 G_t(A)), with the
 * noise Gramian entering the state block of the covariate only.
 */
Matrix expected_gramian(const Matrix& theta, const Matrix& inputs, double sigma,
                        Eigen::Index horizon, const IdentMode& mode);

// Unnormalized sum_{t<T} (zbar_t zbar_t^T + sigma^2 G_t(A)) = T * Gamma_T.
Matrix expected_information(const Matrix& theta, const Matrix& inputs, double sigma,
                            Eigen::Index horizon, const IdentMode& mode);

// (T / sigma^2) blockdiag(Gamma_T, ..., Gamma_T), d blocks.
Matrix fisher_information(const Matrix& gamma_t, Eigen::Index horizon, double sigma,
                          Eigen::Index state_dim);

}  // namespace sysid

#endif  // SYSID_LTI_CORE_HPP
