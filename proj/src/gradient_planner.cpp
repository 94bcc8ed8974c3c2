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

#include "sysid/gradient_planner.hpp"

#include <cmath>
#include <iostream>
#include <string>

#include "sysid/errors.hpp"
#include "sysid/matcalc.hpp"
#include "sysid/noise.hpp"

namespace sysid {

namespace {

constexpr double kStabilizingRidge = 1e-8;
constexpr int kMaxHalvings = 20;
constexpr double kArmijo = 1e-4;

void check_inputs(const PlanningContext& ctx, const Matrix& u) {
  if (u.cols() != ctx.input_dim()) throw ContractError("planner: U must be T' x m");
  if (ctx.x_start.size() != ctx.state_dim()) throw ContractError("planner: x_start has wrong size");
}

void write_covariate(const PlanningContext& ctx, const Vector& x, const Matrix& u, Eigen::Index s,
                     Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) {
  const Eigen::Index d = ctx.state_dim();
  row.head(d) = x.transpose();
  if (!ctx.mode.is_known_b()) row.tail(ctx.input_dim()) = u.row(s);
}

// Pulls the covariate cotangents g_s (rows offset..offset+T'-1 of `dz`) back
// through x_{s+1} = A x_s + B u_s (+ noise) onto the inputs.
Matrix backprop_rollout(const PlanningContext& ctx, const Matrix& dz, Eigen::Index offset,
                        Eigen::Index horizon) {
  const Eigen::Index d = ctx.state_dim();
  const Eigen::Index m = ctx.input_dim();
  // Row s of `lambdas` holds the state costate lambda_{s+1}.
  Matrix lambdas(horizon, d);
  Vector lambda = Vector::Zero(d);
  Vector next(d);
  for (Eigen::Index s = horizon - 1; s >= 0; --s) {
    lambdas.row(s) = lambda.transpose();
    next.noalias() = ctx.a.transpose() * lambda;
    next += dz.block(offset + s, 0, 1, d).transpose();
    lambda.swap(next);
  }
  Matrix du = lambdas * ctx.b;
  if (!ctx.mode.is_known_b()) du += dz.block(offset, d, horizon, m);
  return du;
}

}  // namespace

PlanningContext PlanningContext::fresh(const Matrix& theta, const IdentMode& mode, double sigma) {
  const auto [a, b] = mode.split(theta);
  PlanningContext ctx;
  ctx.a = a;
  ctx.b = b;
  ctx.mode = mode;
  ctx.sigma = sigma;
  ctx.x_start = Vector::Zero(a.rows());
  return ctx;
}

Matrix project_power(const Matrix& u, double gamma, Eigen::Index horizon) {
  if (!(gamma > 0.0)) throw ContractError("project_power: gamma must be > 0");
  const double target = gamma * std::sqrt(static_cast<double>(horizon));
  const double norm = u.norm();
  if (norm == 0.0) {
    std::clog << "[sysid] project_power: zero input sequence, using the canonical sequence\n";
    Matrix canonical = Matrix::Zero(u.rows(), u.cols());
    if (u.rows() > 0 && u.cols() > 0) {
      canonical.col(0).setConstant(1.0);
      canonical *= target / canonical.norm();
    }
    return canonical;
  }
  return u * (target / norm);
}

Matrix planned_information(const PlanningContext& ctx, const Matrix& u) {
  check_inputs(ctx, u);
  const Eigen::Index d = ctx.state_dim();
  const Eigen::Index q = ctx.covariate_dim();
  Matrix info = Matrix::Zero(q, q);
  if (ctx.prior_information.size() > 0) info = ctx.prior_information;
  const Matrix xbar = mean_states(ctx.a, ctx.b, u, ctx.x_start);
  Eigen::RowVectorXd z(q);
  Matrix g = Matrix::Zero(d, d);
  const double s2 = ctx.sigma * ctx.sigma;
  for (Eigen::Index s = 0; s < u.rows(); ++s) {
    write_covariate(ctx, xbar.row(s).transpose(), u, s, z);
    info.noalias() += z.transpose() * z;
    if (s2 > 0.0) {
      info.topLeftCorner(d, d) += s2 * g;
      g = Matrix::Identity(d, d) + ctx.a * g * ctx.a.transpose();
    }
  }
  return info;
}

ObjectiveValue evaluate_design(Criterion crit, const PlanningContext& ctx, const Matrix& u,
                               bool with_gradient) {
  const Matrix info = planned_information(ctx, u);
  ObjectiveValue out;
  out.value = -criterion_value(crit, info);
  if (!with_gradient) return out;
  // dF = -tr(dPhi/dM dM), dM = sum_s (dz_s z_s^T + z_s dz_s^T).
  const Matrix dphi = criterion_gradient(crit, info);
  const Eigen::Index q = ctx.covariate_dim();
  const Matrix xbar = mean_states(ctx.a, ctx.b, u, ctx.x_start);
  Matrix dz(u.rows(), q);
  Eigen::RowVectorXd z(q);
  for (Eigen::Index s = 0; s < u.rows(); ++s) {
    write_covariate(ctx, xbar.row(s).transpose(), u, s, z);
    dz.row(s) = -2.0 * z * dphi;
  }
  out.gradient = backprop_rollout(ctx, dz, 0, u.rows());
  return out;
}

std::vector<Matrix> draw_noise_batch(const PlanningContext& ctx, Eigen::Index horizon, int batch,
                                     std::uint64_t seed) {
  if (batch < 1) throw ContractError("oracle MSE: batch must be >= 1");
  const Eigen::Index rows = ctx.past_covariates.rows() + horizon;
  const Eigen::Index d = ctx.state_dim();
  const KeyedNormal normal(seed, KeyedNormal::kMonteCarlo);
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(batch));
  for (int i = 0; i < batch; ++i) {
    Matrix w(rows, d);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < d; ++c)
        w(r, c) = ctx.sigma * normal(static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(r),
                                     static_cast<std::uint64_t>(c));
    out.push_back(std::move(w));
  }
  return out;
}

ObjectiveValue evaluate_oracle_mse(const PlanningContext& ctx, const Matrix& u,
                                   const std::vector<Matrix>& noise_batch, bool with_gradient) {
  check_inputs(ctx, u);
  if (noise_batch.empty()) throw ContractError("oracle MSE: empty noise batch");
  const Eigen::Index h = ctx.past_covariates.rows();
  const Eigen::Index n = u.rows();
  const Eigen::Index q = ctx.covariate_dim();
  ObjectiveValue out;
  if (with_gradient) out.gradient = Matrix::Zero(n, ctx.input_dim());

  const Eigen::Index d = ctx.state_dim();
  Matrix z(h + n, q);
  if (h > 0) z.topRows(h) = ctx.past_covariates;
  if (!ctx.mode.is_known_b()) z.bottomRightCorner(n, ctx.input_dim()) = u;
  const Matrix drive = u * ctx.b.transpose();
  Vector x(d);
  Vector next(d);
  for (const Matrix& w : noise_batch) {
    if (w.rows() != h + n || w.cols() != d)
      throw ContractError("oracle MSE: noise sample has the wrong shape");
    x = ctx.x_start;
    for (Eigen::Index s = 0; s < n; ++s) {
      z.block(h + s, 0, 1, d) = x.transpose();
      next.noalias() = ctx.a * x;
      next += drive.row(s).transpose() + w.row(h + s).transpose();
      x.swap(next);
    }
    // Value from the normal equations; gradient through the pseudo-inverse.
    const Matrix gram = z.transpose() * z;
    const Eigen::LLT<Matrix> llt(gram);
    const Vector diag = llt.matrixLLT().diagonal();
    const bool well_posed = llt.info() == Eigen::Success && diag.minCoeff() > 0.0 &&
                            diag.minCoeff() * diag.minCoeff() >= 1e-12 * diag.maxCoeff() * diag.maxCoeff();
    Matrix dz;
    try {
      if (!well_posed) throw SingularityError("oracle MSE: ill-conditioned covariates", 0);
      const Matrix e = llt.solve(z.transpose() * w);  // (theta_hat - theta)^T
      out.value += e.squaredNorm();
      if (with_gradient) {
        const Matrix zp = matcalc::pinv(z);
        dz = matcalc::pinv_vjp(z, zp, 2.0 * (zp * w) * w.transpose());
      }
    } catch (const SingularityError&) {
      ++out.stabilized_samples;
      const Eigen::LLT<Matrix> ridge(gram + kStabilizingRidge * Matrix::Identity(q, q));
      const Matrix e = ridge.solve(z.transpose() * w);
      out.value += e.squaredNorm();
      if (with_gradient) {
        const Matrix f = ridge.solve(e);
        dz = 2.0 * ((w - z * e) * f.transpose() - z * f * e.transpose());
      }
    }
    if (with_gradient) out.gradient += backprop_rollout(ctx, dz, h, n);
  }
  const double b = static_cast<double>(noise_batch.size());
  if (out.stabilized_samples > 0.1 * b)
    throw SingularityError("oracle MSE: " + std::to_string(out.stabilized_samples) + " of " +
                           std::to_string(noise_batch.size()) +
                           " samples had rank-deficient covariates");
  out.value /= b;
  if (with_gradient) out.gradient /= b;
  return out;
}

Matrix grad_design_functional(const Matrix& theta, const Matrix& u, double sigma, Criterion crit,
                              const IdentMode& mode) {
  return evaluate_design(crit, PlanningContext::fresh(theta, mode, sigma), u, true).gradient;
}

Matrix grad_oracle_mse(const Matrix& theta_star, const Matrix& u, double sigma, int batch,
                       std::uint64_t seed, const IdentMode& mode) {
  const PlanningContext ctx = PlanningContext::fresh(theta_star, mode, sigma);
  return evaluate_oracle_mse(ctx, u, draw_noise_batch(ctx, u.rows(), batch, seed), true).gradient;
}

GradientPlan plan_gradient(const PlanObjective& objective, const PlanningContext& ctx,
                           Eigen::Index horizon, double gamma, const GradientPlanOptions& options) {
  if (options.n_grad < 1) throw ContractError("plan_gradient: n_grad must be >= 1");
  if (horizon < 1) throw ContractError("plan_gradient: empty horizon");
  const Eigen::Index m = ctx.input_dim();

  const auto* mse = std::get_if<OracleMseObjective>(&objective);
  std::vector<Matrix> batch;
  if (mse != nullptr) batch = draw_noise_batch(ctx, horizon, mse->batch, mse->seed);
  const auto evaluate = [&](const Matrix& u, bool with_gradient) {
    if (const auto* design = std::get_if<DesignObjective>(&objective))
      return evaluate_design(design->crit, ctx, u, with_gradient);
    return evaluate_oracle_mse(ctx, u, batch, with_gradient);
  };

  const KeyedNormal normal(options.seed, KeyedNormal::kPlanInit);
  Matrix init(horizon, m);
  for (Eigen::Index t = 0; t < horizon; ++t)
    for (Eigen::Index j = 0; j < m; ++j)
      init(t, j) = normal(static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(j));

  GradientPlan plan;
  plan.inputs = project_power(init, gamma, horizon);
  ObjectiveValue current = evaluate(plan.inputs, true);
  if (!std::isfinite(current.value))
    throw ContractError("plan_gradient: non-finite objective at iteration 0");
  plan.objective.push_back(current.value);

  const double grad_norm = current.gradient.norm();
  double eta = options.eta.value_or(
      grad_norm > 0.0 ? 0.1 * gamma * std::sqrt(static_cast<double>(horizon)) / grad_norm : 0.0);
  plan.eta = eta;
  const bool resample = mse != nullptr && mse->resample;

  for (int iter = 1; iter <= options.n_grad; ++iter) {
    if (resample) {
      batch = draw_noise_batch(ctx, horizon, mse->batch,
                               mix64(mse->seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(iter)));
      current = evaluate(plan.inputs, true);
    }
    const Matrix& g = current.gradient;
    double step = eta;
    bool accepted = false;
    Matrix candidate;
    double value = 0.0;
    for (int k = 0; k <= (options.backtracking ? kMaxHalvings : 0); ++k, step *= 0.5) {
      candidate = project_power(plan.inputs - step * g, gamma, horizon);
      value = evaluate(candidate, false).value;
      if (!options.backtracking) {
        accepted = true;
        break;
      }
      const double decrease = std::max(0.0, (g.array() * (plan.inputs - candidate).array()).sum());
      if (std::isfinite(value) && value <= current.value - kArmijo * decrease) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (resample) continue;  // another batch may still descend
      break;                   // no descent along the projected path: stationary
    }
    if (!std::isfinite(value))
      throw ContractError("plan_gradient: non-finite objective at iteration " +
                          std::to_string(iter));
    plan.inputs = std::move(candidate);
    if (resample) {
      plan.objective.push_back(value);
      continue;
    }
    current = evaluate(plan.inputs, true);
    plan.objective.push_back(current.value);
  }
  return plan;
}

}  // namespace sysid
