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

#ifndef SYSID_DESIGN_CRITERIA_HPP
#define SYSID_DESIGN_CRITERIA_HPP

#include <limits>
#include <string>
#include <string_view>

#include "sysid/lti_core.hpp"

namespace sysid {

enum class Criterion { kA, kD, kE };

// Value of Phi on a singular information matrix under A- and D-optimality.
inline constexpr double kNoInformation = -std::numeric_limits<double>::infinity();

// "A" | "D" | "E"
Criterion parse_criterion(std::string_view tag);
std::string to_string(Criterion crit);

/**
 * Alphabetical criterion Phi on a symmetric PSD matrix with eigenvalues l_i:
 * A -> -sum 1/l_i, D -> sum log l_i, E -> min l_i. Larger means more
 * informative. Singular input yields kNoInformation (A, D) or 0 (E).
 * Throws ContractError when M deviates from symmetry by more than 1e-10.
 */
double criterion_value(Criterion crit, const Matrix& m);

// dPhi/dM at a symmetric PD matrix (symmetric result). E uses the
// eigenvector of the smallest eigenvalue.
Matrix criterion_gradient(Criterion crit, const Matrix& m);

/**
 * Optimal-design cost F = -Phi[sum_{s<t} (zbar_s zbar_s^T + sigma^2 G_s(A))]
 * for the deterministic rollout of theta under `inputs` from x_0 = 0.
 * Lower is better.
 */
double od_functional(Criterion crit, const Matrix& theta, const Matrix& inputs, double sigma,
                     Eigen::Index t, const IdentMode& mode);

}  // namespace sysid

#endif  // SYSID_DESIGN_CRITERIA_HPP
