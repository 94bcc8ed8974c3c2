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

#ifndef SYSID_CONFIG_HPP
#define SYSID_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sysid/errors.hpp"
#include "sysid/identification.hpp"

namespace sysid {

// Parse or validation failure in an experiment config; maps to exit code 2.
class ConfigError : public ContractError {
 public:
  ConfigError(const std::string& source, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

struct SystemSource {
  enum class Kind { kRandom, kExplicit, kJetstarLateral };
  Kind kind = Kind::kRandom;
  // random ensemble
  Eigen::Index d = 4;
  Eigen::Index m = 4;
  bool b_identity = true;
  double eigen_scale = 0.9;
  // explicit matrices
  Matrix a;
  Matrix b;
};

/**
 * Declarative description of one experiment. Text format: `key = value`
 * lines, `#` comments, and `[greedy]`, `[gradient]`, `[oracle]`, `[random]`
 * sections for policy parameters. See README.md for the full key list.
 */
struct ExperimentConfig {
  SystemSource system;
  bool known_b = true;
  std::vector<Policy> policies{Policy::kGreedy};
  Criterion crit = Criterion::kA;
  Eigen::Index horizon = 0;
  std::vector<Eigen::Index> horizons;  // fit-perf sweep; defaults to {horizon}
  double gamma = 1.0;
  double sigma = 0.0;
  int seeds = 1;
  std::uint64_t seed_base = 0;
  double ridge = kDefaultRidge;
  double qp_tol = kDefaultQpTol;
  GradientSettings gradient;
  std::vector<int> n_grad_sweep;  // fit-perf sweep for the gradient policy
  OracleSettings oracle;
  std::string output;
  int workers = 1;

  IdentifyConfig identify_config(const LtiSystem& sys, std::uint64_t seed) const;
};

ExperimentConfig parse_config(std::string_view text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

// Re-checks cross-field constraints after command-line overrides.
void validate_config(const ExperimentConfig& cfg, const std::string& source = "<config>");

// "0.9 0.1; 0 0.8" -> 2x2 matrix.
Matrix parse_matrix(std::string_view text);

}  // namespace sysid

#endif  // SYSID_CONFIG_HPP
