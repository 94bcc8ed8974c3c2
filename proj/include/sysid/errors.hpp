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

#ifndef SYSID_ERRORS_HPP
#define SYSID_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sysid {

// Violated precondition: wrong shapes, non-finite values, invalid arguments.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A matrix that has to be inverted is (numerically) singular.
class SingularityError : public std::runtime_error {
 public:
  SingularityError(const std::string& what, long rank = -1)
      : std::runtime_error(what), rank_(rank) {}
  long rank() const { return rank_; }

 private:
  long rank_;
};

// An iterative solver ran out of iterations.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// Sherman-Morrison style update whose scalar denominator vanishes.
class DegenerateUpdateError : public std::runtime_error {
 public:
  DegenerateUpdateError(const std::string& what, double denominator)
      : std::runtime_error(what), denominator_(denominator) {}
  double denominator() const { return denominator_; }

 private:
  double denominator_;
};

}  // namespace sysid

#endif  // SYSID_ERRORS_HPP
