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

#ifndef SYSID_NOISE_HPP
#define SYSID_NOISE_HPP

#include <cstdint>

#include <Eigen/Dense>

namespace sysid {

// Counter-based standard normal generator. Every draw is a pure function of
// its key, so replays do not depend on the order in which draws are made.
class KeyedNormal {
 public:
  // Independent sub-streams of one experiment seed.
  enum Stream : std::uint64_t {
    kProcessNoise = 1,
    kRandomPolicy = 2,
    kPlanInit = 3,
    kMonteCarlo = 4,
    kSystemDraw = 5,
  };

  constexpr KeyedNormal(std::uint64_t seed, std::uint64_t stream)
      : seed_(seed), stream_(stream) {}

  double operator()(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) const;

  // Vector of `n` draws keyed by (a, b, i) for i < n.
  Eigen::VectorXd vector(Eigen::Index n, std::uint64_t a, std::uint64_t b = 0) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace sysid

#endif  // SYSID_NOISE_HPP
