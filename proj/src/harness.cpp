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

#include "sysid/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <istream>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "sysid/errors.hpp"
#include "sysid/noise.hpp"

namespace sysid {

namespace {

constexpr int kMaxSystemDraws = 10;

double spectral_radius(const Matrix& a) {
  const Eigen::EigenSolver<Matrix> eig(a, false);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

LtiSystem random_system(std::uint64_t seed, Eigen::Index d, Eigen::Index m, double eigen_scale,
                        bool b_identity, double sigma, double gamma) {
  if (d < 1 || m < 1) throw ContractError("random_system: d and m must be >= 1");
  if (b_identity && m != d) throw ContractError("random_system: B = I needs m = d");
  const KeyedNormal normal(seed, KeyedNormal::kSystemDraw);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (int attempt = 0; attempt < kMaxSystemDraws; ++attempt) {
    const auto key = static_cast<std::uint64_t>(attempt);
    Matrix a(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j)
        a(i, j) = scale * normal(key, static_cast<std::uint64_t>(i * d + j), 0);
    const double rho = spectral_radius(a);
    if (rho > eigen_scale) a *= eigen_scale / rho;
    Matrix b = Matrix::Identity(d, m);
    if (!b_identity) {
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
          b(i, j) = scale * normal(key, static_cast<std::uint64_t>(i * m + j), 1);
    }
    if (is_controllable(a, b)) return LtiSystem(std::move(a), std::move(b), sigma, gamma);
  }
  throw ContractError("random_system: no controllable draw after 10 attempts");
}

Matrix jetstar_lateral_a() {
  Matrix a(4, 4);
  // clang-format off
  a << .955, -.0113,  0,      -.0284,
       0,     1,      .0568,   0,
      -.25,   0,     -.963,    .00496,
       .168,  0,     -.00476, -.993;
  // clang-format on
  return a;
}

Matrix jetstar_lateral_b() {
  Matrix b(4, 2);
  // clang-format off
  b << 0,    .0116,
       0,    0,
       1.62, .789,
       0,   -.87;
  // clang-format on
  return 0.1 * b;
}

LtiSystem make_system(const ExperimentConfig& cfg, std::uint64_t seed) {
  const SystemSource& src = cfg.system;
  switch (src.kind) {
    case SystemSource::Kind::kRandom:
      return random_system(seed, src.d, src.m, src.eigen_scale, src.b_identity, cfg.sigma,
                           cfg.gamma);
    case SystemSource::Kind::kExplicit:
      return LtiSystem(src.a, src.b, cfg.sigma, cfg.gamma);
    case SystemSource::Kind::kJetstarLateral:
      return LtiSystem(jetstar_lateral_a(), jetstar_lateral_b(), cfg.sigma, cfg.gamma);
  }
  throw ContractError("make_system: unknown system source");
}

void parallel_for(int count, int workers, const std::function<void(int)>& job) {
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) job(i);
    });
  }
  for (auto& th : pool) th.join();
}

EnsembleResult run_ensemble(const ExperimentConfig& cfg, const EnsembleOptions& options) {
  validate_config(cfg);
  const int seeds = cfg.seeds;
  const int jobs = seeds * static_cast<int>(cfg.policies.size());
  std::vector<std::vector<RunRecord>> per_job(static_cast<std::size_t>(jobs));
  std::vector<std::string> errors(static_cast<std::size_t>(jobs));
  std::vector<int> fallbacks(static_cast<std::size_t>(jobs), 0);

  parallel_for(jobs, options.workers, [&](int job) {
    const Policy policy = cfg.policies[static_cast<std::size_t>(job / seeds)];
    const std::uint64_t seed = cfg.seed_base + static_cast<std::uint64_t>(job % seeds);
    const std::string name = to_string(policy);
    try {
      const LtiSystem sys = make_system(cfg, seed);
      const IdentificationRun run = identify(sys, policy, cfg.identify_config(sys, seed));
      fallbacks[static_cast<std::size_t>(job)] = run.fallback_segments;
      auto& rows = per_job[static_cast<std::size_t>(job)];
      rows.reserve(run.sq_error.size());
      double seconds = 0.0;
      for (std::size_t t = 0; t < run.sq_error.size(); ++t) {
        if (t > 0) seconds += run.step_seconds[t - 1];
        rows.push_back({seed, name, static_cast<long>(t), run.sq_error[t],
                        options.deterministic ? 0.0 : seconds, run.energy[t]});
      }
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(job)] =
          "seed=" + std::to_string(seed) + " policy=" + name + ": " + e.what();
    }
  });

  EnsembleResult result;
  result.trials = jobs;
  for (int job = 0; job < jobs; ++job) {
    result.fallback_segments += fallbacks[static_cast<std::size_t>(job)];
    auto& rows = per_job[static_cast<std::size_t>(job)];
    result.records.insert(result.records.end(), std::make_move_iterator(rows.begin()),
                          std::make_move_iterator(rows.end()));
    if (!errors[static_cast<std::size_t>(job)].empty())
      result.failures.push_back(std::move(errors[static_cast<std::size_t>(job)]));
  }
  std::stable_sort(result.records.begin(), result.records.end(),
                   [](const RunRecord& l, const RunRecord& r) {
                     if (l.policy != r.policy) return l.policy < r.policy;
                     if (l.seed != r.seed) return l.seed < r.seed;
                     return l.t < r.t;
                   });
  return result;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_csv(std::ostream& out, const EnsembleResult& result, const std::string& preamble) {
  if (!preamble.empty()) out << "# " << preamble << '\n';
  out << kCsvHeader << '\n';
  for (const RunRecord& r : result.records) {
    out << r.seed << ',' << r.policy << ',' << r.t << ',' << format_double(r.sq_error) << ','
        << format_double(r.plan_seconds) << ',' << format_double(r.energy) << '\n';
  }
  for (const std::string& f : result.failures) out << "# error " << f << '\n';
}

std::vector<RunRecord> read_csv(std::istream& in) {
  std::vector<RunRecord> out;
  std::string line;
  bool header = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line != kCsvHeader) throw ContractError("read_csv: unexpected header '" + line + "'");
      header = true;
      continue;
    }
    std::istringstream fields(line);
    std::string seed, policy, t, err, secs, energy;
    if (!std::getline(fields, seed, ',') || !std::getline(fields, policy, ',') ||
        !std::getline(fields, t, ',') || !std::getline(fields, err, ',') ||
        !std::getline(fields, secs, ',') || !std::getline(fields, energy))
      throw ContractError("read_csv: malformed row at line " + std::to_string(line_no));
    RunRecord r;
    try {
      r.seed = std::stoull(seed);
      r.policy = policy;
      r.t = std::stol(t);
      r.sq_error = std::stod(err);
      r.plan_seconds = std::stod(secs);
      r.energy = std::stod(energy);
    } catch (const std::exception&) {
      throw ContractError("read_csv: bad number at line " + std::to_string(line_no));
    }
    out.push_back(std::move(r));
  }
  if (!header) throw ContractError("read_csv: missing header");
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw ContractError("median of an empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<long>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<long>(mid));
  return 0.5 * (lower + upper);
}

std::vector<PerfFit> fit_performance_model(const std::vector<PerfSample>& samples,
                                           std::vector<std::string>* warnings) {
  std::map<std::pair<std::string, int>, std::vector<const PerfSample*>> groups;
  for (const PerfSample& s : samples) groups[{s.policy, s.n_grad}].push_back(&s);
  std::vector<PerfFit> fits;
  for (const auto& [key, group] : groups) {
    std::set<Eigen::Index> horizons;
    for (const PerfSample* s : group) horizons.insert(s->horizon);
    if (horizons.size() < 3) {
      if (warnings)
        warnings->push_back("group " + key.first + "/n_grad=" + std::to_string(key.second) +
                            " skipped: fewer than 3 distinct T");
      continue;
    }
    const double n = static_cast<double>(group.size());
    double mx = 0.0, my = 0.0, rate = 0.0, log_eta = 0.0;
    for (const PerfSample* s : group) {
      const double x = std::log(static_cast<double>(s->horizon));
      const double y = std::log(s->error);
      mx += x;
      my += y;
      rate += s->plan_rate;
      log_eta += y + x;
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (const PerfSample* s : group) {
      const double x = std::log(static_cast<double>(s->horizon)) - mx;
      sxy += x * (std::log(s->error) - my);
      sxx += x * x;
    }
    PerfFit fit;
    fit.policy = key.first;
    fit.n_grad = key.second;
    fit.plan_rate = rate / n;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.eta = std::exp(log_eta / n);
    fit.points = static_cast<int>(group.size());
    fits.push_back(fit);
  }
  return fits;
}

std::vector<PerfSample> run_performance_grid(const ExperimentConfig& cfg,
                                             const EnsembleOptions& options) {
  std::vector<PerfSample> samples;
  for (Policy policy : cfg.policies) {
    std::vector<int> sweep{0};
    if (policy == Policy::kGradient) sweep = cfg.n_grad_sweep;
    for (int n_grad : sweep) {
      for (Eigen::Index horizon : cfg.horizons) {
        ExperimentConfig cell = cfg;
        cell.policies = {policy};
        cell.horizon = horizon;
        if (n_grad > 0) cell.gradient.n_grad = n_grad;
        EnsembleOptions cell_options = options;
        cell_options.deterministic = false;
        const EnsembleResult result = run_ensemble(cell, cell_options);
        std::vector<double> finals;
        double seconds = 0.0;
        for (const RunRecord& r : result.records) {
          if (r.t != horizon) continue;
          finals.push_back(r.sq_error);
          seconds += r.plan_seconds;
        }
        if (finals.empty()) continue;
        PerfSample s;
        s.policy = to_string(policy);
        s.n_grad = n_grad;
        s.horizon = horizon;
        s.error = median(finals);
        s.plan_rate = seconds / (static_cast<double>(finals.size()) * static_cast<double>(horizon));
        samples.push_back(std::move(s));
      }
    }
  }
  return samples;
}

}  // namespace sysid
