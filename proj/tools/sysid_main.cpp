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

// sysid command-line harness.
//
//   sysid simulate|identify|ensemble|fit-perf --config <path> [--out <csv>]
//         [--workers N] [--no-timestamp]

#include <unistd.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "sysid/config.hpp"
#include "sysid/harness.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitTrialFailures = 3;
constexpr double kMaxFailureRatio = 0.05;

std::string host_preamble(const std::string& command) {
  char host[256] = {0};
  if (gethostname(host, sizeof(host) - 1) != 0) host[0] = '\0';
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  std::ostringstream out;
  out << "sysid " << command << " generated=" << stamp << " host=" << host
      << " hw_threads=" << std::thread::hardware_concurrency();
  return out.str();
}

// Writes to --out when given, stdout otherwise.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw std::runtime_error("cannot open output file " + path);
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

void write_trajectory(std::ostream& out, const sysid::Trajectory& traj) {
  const auto d = traj.states.cols();
  const auto m = traj.inputs.cols();
  out << 't';
  for (Eigen::Index i = 0; i < d; ++i) out << ",x" << i;
  for (Eigen::Index i = 0; i < m; ++i) out << ",u" << i;
  for (Eigen::Index i = 0; i < d; ++i) out << ",w" << i;
  out << '\n';
  for (Eigen::Index t = 0; t <= traj.horizon(); ++t) {
    out << t;
    for (Eigen::Index i = 0; i < d; ++i) out << ',' << sysid::format_double(traj.states(t, i));
    const bool has_step = t < traj.horizon();
    for (Eigen::Index i = 0; i < m; ++i)
      out << ',' << (has_step ? sysid::format_double(traj.inputs(t, i)) : "");
    for (Eigen::Index i = 0; i < d; ++i)
      out << ',' << (has_step && traj.noises ? sysid::format_double((*traj.noises)(t, i)) : "");
    out << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active identification of linear dynamical systems"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string out_path;
  int workers = 0;
  bool no_timestamp = false;
  double qp_tol = 0.0;
  double eta = -1.0;
  int n_grad = 0;
  int batch = 0;
  std::string schedule;

  std::vector<CLI::App*> commands;
  for (const char* name : {"simulate", "identify", "ensemble", "fit-perf"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config file")->required();
    sub->add_option("--out", out_path, "output CSV (stdout when omitted)");
    sub->add_option("--workers", workers, "worker threads (default: config value)");
    sub->add_flag("--no-timestamp", no_timestamp,
                  "deterministic output: no timestamp/host line, timing column zeroed");
    sub->add_option("--qp-tol", qp_tol, "greedy sphere-QP tolerance");
    sub->add_option("--eta", eta, "gradient step size (default: automatic)");
    sub->add_option("--n-grad", n_grad, "gradient iterations");
    sub->add_option("--batch", batch, "Monte-Carlo batch size");
    sub->add_option("--schedule", schedule, "gradient schedule, e.g. 0,10,T/2,T");
    commands.push_back(sub);
  }
  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  sysid::ExperimentConfig cfg;
  try {
    cfg = sysid::load_config(config_path);
    if (!out_path.empty()) cfg.output = out_path;
    if (workers > 0) cfg.workers = workers;
    if (qp_tol > 0.0) cfg.qp_tol = qp_tol;
    if (eta >= 0.0) cfg.gradient.eta = cfg.oracle.eta = eta;
    if (n_grad > 0) {
      cfg.gradient.n_grad = n_grad;
      cfg.n_grad_sweep = {n_grad};
    }
    if (batch > 0) cfg.gradient.batch = cfg.oracle.batch = batch;
    if (!schedule.empty()) cfg.gradient.schedule = schedule;
    sysid::validate_config(cfg, config_path);
  } catch (const sysid::ContractError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    Output output(cfg.output);
    std::ostream& out = output.stream();
    const sysid::EnsembleOptions options{cfg.workers, no_timestamp};
    const std::string preamble = no_timestamp ? std::string() : host_preamble(command);

    if (command == "simulate") {
      const sysid::LtiSystem sys = sysid::make_system(cfg, cfg.seed_base);
      const auto run = sysid::identify(sys, cfg.policies.front(),
                                       cfg.identify_config(sys, cfg.seed_base));
      if (!preamble.empty()) out << "# " << preamble << '\n';
      write_trajectory(out, run.trajectory);
      return 0;
    }

    if (command == "identify" || command == "ensemble") {
      if (command == "identify") cfg.seeds = 1;
      const sysid::EnsembleResult result = sysid::run_ensemble(cfg, options);
      sysid::write_csv(out, result, preamble);
      for (const auto& f : result.failures) std::cerr << "trial failed: " << f << '\n';
      if (result.fallback_segments > 0)
        std::cerr << "note: " << result.fallback_segments
                  << " gradient segment(s) fell back to random inputs\n";
      if (static_cast<double>(result.failures.size()) >
          kMaxFailureRatio * static_cast<double>(result.trials))
        return kExitTrialFailures;
      return 0;
    }

    // fit-perf
    const auto samples = sysid::run_performance_grid(cfg, options);
    if (!preamble.empty()) out << "# " << preamble << '\n';
    out << "policy,n_grad,T,median_sq_error,plan_rate\n";
    for (const auto& s : samples)
      out << s.policy << ',' << s.n_grad << ',' << s.horizon << ','
          << sysid::format_double(s.error) << ','
          << sysid::format_double(no_timestamp ? 0.0 : s.plan_rate) << '\n';
    std::vector<std::string> warnings;
    const auto fits = sysid::fit_performance_model(samples, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    std::cout << (cfg.output.empty() ? "\n" : "") << "policy,n_grad,plan_rate,eta,slope,points\n";
    for (const auto& f : fits)
      std::cout << f.policy << ',' << f.n_grad << ',' << sysid::format_double(f.plan_rate) << ','
                << sysid::format_double(f.eta) << ',' << sysid::format_double(f.slope) << ','
                << f.points << '\n';
    return 0;
  } catch (const sysid::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
