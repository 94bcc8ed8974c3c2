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

#include "sysid/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "sysid/errors.hpp"

namespace sysid {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    out.push_back(trim(s.substr(pos, next == std::string_view::npos ? std::string_view::npos
                                                                    : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), out);
  return res.ec == std::errc() && res.ptr == t.data() + t.size();
}

bool parse_int(std::string_view s, long long& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), out);
  return res.ec == std::errc() && res.ptr == t.data() + t.size();
}

struct Parser {
  const std::string& source;
  int line = 0;

  [[noreturn]] void fail(const std::string& message) const {
    throw ConfigError(source, line, message);
  }
  double real(std::string_view v) const {
    double out = 0.0;
    if (!parse_double(v, out)) fail("expected a number, got '" + std::string(v) + "'");
    return out;
  }
  double positive(std::string_view v) const {
    const double out = real(v);
    if (!(out > 0.0)) fail("expected a positive number, got '" + std::string(v) + "'");
    return out;
  }
  double nonnegative(std::string_view v) const {
    const double out = real(v);
    if (!(out >= 0.0)) fail("expected a non-negative number, got '" + std::string(v) + "'");
    return out;
  }
  long long integer(std::string_view v, long long min) const {
    long long out = 0;
    if (!parse_int(v, out)) fail("expected an integer, got '" + std::string(v) + "'");
    if (out < min) fail("expected an integer >= " + std::to_string(min));
    return out;
  }
  bool boolean(std::string_view v) const {
    const std::string t = trim(v);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    fail("expected true or false, got '" + t + "'");
  }
};

}  // namespace

ConfigError::ConfigError(const std::string& source, int line, const std::string& message)
    : ContractError(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " +
                    message),
      line_(line) {}

Matrix parse_matrix(std::string_view text) {
  std::vector<std::vector<double>> rows;
  for (const std::string& row_text : split_list(text, ';')) {
    std::vector<double> row;
    std::string cleaned = row_text;
    for (char& c : cleaned)
      if (c == ',') c = ' ';
    std::istringstream in(cleaned);
    std::string token;
    while (in >> token) {
      double v = 0.0;
      if (!parse_double(token, v)) throw ContractError("matrix: bad entry '" + token + "'");
      row.push_back(v);
    }
    if (row.empty()) throw ContractError("matrix: empty row");
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) throw ContractError("matrix: ragged rows");
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

ExperimentConfig parse_config(std::string_view text, const std::string& source) {
  ExperimentConfig cfg;
  Parser p{source};
  std::set<std::string> seen;
  std::string section;

  using Handler = std::function<void(const std::string&)>;
  std::map<std::string, Handler> handlers;
  const auto on = [&](const std::string& key, Handler h) { handlers.emplace(key, std::move(h)); };

  on("system", [&](const std::string& v) {
    if (v == "random") cfg.system.kind = SystemSource::Kind::kRandom;
    else if (v == "explicit") cfg.system.kind = SystemSource::Kind::kExplicit;
    else if (v == "jetstar-lateral") cfg.system.kind = SystemSource::Kind::kJetstarLateral;
    else p.fail("unknown system '" + v + "' (expected random, explicit or jetstar-lateral)");
  });
  on("d", [&](const std::string& v) { cfg.system.d = p.integer(v, 1); });
  on("m", [&](const std::string& v) { cfg.system.m = p.integer(v, 1); });
  on("b_identity", [&](const std::string& v) { cfg.system.b_identity = p.boolean(v); });
  on("eigen_scale", [&](const std::string& v) { cfg.system.eigen_scale = p.positive(v); });
  on("A", [&](const std::string& v) {
    try { cfg.system.a = parse_matrix(v); } catch (const ContractError& e) { p.fail(e.what()); }
  });
  on("B", [&](const std::string& v) {
    try { cfg.system.b = parse_matrix(v); } catch (const ContractError& e) { p.fail(e.what()); }
  });
  on("mode", [&](const std::string& v) {
    if (v == "known_b") cfg.known_b = true;
    else if (v == "full") cfg.known_b = false;
    else p.fail("unknown mode '" + v + "' (expected known_b or full)");
  });
  on("policy", [&](const std::string& v) {
    cfg.policies.clear();
    for (const std::string& name : split_list(v, ',')) {
      try { cfg.policies.push_back(parse_policy(name)); } catch (const ContractError& e) { p.fail(e.what()); }
    }
  });
  on("criterion", [&](const std::string& v) {
    try { cfg.crit = parse_criterion(v); } catch (const ContractError& e) { p.fail(e.what()); }
  });
  on("T", [&](const std::string& v) { cfg.horizon = p.integer(v, 1); });
  on("horizons", [&](const std::string& v) {
    cfg.horizons.clear();
    for (const std::string& item : split_list(v, ',')) cfg.horizons.push_back(p.integer(item, 1));
  });
  on("gamma", [&](const std::string& v) { cfg.gamma = p.positive(v); });
  on("sigma", [&](const std::string& v) { cfg.sigma = p.nonnegative(v); });
  on("seeds", [&](const std::string& v) { cfg.seeds = static_cast<int>(p.integer(v, 1)); });
  on("seed_base", [&](const std::string& v) {
    cfg.seed_base = static_cast<std::uint64_t>(p.integer(v, 0));
  });
  on("ridge", [&](const std::string& v) { cfg.ridge = p.positive(v); });
  on("out", [&](const std::string& v) { cfg.output = v; });
  on("workers", [&](const std::string& v) { cfg.workers = static_cast<int>(p.integer(v, 1)); });
  on("greedy.qp_tol", [&](const std::string& v) { cfg.qp_tol = p.positive(v); });
  on("gradient.eta", [&](const std::string& v) {
    if (v != "auto") cfg.gradient.eta = p.nonnegative(v);
  });
  on("gradient.n_grad", [&](const std::string& v) {
    cfg.gradient.n_grad = static_cast<int>(p.integer(v, 1));
  });
  on("gradient.batch", [&](const std::string& v) {
    cfg.gradient.batch = static_cast<int>(p.integer(v, 1));
  });
  on("gradient.schedule", [&](const std::string& v) { cfg.gradient.schedule = v; });
  on("gradient.objective", [&](const std::string& v) {
    if (v == "design") cfg.gradient.objective = GradientObjectiveKind::kDesign;
    else if (v == "mse") cfg.gradient.objective = GradientObjectiveKind::kMse;
    else p.fail("unknown gradient objective '" + v + "' (expected design or mse)");
  });
  on("gradient.n_grad_sweep", [&](const std::string& v) {
    cfg.n_grad_sweep.clear();
    for (const std::string& item : split_list(v, ','))
      cfg.n_grad_sweep.push_back(static_cast<int>(p.integer(item, 1)));
  });
  on("oracle.eta", [&](const std::string& v) {
    if (v != "auto") cfg.oracle.eta = p.nonnegative(v);
  });
  on("oracle.n_grad", [&](const std::string& v) {
    cfg.oracle.n_grad = static_cast<int>(p.integer(v, 1));
  });
  on("oracle.batch", [&](const std::string& v) {
    cfg.oracle.batch = static_cast<int>(p.integer(v, 1));
  });

  static const std::set<std::string> kSections{"greedy", "gradient", "oracle", "random"};
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto eol = text.find('\n', pos);
    std::string raw(text.substr(pos, eol == std::string_view::npos ? std::string_view::npos
                                                                   : eol - pos));
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
    ++p.line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') p.fail("unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (!kSections.contains(section)) p.fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) p.fail("expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const std::string full = section.empty() ? key : section + "." + key;
    const auto it = handlers.find(full);
    if (it == handlers.end()) p.fail("unknown key '" + full + "'");
    if (!seen.insert(full).second) p.fail("duplicate key '" + full + "'");
    if (value.empty()) p.fail("empty value for '" + full + "'");
    it->second(value);
  }

  p.line = 0;
  if (!seen.contains("T")) p.fail("missing required key 'T'");
  if (!seen.contains("gamma")) p.fail("missing required key 'gamma'");
  if (!seen.contains("sigma")) {
    if (cfg.system.kind != SystemSource::Kind::kJetstarLateral)
      p.fail("missing required key 'sigma'");
    cfg.sigma = 1.0;
  }
  if (cfg.system.kind == SystemSource::Kind::kExplicit &&
      (!seen.contains("A") || !seen.contains("B")))
    p.fail("system = explicit needs both A and B");
  if (cfg.horizons.empty()) cfg.horizons = {cfg.horizon};
  if (cfg.n_grad_sweep.empty()) cfg.n_grad_sweep = {cfg.gradient.n_grad};
  validate_config(cfg, source);
  return cfg;
}

void validate_config(const ExperimentConfig& cfg, const std::string& source) {
  const auto fail = [&](const std::string& message) { throw ConfigError(source, 0, message); };
  if (cfg.horizon < 1) fail("T must be >= 1");
  if (!(cfg.gamma > 0.0)) fail("gamma must be > 0");
  if (!(cfg.sigma >= 0.0)) fail("sigma must be >= 0");
  if (cfg.policies.empty()) fail("no policy selected");
  if (cfg.seeds < 1) fail("seeds must be >= 1");
  if (cfg.workers < 1) fail("workers must be >= 1");
  for (Policy policy : cfg.policies)
    if (policy == Policy::kGreedy && cfg.crit == Criterion::kE)
      fail("the greedy policy requires criterion A or D");
  if (cfg.system.kind == SystemSource::Kind::kRandom && cfg.system.b_identity &&
      cfg.system.m != cfg.system.d)
    fail("b_identity requires m = d");
  if (cfg.system.kind == SystemSource::Kind::kExplicit) {
    const Matrix& a = cfg.system.a;
    const Matrix& b = cfg.system.b;
    if (a.rows() != a.cols()) fail("A must be square");
    if (b.rows() != a.rows()) fail("B must have as many rows as A");
  }
  for (Policy policy : cfg.policies) {
    if (policy != Policy::kGradient) continue;
    try {
      for (Eigen::Index t : cfg.horizons) Schedule::parse(cfg.gradient.schedule, t);
      Schedule::parse(cfg.gradient.schedule, cfg.horizon);
    } catch (const ContractError& e) {
      fail(std::string("gradient.schedule: ") + e.what());
    }
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "cannot open config file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.string());
}

IdentifyConfig ExperimentConfig::identify_config(const LtiSystem& sys, std::uint64_t seed) const {
  IdentifyConfig out;
  out.mode = known_b ? IdentMode::known_b(sys.b()) : IdentMode::full_theta();
  out.horizon = horizon;
  out.ridge = ridge;
  out.seed = seed;
  out.crit = crit;
  out.qp_tol = qp_tol;
  out.gradient = gradient;
  out.oracle = oracle;
  return out;
}

}  // namespace sysid
