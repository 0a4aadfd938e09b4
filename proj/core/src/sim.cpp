#include "ckt/sim.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <tuple>

#include "ckt/errors.hpp"
#include "ckt/parallel.hpp"
#include "ckt/stats.hpp"

namespace ckt {
namespace {

constexpr double kPi = std::numbers::pi;

template <class E>
E parse_enum(const std::string& s, std::initializer_list<E> values, const char* what) {
  for (E v : values) {
    if (to_string(v) == s) return v;
  }
  throw ConfigError(std::string("unknown ") + what + " '" + s + "'");
}

double normal_quantile_shifted(double mean, double sd, double u) { return mean + sd * normal_quantile(u); }

}  // namespace

std::size_t z_dimension(ZLaw law) { return law == ZLaw::uniform ? 1 : 2; }

std::string to_string(ZLaw law) {
  switch (law) {
    case ZLaw::uniform: return "uniform";
    case ZLaw::normal_uniform: return "normal_uniform";
    case ZLaw::exp_normal: return "exp_normal";
  }
  return "uniform";
}

std::string to_string(TauFunction f) {
  switch (f) {
    case TauFunction::reference: return "reference";
    case TauFunction::f1: return "f1";
    case TauFunction::f2: return "f2";
    case TauFunction::f3: return "f3";
    case TauFunction::f4: return "f4";
    case TauFunction::setting2d_1: return "setting2d_1";
    case TauFunction::setting2d_2: return "setting2d_2";
    case TauFunction::setting2d_3: return "setting2d_3";
  }
  return "reference";
}

std::string to_string(Margins m) {
  switch (m) {
    case Margins::m1: return "m1";
    case Margins::m2: return "m2";
    case Margins::m3: return "m3";
    case Margins::m4: return "m4";
    case Margins::normal_z1: return "normal_z1";
  }
  return "m1";
}

ZLaw z_law_from_string(const std::string& s) {
  return parse_enum(s, {ZLaw::uniform, ZLaw::normal_uniform, ZLaw::exp_normal}, "Z law");
}

TauFunction tau_function_from_string(const std::string& s) {
  return parse_enum(s,
                    {TauFunction::reference, TauFunction::f1, TauFunction::f2, TauFunction::f3, TauFunction::f4,
                     TauFunction::setting2d_1, TauFunction::setting2d_2, TauFunction::setting2d_3},
                    "tau function");
}

Margins margins_from_string(const std::string& s) {
  return parse_enum(s, {Margins::m1, Margins::m2, Margins::m3, Margins::m4, Margins::normal_z1}, "margins");
}

double tau_function_eval(TauFunction f, std::span<const double> z) {
  const bool two_d = f == TauFunction::setting2d_1 || f == TauFunction::setting2d_2 || f == TauFunction::setting2d_3;
  if (z.size() != (two_d ? 2u : 1u)) throw DataError("covariate dimension does not match the tau function");
  const double z1 = z[0];
  switch (f) {
    case TauFunction::reference:
    case TauFunction::f2: return 3.0 * z1 * (1.0 - z1);
    case TauFunction::f1: return z1 >= 0.5 ? 0.1 : 0.9;
    case TauFunction::f3: return 0.5 + 0.4 * std::sin(4.0 * kPi * z1);
    case TauFunction::f4: return z1 < 0.5 ? 0.1 + 1.6 * z1 : 0.1 + 1.6 * (z1 - 0.5);
    case TauFunction::setting2d_1: return z[1] * std::tanh(z1);
    case TauFunction::setting2d_2: return std::tanh(0.5 * (z1 + z[1]));
    case TauFunction::setting2d_3: return std::exp(-z1 * std::abs(z[1]));
  }
  return 0.0;
}

std::vector<double> sample_z(ZLaw law, SplitMix64& rng) {
  switch (law) {
    case ZLaw::uniform: return {rng.uniform()};
    case ZLaw::normal_uniform: {
      const auto [u1, u2] = sample_copula(CopulaFamily::gaussian, tau_to_param(CopulaFamily::gaussian, 0.5), rng);
      return {normal_quantile(u1), 2.0 * u2 - 1.0};
    }
    case ZLaw::exp_normal: {
      const double z1 = -std::log(rng.uniform());
      return {z1, std::normal_distribution<double>()(rng)};
    }
  }
  return {};
}

std::pair<double, double> sample_conditional(const SimulationConfig& cfg, std::span<const double> z, SplitMix64& rng) {
  const double tau = tau_function_eval(cfg.tau, z);
  double df = cfg.copula.df;
  if (cfg.copula.family == CopulaFamily::student && cfg.copula.df_from_z) {
    if (!(z[0] > 0.0)) throw DataError("2 + 1/z degrees of freedom need z > 0");
    df = 2.0 + 1.0 / z[0];
  }
  const auto [u1, u2] = sample_copula(cfg.copula.family, tau_to_param(cfg.copula.family, tau), rng, df);
  const double z1 = z[0];
  switch (cfg.margins) {
    case Margins::m1: return {normal_quantile_shifted(z1, 1.0, u1), normal_quantile_shifted(z1, 1.0, u2)};
    case Margins::m2:
      return {normal_quantile_shifted(std::cos(10.0 * kPi * z1), 1.0, u1), normal_quantile_shifted(z1, 1.0, u2)};
    case Margins::m3:
      if (std::abs(z1) < 1e-12) throw DataError("margin m3 needs z != 0");
      return {-std::log1p(-u1) / std::abs(z1), z1 + u2};
    case Margins::m4:
      if (std::abs(z1) < 1e-12) throw DataError("margin m4 needs z != 0");
      return {normal_quantile_shifted(0.0, std::abs(z1), u1), std::abs(z1) * u2};
    case Margins::normal_z1: return {normal_quantile_shifted(z1, 1.0, u1), normal_quantile_shifted(z1, 1.0, u2)};
  }
  return {};
}

Dataset simulate_dataset(const SimulationConfig& cfg) {
  if (cfg.n < 1) throw ConfigError("simulation needs n >= 1");
  const std::size_t p = z_dimension(cfg.z_law);
  const bool two_d_tau =
      cfg.tau == TauFunction::setting2d_1 || cfg.tau == TauFunction::setting2d_2 || cfg.tau == TauFunction::setting2d_3;
  if ((p == 2) != two_d_tau) throw ConfigError("tau function and Z law disagree on the covariate dimension");
  const bool needs_nonzero = cfg.margins == Margins::m3 || cfg.margins == Margins::m4;
  SplitMix64 rng(cfg.seed);
  Dataset data(p);
  data.reserve(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    std::vector<double> z = sample_z(cfg.z_law, rng);
    while (needs_nonzero && std::abs(z[0]) < 1e-12) z = sample_z(cfg.z_law, rng);
    const auto [x1, x2] = sample_conditional(cfg, z, rng);
    data.add(x1, x2, z);
  }
  return data;
}

std::vector<std::vector<double>> default_error_grid(std::size_t p) {
  std::vector<std::vector<double>> grid;
  if (p == 1) {
    for (int k = 0; k < 100; ++k) grid.push_back({0.01 + 0.98 * k / 99.0});
  } else if (p == 2) {
    for (int a = 0; a < 20; ++a) {
      for (int b = 0; b < 20; ++b) grid.push_back({0.01 + 0.98 * a / 19.0, 0.01 + 0.98 * b / 19.0});
    }
  } else {
    throw ConfigError("default error grids exist for p = 1 and p = 2 only");
  }
  return grid;
}

double integrated_error(const std::vector<std::vector<double>>& estimates, const std::vector<double>& truth) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& row : estimates) {
    if (row.size() != truth.size()) throw DataError("estimate row does not match the grid");
    for (std::size_t j = 0; j < row.size(); ++j) {
      total += (row[j] - truth[j]) * (row[j] - truth[j]);
      ++count;
    }
  }
  if (count == 0) throw DataError("no estimate to score");
  return total / static_cast<double>(count);
}

ErrorReport error_criterion(const Fitter& fit, const SimulationConfig& cfg, std::size_t n_simu,
                            const std::vector<std::vector<double>>& grid) {
  if (n_simu < 1) throw ConfigError("need at least one simulation");
  if (grid.empty()) throw ConfigError("error grid is empty");
  std::vector<double> truth(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) truth[j] = tau_function_eval(cfg.tau, grid[j]);

  std::vector<std::vector<double>> estimates(n_simu);
  std::vector<std::string> errors(n_simu);
  std::vector<double> seconds(n_simu, 0.0);
  parallel_for(n_simu, [&](std::size_t s) {
    SimulationConfig local = cfg;
    local.seed = stream_seed(cfg.seed, s);
    try {
      const Dataset data = simulate_dataset(local);
      const auto start = std::chrono::steady_clock::now();
      const auto estimator = fit(data, SplitMix64::at(local.seed, 0xC0FFEE));
      std::vector<double> row(grid.size());
      for (std::size_t j = 0; j < grid.size(); ++j) row[j] = estimator->predict(grid[j]);
      seconds[s] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      estimates[s] = std::move(row);
    } catch (const std::exception& e) {
      errors[s] = e.what();
      if (errors[s].empty()) errors[s] = "unknown failure";
    }
  });

  ErrorReport report;
  report.n_simu = n_simu;
  report.n_points = grid.size();
  double total_seconds = 0.0;
  std::vector<std::vector<double>> kept;
  for (std::size_t s = 0; s < n_simu; ++s) {
    if (!errors[s].empty()) {
      ++report.failures;
      report.failure_messages.push_back("simulation " + std::to_string(s) + ": " + errors[s]);
      continue;
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double d = estimates[s][j] - truth[j];
      report.squared_errors.push_back(d * d);
      sum += d * d;
    }
    report.per_simulation.push_back(sum / static_cast<double>(grid.size()));
    total_seconds += seconds[s];
    kept.push_back(std::move(estimates[s]));
  }
  if (kept.empty()) {
    report.err = std::nan("");
    return report;
  }
  report.err = integrated_error(kept, truth);
  report.seconds = total_seconds / static_cast<double>(kept.size());
  return report;
}

nlohmann::json to_json(const SimulationConfig& cfg) {
  return {{"z_law", to_string(cfg.z_law)},
          {"tau", to_string(cfg.tau)},
          {"copula", {{"family", to_string(cfg.copula.family)}, {"df", cfg.copula.df}, {"df_from_z", cfg.copula.df_from_z}}},
          {"margins", to_string(cfg.margins)},
          {"n", cfg.n},
          {"seed", cfg.seed}};
}

SimulationConfig simulation_config_from_json(const nlohmann::json& j) {
  SimulationConfig cfg;
  cfg.z_law = z_law_from_string(j.value("z_law", to_string(cfg.z_law)));
  cfg.tau = tau_function_from_string(j.value("tau", to_string(cfg.tau)));
  if (j.contains("copula")) {
    const auto& c = j.at("copula");
    if (c.is_string()) {
      cfg.copula.family = copula_family_from_string(c.get<std::string>());
    } else {
      cfg.copula.family = copula_family_from_string(c.value("family", std::string("gaussian")));
      cfg.copula.df = c.value("df", cfg.copula.df);
      cfg.copula.df_from_z = c.value("df_from_z", cfg.copula.df_from_z);
    }
  }
  cfg.margins = margins_from_string(j.value("margins", to_string(cfg.margins)));
  cfg.n = j.value("n", cfg.n);
  cfg.seed = j.value("seed", cfg.seed);
  if (cfg.n < 1) throw ConfigError("simulation needs n >= 1");
  if (!(cfg.copula.df > 0.0)) throw ConfigError("student degrees of freedom must be positive");
  return cfg;
}

std::uint64_t config_hash(const nlohmann::json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ExperimentResult run_experiment(const nlohmann::json& config) {
  if (!config.contains("settings") || !config.contains("methods")) {
    throw ConfigError("experiment config needs 'settings' and 'methods'");
  }
  ExperimentResult result;
  result.seed = config.value("seed", std::uint64_t{0});
  result.config_hash = config_hash(config);
  const std::size_t n_simu = config.value("n_simu", std::size_t{20});
  for (const auto& s : config.at("settings")) {
    SimulationConfig sim = simulation_config_from_json(s);
    sim.seed = result.seed;
    const std::string name = s.value("name", to_string(sim.tau));
    const std::size_t p = z_dimension(sim.z_law);
    const auto grid = default_error_grid(p);
    for (const auto& m : config.at("methods")) {
      const MethodSpec spec = method_spec_from_json(m, p);
      ExperimentCell cell;
      cell.setting = name;
      cell.method = spec.display_name();
      cell.n = sim.n;
      cell.report = error_criterion([&](const Dataset& d, std::uint64_t seed) { return fit_method(d, spec, seed); },
                                    sim, n_simu, grid);
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

std::string experiment_csv(const ExperimentResult& result) {
  std::vector<std::string> methods;
  std::vector<std::pair<std::string, std::size_t>> settings;
  std::map<std::tuple<std::string, std::size_t, std::string>, const ExperimentCell*> index;
  for (const auto& c : result.cells) {
    if (std::find(methods.begin(), methods.end(), c.method) == methods.end()) methods.push_back(c.method);
    const std::pair<std::string, std::size_t> key{c.setting, c.n};
    if (std::find(settings.begin(), settings.end(), key) == settings.end()) settings.push_back(key);
    index[{c.setting, c.n, c.method}] = &c;
  }
  std::ostringstream out;
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(result.config_hash));
  out << "# config_hash=" << hash << " seed=" << result.seed << '\n';
  out << "# errors are mean integrated squared errors x 1000; seconds are mean fit times\n";
  out << "setting,n";
  for (const auto& m : methods) out << ',' << m;
  for (const auto& m : methods) out << ',' << m << "_seconds";
  out << ",failures\n";
  char buf[64];
  for (const auto& [setting, n] : settings) {
    out << setting << ',' << n;
    std::size_t failures = 0;
    for (const auto& m : methods) {
      const auto it = index.find({setting, n, m});
      if (it == index.end() || std::isnan(it->second->report.err)) {
        out << ",fail";
      } else {
        std::snprintf(buf, sizeof buf, ",%.4g", 1000.0 * it->second->report.err);
        out << buf;
      }
      if (it != index.end()) failures += it->second->report.failures;
    }
    for (const auto& m : methods) {
      const auto it = index.find({setting, n, m});
      std::snprintf(buf, sizeof buf, ",%.4g", it == index.end() ? 0.0 : it->second->report.seconds);
      out << buf;
    }
    out << ',' << failures << '\n';
  }
  return out.str();
}

}  // namespace ckt
