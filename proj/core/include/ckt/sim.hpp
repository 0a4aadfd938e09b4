#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ckt/copula.hpp"
#include "ckt/dataset.hpp"
#include "ckt/estimator.hpp"
#include "ckt/rng.hpp"

namespace ckt {

/// Law of Z:
///   uniform         U[0, 1]
///   normal_uniform  Z1 ~ N(0, 1), Z2 ~ U[-1, 1], Gaussian copula with Kendall's tau 0.5
///   exp_normal      Z1 ~ Exp(1), Z2 ~ N(0, 1), independent
enum class ZLaw { uniform, normal_uniform, exp_normal };

/// z -> tau(z):
///   reference, f2  3 z (1 - z)
///   f1             0.9 - 0.8 1{z >= 0.5}
///   f3             0.5 + 0.4 sin(4 pi z)
///   f4             0.1 + 1.6 z on z < 0.5, 0.1 + 1.6 (z - 0.5) on z >= 0.5
///   setting2d_1    z2 tanh(z1)
///   setting2d_2    tanh((z1 + z2) / 2), the logit link applied to z1 + z2
///   setting2d_3    exp(-z1 |z2|)
enum class TauFunction { reference, f1, f2, f3, f4, setting2d_1, setting2d_2, setting2d_3 };

/// Conditional margins of (X1, X2) given Z = z:
///   m1         N(z, 1), N(z, 1)
///   m2         N(cos(10 pi z), 1), N(z, 1)
///   m3         Exp(rate |z|), U[z, z + 1]
///   m4         N(0, z^2), U[0, |z|]
///   normal_z1  N(z1, 1), N(z1, 1)
enum class Margins { m1, m2, m3, m4, normal_z1 };

struct CopulaChoice {
  CopulaFamily family = CopulaFamily::gaussian;
  double df = 4.0;
  /// Student copula with 2 + 1/z degrees of freedom, z the first covariate.
  bool df_from_z = false;
};

struct SimulationConfig {
  ZLaw z_law = ZLaw::uniform;
  TauFunction tau = TauFunction::reference;
  CopulaChoice copula;
  Margins margins = Margins::m1;
  std::size_t n = 3000;
  std::uint64_t seed = 0;
};

std::size_t z_dimension(ZLaw law);

std::string to_string(ZLaw law);
std::string to_string(TauFunction f);
std::string to_string(Margins m);
ZLaw z_law_from_string(const std::string& s);
TauFunction tau_function_from_string(const std::string& s);
Margins margins_from_string(const std::string& s);

double tau_function_eval(TauFunction f, std::span<const double> z);

/// Z draw of the configured law.
std::vector<double> sample_z(ZLaw law, SplitMix64& rng);

/// (X1, X2) drawn from the conditional law given Z = z.
std::pair<double, double> sample_conditional(const SimulationConfig& cfg, std::span<const double> z, SplitMix64& rng);

/// n i.i.d. observations; the stream is SplitMix64(cfg.seed).
Dataset simulate_dataset(const SimulationConfig& cfg);

/// 100 equispaced points on [0.01, 0.99] for p = 1; a 20 x 20 grid on
/// [0.01, 0.99]^2 for p = 2.
std::vector<std::vector<double>> default_error_grid(std::size_t p);

struct ErrorReport {
  double err = 0.0;                   ///< mean squared error over kept simulations and grid points
  std::vector<double> per_simulation; ///< mean over the grid, one entry per kept simulation
  std::vector<double> squared_errors; ///< row-major kept simulations x grid points
  std::size_t n_simu = 0;
  std::size_t n_points = 0;
  std::size_t failures = 0;
  std::vector<std::string> failure_messages;
  double seconds = 0.0;               ///< mean wall-clock fit time per simulation
};

/// Fits an estimator on one simulated dataset, with a per-simulation seed.
using Fitter = std::function<std::unique_ptr<Estimator>(const Dataset&, std::uint64_t)>;

/// Simulation s uses the data stream stream_seed(cfg.seed, s). A fit that
/// throws is excluded and counted in `failures`.
ErrorReport error_criterion(const Fitter& fit, const SimulationConfig& cfg, std::size_t n_simu,
                            const std::vector<std::vector<double>>& grid);

/// Mean of squared differences between an estimate table and the truth.
double integrated_error(const std::vector<std::vector<double>>& estimates, const std::vector<double>& truth);

nlohmann::json to_json(const SimulationConfig& cfg);
SimulationConfig simulation_config_from_json(const nlohmann::json& j);

struct ExperimentCell {
  std::string setting;
  std::string method;
  std::size_t n = 0;
  ErrorReport report;
};

struct ExperimentResult {
  std::vector<ExperimentCell> cells;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
};

/// Config: {"seed", "n_simu", "settings": [SimulationConfig + "name"],
/// "methods": [MethodSpec]}. Every setting is crossed with every method.
ExperimentResult run_experiment(const nlohmann::json& config);

/// CSV with errors x 1000 and mean fit seconds, after '#' provenance lines.
std::string experiment_csv(const ExperimentResult& result);

/// FNV-1a of the canonical JSON dump.
std::uint64_t config_hash(const nlohmann::json& config);

}  // namespace ckt
