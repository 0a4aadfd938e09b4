#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ckt/dataset.hpp"
#include "ckt/features.hpp"

namespace ckt {

/// Link g mapping the single index psi(z)'beta onto a Kendall's tau in (-1, 1).
/// logit and probit are evaluated with dedicated numerically stable code;
/// custom links carry their own callables (derivatives fall back to central
/// differences when absent).
struct LinkFunction {
  enum class Kind { logit, probit, custom };
  using Fn = std::function<double(double)>;

  Kind kind = Kind::logit;
  std::string id = "logit";
  bool odd = true;
  Fn g, dg, d2g, d3g;
};

LinkFunction logit_link();
LinkFunction probit_link();
LinkFunction custom_link(std::string id, LinkFunction::Fn g, LinkFunction::Fn dg = {},
                         LinkFunction::Fn d2g = {}, LinkFunction::Fn d3g = {}, bool odd = false);
LinkFunction link_from_name(const std::string& name);

struct LinkValue {
  double g = 0.0;
  double dg = 0.0;
};

LinkValue link_eval(const LinkFunction& link, double t);

/// g and its first three derivatives at t.
struct LinkDerivatives {
  double g, d1, d2, d3;
};
LinkDerivatives link_derivatives(const LinkFunction& link, double t);

/// Where the likelihood anchors psi: at both endpoints Z_i and Z_j of every
/// unordered pair (the double sum over ordered pairs), or at the midpoint.
enum class Anchor { endpoints, midpoint };

struct GlmConfig {
  double lambda = 0.0;
  double rho = 1.0;
  double tol_primal = 1e-6;
  double tol_dual = 1e-6;
  int max_iter = 500;
  int max_newton_iter = 50;
  /// Residual balancing of rho; keeps ADMM fast when features are badly scaled.
  bool adaptive_rho = true;
  Anchor anchor = Anchor::midpoint;
};

struct GlmDiagnostics {
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;  ///< L_n(beta) - lambda |beta|_1 at the returned beta
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double final_rho = 0.0;
  std::size_t clamp_count = 0;
  /// Penalized objective at the consensus iterate after each ADMM iteration.
  std::vector<double> objective_trace;
};

struct GlmModel {
  std::vector<double> beta;
  LinkFunction link;
  FeatureMap features;
  double bandwidth = 0.0;
  GlmDiagnostics diagnostics;
};

/// Counts evaluations where |g| was clamped to 1 - 1e-12 before taking logs.
struct ClampCounter {
  std::size_t count = 0;
};

/// L_n(beta) = (n(n-1))^-1 sum_{i != j} K_h(Z_i - Z_j) l_beta(W_ij, anchor),
/// each stored pair contributing its two ordered terms. Uses the general
/// two-term form of l_beta, valid for any link.
double localized_loglik(const PairDataset& pairs, const FeatureMap& features, const LinkFunction& link,
                        std::span<const double> beta, Anchor anchor = Anchor::midpoint,
                        ClampCounter* clamps = nullptr);

/// The same criterion written as log(1/2 + g(W psi'beta)/2); equal to
/// localized_loglik only when g is odd.
double simplified_loglik(const PairDataset& pairs, const FeatureMap& features, const LinkFunction& link,
                         std::span<const double> beta, Anchor anchor = Anchor::midpoint);

/// Analytic gradient of localized_loglik with respect to beta.
std::vector<double> localized_loglik_gradient(const PairDataset& pairs, const FeatureMap& features,
                                              const LinkFunction& link, std::span<const double> beta,
                                              Anchor anchor = Anchor::midpoint);

/// S_kappa(a) = (1 - kappa/|a|)_+ a, S_kappa(0) = 0.
double soft_threshold(double a, double kappa);

/// Maximizes L_n(beta) - lambda |beta|_1 by ADMM. The x-update is a damped
/// Newton solve of the smooth subproblem, the z-update soft thresholding.
/// Throws ConfigError for a custom link failing verify_concavity on [-10, 10].
/// When max_iter is reached the last consensus iterate is returned with
/// diagnostics.converged = false.
GlmModel fit_admm(const PairDataset& pairs, const FeatureMap& features, const LinkFunction& link,
                  const GlmConfig& config);

/// g(psi(z)'beta).
double predict_tau(const GlmModel& model, std::span<const double> z);

struct ConcavityReport {
  bool concave = true;
  std::optional<double> first_violation;
};

/// Checks delta g''(t) (1 + delta g(t)) <= g'(t)^2 (slack 1e-10) for
/// delta = +-1 at every point lo, lo + step, ..., hi.
ConcavityReport verify_concavity(const LinkFunction& link, double lo, double hi, double step);

struct CvConfig {
  std::size_t folds = 5;
  std::vector<double> lambdas;
  /// Points where the pilot and the penalized fit are compared (L2 over the grid).
  std::vector<std::vector<double>> grid;
  std::uint64_t seed = 0;
};

struct CvResult {
  double lambda = 0.0;
  std::vector<double> lambdas;  ///< deduplicated grid, ascending
  std::vector<double> scores;   ///< CV(lambda) for each entry of lambdas
};

/// Cross-validated lambda. The original sample is split at random into
/// `folds` parts; on each part a nearest-neighbour pilot with
/// N = ceil(sqrt(|K_fold|)) is compared with the penalized fit on the
/// remaining parts. Ties go to the larger lambda.
CvResult select_lambda_cv(const Dataset& data, const KernelSpec& kernel, const FeatureMap& features,
                          const LinkFunction& link, const GlmConfig& base, const CvConfig& cv);

/// Default comparison grid: p = 1 uses `points` equispaced values between
/// the 5% and 95% quantiles of Z; otherwise a product grid over the same
/// per-coordinate ranges with about `points` nodes.
std::vector<std::vector<double>> default_cv_grid(const Dataset& data, std::size_t points = 50);

nlohmann::json to_json(const GlmModel& model);
GlmModel glm_model_from_json(const nlohmann::json& j);

}  // namespace ckt
