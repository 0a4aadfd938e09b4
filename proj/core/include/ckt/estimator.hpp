#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ckt/dataset.hpp"
#include "ckt/features.hpp"
#include "ckt/forest.hpp"
#include "ckt/glm.hpp"
#include "ckt/knn.hpp"
#include "ckt/nnet.hpp"
#include "ckt/tree.hpp"

namespace ckt {

/// A fitted conditional Kendall's tau estimator.
class Estimator {
 public:
  virtual ~Estimator() = default;
  /// Estimate at covariate z, in [-1, 1].
  virtual double predict(std::span<const double> z) const = 0;
  virtual std::string name() const = 0;
  virtual nlohmann::json to_json() const = 0;
};

enum class Method { logit, probit, tree, forest, forest_unadapted, knn, nnet };

std::string to_string(Method m);
Method method_from_string(const std::string& name);

/// Everything needed to fit one method on a dataset.
struct MethodSpec {
  Method method = Method::logit;
  std::string label;                   ///< display name; defaults to to_string(method)
  std::optional<FeatureMap> features;  ///< default: psi6 (glm, tree, forests) or psi1 (knn, nnet); coordinates when p > 1
  KernelFamily kernel = KernelFamily::epanechnikov;
  /// Fixed bandwidth in the units of Z; the rule of thumb on standardized Z when absent.
  std::optional<double> bandwidth;
  PairScheme scheme = PairScheme::all;

  GlmConfig glm;
  /// Cross-validate lambda over this grid (default comparison grid) before fitting.
  std::vector<double> cv_lambdas;
  std::size_t cv_folds = 5;
  TreeConfig tree;
  ForestConfig forest;
  LepskiConfig lepski;
  /// Fixed neighbour count instead of the local selection.
  std::optional<std::size_t> knn_neighbors;
  NnetConfig nnet;

  std::string display_name() const { return label.empty() ? to_string(method) : label; }
};

FeatureMap default_features(Method m, std::size_t p);
KernelSpec resolve_kernel(const Dataset& data, const MethodSpec& spec);

/// Fits the method. `seed` drives every random choice (forest and network
/// subsamples, CV folds) and overrides the per-method seeds.
std::unique_ptr<Estimator> fit_method(const Dataset& data, const MethodSpec& spec, std::uint64_t seed);

nlohmann::json to_json(const MethodSpec& spec);
/// Keys: method, label, features, kernel, bandwidth, pairs ("all" or
/// "consecutive"), lambda, cv_lambdas, cv_folds, rho, tol, max_iter,
/// anchor, tree, forest, lepski, neighbors, nnet.
MethodSpec method_spec_from_json(const nlohmann::json& j, std::size_t p);

/// Rebuilds a fitted estimator from to_json() output. Nearest-neighbour
/// exports hold their specification only; they are refit on `source`.
std::unique_ptr<Estimator> load_estimator(const nlohmann::json& j, const Dataset* source = nullptr);

}  // namespace ckt
