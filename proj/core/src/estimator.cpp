#include "ckt/estimator.hpp"

#include <algorithm>

#include "ckt/errors.hpp"

namespace ckt {
namespace {

class GlmEstimator final : public Estimator {
 public:
  explicit GlmEstimator(GlmModel model) : model_(std::move(model)) {}
  double predict(std::span<const double> z) const override { return predict_tau(model_, z); }
  std::string name() const override { return model_.link.id; }
  nlohmann::json to_json() const override { return ckt::to_json(model_); }
  const GlmModel& model() const { return model_; }

 private:
  GlmModel model_;
};

class TreeEstimator final : public Estimator {
 public:
  explicit TreeEstimator(FittedTree tree) : tree_(std::move(tree)) {}
  double predict(std::span<const double> z) const override { return tree_.predict(z); }
  std::string name() const override { return "tree"; }
  nlohmann::json to_json() const override { return ckt::to_json(tree_); }

 private:
  FittedTree tree_;
};

class ForestEstimator final : public Estimator {
 public:
  ForestEstimator(FittedForest forest, bool adapted) : forest_(std::move(forest)), adapted_(adapted) {}
  double predict(std::span<const double> z) const override { return forest_.predict(z); }
  std::string name() const override { return adapted_ ? "forest" : "forest_unadapted"; }
  nlohmann::json to_json() const override {
    auto j = ckt::to_json(forest_);
    j["method"] = name();
    return j;
  }

 private:
  FittedForest forest_;
  bool adapted_;
};

class KnnEstimator final : public Estimator {
 public:
  KnnEstimator(const PairDataset& pairs, const Dataset& data, const MethodSpec& spec, FeatureMap features)
      : spec_(spec) {
    spec_.features = features;
    if (spec.knn_neighbors) {
      fixed_ = std::make_unique<KnnIndex>(pairs, std::move(features), spec.lepski.distance);
      neighbors_ = std::min(*spec.knn_neighbors, pairs.size());
      if (neighbors_ < 1) throw ConfigError("number of neighbours must be at least 1");
    } else {
      lepski_ = std::make_unique<KnnLepski>(pairs, data, std::move(features), spec.lepski);
    }
  }
  double predict(std::span<const double> z) const override {
    return fixed_ ? fixed_->estimate(z, neighbors_) : lepski_->predict(z);
  }
  std::string name() const override { return "knn"; }
  nlohmann::json to_json() const override {
    nlohmann::json j{{"method", "knn"}, {"data_backed", true}, {"spec", ckt::to_json(spec_)}};
    if (lepski_) j["selected_neighbors"] = lepski_->selection().neighbors;
    return j;
  }
  const KnnLepski* lepski() const { return lepski_.get(); }

 private:
  MethodSpec spec_;
  std::unique_ptr<KnnIndex> fixed_;
  std::size_t neighbors_ = 0;
  std::unique_ptr<KnnLepski> lepski_;
};

class NnetEstimator final : public Estimator {
 public:
  explicit NnetEstimator(NnetEnsemble e) : ensemble_(std::move(e)) {}
  double predict(std::span<const double> z) const override { return ensemble_.predict(z); }
  std::string name() const override { return "nnet"; }
  nlohmann::json to_json() const override { return ckt::to_json(ensemble_); }

 private:
  NnetEnsemble ensemble_;
};

std::string to_string(PairScheme s) { return s == PairScheme::all ? "all" : "consecutive"; }

PairScheme pair_scheme_from_string(const std::string& s) {
  if (s == "all") return PairScheme::all;
  if (s == "consecutive") return PairScheme::consecutive;
  throw ConfigError("unknown pair scheme '" + s + "'");
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::logit: return "logit";
    case Method::probit: return "probit";
    case Method::tree: return "tree";
    case Method::forest: return "forest";
    case Method::forest_unadapted: return "forest_unadapted";
    case Method::knn: return "knn";
    case Method::nnet: return "nnet";
  }
  return "logit";
}

Method method_from_string(const std::string& name) {
  for (Method m : {Method::logit, Method::probit, Method::tree, Method::forest, Method::forest_unadapted, Method::knn,
                   Method::nnet}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown method '" + name + "'");
}

FeatureMap default_features(Method m, std::size_t p) {
  if (p != 1) return coordinate_features(p);
  return psi_dictionary(m == Method::knn || m == Method::nnet ? 1 : 6);
}

KernelSpec resolve_kernel(const Dataset& data, const MethodSpec& spec) {
  if (spec.bandwidth) {
    if (!(*spec.bandwidth > 0.0)) throw ConfigError("bandwidth must be positive");
    KernelSpec k;
    k.family = spec.kernel;
    k.h = *spec.bandwidth;
    k.p = data.dim();
    return k;
  }
  return scott_kernel(data, spec.kernel);
}

std::unique_ptr<Estimator> fit_method(const Dataset& data, const MethodSpec& spec, std::uint64_t seed) {
  if (data.size() < 2) throw DataError("need at least two observations");
  const FeatureMap features = spec.features ? *spec.features : default_features(spec.method, data.dim());
  if (features.input_dim() != data.dim()) throw ConfigError("feature map does not match the covariate dimension");
  const KernelSpec kernel = resolve_kernel(data, spec);
  const bool glm = spec.method == Method::logit || spec.method == Method::probit;
  PairOptions options;
  options.keep_endpoints = glm && spec.glm.anchor == Anchor::endpoints;
  const PairDataset pairs = build_pairs(data, kernel, spec.scheme, options);
  if (pairs.empty()) throw DataError("no pair has a positive kernel weight; increase the bandwidth");

  switch (spec.method) {
    case Method::logit:
    case Method::probit: {
      const LinkFunction link = spec.method == Method::logit ? logit_link() : probit_link();
      GlmConfig config = spec.glm;
      if (!spec.cv_lambdas.empty()) {
        CvConfig cv;
        cv.folds = spec.cv_folds;
        cv.lambdas = spec.cv_lambdas;
        cv.grid = default_cv_grid(data);
        cv.seed = seed;
        config.lambda = select_lambda_cv(data, kernel, features, link, config, cv).lambda;
      }
      GlmModel model = fit_admm(pairs, features, link, config);
      model.bandwidth = kernel.h;
      return std::make_unique<GlmEstimator>(std::move(model));
    }
    case Method::tree:
      return std::make_unique<TreeEstimator>(fit_tree(pairs, features, spec.tree));
    case Method::forest: {
      ForestConfig config = spec.forest;
      config.seed = seed;
      return std::make_unique<ForestEstimator>(fit_forest_adapted(data, pairs, features, config), true);
    }
    case Method::forest_unadapted: {
      ForestConfig config = spec.forest;
      config.seed = seed;
      return std::make_unique<ForestEstimator>(fit_forest_unadapted(pairs, features, config), false);
    }
    case Method::knn:
      return std::make_unique<KnnEstimator>(pairs, data, spec, features);
    case Method::nnet: {
      NnetConfig config = spec.nnet;
      config.seed = seed;
      return std::make_unique<NnetEstimator>(fit_ensemble(data, pairs, features, config));
    }
  }
  throw ConfigError("unsupported method");
}

nlohmann::json to_json(const MethodSpec& s) {
  nlohmann::json j{{"method", to_string(s.method)},
                   {"label", s.display_name()},
                   {"kernel", to_string(s.kernel)},
                   {"pairs", to_string(s.scheme)},
                   {"lambda", s.glm.lambda},
                   {"rho", s.glm.rho},
                   {"tol", s.glm.tol_primal},
                   {"max_iter", s.glm.max_iter},
                   {"anchor", s.glm.anchor == Anchor::midpoint ? "midpoint" : "endpoints"},
                   {"cv_lambdas", s.cv_lambdas},
                   {"cv_folds", s.cv_folds},
                   {"tree", to_json(s.tree)},
                   {"forest", to_json(s.forest)},
                   {"lepski", to_json(s.lepski)},
                   {"nnet", to_json(s.nnet)}};
  if (s.features) j["features"] = to_json(*s.features);
  if (s.bandwidth) j["bandwidth"] = *s.bandwidth;
  if (s.knn_neighbors) j["neighbors"] = *s.knn_neighbors;
  return j;
}

MethodSpec method_spec_from_json(const nlohmann::json& j, std::size_t p) {
  if (!j.is_object()) throw ConfigError("method entry must be an object");
  MethodSpec s;
  s.method = method_from_string(j.at("method").get<std::string>());
  s.label = j.value("label", std::string{});
  if (j.contains("features")) s.features = feature_map_from_json(j.at("features"), p);
  s.kernel = kernel_family_from_string(j.value("kernel", std::string("epanechnikov")));
  if (j.contains("bandwidth") && !j.at("bandwidth").is_null()) s.bandwidth = j.at("bandwidth").get<double>();
  s.scheme = pair_scheme_from_string(j.value("pairs", std::string("all")));
  s.glm.lambda = j.value("lambda", s.glm.lambda);
  s.glm.rho = j.value("rho", s.glm.rho);
  s.glm.tol_primal = s.glm.tol_dual = j.value("tol", s.glm.tol_primal);
  s.glm.max_iter = j.value("max_iter", s.glm.max_iter);
  const std::string anchor = j.value("anchor", std::string("midpoint"));
  if (anchor != "midpoint" && anchor != "endpoints") throw ConfigError("anchor must be midpoint or endpoints");
  s.glm.anchor = anchor == "midpoint" ? Anchor::midpoint : Anchor::endpoints;
  s.cv_lambdas = j.value("cv_lambdas", s.cv_lambdas);
  s.cv_folds = j.value("cv_folds", s.cv_folds);
  if (j.contains("tree")) s.tree = tree_config_from_json(j.at("tree"));
  if (j.contains("forest")) s.forest = forest_config_from_json(j.at("forest"));
  if (j.contains("lepski")) s.lepski = lepski_config_from_json(j.at("lepski"));
  if (j.contains("neighbors")) s.knn_neighbors = j.at("neighbors").get<std::size_t>();
  if (j.contains("nnet")) s.nnet = nnet_config_from_json(j.at("nnet"));
  if (s.features && s.features->input_dim() != p) throw ConfigError("feature map does not match the covariate dimension");
  return s;
}

std::unique_ptr<Estimator> load_estimator(const nlohmann::json& j, const Dataset* source) {
  const std::string method = j.at("method").get<std::string>();
  if (method == "logit" || method == "probit") return std::make_unique<GlmEstimator>(glm_model_from_json(j));
  if (method == "tree") return std::make_unique<TreeEstimator>(tree_from_json(j));
  if (method == "forest" || method == "forest_unadapted") {
    return std::make_unique<ForestEstimator>(forest_from_json(j), method == "forest");
  }
  if (method == "nnet") return std::make_unique<NnetEstimator>(ensemble_from_json(j));
  if (method == "knn") {
    if (!source) throw ConfigError("nearest-neighbour models are refit from their source data, which is missing");
    const MethodSpec spec = method_spec_from_json(j.at("spec"), source->dim());
    return fit_method(*source, spec, 0);
  }
  throw ConfigError("unknown model method '" + method + "'");
}

}  // namespace ckt
