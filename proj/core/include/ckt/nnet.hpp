#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "ckt/dataset.hpp"
#include "ckt/features.hpp"
#include "ckt/rng.hpp"

namespace ckt {

struct NnetConfig {
  std::size_t n_net = 10;
  std::vector<std::size_t> hidden_sizes{3};
  double row_fraction = 0.8;
  int epochs = 200;
  double learning_rate = 1e-2;
  double momentum = 0.9;
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;
};

/// Fully connected net: tanh hidden layers, logistic output p_hat in (0, 1).
/// Inputs are standardized with a stored shift and scale before layer one.
/// Parameters are stored flat, layer by layer: weights (row-major, out x in)
/// then biases.
class Mlp {
 public:
  Mlp() = default;
  /// layer_sizes = {input, hidden..., 1}; all parameters zero.
  explicit Mlp(std::vector<std::size_t> layer_sizes);

  std::size_t input_dim() const { return sizes_.front(); }
  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  std::size_t parameter_count() const { return params_.size(); }

  std::vector<double>& parameters() { return params_; }
  const std::vector<double>& parameters() const { return params_; }
  std::vector<double>& input_shift() { return shift_; }
  std::vector<double>& input_scale() { return scale_; }
  const std::vector<double>& input_shift() const { return shift_; }
  const std::vector<double>& input_scale() const { return scale_; }

  /// Pre-activation of the output unit.
  double output_logit(std::span<const double> x) const;
  double forward(std::span<const double> x) const;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<double> params_;
  std::vector<double> shift_;
  std::vector<double> scale_;
};

/// Uniform(-r, r) weights with r = sqrt(6 / (fan_in + fan_out)); zero biases.
void glorot_init(Mlp& net, SplitMix64& rng);

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

/// -sum v [1{w = 1} log p + 1{w = -1} log(1 - p)] / sum v over the rows
/// (x row-major, one row per record), with its parameter gradient.
LossGrad mlp_loss_grad(const Mlp& net, std::span<const double> x, std::span<const std::int8_t> w,
                       std::span<const double> v);

/// Mini-batch SGD with momentum on one pair set.
Mlp train_mlp(std::span<const double> x, std::span<const std::int8_t> w, std::span<const double> v,
              std::size_t input_dim, const NnetConfig& config, SplitMix64& rng,
              std::vector<double>* loss_trace = nullptr);

class NnetEnsemble {
 public:
  NnetEnsemble() = default;
  NnetEnsemble(FeatureMap features, std::vector<Mlp> nets, std::size_t skipped = 0);

  /// Median over nets of 2 p_hat_j - 1 (mean of the middle two for an even count).
  double predict(std::span<const double> z) const;

  const FeatureMap& features() const { return features_; }
  const std::vector<Mlp>& nets() const { return nets_; }
  std::size_t skipped() const { return skipped_; }

 private:
  FeatureMap features_;
  std::vector<Mlp> nets_;
  std::size_t skipped_ = 0;
};

/// Each net is trained on the pairs of its own observation subsample, drawn
/// from the stream seed + j: the records of `pairs` (built from `data`) whose
/// endpoints were both drawn. An empty pair set triggers up to three redraws.
NnetEnsemble fit_ensemble(const Dataset& data, const PairDataset& pairs, const FeatureMap& features,
                          const NnetConfig& config);

NnetEnsemble fit_ensemble(const Dataset& data, const KernelSpec& kernel, const FeatureMap& features,
                          const NnetConfig& config);

nlohmann::json to_json(const NnetConfig& config);
NnetConfig nnet_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& j);
nlohmann::json to_json(const NnetEnsemble& ensemble);
NnetEnsemble ensemble_from_json(const nlohmann::json& j);

}  // namespace ckt
