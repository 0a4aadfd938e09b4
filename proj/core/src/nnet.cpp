#include "ckt/nnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "ckt/errors.hpp"
#include "ckt/parallel.hpp"
#include "ckt/stats.hpp"

namespace ckt {
namespace {

double softplus(double a) { return a > 0.0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a)); }
double logistic(double a) { return a >= 0.0 ? 1.0 / (1.0 + std::exp(-a)) : std::exp(a) / (1.0 + std::exp(a)); }

// Activations of every layer for one input; acts[0] is the standardized input.
struct Pass {
  std::vector<std::vector<double>> acts;
  double logit = 0.0;
};

void run(const Mlp& net, std::span<const double> x, Pass& pass) {
  const auto& sizes = net.layer_sizes();
  if (x.size() != sizes.front()) throw DataError("network input dimension mismatch");
  pass.acts.resize(sizes.size());
  pass.acts[0].resize(sizes[0]);
  for (std::size_t c = 0; c < sizes[0]; ++c) pass.acts[0][c] = (x[c] - net.input_shift()[c]) / net.input_scale()[c];
  const double* p = net.parameters().data();
  for (std::size_t l = 1; l < sizes.size(); ++l) {
    const std::size_t in = sizes[l - 1];
    const std::size_t out = sizes[l];
    const double* b = p + in * out;
    auto& a = pass.acts[l];
    a.resize(out);
    for (std::size_t o = 0; o < out; ++o) {
      double s = b[o];
      for (std::size_t i = 0; i < in; ++i) s += p[o * in + i] * pass.acts[l - 1][i];
      a[o] = l + 1 == sizes.size() ? s : std::tanh(s);
    }
    p = b + out;
  }
  pass.logit = pass.acts.back()[0];
}

// Adds scale * d(logit)/d(params) to grad.
// offset[l]: start of layer l's parameter block (l >= 1).
std::vector<std::size_t> layer_offsets(const Mlp& net) {
  const auto& sizes = net.layer_sizes();
  std::vector<std::size_t> offset(sizes.size(), 0);
  for (std::size_t l = 2; l < sizes.size(); ++l) offset[l] = offset[l - 1] + sizes[l - 2] * sizes[l - 1] + sizes[l - 1];
  return offset;
}

void backprop(const Mlp& net, const std::vector<std::size_t>& offset, const Pass& pass, double scale,
              std::vector<double>& grad, std::vector<double>& delta, std::vector<double>& next) {
  const auto& sizes = net.layer_sizes();
  delta.assign(1, scale);
  for (std::size_t l = sizes.size() - 1; l >= 1; --l) {
    const std::size_t in = sizes[l - 1];
    const std::size_t out = sizes[l];
    const double* W = net.parameters().data() + offset[l];
    double* gW = grad.data() + offset[l];
    double* gb = gW + in * out;
    const auto& prev = pass.acts[l - 1];
    for (std::size_t o = 0; o < out; ++o) {
      gb[o] += delta[o];
      for (std::size_t i = 0; i < in; ++i) gW[o * in + i] += delta[o] * prev[i];
    }
    if (l == 1) break;
    next.assign(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      for (std::size_t i = 0; i < in; ++i) next[i] += W[o * in + i] * delta[o];
    }
    for (std::size_t i = 0; i < in; ++i) next[i] *= 1.0 - prev[i] * prev[i];  // tanh'
    delta.swap(next);
  }
}

void validate(const NnetConfig& c) {
  if (c.n_net < 1 || c.hidden_sizes.empty() || c.epochs < 0 || !(c.learning_rate > 0.0) ||
      !(c.momentum >= 0.0 && c.momentum < 1.0) || c.batch_size < 1 ||
      !(c.row_fraction > 0.0 && c.row_fraction <= 1.0)) {
    throw ConfigError("invalid neural-network configuration");
  }
  for (std::size_t h : c.hidden_sizes) {
    if (h < 1) throw ConfigError("hidden layers need at least one unit");
  }
}

}  // namespace

Mlp::Mlp(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2 || sizes_.back() != 1) throw ConfigError("network must end in a single output unit");
  std::size_t count = 0;
  for (std::size_t l = 1; l < sizes_.size(); ++l) {
    if (sizes_[l] < 1 || sizes_[l - 1] < 1) throw ConfigError("empty network layer");
    count += sizes_[l - 1] * sizes_[l] + sizes_[l];
  }
  params_.assign(count, 0.0);
  shift_.assign(sizes_.front(), 0.0);
  scale_.assign(sizes_.front(), 1.0);
}

double Mlp::output_logit(std::span<const double> x) const {
  Pass pass;
  run(*this, x, pass);
  return pass.logit;
}

double Mlp::forward(std::span<const double> x) const {
  // keep p_hat strictly inside (0, 1)
  return std::clamp(logistic(output_logit(x)), 1e-12, 1.0 - 1e-12);
}

void glorot_init(Mlp& net, SplitMix64& rng) {
  const auto& sizes = net.layer_sizes();
  double* p = net.parameters().data();
  for (std::size_t l = 1; l < sizes.size(); ++l) {
    const double r = std::sqrt(6.0 / static_cast<double>(sizes[l - 1] + sizes[l]));
    for (std::size_t k = 0; k < sizes[l - 1] * sizes[l]; ++k) *p++ = r * (2.0 * rng.uniform() - 1.0);
    for (std::size_t k = 0; k < sizes[l]; ++k) *p++ = 0.0;
  }
}

LossGrad mlp_loss_grad(const Mlp& net, std::span<const double> x, std::span<const std::int8_t> w,
                       std::span<const double> v) {
  const std::size_t in = net.input_dim();
  if (w.empty() || w.size() != v.size() || x.size() != w.size() * in) throw DataError("loss batch shape mismatch");
  LossGrad out;
  out.grad.assign(net.parameter_count(), 0.0);
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  if (!(total > 0.0)) throw DataError("loss batch weights sum to zero");
  Pass pass;
  std::vector<double> delta, next;
  const auto offset = layer_offsets(net);
  for (std::size_t r = 0; r < w.size(); ++r) {
    run(net, x.subspan(r * in, in), pass);
    const double a = pass.logit;
    const double y = w[r] > 0 ? 1.0 : 0.0;
    out.loss += v[r] * (y > 0 ? softplus(-a) : softplus(a));
    backprop(net, offset, pass, v[r] * (logistic(a) - y), out.grad, delta, next);
  }
  out.loss /= total;
  for (double& g : out.grad) g /= total;
  return out;
}

Mlp train_mlp(std::span<const double> x, std::span<const std::int8_t> w, std::span<const double> v,
              std::size_t input_dim, const NnetConfig& config, SplitMix64& rng, std::vector<double>* loss_trace) {
  validate(config);
  const std::size_t m = w.size();
  if (m == 0 || v.size() != m || x.size() != m * input_dim) throw DataError("training set shape mismatch");
  std::vector<std::size_t> sizes{input_dim};
  sizes.insert(sizes.end(), config.hidden_sizes.begin(), config.hidden_sizes.end());
  sizes.push_back(1);
  Mlp net(sizes);

  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  if (!(total > 0.0)) throw DataError("training weights sum to zero");
  for (std::size_t c = 0; c < input_dim; ++c) {
    double mu = 0.0;
    for (std::size_t r = 0; r < m; ++r) mu += v[r] * x[r * input_dim + c];
    mu /= total;
    double var = 0.0;
    for (std::size_t r = 0; r < m; ++r) var += v[r] * (x[r * input_dim + c] - mu) * (x[r * input_dim + c] - mu);
    const double sd = std::sqrt(var / total);
    net.input_shift()[c] = mu;
    net.input_scale()[c] = sd > 0.0 && std::isfinite(sd) ? sd : 1.0;
  }
  glorot_init(net, rng);

  // Batch gradients are scaled by 1 / (batch size * mean weight): an unbiased
  // estimate of the full weighted-mean gradient.
  const double mean_v = total / static_cast<double>(m);
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<double> velocity(net.parameter_count(), 0.0);
  std::vector<double> grad(net.parameter_count());
  std::vector<double> delta, next;
  const auto offset = layer_offsets(net);
  Pass pass;
  // One hidden layer is the usual architecture; its batch loop runs on
  // pre-standardized inputs without per-layer bookkeeping.
  const bool single_hidden = sizes.size() == 3;
  std::vector<double> xz;
  if (single_hidden) {
    xz.resize(x.size());
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < input_dim; ++c) {
        xz[r * input_dim + c] = (x[r * input_dim + c] - net.input_shift()[c]) / net.input_scale()[c];
      }
    }
  }
  const std::size_t hidden = sizes[1];
  std::vector<double> act(hidden);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(perm, rng);
    for (std::size_t start = 0; start < m; start += config.batch_size) {
      const std::size_t end = std::min(m, start + config.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      if (single_hidden) {
        const double* W1 = net.parameters().data();
        const double* b1 = W1 + hidden * input_dim;
        const double* W2 = b1 + hidden;
        const double b2 = W2[hidden];
        double* gW1 = grad.data();
        double* gb1 = gW1 + hidden * input_dim;
        double* gW2 = gb1 + hidden;
        double& gb2 = gW2[hidden];
        for (std::size_t b = start; b < end; ++b) {
          const std::size_t r = perm[b];
          const double* xr = xz.data() + r * input_dim;
          double a = b2;
          for (std::size_t j = 0; j < hidden; ++j) {
            double t = b1[j];
            for (std::size_t i = 0; i < input_dim; ++i) t += W1[j * input_dim + i] * xr[i];
            act[j] = std::tanh(t);
            a += W2[j] * act[j];
          }
          const double d = v[r] * (logistic(a) - (w[r] > 0 ? 1.0 : 0.0));
          gb2 += d;
          for (std::size_t j = 0; j < hidden; ++j) {
            gW2[j] += d * act[j];
            const double dj = d * W2[j] * (1.0 - act[j] * act[j]);
            gb1[j] += dj;
            for (std::size_t i = 0; i < input_dim; ++i) gW1[j * input_dim + i] += dj * xr[i];
          }
        }
      } else {
        for (std::size_t b = start; b < end; ++b) {
          const std::size_t r = perm[b];
          run(net, x.subspan(r * input_dim, input_dim), pass);
          const double y = w[r] > 0 ? 1.0 : 0.0;
          backprop(net, offset, pass, v[r] * (logistic(pass.logit) - y), grad, delta, next);
        }
      }
      const double norm = 1.0 / (static_cast<double>(end - start) * mean_v);
      auto& params = net.parameters();
      for (std::size_t k = 0; k < params.size(); ++k) {
        velocity[k] = config.momentum * velocity[k] - config.learning_rate * grad[k] * norm;
        params[k] += velocity[k];
      }
    }
    if (loss_trace) loss_trace->push_back(mlp_loss_grad(net, x, w, v).loss);
  }
  for (double p : net.parameters()) {
    if (!std::isfinite(p)) throw NumericalError("network training diverged");
  }
  return net;
}

NnetEnsemble::NnetEnsemble(FeatureMap features, std::vector<Mlp> nets, std::size_t skipped)
    : features_(std::move(features)), nets_(std::move(nets)), skipped_(skipped) {
  if (nets_.empty()) throw ConfigError("an ensemble needs at least one network");
  for (const auto& n : nets_) {
    if (n.input_dim() != features_.output_dim()) throw ConfigError("network input does not match the features");
  }
}

double NnetEnsemble::predict(std::span<const double> z) const {
  const std::vector<double> psi = features_.apply(z);
  std::vector<double> taus(nets_.size());
  for (std::size_t j = 0; j < nets_.size(); ++j) taus[j] = 2.0 * nets_[j].forward(psi) - 1.0;
  return median(std::move(taus));
}

NnetEnsemble fit_ensemble(const Dataset& data, const PairDataset& pairs, const FeatureMap& features,
                          const NnetConfig& config) {
  validate(config);
  if (data.size() < 2) throw DataError("network ensemble needs at least two observations");
  if (pairs.source_size() != data.size()) throw DataError("pairs were not built from this dataset");
  const std::size_t keep = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::lround(config.row_fraction * static_cast<double>(data.size()))), 2, data.size());
  const std::vector<double> psi = pair_feature_matrix(features, pairs);
  const std::size_t q = features.output_dim();
  std::vector<std::optional<Mlp>> slots(config.n_net);
  parallel_for(config.n_net, [&](std::size_t j) {
    SplitMix64 rng(config.seed + j);
    for (int attempt = 0; attempt <= 3; ++attempt) {
      const auto rows = sample_without_replacement(data.size(), keep, rng);
      std::vector<std::uint8_t> in_sample(data.size(), 0);
      for (std::size_t r : rows) in_sample[r] = 1;
      std::vector<double> x;
      std::vector<std::int8_t> w;
      std::vector<double> v;
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        if (!in_sample[pairs.first(k)] || !in_sample[pairs.second(k)]) continue;
        x.insert(x.end(), psi.begin() + static_cast<std::ptrdiff_t>(k * q),
                 psi.begin() + static_cast<std::ptrdiff_t>((k + 1) * q));
        w.push_back(static_cast<std::int8_t>(pairs.w(k)));
        v.push_back(pairs.v(k));
      }
      if (w.empty()) continue;
      slots[j] = train_mlp(x, w, v, q, config, rng);
      return;
    }
  });
  std::vector<Mlp> nets;
  std::size_t skipped = 0;
  for (auto& s : slots) {
    if (s) nets.push_back(std::move(*s));
    else ++skipped;
  }
  if (nets.empty()) throw DataError("every network subsample produced an empty pair set");
  return NnetEnsemble(features, std::move(nets), skipped);
}

NnetEnsemble fit_ensemble(const Dataset& data, const KernelSpec& kernel, const FeatureMap& features,
                          const NnetConfig& config) {
  return fit_ensemble(data, build_pair_dataset(data, kernel), features, config);
}

nlohmann::json to_json(const NnetConfig& c) {
  return {{"n_net", c.n_net},           {"hidden_sizes", c.hidden_sizes},
          {"row_fraction", c.row_fraction}, {"epochs", c.epochs},
          {"learning_rate", c.learning_rate}, {"momentum", c.momentum},
          {"batch_size", c.batch_size},     {"seed", c.seed}};
}

NnetConfig nnet_config_from_json(const nlohmann::json& j) {
  NnetConfig c;
  c.n_net = j.value("n_net", c.n_net);
  c.hidden_sizes = j.value("hidden_sizes", c.hidden_sizes);
  c.row_fraction = j.value("row_fraction", c.row_fraction);
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.momentum = j.value("momentum", c.momentum);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  validate(c);
  return c;
}

nlohmann::json to_json(const Mlp& net) {
  return {{"layer_sizes", net.layer_sizes()},
          {"parameters", net.parameters()},
          {"input_shift", net.input_shift()},
          {"input_scale", net.input_scale()}};
}

Mlp mlp_from_json(const nlohmann::json& j) {
  Mlp net(j.at("layer_sizes").get<std::vector<std::size_t>>());
  auto params = j.at("parameters").get<std::vector<double>>();
  auto shift = j.at("input_shift").get<std::vector<double>>();
  auto scale = j.at("input_scale").get<std::vector<double>>();
  if (params.size() != net.parameter_count() || shift.size() != net.input_dim() || scale.size() != net.input_dim()) {
    throw ConfigError("network parameter arrays do not match the layer sizes");
  }
  net.parameters() = std::move(params);
  net.input_shift() = std::move(shift);
  net.input_scale() = std::move(scale);
  return net;
}

nlohmann::json to_json(const NnetEnsemble& e) {
  nlohmann::json nets = nlohmann::json::array();
  for (const auto& n : e.nets()) nets.push_back(to_json(n));
  return {{"method", "nnet"},
          {"features", to_json(e.features())},
          {"feature_dim", e.features().input_dim()},
          {"skipped", e.skipped()},
          {"nets", nets}};
}

NnetEnsemble ensemble_from_json(const nlohmann::json& j) {
  FeatureMap features = feature_map_from_json(j.at("features"), j.value("feature_dim", std::size_t{1}));
  std::vector<Mlp> nets;
  for (const auto& n : j.at("nets")) nets.push_back(mlp_from_json(n));
  return NnetEnsemble(std::move(features), std::move(nets), j.value("skipped", std::size_t{0}));
}

}  // namespace ckt
