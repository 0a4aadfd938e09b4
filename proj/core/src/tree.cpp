#include "ckt/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ckt/errors.hpp"

namespace ckt {
namespace {

double gini(double positive, double total) {
  const double p = positive / total;
  return 2.0 * p * (1.0 - p);
}

struct NodeStats {
  double weight = 0.0;
  double positive = 0.0;
};

// Scan of one feature over a node's records sorted by that feature.
SplitResult scan_sorted(const std::uint32_t* order, std::size_t count, const TreeTrainingData& data,
                        std::size_t feature, NodeStats node, double min_child_weight) {
  SplitResult best;
  best.decrease = -std::numeric_limits<double>::infinity();
  const double parent = gini(node.positive, node.weight);
  double wl = 0.0;
  double pl = 0.0;
  for (std::size_t k = 0; k + 1 < count; ++k) {
    const std::uint32_t r = order[k];
    wl += data.v[r];
    if (data.w[r] > 0) pl += data.v[r];
    const double xk = data.x[r * data.q + feature];
    const double xn = data.x[order[k + 1] * data.q + feature];
    if (!(xn > xk)) continue;
    const double wr = node.weight - wl;
    if (wl < min_child_weight || wr < min_child_weight || !(wr > 0.0)) continue;
    const double pr = node.positive - pl;
    const double decrease = parent - (wl / node.weight) * gini(pl, wl) - (wr / node.weight) * gini(pr, wr);
    if (decrease > best.decrease) {
      double threshold = xk + 0.5 * (xn - xk);
      if (!(threshold < xn)) threshold = xk;
      best = {threshold, decrease, true};
    }
  }
  if (!best.valid) best.decrease = 0.0;
  return best;
}

bool canonical_less(const TreeTrainingData& d, std::size_t f, std::uint32_t a, std::uint32_t b) {
  const double xa = d.x[a * d.q + f];
  const double xb = d.x[b * d.q + f];
  if (xa != xb) return xa < xb;
  if (d.w[a] != d.w[b]) return d.w[a] < d.w[b];
  if (d.v[a] != d.v[b]) return d.v[a] < d.v[b];
  return a < b;
}

class Grower {
 public:
  Grower(const TreeTrainingData& data, const TreeConfig& config, std::vector<std::size_t> features,
         std::vector<std::vector<std::uint32_t>> order)
      : data_(data), config_(config), features_(std::move(features)), order_(std::move(order)),
        goes_left_(data.size(), 0), buffer_(order_.empty() ? 0 : order_[0].size()) {}

  std::vector<TreeNode> run() {
    const std::size_t m = order_[0].size();
    root_weight_ = stats(0, m).weight;
    if (!(root_weight_ > 0.0)) throw DataError("tree training weights sum to zero");
    build(0, m, 0);
    return std::move(nodes_);
  }

 private:
  NodeStats stats(std::size_t lo, std::size_t hi) const {
    NodeStats s;
    for (std::size_t k = lo; k < hi; ++k) {
      const std::uint32_t r = order_[0][k];
      s.weight += data_.v[r];
      if (data_.w[r] > 0) s.positive += data_.v[r];
    }
    return s;
  }

  int build(std::size_t lo, std::size_t hi, int depth) {
    const NodeStats s = stats(lo, hi);
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    nodes_[id].weight = s.weight;
    nodes_[id].p_hat = std::clamp(s.positive / s.weight, 0.0, 1.0);

    const double min_child = config_.min_node_weight * root_weight_;
    if (depth >= config_.max_depth || s.positive <= 0.0 || s.positive >= s.weight || s.weight < 2.0 * min_child) {
      return id;
    }
    SplitResult best;
    std::size_t best_slot = 0;
    for (std::size_t slot = 0; slot < features_.size(); ++slot) {
      const SplitResult r = scan_sorted(order_[slot].data() + lo, hi - lo, data_, features_[slot], s, min_child);
      if (r.valid && (!best.valid || r.decrease > best.decrease)) {
        best = r;
        best_slot = slot;
      }
    }
    if (!best.valid || !(best.decrease > 0.0) ||
        (s.weight / root_weight_) * best.decrease < config_.min_impurity_decrease) {
      return id;
    }

    const std::size_t f = features_[best_slot];
    std::size_t n_left = 0;
    for (std::size_t k = lo; k < hi; ++k) {
      const std::uint32_t r = order_[0][k];
      goes_left_[r] = data_.x[r * data_.q + f] <= best.threshold;
      n_left += goes_left_[r];
    }
    for (auto& ord : order_) {
      std::size_t a = lo;
      std::size_t b = 0;
      for (std::size_t k = lo; k < hi; ++k) {
        if (goes_left_[ord[k]]) ord[a++] = ord[k];
        else buffer_[b++] = ord[k];
      }
      std::copy(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(b), ord.begin() + static_cast<std::ptrdiff_t>(a));
    }
    nodes_[id].feature = static_cast<int>(f);
    nodes_[id].threshold = best.threshold;
    const int left = build(lo, lo + n_left, depth + 1);
    const int right = build(lo + n_left, hi, depth + 1);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  const TreeTrainingData& data_;
  const TreeConfig& config_;
  std::vector<std::size_t> features_;
  std::vector<std::vector<std::uint32_t>> order_;
  std::vector<std::uint8_t> goes_left_;
  std::vector<std::uint32_t> buffer_;
  std::vector<TreeNode> nodes_;
  double root_weight_ = 0.0;
};

void validate(const TreeConfig& c) {
  if (c.max_depth < 0 || !(c.min_node_weight >= 0.0) || !(c.min_impurity_decrease >= 0.0)) {
    throw ConfigError("invalid tree configuration");
  }
}

}  // namespace

FittedTree::FittedTree(FeatureMap features, std::vector<TreeNode> nodes)
    : features_(std::move(features)), nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw ConfigError("a tree needs at least one node");
  for (const auto& n : nodes_) {
    if (n.feature >= 0) {
      const auto size = static_cast<int>(nodes_.size());
      if (n.left <= 0 || n.right <= 0 || n.left >= size || n.right >= size ||
          static_cast<std::size_t>(n.feature) >= features_.output_dim() || !std::isfinite(n.threshold)) {
        throw ConfigError("malformed tree node");
      }
    }
  }
}

double FittedTree::predict(std::span<const double> z) const { return predict_features(features_.apply(z)); }

double FittedTree::predict_features(std::span<const double> psi) const {
  if (psi.size() != features_.output_dim()) throw DataError("feature vector length mismatch");
  std::size_t k = 0;
  while (nodes_[k].feature >= 0) {
    const TreeNode& n = nodes_[k];
    k = static_cast<std::size_t>(psi[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return 2.0 * nodes_[k].p_hat - 1.0;
}

std::size_t FittedTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

int FittedTree::depth() const {
  std::vector<int> d(nodes_.size(), 0);
  int best = 0;
  for (std::size_t k = 0; k < nodes_.size(); ++k) {  // children always follow their parent
    best = std::max(best, d[k]);
    if (nodes_[k].feature >= 0) {
      d[static_cast<std::size_t>(nodes_[k].left)] = d[k] + 1;
      d[static_cast<std::size_t>(nodes_[k].right)] = d[k] + 1;
    }
  }
  return best;
}

SplitResult best_weighted_split(std::span<const double> x, std::span<const int> w, std::span<const double> v) {
  if (x.size() != w.size() || x.size() != v.size()) throw DataError("split inputs differ in length");
  TreeTrainingData d;
  d.q = 1;
  d.x.assign(x.begin(), x.end());
  d.w.resize(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) d.w[k] = static_cast<std::int8_t>(w[k] > 0 ? 1 : -1);
  d.v.assign(v.begin(), v.end());
  std::vector<std::uint32_t> order(x.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return canonical_less(d, 0, a, b); });
  NodeStats s;
  for (std::size_t k = 0; k < x.size(); ++k) {
    s.weight += d.v[k];
    if (d.w[k] > 0) s.positive += d.v[k];
  }
  if (!(s.weight > 0.0)) throw DataError("split needs a positive node weight");
  return scan_sorted(order.data(), order.size(), d, 0, s, 0.0);
}

TreeTrainingData TreeTrainingData::from_pairs(const PairDataset& pairs, const FeatureMap& features) {
  TreeTrainingData d;
  d.q = features.output_dim();
  d.x = pair_feature_matrix(features, pairs);
  d.w.assign(pairs.labels().begin(), pairs.labels().end());
  d.v.assign(pairs.weights().begin(), pairs.weights().end());
  d.order.resize(d.q);
  for (std::size_t f = 0; f < d.q; ++f) {
    auto& ord = d.order[f];
    ord.resize(d.size());
    std::iota(ord.begin(), ord.end(), 0u);
    std::sort(ord.begin(), ord.end(), [&](auto a, auto b) { return canonical_less(d, f, a, b); });
  }
  return d;
}

FittedTree grow_tree(const TreeTrainingData& data, const FeatureMap& features, const TreeConfig& config,
                     std::span<const std::uint8_t> record_mask, std::span<const std::size_t> feature_subset) {
  validate(config);
  if (features.output_dim() != data.q) throw DataError("feature map does not match the training data");
  if (!record_mask.empty() && record_mask.size() != data.size()) throw DataError("record mask length mismatch");
  std::vector<std::size_t> feats(feature_subset.begin(), feature_subset.end());
  if (feats.empty()) {
    feats.resize(data.q);
    std::iota(feats.begin(), feats.end(), std::size_t{0});
  }
  std::vector<std::vector<std::uint32_t>> order(feats.size());
  for (std::size_t s = 0; s < feats.size(); ++s) {
    if (feats[s] >= data.q) throw ConfigError("feature index out of range");
    const auto& global = data.order[feats[s]];
    if (record_mask.empty()) {
      order[s] = global;
    } else {
      order[s].reserve(global.size());
      for (std::uint32_t r : global) {
        if (record_mask[r]) order[s].push_back(r);
      }
    }
  }
  if (order.empty() || order[0].empty()) throw DataError("cannot grow a tree on an empty record set");
  return FittedTree(features, Grower(data, config, std::move(feats), std::move(order)).run());
}

FittedTree fit_tree(const PairDataset& pairs, const FeatureMap& features, const TreeConfig& config) {
  if (pairs.empty()) throw DataError("cannot fit a tree on an empty pair dataset");
  return grow_tree(TreeTrainingData::from_pairs(pairs, features), features, config);
}

nlohmann::json to_json(const TreeConfig& c) {
  return {{"max_depth", c.max_depth}, {"min_node_weight", c.min_node_weight},
          {"min_impurity_decrease", c.min_impurity_decrease}};
}

TreeConfig tree_config_from_json(const nlohmann::json& j) {
  TreeConfig c;
  c.max_depth = j.value("max_depth", c.max_depth);
  c.min_node_weight = j.value("min_node_weight", c.min_node_weight);
  c.min_impurity_decrease = j.value("min_impurity_decrease", c.min_impurity_decrease);
  validate(c);
  return c;
}

nlohmann::json to_json(const FittedTree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : tree.nodes()) {
    if (n.feature >= 0) {
      nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right},
                       {"p_hat", n.p_hat}, {"weight", n.weight}});
    } else {
      nodes.push_back({{"p_hat", n.p_hat}, {"weight", n.weight}});
    }
  }
  return {{"method", "tree"},
          {"features", to_json(tree.features())},
          {"feature_dim", tree.features().input_dim()},
          {"nodes", nodes}};
}

FittedTree tree_from_json(const nlohmann::json& j) {
  FeatureMap features = feature_map_from_json(j.at("features"), j.value("feature_dim", std::size_t{1}));
  std::vector<TreeNode> nodes;
  for (const auto& n : j.at("nodes")) {
    TreeNode node;
    node.feature = n.value("feature", -1);
    node.threshold = n.value("threshold", 0.0);
    node.left = n.value("left", -1);
    node.right = n.value("right", -1);
    node.p_hat = n.at("p_hat").get<double>();
    node.weight = n.value("weight", 0.0);
    nodes.push_back(node);
  }
  return FittedTree(std::move(features), std::move(nodes));
}

}  // namespace ckt
