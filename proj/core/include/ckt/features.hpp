#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ckt {

class PairDataset;

/// One output coordinate of a feature map, evaluated on covariate `coord`:
///   identity        z
///   scaled_monomial scale * (z - center)^power
///   cosine          cos(2 pi freq z)
///   sine            sin(2 pi freq z)
///   constant        scale
struct FeatureTerm {
  enum class Kind { identity, scaled_monomial, cosine, sine, constant };

  Kind kind = Kind::identity;
  std::size_t coord = 0;
  double scale = 1.0;
  double center = 0.0;
  int power = 1;
  double freq = 1.0;

  double operator()(std::span<const double> z) const;
};

/// The dictionary psi: R^p -> R^p'. Built from a declarative term list so
/// that it serializes into experiment configs.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(std::string id, std::size_t input_dim, std::vector<FeatureTerm> terms);

  const std::string& id() const { return id_; }
  std::size_t input_dim() const { return p_in_; }
  std::size_t output_dim() const { return terms_.size(); }
  const std::vector<FeatureTerm>& terms() const { return terms_; }

  /// Writes psi(z) to out; throws DataError on a dimension mismatch or a
  /// non-finite value.
  void apply(std::span<const double> z, std::span<double> out) const;
  std::vector<double> apply(std::span<const double> z) const;

 private:
  std::string id_;
  std::size_t p_in_ = 0;
  std::vector<FeatureTerm> terms_;
};

/// psi^(1) ... psi^(6) on a scalar covariate.
FeatureMap psi_dictionary(int id);

/// The coordinate projections z -> z for a p-dimensional covariate.
FeatureMap coordinate_features(std::size_t p);

FeatureMap custom_features(std::size_t p, std::vector<FeatureTerm> terms);

/// "psi1".."psi6" or "coordinates".
FeatureMap feature_map_from_name(const std::string& name, std::size_t p);

/// Either a dictionary name or {"p": .., "terms": [...]}.
FeatureMap feature_map_from_json(const nlohmann::json& j, std::size_t p);
nlohmann::json to_json(const FeatureMap& map);

/// Row-major |pairs| x p' matrix of psi(z_tilde_k).
std::vector<double> pair_feature_matrix(const FeatureMap& map, const PairDataset& pairs);

}  // namespace ckt
