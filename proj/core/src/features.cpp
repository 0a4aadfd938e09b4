#include "ckt/features.hpp"

#include <cmath>
#include <numbers>

#include "ckt/dataset.hpp"
#include "ckt/errors.hpp"

namespace ckt {
namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

FeatureTerm monomial(int power) {
  FeatureTerm t;
  t.kind = FeatureTerm::Kind::scaled_monomial;
  t.scale = std::ldexp(1.0, -power);  // 2^(-i+1) with power = i-1
  t.center = 0.5;
  t.power = power;
  return t;
}

FeatureTerm constant() {
  FeatureTerm t;
  t.kind = FeatureTerm::Kind::constant;
  return t;
}

FeatureTerm trig(FeatureTerm::Kind kind, int freq) {
  FeatureTerm t;
  t.kind = kind;
  t.freq = freq;
  return t;
}

std::vector<FeatureTerm> polynomial_terms(int count) {
  std::vector<FeatureTerm> terms;
  for (int power = 0; power < count; ++power) terms.push_back(monomial(power));
  return terms;
}

std::vector<FeatureTerm> fourier_terms(int order) {
  std::vector<FeatureTerm> terms{constant()};
  for (int i = 1; i <= order; ++i) {
    terms.push_back(trig(FeatureTerm::Kind::cosine, i));
    terms.push_back(trig(FeatureTerm::Kind::sine, i));
  }
  return terms;
}

const char* kind_name(FeatureTerm::Kind kind) {
  switch (kind) {
    case FeatureTerm::Kind::identity: return "identity";
    case FeatureTerm::Kind::scaled_monomial: return "scaled-monomial";
    case FeatureTerm::Kind::cosine: return "cosine";
    case FeatureTerm::Kind::sine: return "sine";
    case FeatureTerm::Kind::constant: return "constant";
  }
  return "?";
}

FeatureTerm::Kind kind_from_name(const std::string& name) {
  if (name == "identity") return FeatureTerm::Kind::identity;
  if (name == "scaled-monomial") return FeatureTerm::Kind::scaled_monomial;
  if (name == "cosine") return FeatureTerm::Kind::cosine;
  if (name == "sine") return FeatureTerm::Kind::sine;
  if (name == "constant") return FeatureTerm::Kind::constant;
  throw ConfigError("unknown feature term kind '" + name + "'");
}

}  // namespace

double FeatureTerm::operator()(std::span<const double> z) const {
  const double x = z[coord];
  switch (kind) {
    case Kind::identity: return x;
    case Kind::scaled_monomial: return scale * std::pow(x - center, power);
    case Kind::cosine: return std::cos(two_pi * freq * x);
    case Kind::sine: return std::sin(two_pi * freq * x);
    case Kind::constant: return scale;
  }
  return 0.0;
}

FeatureMap::FeatureMap(std::string id, std::size_t input_dim, std::vector<FeatureTerm> terms)
    : id_(std::move(id)), p_in_(input_dim), terms_(std::move(terms)) {
  if (p_in_ == 0) throw ConfigError("feature map needs at least one input coordinate");
  if (terms_.empty()) throw ConfigError("feature map needs at least one term");
  for (const auto& t : terms_) {
    if (t.coord >= p_in_) throw ConfigError("feature term refers to a missing covariate");
    if (t.kind == FeatureTerm::Kind::scaled_monomial && t.power < 0) {
      throw ConfigError("monomial power must be nonnegative");
    }
  }
}

void FeatureMap::apply(std::span<const double> z, std::span<double> out) const {
  if (z.size() != p_in_) {
    throw DataError("feature map '" + id_ + "' expects " + std::to_string(p_in_) + " covariates, got " +
                    std::to_string(z.size()));
  }
  for (std::size_t k = 0; k < terms_.size(); ++k) {
    out[k] = terms_[k](z);
    if (!std::isfinite(out[k])) throw DataError("feature map '" + id_ + "' produced a non-finite value");
  }
}

std::vector<double> FeatureMap::apply(std::span<const double> z) const {
  std::vector<double> out(terms_.size());
  apply(z, out);
  return out;
}

FeatureMap psi_dictionary(int id) {
  switch (id) {
    case 1: {
      FeatureTerm t;
      return FeatureMap("psi1", 1, {t});
    }
    case 2: return FeatureMap("psi2", 1, polynomial_terms(5));
    case 3: return FeatureMap("psi3", 1, polynomial_terms(11));
    case 4: return FeatureMap("psi4", 1, fourier_terms(2));
    case 5: return FeatureMap("psi5", 1, fourier_terms(5));
    case 6: {
      auto terms = polynomial_terms(5);
      auto fourier = fourier_terms(2);
      terms.insert(terms.end(), fourier.begin(), fourier.end());
      return FeatureMap("psi6", 1, std::move(terms));
    }
    default: throw ConfigError("unknown dictionary psi" + std::to_string(id));
  }
}

FeatureMap coordinate_features(std::size_t p) {
  std::vector<FeatureTerm> terms(p);
  for (std::size_t c = 0; c < p; ++c) terms[c].coord = c;
  return FeatureMap("coordinates", p, std::move(terms));
}

FeatureMap custom_features(std::size_t p, std::vector<FeatureTerm> terms) {
  return FeatureMap("custom", p, std::move(terms));
}

FeatureMap feature_map_from_name(const std::string& name, std::size_t p) {
  if (name == "coordinates") return coordinate_features(p);
  if (name.size() == 4 && name.rfind("psi", 0) == 0 && name[3] >= '1' && name[3] <= '6') {
    if (p != 1) throw ConfigError("dictionary " + name + " is defined for a scalar covariate only");
    return psi_dictionary(name[3] - '0');
  }
  throw ConfigError("unknown feature map '" + name + "'");
}

FeatureMap feature_map_from_json(const nlohmann::json& j, std::size_t p) {
  if (j.is_string()) return feature_map_from_name(j.get<std::string>(), p);
  if (!j.is_object()) throw ConfigError("feature map must be a name or an object");
  if (j.contains("id") && j.at("id") != "custom") return feature_map_from_name(j.at("id"), p);
  const std::size_t p_in = j.value("p", p);
  std::vector<FeatureTerm> terms;
  for (const auto& t : j.at("terms")) {
    FeatureTerm term;
    term.kind = kind_from_name(t.at("kind"));
    term.coord = t.value("coord", std::size_t{0});
    term.scale = t.value("scale", 1.0);
    term.center = t.value("center", 0.0);
    term.power = t.value("power", 1);
    term.freq = t.value("freq", 1.0);
    terms.push_back(term);
  }
  return custom_features(p_in, std::move(terms));
}

nlohmann::json to_json(const FeatureMap& map) {
  if (map.id() != "custom") return map.id();
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : map.terms()) {
    terms.push_back({{"kind", kind_name(t.kind)},
                     {"coord", t.coord},
                     {"scale", t.scale},
                     {"center", t.center},
                     {"power", t.power},
                     {"freq", t.freq}});
  }
  return {{"id", "custom"}, {"p", map.input_dim()}, {"terms", terms}};
}

std::vector<double> pair_feature_matrix(const FeatureMap& map, const PairDataset& pairs) {
  const std::size_t q = map.output_dim();
  std::vector<double> x(pairs.size() * q);
  for (std::size_t k = 0; k < pairs.size(); ++k) map.apply(pairs.z_tilde(k), {x.data() + k * q, q});
  return x;
}

}  // namespace ckt
