#include "ckt/copula.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <random>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "ckt/errors.hpp"
#include "ckt/stats.hpp"

namespace ckt {
namespace {

double frank_tau(double theta) {
  if (theta == 0.0) return 0.0;
  return 1.0 - 4.0 / theta * (1.0 - debye1(theta));
}

double frank_theta(double tau) {
  static std::mutex mutex;
  static std::map<double, double> cache;
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(tau); it != cache.end()) return it->second;
  }
  const double target = std::abs(tau);
  double lo = 0.0;
  double hi = 1.0;
  while (frank_tau(hi) < target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) throw NumericalError("Frank parameter inversion failed to bracket");
  }
  while (hi - lo > 1e-10 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    (frank_tau(mid) < target ? lo : hi) = mid;
  }
  const double theta = std::copysign(0.5 * (lo + hi), tau);
  std::lock_guard lock(mutex);
  cache.emplace(tau, theta);
  return theta;
}

void require_tau(double tau, double lower_inclusive) {
  if (!std::isfinite(tau) || tau < lower_inclusive || tau >= 1.0 || (lower_inclusive < 0.0 && tau <= -1.0)) {
    throw ConfigError("Kendall's tau outside the family's admissible range");
  }
}

double standard_normal(SplitMix64& rng) { return std::normal_distribution<double>()(rng); }

}  // namespace

std::string to_string(CopulaFamily family) {
  switch (family) {
    case CopulaFamily::gaussian: return "gaussian";
    case CopulaFamily::student: return "student";
    case CopulaFamily::clayton: return "clayton";
    case CopulaFamily::gumbel: return "gumbel";
    case CopulaFamily::frank: return "frank";
  }
  return "gaussian";
}

CopulaFamily copula_family_from_string(const std::string& name) {
  if (name == "gaussian") return CopulaFamily::gaussian;
  if (name == "student") return CopulaFamily::student;
  if (name == "clayton") return CopulaFamily::clayton;
  if (name == "gumbel") return CopulaFamily::gumbel;
  if (name == "frank") return CopulaFamily::frank;
  throw ConfigError("unknown copula family '" + name + "'");
}

double debye1(double x) {
  if (x == 0.0) return 1.0;
  auto integrand = [](double t) { return t == 0.0 ? 1.0 : t / std::expm1(t); };
  const double integral = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, x, 15, 1e-14);
  return integral / x;
}

double tau_to_param(CopulaFamily family, double tau) {
  switch (family) {
    case CopulaFamily::gaussian:
    case CopulaFamily::student:
      require_tau(tau, -1.0);
      return std::sin(std::numbers::pi * tau / 2.0);
    case CopulaFamily::clayton:
      require_tau(tau, 0.0);
      return 2.0 * tau / (1.0 - tau);
    case CopulaFamily::gumbel:
      require_tau(tau, 0.0);
      return 1.0 / (1.0 - tau);
    case CopulaFamily::frank:
      require_tau(tau, -1.0);
      return tau == 0.0 ? 0.0 : frank_theta(tau);
  }
  return 0.0;
}

double param_to_tau(CopulaFamily family, double param) {
  switch (family) {
    case CopulaFamily::gaussian:
    case CopulaFamily::student: return 2.0 / std::numbers::pi * std::asin(param);
    case CopulaFamily::clayton: return param / (param + 2.0);
    case CopulaFamily::gumbel: return 1.0 - 1.0 / param;
    case CopulaFamily::frank: return frank_tau(param);
  }
  return 0.0;
}

double conditional_inverse(CopulaFamily family, double param, double u1, double p) {
  switch (family) {
    case CopulaFamily::clayton: {
      if (param == 0.0) return p;
      const double t = std::pow(u1, -param) * (std::pow(p, -param / (1.0 + param)) - 1.0) + 1.0;
      return std::pow(t, -1.0 / param);
    }
    case CopulaFamily::gumbel: {
      if (param == 1.0) return p;
      // With x = -ln u1 and w = (x^theta + y^theta)^(1/theta) >= x, the
      // conditional cdf equals p iff w + (theta - 1) ln w = x + (theta - 1) ln x - ln p.
      const double x = -std::log(u1);
      const double c = x + (param - 1.0) * std::log(x) - std::log(p);
      auto f = [&](double w) { return w + (param - 1.0) * std::log(w) - c; };
      double lo = x;
      double hi = x - std::log(p);
      if (f(lo) >= 0.0) return p;
      std::uintmax_t iters = 200;
      const auto root = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
      const double w = 0.5 * (root.first + root.second);
      const double y = std::pow(std::max(0.0, std::pow(w, param) - std::pow(x, param)), 1.0 / param);
      return std::exp(-y);
    }
    case CopulaFamily::frank: {
      if (param == 0.0) return p;
      const double a = std::exp(-param * u1);
      return -std::log1p(p * std::expm1(-param) / (p + (1.0 - p) * a)) / param;
    }
    default: throw ConfigError("conditional inverse is only implemented for Archimedean families");
  }
}

std::pair<double, double> sample_copula(CopulaFamily family, double param, SplitMix64& rng, double df) {
  switch (family) {
    case CopulaFamily::gaussian:
    case CopulaFamily::student: {
      if (!(param > -1.0 && param < 1.0)) throw ConfigError("correlation must lie in (-1, 1)");
      const double z1 = standard_normal(rng);
      const double z2 = param * z1 + std::sqrt(1.0 - param * param) * standard_normal(rng);
      if (family == CopulaFamily::gaussian) return {normal_cdf(z1), normal_cdf(z2)};
      if (!(df > 0.0)) throw ConfigError("student degrees of freedom must be positive");
      const double mix = std::sqrt(std::chi_squared_distribution<double>(df)(rng) / df);
      const boost::math::students_t_distribution<double> t(df);
      return {boost::math::cdf(t, z1 / mix), boost::math::cdf(t, z2 / mix)};
    }
    case CopulaFamily::clayton:
      if (!(param >= 0.0)) throw ConfigError("Clayton parameter must be nonnegative");
      break;
    case CopulaFamily::gumbel:
      if (!(param >= 1.0)) throw ConfigError("Gumbel parameter must be at least 1");
      break;
    case CopulaFamily::frank:
      if (!std::isfinite(param)) throw ConfigError("Frank parameter must be finite");
      break;
  }
  const double u1 = rng.uniform();
  const double p = rng.uniform();
  const double u2 = std::clamp(conditional_inverse(family, param, u1, p), 1e-300, 1.0 - 1e-16);
  return {u1, u2};
}

}  // namespace ckt
