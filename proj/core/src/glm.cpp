#include "ckt/glm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include "ckt/errors.hpp"
#include "ckt/knn.hpp"
#include "ckt/parallel.hpp"
#include "ckt/rng.hpp"
#include "ckt/stats.hpp"

namespace ckt {
namespace {

constexpr double kClampEps = 1e-12;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kInvSqrt2 = 0.70710678118654752440;

double normal_pdf(double t) { return kInvSqrt2Pi * std::exp(-0.5 * t * t); }

// phi(t) / Phi(t), continued fraction for the Mills ratio in the far left tail.
double inverse_mills(double t) {
  if (t > -5.0) return normal_pdf(t) / (0.5 * std::erfc(-t * kInvSqrt2));
  const double x = -t;
  double frac = x;
  for (int k = 60; k >= 1; --k) frac = x + k / frac;
  return frac;  // 1 / R(x) with R(x) = 1 / (x + 1/(x + 2/(x + ...)))
}

double numeric_derivative(const LinkFunction::Fn& f, double t) {
  const double h = 1e-5 * std::max(1.0, std::abs(t));
  return (f(t + h) - f(t - h)) / (2.0 * h);
}

// log q, d/dt log q, d2/dt2 log q with q = (1 + y g(t)) / 2.
struct Term {
  double value, d1, d2;
};

Term log_half_one_plus(const LinkFunction& link, int y, double t, ClampCounter* clamps) {
  const double floor_value = std::log(0.5 * kClampEps);
  Term term{};
  switch (link.kind) {
    case LinkFunction::Kind::logit: {
      const double s = y * t;  // log sigma(s)
      const double value = s > 0 ? -std::log1p(std::exp(-s)) : s - std::log1p(std::exp(s));
      const double sig_pos = 1.0 / (1.0 + std::exp(-s));
      const double sig_neg = 1.0 - sig_pos;
      term = {value, y * sig_neg, -sig_pos * sig_neg};
      break;
    }
    case LinkFunction::Kind::probit: {
      const double s = y * t;  // log Phi(s)
      const double phi_cdf = 0.5 * std::erfc(-s * kInvSqrt2);
      const double r = inverse_mills(s);
      term = {std::log(phi_cdf), y * r, -r * (s + r)};
      if (phi_cdf <= 0.0) term.value = floor_value;
      break;
    }
    case LinkFunction::Kind::custom: {
      const double g = link.g(t);
      const double dg = link.dg ? link.dg(t) : numeric_derivative(link.g, t);
      const double d2g = link.d2g ? link.d2g(t)
                                  : (link.dg ? numeric_derivative(link.dg, t)
                                             : numeric_derivative([&](double s) { return numeric_derivative(link.g, s); }, t));
      const double a = std::max(1.0 + y * g, kClampEps);
      term = {std::log(0.5 * a), y * dg / a, (y * d2g * a - dg * dg) / (a * a)};
      break;
    }
  }
  if (term.value < floor_value) {
    term.value = floor_value;
    if (clamps) ++clamps->count;
  }
  return term;
}

// Weighted rows (psi(anchor), label, weight) over which L_n is a plain sum.
struct Design {
  std::size_t q = 0;
  std::vector<double> x;
  std::vector<int> y;
  std::vector<double> v;
  double norm = 1.0;  // n (n - 1)

  std::size_t rows() const { return y.size(); }
  const double* row(std::size_t r) const { return x.data() + r * q; }
};

Design make_design(const PairDataset& pairs, const FeatureMap& features, Anchor anchor) {
  if (features.input_dim() != pairs.dim()) {
    throw DataError("feature map input dimension does not match the covariate dimension");
  }
  if (anchor == Anchor::endpoints && !pairs.has_endpoints()) {
    throw DataError("endpoint-anchored likelihood needs pairs built with keep_endpoints");
  }
  Design d;
  d.q = features.output_dim();
  const double n = static_cast<double>(pairs.source_size());
  d.norm = n * (n - 1.0);
  if (!(d.norm > 0.0)) d.norm = 1.0;
  const std::size_t m = pairs.size();
  const std::size_t rows = anchor == Anchor::midpoint ? m : 2 * m;
  d.x.resize(rows * d.q);
  d.y.reserve(rows);
  d.v.reserve(rows);
  std::size_t r = 0;
  for (std::size_t k = 0; k < m; ++k) {
    if (anchor == Anchor::midpoint) {
      features.apply(pairs.z_tilde(k), {d.x.data() + r++ * d.q, d.q});
      d.y.push_back(pairs.w(k));
      d.v.push_back(2.0 * pairs.v(k));  // both ordered terms share the anchor
    } else {
      features.apply(pairs.z_first(k), {d.x.data() + r++ * d.q, d.q});
      features.apply(pairs.z_second(k), {d.x.data() + r++ * d.q, d.q});
      d.y.insert(d.y.end(), {pairs.w(k), pairs.w(k)});
      d.v.insert(d.v.end(), {pairs.v(k), pairs.v(k)});
    }
  }
  return d;
}

double dot(const double* a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t c = 0; c < b.size(); ++c) s += a[c] * b[c];
  return s;
}

double loglik(const Design& d, const LinkFunction& link, std::span<const double> beta, ClampCounter* clamps) {
  double total = 0.0;
  for (std::size_t r = 0; r < d.rows(); ++r) {
    total += d.v[r] * log_half_one_plus(link, d.y[r], dot(d.row(r), beta), clamps).value;
  }
  return total / d.norm;
}

// Sum of the general two-term form; differs from loglik() for non-odd links.
double loglik_two_term(const Design& d, const LinkFunction& link, std::span<const double> beta,
                       ClampCounter* clamps) {
  double total = 0.0;
  for (std::size_t r = 0; r < d.rows(); ++r) {
    const double t = dot(d.row(r), beta);
    const double g = std::clamp(link_eval(link, t).g, -1.0 + kClampEps, 1.0 - kClampEps);
    if (clamps && std::abs(link_eval(link, t).g) > 1.0 - kClampEps) ++clamps->count;
    const double up = (1.0 + d.y[r]) / 2.0;
    const double down = (1.0 - d.y[r]) / 2.0;
    double term = 0.0;
    if (up > 0.0) term += up * std::log(0.5 + 0.5 * g);
    if (down > 0.0) term += down * std::log(0.5 - 0.5 * g);
    total += d.v[r] * term;
  }
  return total / d.norm;
}

double l1_norm(std::span<const double> b) {
  double s = 0.0;
  for (double x : b) s += std::abs(x);
  return s;
}

// Smooth part of the scaled problem: F(b) = -(n(n-1)/norm) L_n(b / s), with gradient and Hessian.
struct ScaledProblem {
  const Design& design;
  const LinkFunction& link;
  std::vector<double> scale;  // column scales s_c; beta_c = b_c / s_c
  std::size_t q;
  double norm;  // total pair weight, so F is O(1) whatever the source sample size

  double value(const Eigen::VectorXd& b, ClampCounter* clamps) const {
    double total = 0.0;
    for (std::size_t r = 0; r < design.rows(); ++r) {
      const double* x = design.row(r);
      double t = 0.0;
      for (std::size_t c = 0; c < q; ++c) t += x[c] * b[static_cast<Eigen::Index>(c)] / scale[c];
      total += design.v[r] * log_half_one_plus(link, design.y[r], t, clamps).value;
    }
    return -total / norm;
  }

  double value_grad_hess(const Eigen::VectorXd& b, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) const {
    const auto qq = static_cast<Eigen::Index>(q);
    grad.setZero(qq);
    hess.setZero(qq, qq);
    double total = 0.0;
    std::vector<double> xs(q);
    for (std::size_t r = 0; r < design.rows(); ++r) {
      const double* x = design.row(r);
      double t = 0.0;
      for (std::size_t c = 0; c < q; ++c) {
        xs[c] = x[c] / scale[c];
        t += xs[c] * b[static_cast<Eigen::Index>(c)];
      }
      const Term term = log_half_one_plus(link, design.y[r], t, nullptr);
      const double v = design.v[r];
      total += v * term.value;
      const double g1 = v * term.d1;
      const double h1 = v * term.d2;
      for (std::size_t a = 0; a < q; ++a) {
        grad[static_cast<Eigen::Index>(a)] += g1 * xs[a];
        const double ha = h1 * xs[a];
        for (std::size_t c = 0; c <= a; ++c) hess(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) += ha * xs[c];
      }
    }
    hess = hess.selfadjointView<Eigen::Lower>();
    const double inv = 1.0 / norm;
    grad *= -inv;
    hess *= -inv;
    return -total * inv;
  }
};

// argmin_x F(x) + rho/2 |x - target|^2 by damped Newton, warm-started at x.
void newton_prox(const ScaledProblem& prob, double rho, const Eigen::VectorXd& target, Eigen::VectorXd& x,
                 int max_iter) {
  const auto q = static_cast<Eigen::Index>(prob.q);
  Eigen::VectorXd grad(q);
  Eigen::MatrixXd hess(q, q);
  for (int it = 0; it < max_iter; ++it) {
    const double f = prob.value_grad_hess(x, grad, hess) + 0.5 * rho * (x - target).squaredNorm();
    grad += rho * (x - target);
    hess.diagonal().array() += rho;
    const Eigen::VectorXd step = -hess.ldlt().solve(grad);
    const double decrement = -grad.dot(step);
    if (!(decrement > 1e-20)) break;
    double t = 1.0;
    Eigen::VectorXd trial;
    double ft = 0.0;
    for (int ls = 0; ls < 60; ++ls) {
      trial = x + t * step;
      ft = prob.value(trial, nullptr) + 0.5 * rho * (trial - target).squaredNorm();
      if (ft <= f - 0.25 * t * decrement) break;
      t *= 0.5;
    }
    if (!(ft <= f)) break;
    x = trial;
    if (0.5 * decrement < 1e-13 * std::max(1.0, std::abs(f))) break;
  }
}

bool custom_link_ok(const LinkFunction& link) {
  return link.kind != LinkFunction::Kind::custom || verify_concavity(link, -10.0, 10.0, 1e-2).concave;
}

}  // namespace

LinkFunction logit_link() {
  LinkFunction l;
  l.kind = LinkFunction::Kind::logit;
  l.id = "logit";
  l.odd = true;
  return l;
}

LinkFunction probit_link() {
  LinkFunction l;
  l.kind = LinkFunction::Kind::probit;
  l.id = "probit";
  l.odd = true;
  return l;
}

LinkFunction custom_link(std::string id, LinkFunction::Fn g, LinkFunction::Fn dg, LinkFunction::Fn d2g,
                         LinkFunction::Fn d3g, bool odd) {
  if (!g) throw ConfigError("custom link needs g");
  LinkFunction l;
  l.kind = LinkFunction::Kind::custom;
  l.id = std::move(id);
  l.odd = odd;
  l.g = std::move(g);
  l.dg = std::move(dg);
  l.d2g = std::move(d2g);
  l.d3g = std::move(d3g);
  return l;
}

LinkFunction link_from_name(const std::string& name) {
  if (name == "logit") return logit_link();
  if (name == "probit") return probit_link();
  throw ConfigError("unknown link '" + name + "' (custom links are library-only)");
}

LinkValue link_eval(const LinkFunction& link, double t) {
  switch (link.kind) {
    case LinkFunction::Kind::logit: {
      const double g = std::tanh(0.5 * t);  // (e^t - 1) / (e^t + 1)
      return {g, 0.5 * (1.0 - g * g)};
    }
    case LinkFunction::Kind::probit:
      return {1.0 - std::erfc(t * kInvSqrt2), 2.0 * normal_pdf(t)};  // 2 Phi(t) - 1
    case LinkFunction::Kind::custom:
      return {link.g(t), link.dg ? link.dg(t) : numeric_derivative(link.g, t)};
  }
  return {};
}

LinkDerivatives link_derivatives(const LinkFunction& link, double t) {
  switch (link.kind) {
    case LinkFunction::Kind::logit: {
      const double g = std::tanh(0.5 * t);
      const double d1 = 0.5 * (1.0 - g * g);
      const double d2 = -g * d1;
      const double d3 = -(d1 * d1 + g * d2);
      return {g, d1, d2, d3};
    }
    case LinkFunction::Kind::probit: {
      const double phi = normal_pdf(t);
      return {1.0 - std::erfc(t * kInvSqrt2), 2.0 * phi, -2.0 * t * phi, 2.0 * (t * t - 1.0) * phi};
    }
    case LinkFunction::Kind::custom: {
      LinkFunction::Fn d1 = link.dg ? link.dg : LinkFunction::Fn([&](double s) { return numeric_derivative(link.g, s); });
      LinkFunction::Fn d2 = link.d2g ? link.d2g : LinkFunction::Fn([&](double s) { return numeric_derivative(d1, s); });
      const double d3 = link.d3g ? link.d3g(t) : numeric_derivative(d2, t);
      return {link.g(t), d1(t), d2(t), d3};
    }
  }
  return {};
}

double localized_loglik(const PairDataset& pairs, const FeatureMap& features, const LinkFunction& link,
                        std::span<const double> beta, Anchor anchor, ClampCounter* clamps) {
  if (beta.size() != features.output_dim()) throw DataError("beta length does not match the feature map");
  return loglik_two_term(make_design(pairs, features, anchor), link, beta, clamps);
}

double simplified_loglik(const PairDataset& pairs, const FeatureMap& features, const LinkFunction& link,
                         std::span<const double> beta, Anchor anchor) {
  if (beta.size() != features.output_dim()) throw DataError("beta length does not match the feature map");
  const Design d = make_design(pairs, features, anchor);
  double total = 0.0;
  for (std::size_t r = 0; r < d.rows(); ++r) {
    const double g = link_eval(link, d.y[r] * dot(d.row(r), beta)).g;
    total += d.v[r] * std::log(std::max(0.5 + 0.5 * g, 0.5 * kClampEps));
  }
  return total / d.norm;
}

std::vector<double> localized_loglik_gradient(const PairDataset& pairs, const FeatureMap& features,
                                              const LinkFunction& link, std::span<const double> beta,
                                              Anchor anchor) {
  if (beta.size() != features.output_dim()) throw DataError("beta length does not match the feature map");
  const Design d = make_design(pairs, features, anchor);
  std::vector<double> grad(d.q, 0.0);
  for (std::size_t r = 0; r < d.rows(); ++r) {
    const double* x = d.row(r);
    const double slope = d.v[r] * log_half_one_plus(link, d.y[r], dot(x, beta), nullptr).d1;
    for (std::size_t c = 0; c < d.q; ++c) grad[c] += slope * x[c];
  }
  for (double& g : grad) g /= d.norm;
  return grad;
}

double soft_threshold(double a, double kappa) {
  if (a == 0.0) return 0.0;
  const double shrink = 1.0 - kappa / std::abs(a);
  return shrink > 0.0 ? shrink * a : 0.0;
}

GlmModel fit_admm(const PairDataset& pairs, const FeatureMap& features, const LinkFunction& link,
                  const GlmConfig& config) {
  if (!(config.lambda >= 0.0) || !(config.rho > 0.0) || !(config.tol_primal > 0.0) ||
      !(config.tol_dual > 0.0) || config.max_iter < 1) {
    throw ConfigError("invalid GLM configuration");
  }
  if (!custom_link_ok(link)) throw ConfigError("link '" + link.id + "' does not give a concave criterion");
  if (pairs.empty()) throw DataError("cannot fit a GLM on an empty pair dataset");

  const Design design = make_design(pairs, features, config.anchor);
  const std::size_t q = design.q;
  const auto qq = static_cast<Eigen::Index>(q);

  // Columns are rescaled to unit weighted RMS; the l1 penalty stays on the
  // original coefficients through per-coordinate thresholds.
  std::vector<double> scale(q, 0.0);
  const double vsum = std::accumulate(design.v.begin(), design.v.end(), 0.0);
  for (std::size_t r = 0; r < design.rows(); ++r) {
    const double* x = design.row(r);
    for (std::size_t c = 0; c < q; ++c) scale[c] += design.v[r] * x[c] * x[c];
  }
  for (double& s : scale) {
    s = std::sqrt(s / vsum);
    if (!(s > 0.0) || !std::isfinite(s)) s = 1.0;
  }
  const ScaledProblem prob{design, link, scale, q, vsum};
  // Dividing by the pair weight instead of n(n-1) rescales the objective, so
  // the penalty is rescaled to keep the same minimizer.
  const double lambda = config.lambda * design.norm / vsum;

  auto to_beta = [&](const Eigen::VectorXd& b) {
    std::vector<double> beta(q);
    for (std::size_t c = 0; c < q; ++c) beta[c] = b[static_cast<Eigen::Index>(c)] / scale[c];
    return beta;
  };
  auto penalized = [&](const Eigen::VectorXd& b) {
    const auto beta = to_beta(b);
    return -prob.value(b, nullptr) * vsum / design.norm - config.lambda * l1_norm(beta);
  };

  Eigen::VectorXd x = Eigen::VectorXd::Zero(qq);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(qq);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(qq);
  double rho = config.rho;

  GlmModel model;
  model.link = link;
  model.features = features;
  GlmDiagnostics& diag = model.diagnostics;

  for (int it = 1; it <= config.max_iter; ++it) {
    newton_prox(prob, rho, z - u, x, config.max_newton_iter);
    const Eigen::VectorXd z_old = z;
    for (Eigen::Index c = 0; c < qq; ++c) {
      const double kappa = lambda / (rho * scale[static_cast<std::size_t>(c)]);
      z[c] = soft_threshold(x[c] + u[c], kappa);
    }
    u += x - z;

    const double r_norm = (x - z).norm();
    const double s_norm = rho * (z - z_old).norm();
    diag.iterations = it;
    diag.primal_residual = r_norm;
    diag.dual_residual = s_norm;
    diag.objective_trace.push_back(penalized(z));
    if (r_norm <= config.tol_primal && s_norm <= config.tol_dual) {
      diag.converged = true;
      break;
    }
    if (config.adaptive_rho) {
      if (r_norm > 10.0 * s_norm && rho < 1e6) {
        rho *= 2.0;
        u *= 0.5;
      } else if (s_norm > 10.0 * r_norm && rho > 1e-6) {
        rho *= 0.5;
        u *= 2.0;
      }
    }
  }

  model.beta = to_beta(z);
  ClampCounter clamps;
  diag.objective = loglik(design, link, model.beta, &clamps) - config.lambda * l1_norm(model.beta);
  diag.clamp_count = clamps.count;
  diag.final_rho = rho;
  return model;
}

double predict_tau(const GlmModel& model, std::span<const double> z) {
  const auto psi = model.features.apply(z);
  if (psi.size() != model.beta.size()) throw DataError("model beta does not match its feature map");
  double t = 0.0;
  for (std::size_t c = 0; c < psi.size(); ++c) t += psi[c] * model.beta[c];
  const double g = link_eval(model.link, t).g;
  // keep the open-interval guarantee even where g saturates in floating point
  return std::clamp(g, -1.0 + kClampEps, 1.0 - kClampEps);
}

ConcavityReport verify_concavity(const LinkFunction& link, double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw ConfigError("invalid concavity grid");
  ConcavityReport report;
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = lo + static_cast<double>(k) * step;
    const LinkDerivatives d = link_derivatives(link, t);
    for (double delta : {1.0, -1.0}) {
      if (delta * d.d2 * (1.0 + delta * d.g) - d.d1 * d.d1 > 1e-10) {
        report.concave = false;
        report.first_violation = t;
        return report;
      }
    }
  }
  return report;
}

std::vector<std::vector<double>> default_cv_grid(const Dataset& data, std::size_t points) {
  const std::size_t p = data.dim();
  std::vector<double> lo(p), hi(p);
  for (std::size_t c = 0; c < p; ++c) {
    std::vector<double> col(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) col[i] = data.z(i)[c];
    lo[c] = quantile(col, 0.05);
    hi[c] = quantile(col, 0.95);
  }
  const auto per_axis = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::lround(std::pow(static_cast<double>(points), 1.0 / static_cast<double>(p)))));
  std::size_t total = 1;
  for (std::size_t c = 0; c < p; ++c) total *= per_axis;
  std::vector<std::vector<double>> grid(total, std::vector<double>(p));
  for (std::size_t g = 0; g < total; ++g) {
    std::size_t rest = g;
    for (std::size_t c = 0; c < p; ++c) {
      const std::size_t k = rest % per_axis;
      rest /= per_axis;
      grid[g][c] = lo[c] + (hi[c] - lo[c]) * static_cast<double>(k) / static_cast<double>(per_axis - 1);
    }
  }
  return grid;
}

CvResult select_lambda_cv(const Dataset& data, const KernelSpec& kernel, const FeatureMap& features,
                          const LinkFunction& link, const GlmConfig& base, const CvConfig& cv) {
  if (cv.folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
  if (cv.lambdas.empty()) throw ConfigError("lambda grid is empty");
  if (cv.grid.empty()) throw ConfigError("comparison grid is empty");
  if (data.size() < 2 * cv.folds) throw DataError("too few observations for the requested folds");

  CvResult result;
  result.lambdas = cv.lambdas;
  std::sort(result.lambdas.begin(), result.lambdas.end());
  result.lambdas.erase(std::unique(result.lambdas.begin(), result.lambdas.end()), result.lambdas.end());

  // Folds partition the original observations, never the pairs.
  std::vector<std::size_t> perm(data.size());
  std::iota(perm.begin(), perm.end(), 0);
  SplitMix64 rng(cv.seed);
  shuffle(perm, rng);
  std::vector<std::vector<std::size_t>> fold_rows(cv.folds);
  for (std::size_t r = 0; r < perm.size(); ++r) fold_rows[r % cv.folds].push_back(perm[r]);

  const std::size_t n_lambda = result.lambdas.size();
  std::vector<double> distance(cv.folds * n_lambda, 0.0);
  std::vector<std::vector<double>> pilot(cv.folds);
  std::vector<PairDataset> train(cv.folds);

  parallel_for(cv.folds, [&](std::size_t k) {
    std::vector<std::size_t> rows_k = fold_rows[k];
    std::sort(rows_k.begin(), rows_k.end());
    std::vector<std::size_t> rest;
    for (std::size_t f = 0; f < cv.folds; ++f) {
      if (f != k) rest.insert(rest.end(), fold_rows[f].begin(), fold_rows[f].end());
    }
    std::sort(rest.begin(), rest.end());
    const PairDataset fold_pairs = build_pair_dataset(data.subset(rows_k), kernel);
    if (fold_pairs.empty()) throw DataError("fold " + std::to_string(k + 1) + " has no admissible pair");
    const KnnIndex index(fold_pairs, coordinate_features(data.dim()));
    const auto n_neighbors = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(fold_pairs.size()))));
    pilot[k].resize(cv.grid.size());
    for (std::size_t g = 0; g < cv.grid.size(); ++g) pilot[k][g] = index.estimate(cv.grid[g], n_neighbors);
    train[k] = build_pair_dataset(data.subset(rest), kernel, {base.anchor == Anchor::endpoints});
    if (train[k].empty()) throw DataError("training part of fold " + std::to_string(k + 1) + " has no pair");
  });

  parallel_for(cv.folds * n_lambda, [&](std::size_t task) {
    const std::size_t k = task / n_lambda;
    GlmConfig config = base;
    config.lambda = result.lambdas[task % n_lambda];
    const GlmModel model = fit_admm(train[k], features, link, config);
    double ss = 0.0;
    for (std::size_t g = 0; g < cv.grid.size(); ++g) {
      const double diff = pilot[k][g] - predict_tau(model, cv.grid[g]);
      ss += diff * diff;
    }
    distance[task] = std::sqrt(ss / static_cast<double>(cv.grid.size()));
  });

  result.scores.assign(n_lambda, 0.0);
  for (std::size_t l = 0; l < n_lambda; ++l) {
    for (std::size_t k = 0; k < cv.folds; ++k) result.scores[l] += distance[k * n_lambda + l];
  }
  std::size_t best = 0;
  for (std::size_t l = 1; l < n_lambda; ++l) {
    if (result.scores[l] <= result.scores[best]) best = l;  // ascending grid: ties go to larger lambda
  }
  result.lambda = result.lambdas[best];
  return result;
}

nlohmann::json to_json(const GlmModel& model) {
  const auto& d = model.diagnostics;
  return {{"method", model.link.id},
          {"link", model.link.id},
          {"features", to_json(model.features)},
          {"feature_dim", model.features.input_dim()},
          {"beta", model.beta},
          {"bandwidth", model.bandwidth},
          {"diagnostics",
           {{"iterations", d.iterations},
            {"converged", d.converged},
            {"objective", d.objective},
            {"primal_residual", d.primal_residual},
            {"dual_residual", d.dual_residual},
            {"clamp_count", d.clamp_count}}}};
}

GlmModel glm_model_from_json(const nlohmann::json& j) {
  GlmModel model;
  model.link = link_from_name(j.at("link"));
  model.features = feature_map_from_json(j.at("features"), j.value("feature_dim", std::size_t{1}));
  model.beta = j.at("beta").get<std::vector<double>>();
  model.bandwidth = j.value("bandwidth", 0.0);
  if (model.beta.size() != model.features.output_dim()) throw ConfigError("model beta does not match its features");
  if (j.contains("diagnostics")) {
    const auto& d = j.at("diagnostics");
    model.diagnostics.iterations = d.value("iterations", 0);
    model.diagnostics.converged = d.value("converged", false);
    model.diagnostics.objective = d.value("objective", 0.0);
  }
  return model;
}

}  // namespace ckt
