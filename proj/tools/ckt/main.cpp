// ckt: conditional Kendall's tau from the command line.
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ckt/csv.hpp"
#include "ckt/errors.hpp"
#include "ckt/estimator.hpp"
#include "ckt/finance.hpp"
#include "ckt/glm.hpp"
#include "ckt/parallel.hpp"
#include "ckt/plot.hpp"
#include "ckt/sim.hpp"
#include "ckt/stats.hpp"

namespace {

using nlohmann::json;

struct Globals {
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  std::string config;
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ckt::ConfigError("cannot open config file " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ckt::ConfigError(path + ": " + e.what());
  }
}

json config_or_empty(const Globals& g) { return g.config.empty() ? json::object() : read_json_file(g.config); }

// Writes to `path`, or stdout for "" and "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ckt::DataError("cannot write " + path);
  out << text;
}

void warn(const std::string& message) { std::cerr << "warning: " << message << '\n'; }

ckt::Dataset load_data(const std::string& path) {
  ckt::Dataset data = ckt::read_dataset_csv_file(path);
  std::vector<double> x1(data.size()), x2(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    x1[i] = data.x1(i);
    x2[i] = data.x2(i);
  }
  const double ties = ckt::tie_fraction(x1, x2);
  if (ties > 1e-3) {
    std::ostringstream msg;
    msg << path << ": " << ties << " of the pairs are tied; tied pairs are labelled discordant";
    warn(msg.str());
  }
  return data;
}

// Method spec from the config file, with command-line overrides.
ckt::MethodSpec method_spec(const Globals& g, const std::string& method, std::size_t p) {
  json j = config_or_empty(g);
  if (j.contains("method_spec")) j = j.at("method_spec");
  if (!method.empty()) j["method"] = method;
  if (!j.contains("method")) throw ckt::ConfigError("no method given (--method or \"method\" in the config)");
  return ckt::method_spec_from_json(j, p);
}

std::vector<double> parse_point(const std::string& text, std::size_t p) {
  std::vector<double> z;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) z.push_back(ckt::parse_double(field, "z"));
  if (z.size() != p) throw ckt::DataError("point '" + text + "' does not have " + std::to_string(p) + " coordinates");
  return z;
}

void run_simulate(const Globals& g, std::size_t n, const std::string& out) {
  json j = config_or_empty(g);
  if (n > 0) j["n"] = n;
  j["seed"] = g.seed;
  emit(out, [&] {
    std::ostringstream s;
    ckt::write_dataset_csv(ckt::simulate_dataset(ckt::simulation_config_from_json(j)), s);
    return s.str();
  }());
}

void run_pairs(const std::string& data_path, const std::string& kernel, double bandwidth, const std::string& scheme,
               const std::string& out) {
  const ckt::Dataset data = load_data(data_path);
  const auto family = ckt::kernel_family_from_string(kernel);
  ckt::KernelSpec spec = ckt::scott_kernel(data, family);
  if (bandwidth > 0.0) spec = ckt::KernelSpec{family, bandwidth, data.dim(), {}};
  if (scheme != "all" && scheme != "consecutive") throw ckt::ConfigError("unknown pair scheme " + scheme);
  const auto pairs = ckt::build_pairs(data, spec, scheme == "consecutive" ? ckt::PairScheme::consecutive
                                                                         : ckt::PairScheme::all);
  std::ostringstream s;
  ckt::write_pairs_csv(pairs, s);
  emit(out, s.str());
  std::cerr << pairs.size() << " pairs with positive weight, h = " << spec.h << '\n';
}

void run_fit(const Globals& g, const std::string& data_path, const std::string& method, const std::string& out) {
  const ckt::Dataset data = load_data(data_path);
  const auto spec = method_spec(g, method, data.dim());
  const auto est = ckt::fit_method(data, spec, g.seed);
  emit(out, est->to_json().dump(2) + "\n");
}

void run_predict(const std::string& model_path, const std::string& data_path, const std::vector<std::string>& points,
                 const std::string& grid_path, const std::string& out) {
  const json model = read_json_file(model_path);
  ckt::Dataset source;
  if (!data_path.empty()) source = load_data(data_path);
  const auto est = ckt::load_estimator(model, data_path.empty() ? nullptr : &source);

  std::vector<std::vector<double>> grid;
  std::size_t p = 0;
  if (!grid_path.empty()) {
    const auto table = ckt::read_csv_file(grid_path);
    p = table.header.size();
    for (const auto& row : table.rows) {
      std::vector<double> z;
      for (const auto& f : row) z.push_back(ckt::parse_double(f, "z"));
      grid.push_back(std::move(z));
    }
  }
  for (const auto& text : points) {
    if (p == 0) p = static_cast<std::size_t>(std::count(text.begin(), text.end(), ',')) + 1;
    grid.push_back(parse_point(text, p));
  }
  if (grid.empty()) throw ckt::ConfigError("no evaluation points (--z or --grid)");

  std::ostringstream s;
  for (std::size_t c = 0; c < p; ++c) s << 'z' << c + 1 << ',';
  s << "tau\n";
  for (const auto& z : grid) {
    for (double v : z) s << ckt::format_double(v) << ',';
    s << ckt::format_double(est->predict(z)) << '\n';
  }
  emit(out, s.str());
}

void run_experiment(const Globals& g, const std::string& out) {
  if (g.config.empty()) throw ckt::ConfigError("experiment needs --config");
  json j = read_json_file(g.config);
  if (!j.contains("seed")) j["seed"] = g.seed;
  const auto result = ckt::run_experiment(j);
  for (const auto& cell : result.cells) {
    for (const auto& msg : cell.report.failure_messages) warn(cell.setting + "/" + cell.method + ": " + msg);
  }
  emit(out, ckt::experiment_csv(result));
}

void run_cv_lambda(const Globals& g, const std::string& data_path, const std::string& link,
                   const std::vector<double>& lambdas, std::size_t folds, const std::string& out) {
  const ckt::Dataset data = load_data(data_path);
  ckt::MethodSpec spec = method_spec(g, link, data.dim());
  if (spec.method != ckt::Method::logit && spec.method != ckt::Method::probit) {
    throw ckt::ConfigError("cv-lambda applies to logit and probit only");
  }
  ckt::CvConfig cv;
  cv.folds = folds;
  cv.lambdas = lambdas.empty() ? spec.cv_lambdas : lambdas;
  if (cv.lambdas.empty()) throw ckt::ConfigError("no lambda grid (--lambdas or \"cv_lambdas\")");
  cv.grid = ckt::default_cv_grid(data);
  cv.seed = g.seed;
  const auto features = spec.features ? *spec.features : ckt::default_features(spec.method, data.dim());
  const auto result = ckt::select_lambda_cv(data, ckt::resolve_kernel(data, spec), features,
                                            ckt::link_from_name(ckt::to_string(spec.method)), spec.glm, cv);
  std::ostringstream s;
  s << "# selected_lambda=" << ckt::format_double(result.lambda) << "\nlambda,cv\n";
  for (std::size_t k = 0; k < result.lambdas.size(); ++k) {
    s << ckt::format_double(result.lambdas[k]) << ',' << ckt::format_double(result.scores[k]) << '\n';
  }
  emit(out, s.str());
}

struct PrepOptions {
  std::string index_a, index_b, cond = "sigma", sigma_source, v2tx, start, end, out;
};

void run_finance_prep(const PrepOptions& o) {
  std::vector<std::string> warnings;
  const auto a = ckt::read_market_csv(o.index_a, warnings);
  const auto b = ckt::read_market_csv(o.index_b, warnings);
  ckt::DatedSeries cond;
  if (o.cond == "sigma") {
    if (o.sigma_source.empty()) throw ckt::ConfigError("--cond sigma needs --sigma-source");
    cond = ckt::compute_sigma(ckt::read_market_csv(o.sigma_source, warnings));
  } else if (o.cond == "delta_sigma") {
    if (o.v2tx.empty()) throw ckt::ConfigError("--cond delta_sigma needs --v2tx");
    cond = ckt::compute_delta_sigma(ckt::read_level_csv(o.v2tx, warnings), warnings);
  } else {
    throw ckt::ConfigError("unknown conditioning variable " + o.cond);
  }
  for (const auto& w : warnings) warn(w);
  const auto joined =
      ckt::build_returns_dataset(ckt::log_returns(a), ckt::log_returns(b), cond, o.start, o.end);
  std::cerr << joined.data.size() << " joined days, " << joined.dropped << " dropped for a missing component\n";

  std::ostringstream s;
  s << "# returns=log conditioning=" << o.cond << " period=" << o.start << ".." << o.end << '\n';
  s << "date,";
  std::ostringstream body;
  ckt::write_dataset_csv(joined.data, body);
  std::string header, line;
  std::istringstream rows(body.str());
  std::getline(rows, header);
  s << header << '\n';
  for (std::size_t i = 0; std::getline(rows, line); ++i) s << joined.dates[i] << ',' << line << '\n';
  emit(o.out, s.str());
}

ckt::Dataset load_finance_data(const std::string& path) {
  // the prep output carries a leading date column
  const auto table = ckt::read_csv_file(path);
  if (!table.header.empty() && table.header.front() == "date") {
    std::ostringstream rest;
    for (std::size_t c = 1; c < table.header.size(); ++c) rest << (c > 1 ? "," : "") << table.header[c];
    rest << '\n';
    for (const auto& row : table.rows) {
      for (std::size_t c = 1; c < row.size(); ++c) rest << (c > 1 ? "," : "") << row[c];
      rest << '\n';
    }
    std::istringstream in(rest.str());
    return ckt::read_dataset_csv(in);
  }
  return load_data(path);
}

void run_finance_estimate(const Globals& g, const std::string& data_path, const std::vector<std::string>& methods,
                          std::size_t points, const std::string& out, const std::string& plot,
                          const std::string& title) {
  const ckt::Dataset data = load_finance_data(data_path);
  std::vector<ckt::MethodSpec> specs;
  const json cfg = config_or_empty(g);
  if (cfg.contains("methods")) {
    for (const auto& m : cfg.at("methods")) specs.push_back(ckt::method_spec_from_json(m, data.dim()));
  } else {
    for (const auto& name : methods) specs.push_back(ckt::method_spec_from_json(json{{"method", name}}, data.dim()));
  }
  const auto table = ckt::estimate_curve(data, specs, points, g.seed);
  for (const auto& e : table.errors) warn(e);
  emit(out, "# returns=log\n" + ckt::curve_csv(table));
  if (!plot.empty()) emit(plot, ckt::curves_svg(table, title, "z"));
}

int exit_code(const std::exception& e) {
  if (dynamic_cast<const ckt::ConfigError*>(&e)) return 2;
  if (dynamic_cast<const ckt::DataError*>(&e)) return 3;
  if (dynamic_cast<const ckt::NumericalError*>(&e)) return 4;
  if (dynamic_cast<const nlohmann::json::exception*>(&e)) return 2;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional Kendall's tau estimation by pair classification"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->default_val(0);
  app.add_option("--threads", g.threads, "Worker threads (0: hardware concurrency)")->default_val(0);
  app.add_option("--config", g.config, "JSON configuration file");

  std::string out, data_path, method;

  auto* simulate = app.add_subcommand("simulate", "Draw a dataset from a simulation setting (config: SimulationConfig)");
  std::size_t sim_n = 0;
  simulate->add_option("-n,--n", sim_n, "Sample size (overrides the config)");
  simulate->add_option("-o,--out", out, "Output CSV (default stdout)");

  auto* pairs = app.add_subcommand("pairs", "Build the localized dataset of pairs");
  std::string kernel = "epanechnikov", scheme = "all";
  double bandwidth = 0.0;
  pairs->add_option("-d,--data", data_path, "Dataset CSV (x1,x2,z1..zp)")->required();
  pairs->add_option("--kernel", kernel, "epanechnikov, triangular, uniform or truncated_gaussian");
  pairs->add_option("--bandwidth", bandwidth, "Bandwidth in the units of Z (default: rule of thumb)");
  pairs->add_option("--scheme", scheme, "all or consecutive");
  pairs->add_option("-o,--out", out, "Output CSV (default stdout)");

  auto* fit = app.add_subcommand("fit", "Fit one estimator and write it as JSON");
  fit->add_option("-d,--data", data_path, "Dataset CSV")->required();
  fit->add_option("-m,--method", method, "logit, probit, tree, forest, forest_unadapted, knn or nnet");
  fit->add_option("-o,--out", out, "Output JSON (default stdout)");

  auto* predict = app.add_subcommand("predict", "Evaluate a fitted model");
  std::string model_path, grid_path;
  std::vector<std::string> points;
  predict->add_option("--model", model_path, "Model JSON from `fit`")->required();
  predict->add_option("-d,--data", data_path, "Training data (required for knn models)");
  predict->add_option("--z", points, "Evaluation point, comma-separated coordinates");
  predict->add_option("--grid", grid_path, "CSV of evaluation points");
  predict->add_option("-o,--out", out, "Output CSV (default stdout)");

  auto* experiment = app.add_subcommand("experiment", "Run a simulation study (config: settings x methods)");
  experiment->add_option("-o,--out", out, "Output CSV (default stdout)");

  auto* cv = app.add_subcommand("cv-lambda", "Cross-validate the penalty of logit or probit");
  std::vector<double> lambdas;
  std::size_t folds = 5;
  cv->add_option("-d,--data", data_path, "Dataset CSV")->required();
  cv->add_option("-m,--method", method, "logit or probit");
  cv->add_option("--lambdas", lambdas, "Penalty grid");
  cv->add_option("--folds", folds, "Number of folds")->check(CLI::Range(2, 1000));
  cv->add_option("-o,--out", out, "Output CSV (default stdout)");

  auto* finance = app.add_subcommand("finance", "Market data pipeline");
  finance->require_subcommand(1);
  auto* prep = finance->add_subcommand("prep", "Join daily log-returns of two indices with a conditioning variable");
  PrepOptions po;
  prep->add_option("--index-a", po.index_a, "Market CSV date,high,low,close of the first index")->required();
  prep->add_option("--index-b", po.index_b, "Market CSV of the second index")->required();
  prep->add_option("--cond", po.cond, "sigma or delta_sigma");
  prep->add_option("--sigma-source", po.sigma_source, "Market CSV from which (high - low) / close is taken");
  prep->add_option("--v2tx", po.v2tx, "Implied volatility CSV date,level");
  prep->add_option("--start", po.start, "First day, YYYY-MM-DD")->required();
  prep->add_option("--end", po.end, "Last day, YYYY-MM-DD")->required();
  prep->add_option("-o,--out", po.out, "Output CSV (default stdout)");

  auto* estimate = finance->add_subcommand("estimate", "Estimate the conditional tau curve of every method");
  std::vector<std::string> methods{"logit", "probit", "tree", "forest", "knn", "nnet"};
  std::size_t curve_points = 100;
  std::string plot, title = "Conditional Kendall's tau";
  estimate->add_option("-d,--data", data_path, "Output of `finance prep`, or a dataset CSV")->required();
  estimate->add_option("--methods", methods, "Methods to fit (ignored when the config lists \"methods\")");
  estimate->add_option("--points", curve_points, "Grid size")->check(CLI::PositiveNumber);
  estimate->add_option("-o,--out", out, "Output CSV (default stdout)");
  estimate->add_option("--plot", plot, "Optional SVG plot");
  estimate->add_option("--title", title, "Plot title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (g.threads > 0) ckt::set_thread_count(g.threads);
    if (*simulate) run_simulate(g, sim_n, out);
    if (*pairs) run_pairs(data_path, kernel, bandwidth, scheme, out);
    if (*fit) run_fit(g, data_path, method, out);
    if (*predict) run_predict(model_path, data_path, points, grid_path, out);
    if (*experiment) run_experiment(g, out);
    if (*cv) run_cv_lambda(g, data_path, method, lambdas, folds, out);
    if (*prep) run_finance_prep(po);
    if (*estimate) run_finance_estimate(g, data_path, methods, curve_points, out, plot, title);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  }
  return 0;
}
