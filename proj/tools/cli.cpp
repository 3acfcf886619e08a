#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "sigfolio/backtest.hpp"
#include "sigfolio/common.hpp"
#include "sigfolio/detail/json_util.hpp"
#include "sigfolio/parallel.hpp"
#include "sigfolio/portfolio.hpp"
#include "sigfolio/qp.hpp"
#include "sigfolio/sim.hpp"
#include "sigfolio/training.hpp"

namespace fs = std::filesystem;

namespace sigfolio::cli {

namespace {

using detail::check_keys;
using detail::get_or;
using detail::json;
using detail::require;

struct CommonOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

Eigen::VectorXd vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + ": expected an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ConfigError(what + ": expected a non-empty array of rows");
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ConfigError(what + ": ragged rows");
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
  }
  return m;
}

json json_from_vector(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

double finite_or_sentinel(double v) { return std::isfinite(v) ? v : -1e308; }

// -inf log-wealth entries are written as the string "-inf" so reports stay
// valid JSON; the ruined flag carries the same information.
json json_log_value(double v) {
  if (std::isfinite(v)) return json(v);
  return json("-inf");
}

SimConfig sim_config_from_json(const json& j) {
  check_keys(j, {"model", "d", "steps", "horizon", "seed", "s0", "a", "sigma", "alpha", "drift_level",
                 "drift", "strong_solution_only"},
             "sim");
  SimConfig cfg;
  cfg.model = market_model_from_name(require(j, "model", "sim").get<std::string>());
  cfg.d = require(j, "d", "sim").get<int>();
  cfg.steps = require(j, "steps", "sim").get<int>();
  cfg.horizon = get_or<double>(j, "horizon", 1.0);
  cfg.seed = get_or<std::uint64_t>(j, "seed", 0);
  cfg.s0 = j.contains("s0") ? vector_from_json(j.at("s0"), "sim.s0")
                            : Eigen::VectorXd::Ones(cfg.d).eval();

  switch (cfg.model) {
    case MarketModel::bs:
      cfg.bs_drift = vector_from_json(require(j, "a", "sim (bs)"), "sim.a");
      cfg.bs_sigma = matrix_from_json(require(j, "sigma", "sim (bs)"), "sim.sigma");
      break;
    case MarketModel::volstab:
      cfg.volstab_alpha = require(j, "alpha", "sim (volstab)").get<double>();
      break;
    case MarketModel::sigmarket: {
      cfg.sig_sigma = matrix_from_json(require(j, "sigma", "sim (sigmarket)"), "sim.sigma");
      cfg.sig_drift.level = get_or<int>(j, "drift_level", 2);
      cfg.sig_drift.strong_solution_only = get_or<bool>(j, "strong_solution_only", true);
      for (const auto& term : require(j, "drift", "sim (sigmarket)")) {
        check_keys(term, {"word", "coeffs"}, "sim.drift[]");
        Word w;
        for (const auto& letter : require(term, "word", "sim.drift[]")) w.letters.push_back(letter.get<int>());
        cfg.sig_drift.terms.emplace_back(w, vector_from_json(require(term, "coeffs", "sim.drift[]"),
                                                             "sim.drift[].coeffs"));
      }
      break;
    }
  }
  cfg.validate();
  return cfg;
}

FeatureSpec feature_spec_from_json(const json& j) {
  check_keys(j, {"family", "level", "proj_dim", "seed", "activation", "bias_std", "underlying", "horizon"},
             "features");
  FeatureSpec f;
  f.family = feature_family_from_name(require(j, "family", "features").get<std::string>());
  f.level = get_or<int>(j, "level", 2);
  f.proj_dim = get_or<int>(j, "proj_dim", 0);
  f.seed = get_or<std::uint64_t>(j, "seed", 0);
  f.activation = activation_from_name(get_or<std::string>(j, "activation", "tanh"));
  f.bias_std = get_or<double>(j, "bias_std", 1.0);
  f.underlying = underlying_from_name(get_or<std::string>(j, "underlying", "universe_weights"));
  f.horizon = get_or<double>(j, "horizon", 1.0);
  if (f.family != FeatureFamily::full_signature && f.proj_dim < 1)
    throw ConfigError("features: proj_dim must be >= 1 for jl/randomized families");
  return f;
}

PortfolioSpec portfolio_spec_from_json(const json& jp, const json& jf) {
  check_keys(jp, {"type", "universe", "rank_based", "tau", "tau_constant", "tau_bound", "clip_long_only"},
             "portfolio");
  PortfolioSpec spec;
  spec.type = portfolio_type_from_name(get_or<std::string>(jp, "type", "I"));
  if (jp.contains("universe"))
    for (const auto& idx : jp.at("universe")) spec.universe.push_back(idx.get<int>() - 1);
  spec.rank_based = get_or<bool>(jp, "rank_based", false);
  spec.tau_choice = aux_choice_from_name(get_or<std::string>(jp, "tau", "universe"));
  if (jp.contains("tau_constant")) spec.tau_constant = vector_from_json(jp.at("tau_constant"), "portfolio.tau_constant");
  spec.tau_bound = get_or<double>(jp, "tau_bound", 1e6);
  spec.clip_long_only = get_or<bool>(jp, "clip_long_only", false);
  spec.features = feature_spec_from_json(jf);
  return spec;
}

struct WindowConfig {
  int t0 = 100;
  int t_ins = 0;
  int t_cv = 0;
  int t_test = 0;
  std::string which = "train";
};

WindowConfig windows_from_json(const json& j) {
  check_keys(j, {"t0", "t_ins", "t_cv", "t_test", "window"}, "windows");
  WindowConfig w;
  w.t0 = get_or<int>(j, "t0", 100);
  w.t_ins = require(j, "t_ins", "windows").get<int>();
  w.t_cv = get_or<int>(j, "t_cv", 0);
  w.t_test = get_or<int>(j, "t_test", 2);
  w.which = get_or<std::string>(j, "window", "train");
  return w;
}

EvalWindow pick_window(const WindowConfig& wc, int n_samples) {
  if (wc.which == "full") return EvalWindow{0, wc.t0, n_samples - 1};
  const SplitWindows split = split_train_cv_test(n_samples, wc.t_ins, wc.t_cv, wc.t_test, wc.t0);
  if (wc.which == "train") return split.train;
  if (wc.which == "cv") return split.cv;
  if (wc.which == "test") return split.test;
  if (wc.which == "retrain") return split.retrain;
  throw ConfigError("windows.window must be one of train|cv|test|retrain|full");
}

std::vector<fs::path> list_panel_files(const std::string& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no .csv panels found in " + dir);
  return files;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const CommonOptions& opt) {
  json cfg = load_config(opt.config_path);
  check_keys(cfg, {"sim", "n_paths"}, "simulate config");
  if (opt.seed) cfg["sim"]["seed"] = *opt.seed;
  const SimConfig sim = sim_config_from_json(require(cfg, "sim", "simulate config"));
  const int n_paths = require(cfg, "n_paths", "simulate config").get<int>();
  if (n_paths < 1) throw ConfigError("simulate: n_paths must be >= 1");

  fs::create_directories(opt.out_dir);
  const SimResult result = simulate(sim, n_paths);

  json files = json::array();
  char name[32];
  for (int p = 0; p < n_paths; ++p) {
    std::snprintf(name, sizeof(name), "path_%05d.csv", p);
    std::ofstream out(fs::path(opt.out_dir) / name);
    if (!out) throw DataError(std::string("cannot write ") + name);
    write_prices_csv(out, result.panels[static_cast<std::size_t>(p)]);
    files.push_back(name);
  }

  json meta;
  meta["command"] = "simulate";
  meta["config"] = cfg;
  meta["n_paths"] = n_paths;
  meta["regenerated"] = result.regenerated;
  meta["files"] = files;
  write_json(fs::path(opt.out_dir) / "metadata.json", meta);
  std::cout << "simulate: wrote " << n_paths << " panels to " << opt.out_dir
            << " (regenerated " << result.regenerated << ")\n";
  return 0;
}

// ---------------------------------------------------------------- features

int cmd_features(const CommonOptions& opt) {
  json cfg = load_config(opt.config_path);
  check_keys(cfg, {"panel", "portfolio", "features", "obs_start", "invest_start", "invest_end", "out_name"},
             "features config");
  if (opt.seed) cfg["features"]["seed"] = *opt.seed;

  const MarketPanel panel = load_prices_csv_file(require(cfg, "panel", "features config").get<std::string>());
  PortfolioSpec spec = portfolio_spec_from_json(cfg.contains("portfolio") ? cfg.at("portfolio") : json::object(),
                                                require(cfg, "features", "features config"));
  EvalWindow window;
  window.obs_start = get_or<int>(cfg, "obs_start", 0);
  window.invest_start = get_or<int>(cfg, "invest_start", window.obs_start);
  window.invest_end = get_or<int>(cfg, "invest_end", panel.samples() - 1);

  const EvalContext ctx = build_context(spec, panel, window);

  fs::create_directories(opt.out_dir);
  const std::string out_name = get_or<std::string>(cfg, "out_name", "features.csv");
  std::ofstream out(fs::path(opt.out_dir) / out_name);
  if (!out) throw DataError("cannot write " + out_name);
  FeatureMatrix fm;
  fm.values = ctx.features;
  fm.labels = ctx.feature_labels;
  std::vector<double> times(ctx.times.begin(), ctx.times.end() - 1);
  write_features_csv(out, times, fm);
  std::cout << "features: wrote " << fm.samples() << " x " << fm.features() << " matrix to "
            << out_name << "\n";
  return 0;
}

// ------------------------------------------------------------------- train

struct TrainSetup {
  PortfolioSpec spec;
  QpProblem problem;
  // Time-average mode keeps the context for beta tuning / reporting.
  std::optional<EvalContext> context;
  double tc_level = 0.0;
  int n_paths = 1;
  int regenerated = 0;
};

TrainSetup prepare_training(const json& cfg, const CommonOptions& opt) {
  const std::string objective = get_or<std::string>(cfg, "objective", "logopt");
  const std::string mode = get_or<std::string>(cfg, "mode", "time_average");
  if (objective != "logopt" && objective != "mv")
    throw ConfigError("objective must be logopt or mv");

  TrainSetup setup;
  setup.spec = portfolio_spec_from_json(cfg.contains("portfolio") ? cfg.at("portfolio") : json::object(),
                                        require(cfg, "features", "train config"));
  if (opt.seed) setup.spec.features.seed = *opt.seed;
  setup.tc_level = get_or<double>(cfg, "tc_level", 0.0);

  const json& data = require(cfg, "data", "train config");
  if (mode == "monte_carlo") {
    if (objective != "logopt")
      throw ConfigError("monte_carlo mode supports only the logopt objective");
    std::pair<Eigen::MatrixXd, Eigen::VectorXd> averaged;
    if (data.is_object()) {
      check_keys(data, {"sim"}, "train.data");
      const SimConfig sim = sim_config_from_json(require(data, "sim", "train.data"));
      setup.n_paths = require(cfg, "n_paths", "train config").get<int>();
      McAssembly mc = assemble_logopt_monte_carlo(sim, setup.n_paths, setup.spec);
      averaged = {std::move(mc.q_hat), std::move(mc.c_hat)};
      setup.regenerated = mc.regenerated;
    } else {
      std::vector<std::pair<Eigen::MatrixXd, Eigen::VectorXd>> terms;
      for (const fs::path& file : list_panel_files(data.get<std::string>())) {
        const MarketPanel panel = load_prices_csv_file(file.string());
        const EvalWindow window{0, 0, panel.samples() - 1};
        const EvalContext ctx = build_context(setup.spec, panel, window);
        terms.push_back(assemble_logopt(ctx.features, ctx.mu, setup.spec.type));
      }
      setup.n_paths = static_cast<int>(terms.size());
      averaged = monte_carlo_average(terms);
    }
    setup.problem.Q = std::move(averaged.first);
    setup.problem.c = std::move(averaged.second);
  } else if (mode == "time_average") {
    const MarketPanel panel = load_prices_csv_file(data.get<std::string>());
    const WindowConfig wc = windows_from_json(require(cfg, "windows", "train config"));
    const EvalWindow window = pick_window(wc, panel.samples());
    EvalContext ctx = build_context(setup.spec, panel, window);
    if (objective == "logopt") {
      auto [q, c] = assemble_logopt(ctx.features, ctx.mu, setup.spec.type);
      setup.problem.Q = std::move(q);
      setup.problem.c = std::move(c);
    } else {
      const json& mv = require(cfg, "mv", "train config");
      check_keys(mv, {"lambda", "delta", "mode"}, "train.mv");
      const double lambda = require(mv, "lambda", "train.mv").get<double>();
      const int delta = get_or<int>(mv, "delta", 1);
      const MvMode mv_mode = get_or<std::string>(mv, "mode", "relative") == "wealth" ? MvMode::wealth
                                                                                     : MvMode::relative;
      const Eigen::MatrixXd& gross = mv_mode == MvMode::wealth ? ctx.prices : ctx.mu;
      setup.problem = mv_problem(estimate_mv_statistics(ctx.features, gross, ctx.tau, delta, lambda,
                                                        mv_mode, setup.spec.type));
    }
    setup.context = std::move(ctx);
  } else {
    throw ConfigError("mode must be monte_carlo or time_average");
  }

  setup.problem.gamma = get_or<double>(cfg, "gamma", 0.0);
  if (cfg.contains("bounds") && !cfg.at("bounds").is_null()) {
    const double b = cfg.at("bounds").get<double>();
    if (b < 0.0) throw ConfigError("bounds must be >= 0");
    setup.problem.bounds = Eigen::VectorXd::Constant(setup.problem.size(), b);
  }
  return setup;
}

int cmd_train(const CommonOptions& opt) {
  const json cfg = load_config(opt.config_path);
  check_keys(cfg, {"objective", "mode", "data", "n_paths", "portfolio", "features", "gamma", "bounds",
                   "beta", "tc_level", "tune_beta", "beta0", "mv", "windows", "model_out", "report_out",
                   "dump_problem", "dump_solution"},
             "train config");
  TrainSetup setup = prepare_training(cfg, opt);

  json report;
  report["command"] = "train";
  report["objective"] = get_or<std::string>(cfg, "objective", "logopt");
  report["n_paths"] = setup.n_paths;
  report["regenerated"] = setup.regenerated;
  report["gamma"] = setup.problem.gamma;

  QpSolution solution;
  double beta_used = 0.0;
  const bool tune = get_or<bool>(cfg, "tune_beta", false);
  const double beta_fixed = get_or<double>(cfg, "beta", 0.0);
  if (tune || beta_fixed > 0.0) {
    if (!setup.context)
      throw ConfigError("transaction-cost penalties require time_average mode");
    const EvalContext& ctx = *setup.context;
    const int rebalances = static_cast<int>(ctx.features.rows());
    auto problem_at_beta = [&](double beta) {
      QpProblem p = setup.problem;
      add_tc_penalty(p, beta, ctx.features, ctx.mu.topRows(rebalances), setup.spec.type,
                     setup.spec.tau_choice);
      return p;
    };
    if (tune) {
      auto wealth_of = [&](const Eigen::VectorXd& l) {
        PortfolioSpec candidate = setup.spec;
        candidate.coefficients = l;
        const Eigen::MatrixXd weights = portfolio_weights(candidate, ctx);
        const BacktestReport bt = run_backtest(weights, ctx.prices, setup.tc_level);
        return bt.ruined ? 0.0 : bt.wealth[bt.wealth.size() - 1];
      };
      const BetaTuneResult tuned =
          tune_beta(problem_at_beta, wealth_of, get_or<double>(cfg, "beta0", 0.5));
      solution = tuned.solution;
      beta_used = tuned.beta;
      json trace = json::array();
      for (const auto& [b, w] : tuned.trace) trace.push_back(json{{"beta", b}, {"wealth", w}});
      report["beta_trace"] = trace;
      report["insample_wealth_under_tc"] = tuned.wealth;
    } else {
      solution = solve_qp(problem_at_beta(beta_fixed));
      beta_used = beta_fixed;
    }
  } else {
    solution = solve_qp(setup.problem);
  }

  setup.spec.coefficients = solution.l;
  report["beta"] = beta_used;
  report["tc_level"] = setup.tc_level;
  report["solver"] = {{"converged", solution.report.converged},
                      {"iterations", solution.report.iterations},
                      {"kkt_residual", solution.report.kkt_residual},
                      {"objective", solution.report.objective},
                      {"method", solution.report.method}};
  std::cerr << "solver: method=" << solution.report.method << " iterations=" << solution.report.iterations
            << " kkt_residual=" << solution.report.kkt_residual << " objective="
            << solution.report.objective << "\n";

  fs::create_directories(opt.out_dir);
  if (cfg.contains("dump_problem"))
    dump_problem_json((fs::path(opt.out_dir) / cfg.at("dump_problem").get<std::string>()).string(),
                      setup.problem);
  if (cfg.contains("dump_solution"))
    dump_solution_json((fs::path(opt.out_dir) / cfg.at("dump_solution").get<std::string>()).string(),
                       solution);
  const std::string model_out = get_or<std::string>(cfg, "model_out", "model.json");
  std::map<std::string, double> numbers{{"gamma", setup.problem.gamma},
                                        {"beta", beta_used},
                                        {"n_paths", static_cast<double>(setup.n_paths)},
                                        {"objective_value", solution.report.objective}};
  if (setup.problem.bounds.size() > 0) numbers["bounds"] = setup.problem.bounds[0];
  std::map<std::string, std::string> texts{{"objective", get_or<std::string>(cfg, "objective", "logopt")},
                                           {"mode", get_or<std::string>(cfg, "mode", "time_average")}};
  save_model((fs::path(opt.out_dir) / model_out).string(), setup.spec, numbers, texts);
  write_json(fs::path(opt.out_dir) / get_or<std::string>(cfg, "report_out", "training_report.json"), report);
  std::cout << "train: model written to " << model_out << " (objective "
            << solution.report.objective << ")\n";
  return 0;
}

// ---------------------------------------------------------------------- cv

int cmd_cv(const CommonOptions& opt) {
  const json cfg = load_config(opt.config_path);
  check_keys(cfg, {"objective", "data", "portfolio", "features", "gamma_grid", "bounds", "tc_level",
                   "mv", "windows", "model_out", "report_out"},
             "cv config");
  const std::string objective = get_or<std::string>(cfg, "objective", "logopt");
  PortfolioSpec spec = portfolio_spec_from_json(cfg.contains("portfolio") ? cfg.at("portfolio") : json::object(),
                                                require(cfg, "features", "cv config"));
  if (opt.seed) spec.features.seed = *opt.seed;

  const MarketPanel panel =
      load_prices_csv_file(require(cfg, "data", "cv config").get<std::string>());
  WindowConfig wc = windows_from_json(require(cfg, "windows", "cv config"));
  if (wc.t_cv < 2) throw ConfigError("cv: windows.t_cv must be >= 2");
  const SplitWindows split = split_train_cv_test(panel.samples(), wc.t_ins, wc.t_cv, wc.t_test, wc.t0);
  const double tc_level = get_or<double>(cfg, "tc_level", 0.0);

  const json& grid_cfg = require(cfg, "gamma_grid", "cv config");
  check_keys(grid_cfg, {"min", "max", "points"}, "cv.gamma_grid");
  const double g_min = require(grid_cfg, "min", "cv.gamma_grid").get<double>();
  const double g_max = require(grid_cfg, "max", "cv.gamma_grid").get<double>();
  const int points = get_or<int>(grid_cfg, "points", 100);
  if (!(g_min >= 0.0) || !(g_max > g_min) || points < 2) throw ConfigError("cv: bad gamma grid");

  auto problem_for = [&](const EvalContext& ctx) {
    QpProblem p;
    if (objective == "logopt") {
      auto [q, c] = assemble_logopt(ctx.features, ctx.mu, spec.type);
      p.Q = std::move(q);
      p.c = std::move(c);
    } else {
      const json& mv = require(cfg, "mv", "cv config");
      const double lambda = require(mv, "lambda", "cv.mv").get<double>();
      const int delta = get_or<int>(mv, "delta", 1);
      const MvMode mv_mode = get_or<std::string>(mv, "mode", "relative") == "wealth" ? MvMode::wealth
                                                                                     : MvMode::relative;
      p = mv_problem(estimate_mv_statistics(ctx.features, mv_mode == MvMode::wealth ? ctx.prices : ctx.mu,
                                            ctx.tau, delta, lambda, mv_mode, spec.type));
    }
    if (cfg.contains("bounds") && !cfg.at("bounds").is_null())
      p.bounds = Eigen::VectorXd::Constant(p.size(), cfg.at("bounds").get<double>());
    return p;
  };

  const EvalContext train_ctx = build_context(spec, panel, split.train);
  const EvalContext cv_ctx = build_context(spec, panel, split.cv);
  QpProblem base = problem_for(train_ctx);

  // Grid search over equally spaced gamma values; the score is the
  // cross-validation window's log-relative wealth at the configured cost.
  json grid = json::array();
  double best_gamma = g_min;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < points; ++i) {
    const double gamma = g_min + (g_max - g_min) * static_cast<double>(i) / static_cast<double>(points - 1);
    base.gamma = gamma;
    PortfolioSpec candidate = spec;
    candidate.coefficients = solve_qp(base).l;
    const Eigen::MatrixXd weights = portfolio_weights(candidate, cv_ctx);
    const BacktestReport bt = run_backtest(weights, cv_ctx.prices, tc_level);
    const double score = bt.ruined ? -std::numeric_limits<double>::infinity() : bt.log_relative_final;
    grid.push_back(json{{"gamma", gamma}, {"cv_log_relative_wealth", json_log_value(score)}});
    if (score > best_score) {
      best_score = score;
      best_gamma = gamma;
    }
  }

  // Refit at the selected gamma on the window directly before the test set.
  const EvalContext retrain_ctx = build_context(spec, panel, split.retrain);
  QpProblem final_problem = problem_for(retrain_ctx);
  final_problem.gamma = best_gamma;
  const QpSolution final_solution = solve_qp(final_problem);
  spec.coefficients = final_solution.l;

  fs::create_directories(opt.out_dir);
  const std::string model_out = get_or<std::string>(cfg, "model_out", "model.json");
  save_model((fs::path(opt.out_dir) / model_out).string(), spec,
             {{"gamma", best_gamma}, {"objective_value", final_solution.report.objective}},
             {{"objective", objective}, {"mode", "time_average"}, {"selected_by", "cv"}});

  json report;
  report["command"] = "cv";
  report["grid"] = grid;
  report["best_gamma"] = best_gamma;
  report["best_cv_log_relative_wealth"] = json_log_value(best_score);
  write_json(fs::path(opt.out_dir) / get_or<std::string>(cfg, "report_out", "cv_report.json"), report);
  std::cout << "cv: best gamma " << best_gamma << ", model written to " << model_out << "\n";
  return 0;
}

// ---------------------------------------------------------------- backtest

int cmd_backtest(const CommonOptions& opt) {
  const json cfg = load_config(opt.config_path);
  check_keys(cfg, {"model", "data", "n_paths", "tc_levels", "windows", "reference", "report_out",
                   "curves_prefix"},
             "backtest config");
  const PortfolioSpec spec = load_model(require(cfg, "model", "backtest config").get<std::string>());

  std::vector<double> tc_levels{0.0};
  if (cfg.contains("tc_levels")) {
    tc_levels.clear();
    for (const auto& c : cfg.at("tc_levels")) tc_levels.push_back(c.get<double>());
    if (tc_levels.empty()) throw ConfigError("backtest: tc_levels must be non-empty");
  }

  fs::create_directories(opt.out_dir);
  json report;
  report["command"] = "backtest";

  const json& data = require(cfg, "data", "backtest config");
  if (data.is_object()) {
    // Simulated test set: mean log-relative wealth across paths, optionally
    // next to the theoretical growth-optimal portfolio on the same paths.
    check_keys(data, {"sim"}, "backtest.data");
    const SimConfig sim = sim_config_from_json(require(data, "sim", "backtest.data"));
    const int n_paths = require(cfg, "n_paths", "backtest config").get<int>();
    const bool with_reference = get_or<bool>(cfg, "reference", false);
    const SimEvaluation eval = evaluate_on_simulated(sim, n_paths, spec, with_reference);
    report["n_paths"] = n_paths;
    report["mean_log_relative_wealth"] = eval.mean_model;
    if (with_reference) {
      report["mean_log_relative_wealth_growth_optimal"] = eval.mean_reference;
      report["gap"] = eval.mean_reference - eval.mean_model;
    }

    json per_tc = json::object();
    for (double c : tc_levels) {
      if (c == 0.0) continue;  // the frictionless case is the headline metric above
      std::vector<double> log_v(static_cast<std::size_t>(n_paths));
      std::vector<int> ruined(static_cast<std::size_t>(n_paths), 0);
      parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t p) {
        const MarketPanel panel = simulate_one(sim, p);
        const EvalContext ctx = build_context(spec, panel, EvalWindow{0, 0, sim.steps});
        const BacktestReport bt = run_backtest(portfolio_weights(spec, ctx), ctx.prices, c);
        log_v[p] = bt.ruined ? -std::numeric_limits<double>::infinity() : bt.log_relative_final;
        ruined[p] = bt.ruined ? 1 : 0;
      });
      double mean = 0.0;
      int n_ruined = 0, n_ok = 0;
      for (std::size_t p = 0; p < log_v.size(); ++p) {
        if (ruined[p]) {
          ++n_ruined;
        } else {
          mean += log_v[p];
          ++n_ok;
        }
      }
      char key[32];
      std::snprintf(key, sizeof(key), "%g", c);
      per_tc[key] = {{"mean_log_relative_wealth_ex_ruin", n_ok > 0 ? json(mean / n_ok) : json("-inf")},
                     {"ruined_paths", n_ruined}};
    }
    report["tc"] = per_tc;
  } else {
    // One user panel: evaluate the configured window at every cost level and
    // dump the wealth and weight time series.
    const MarketPanel panel = load_prices_csv_file(data.get<std::string>());
    EvalWindow window{0, 0, panel.samples() - 1};
    if (cfg.contains("windows")) {
      WindowConfig wc = windows_from_json(cfg.at("windows"));
      if (wc.which == "train") wc.which = "test";  // backtests default to the test window
      window = pick_window(wc, panel.samples());
    }
    const EvalContext ctx = build_context(spec, panel, window);
    const Eigen::MatrixXd weights = portfolio_weights(spec, ctx);

    const std::string prefix = get_or<std::string>(cfg, "curves_prefix", "curves");
    {
      std::ofstream wout(fs::path(opt.out_dir) / (prefix + "_weights.csv"));
      WeightPanel wp;
      wp.weights = weights;
      std::vector<double> times(ctx.times.begin(), ctx.times.end() - 1);
      write_weights_csv(wout, times, wp, ctx.asset_names);
    }

    json per_tc = json::object();
    for (double c : tc_levels) {
      const BacktestReport bt = run_backtest(weights, ctx.prices, c);
      char key[32];
      std::snprintf(key, sizeof(key), "%g", c);
      per_tc[key] = {{"log_relative_wealth", json_log_value(bt.log_relative_final)},
                     {"log_wealth", json_log_value(bt.log_wealth_final)},
                     {"total_tc_paid", bt.total_tc_paid},
                     {"mean_turnover", bt.turnover.size() > 0 ? bt.turnover.mean() : 0.0},
                     {"ruined", bt.ruined},
                     {"ruin_index", bt.ruin_index}};
      char fname[64];
      std::snprintf(fname, sizeof(fname), "%s_tc_%g.csv", prefix.c_str(), c);
      std::ofstream curve(fs::path(opt.out_dir) / fname);
      curve << "time,wealth,relative_wealth\n";
      char buf[40];
      for (Eigen::Index t = 0; t < bt.wealth.size(); ++t) {
        std::snprintf(buf, sizeof(buf), "%.17g", ctx.times[static_cast<std::size_t>(t)]);
        curve << buf;
        std::snprintf(buf, sizeof(buf), "%.17g", finite_or_sentinel(bt.wealth[t]));
        curve << ',' << buf;
        std::snprintf(buf, sizeof(buf), "%.17g", finite_or_sentinel(bt.relative_wealth[t]));
        curve << ',' << buf << '\n';
      }
    }
    report["tc"] = per_tc;
    report["window"] = {{"obs_start", window.obs_start},
                        {"invest_start", window.invest_start},
                        {"invest_end", window.invest_end}};
  }

  write_json(fs::path(opt.out_dir) / get_or<std::string>(cfg, "report_out", "backtest_report.json"), report);
  std::cout << "backtest: report written to " << opt.out_dir << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"sigfolio: signature-based path-functional portfolio toolkit"};
  app.require_subcommand(1);

  CommonOptions opt;
  const char* names[] = {"simulate", "features", "train", "cv", "backtest"};
  const char* descriptions[] = {
      "Simulate market-model trajectories to CSV panels",
      "Evaluate a feature family along a panel and export it as CSV",
      "Assemble and solve the portfolio optimization problem",
      "Grid-search the ridge parameter by cross-validation",
      "Evaluate a trained model, with and without transaction costs",
  };
  for (int i = 0; i < 5; ++i) {
    CLI::App* sub = app.add_subcommand(names[i], descriptions[i]);
    sub->add_option("--config", opt.config_path, "JSON configuration file")->required();
    sub->add_option("--out", opt.out_dir, "output directory");
    sub->add_option("--seed", [&opt](const std::vector<std::string>& vals) {
      opt.seed = std::stoull(vals.at(0));
      return true;
    }, "seed override");
    sub->add_option("--threads", opt.threads, "worker thread cap (0 = hardware)");
  }

  std::vector<std::string> argv_like = args;
  try {
    std::reverse(argv_like.begin(), argv_like.end());
    app.parse(argv_like);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  set_thread_count(opt.threads);
  try {
    if (app.got_subcommand("simulate")) return cmd_simulate(opt);
    if (app.got_subcommand("features")) return cmd_features(opt);
    if (app.got_subcommand("train")) return cmd_train(opt);
    if (app.got_subcommand("cv")) return cmd_cv(opt);
    if (app.got_subcommand("backtest")) return cmd_backtest(opt);
    throw ConfigError("no subcommand given");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace sigfolio::cli
