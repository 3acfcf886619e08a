// Acceptance suite: one self-contained check per shipping criterion, one
// PASS/FAIL line each. Exit code = number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "sigfolio/backtest.hpp"
#include "sigfolio/parallel.hpp"
#include "sigfolio/path.hpp"
#include "sigfolio/qp.hpp"
#include "sigfolio/signature.hpp"
#include "sigfolio/training.hpp"

using namespace sigfolio;
namespace fs = std::filesystem;

namespace {

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

DiscretePath random_path(int samples, int dim, std::mt19937_64& rng, double scale = 0.3) {
  std::normal_distribution<double> normal(0.0, scale);
  std::vector<double> times(static_cast<std::size_t>(samples));
  Eigen::MatrixXd values(samples, dim);
  for (int k = 0; k < samples; ++k) {
    times[static_cast<std::size_t>(k)] = static_cast<double>(k);
    for (int j = 0; j < dim; ++j)
      values(k, j) = (k == 0 ? 0.0 : values(k - 1, j)) + normal(rng) / std::sqrt(static_cast<double>(samples));
  }
  return DiscretePath(std::move(times), std::move(values));
}

TruncatedTensor random_lie_element(int alphabet, int level, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-0.8, 0.8);
  TruncatedTensor t(alphabet, level);
  for (int k = 1; k <= level; ++k)
    for (double& x : t.level_data(k)) x = uni(rng);
  return t;
}

// ---------------------------------------------------------------------------
// 1. Algebra / signature property suite.
Outcome criterion_algebra() {
  Outcome out;
  std::mt19937_64 rng(101);

  // Shuffle identity on sampled paths, |I|+|J| <= 4 <= N.
  for (int rep = 0; rep < 6; ++rep) {
    const int dim = 2 + rep % 2;
    const DiscretePath path = random_path(40 + 20 * rep, dim, rng);
    const TruncatedTensor g = SignatureStream(path, 4).final();
    for (const Word& a : enumerate_words(dim, 2))
      for (const Word& b : enumerate_words(dim, 2)) {
        if (a.length() + b.length() > 4) continue;
        const double product = g.coeff(a) * g.coeff(b);
        double shuffled = 0.0;
        for (const auto& [w, k] : shuffle(a, b)) shuffled += static_cast<double>(k) * g.coeff(w);
        out.require(std::abs(product - shuffled) <= 1e-10 * (1.0 + std::abs(product)),
                    "shuffle identity violated");
      }
  }

  // Chen identity under concatenation.
  for (int rep = 0; rep < 5; ++rep) {
    const DiscretePath path = random_path(60, 3, rng);
    const int split = 10 + 8 * rep;
    const TruncatedTensor whole = SignatureStream(path, 3).final();
    const TruncatedTensor left = SignatureStream(path.slice(0, split), 3).final();
    const TruncatedTensor right = SignatureStream(path.slice(split, 59), 3).final();
    out.require(max_abs_diff(whole, tensor_mul(left, right)) <= 1e-12, "Chen identity violated");
  }

  // exp / inverse round trips.
  for (int rep = 0; rep < 10; ++rep) {
    const TruncatedTensor a = random_lie_element(3, 3, rng);
    TruncatedTensor neg = a;
    neg *= -1.0;
    out.require(max_abs_diff(group_inverse(tensor_exp(a)), tensor_exp(neg)) <= 1e-12,
                "inverse(exp(a)) != exp(-a)");
    const TruncatedTensor g = tensor_exp(a);
    out.require(max_abs_diff(tensor_mul(g, group_inverse(g)), TruncatedTensor::unit(3, 3)) <= 1e-12,
                "g * g^-1 != 1");
  }

  // Invariance under collinear refinement.
  for (int rep = 0; rep < 5; ++rep) {
    const DiscretePath path = random_path(30, 2, rng);
    std::vector<double> times;
    Eigen::MatrixXd values(2 * path.samples() - 1, 2);
    int row = 0;
    for (int k = 0; k < path.samples(); ++k) {
      times.push_back(path.times[static_cast<std::size_t>(k)]);
      values.row(row++) = path.values.row(k);
      if (k + 1 < path.samples()) {
        times.push_back(0.5 * (path.times[static_cast<std::size_t>(k)] + path.times[static_cast<std::size_t>(k) + 1]));
        values.row(row++) = 0.5 * (path.values.row(k) + path.values.row(k + 1));
      }
    }
    const DiscretePath refined(times, values);
    out.require(max_abs_diff(SignatureStream(path, 4).final(), SignatureStream(refined, 4).final()) <= 1e-12,
                "collinear refinement changed the signature");
  }
  return out;
}

// ---------------------------------------------------------------------------
// 2. Rebalancing alpha solver.
double alpha_gap(const Eigen::VectorXd& prev, const Eigen::VectorXd& target, double c, double alpha) {
  double rhs = 0.0;
  for (Eigen::Index i = 0; i < prev.size(); ++i) rhs += std::abs(alpha * target[i] - prev[i]);
  return (1.0 - alpha) - c * rhs;
}

Outcome criterion_alpha_solver() {
  Outcome out;

  {
    Eigen::Vector2d prev(13.1, -12.1), target(13.0, -12.0);
    const TcOutcome tc = solve_rebalance_alpha(prev, target, 0.05);
    out.require(tc.status == TcStatus::ruin_no_solution && tc.roots.empty(),
                "case (a): expected no solution");
  }
  {
    Eigen::Vector2d prev(11.0, -10.0), target(10.0, -9.0);
    const TcOutcome tc = solve_rebalance_alpha(prev, target, 0.05);
    out.require(tc.status == TcStatus::ruin_negative, "case (b): expected a negative best root");
    out.require(!tc.roots.empty() && std::abs(tc.alpha + 1.0) <= 1e-12, "case (b): root is alpha = -1");
    for (double r : tc.roots)
      out.require(std::abs(alpha_gap(prev, target, 0.05, r)) <= 1e-12, "case (b): root fails the equation");
  }
  {
    Eigen::Vector3d prev(5.0, 6.0, -10.0), target(5.5, 6.5, -11.0);
    const TcOutcome tc = solve_rebalance_alpha(prev, target, 0.05);
    out.require(tc.status == TcStatus::multiple && tc.roots.size() == 2, "case (c): expected two roots");
    if (tc.roots.size() == 2) {
      out.require(std::abs(tc.roots[0] - 1.0 / 3.0) <= 1e-4, "case (c): first root is 0.3333");
      out.require(std::abs(tc.roots[1] - 0.9535) <= 1e-4, "case (c): second root is 0.9535");
      out.require(tc.alpha == tc.roots[1], "case (c): the larger root must be chosen");
      for (double r : tc.roots)
        out.require(std::abs(alpha_gap(prev, target, 0.05, r)) <= 1e-12, "case (c): root fails the equation");
    }
  }

  // Uniqueness sweep under sum |prev| < 1/c.
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> uni(0.01, 1.0);
  int checked = 0;
  for (int rep = 0; rep < 10000; ++rep) {
    const int d = 2 + rep % 4;
    Eigen::VectorXd prev(d), target(d);
    for (int i = 0; i < d; ++i) {
      prev[i] = uni(rng);
      target[i] = uni(rng);
    }
    prev /= prev.sum();
    target /= target.sum();
    const TcOutcome tc = solve_rebalance_alpha(prev, target, 0.05);
    out.require(tc.status == TcStatus::unique, "sweep: expected a unique root");
    out.require(tc.alpha >= 0.0 && tc.alpha <= 1.0, "sweep: root must lie in [0,1]");
    out.require(std::abs(alpha_gap(prev, target, 0.05, tc.alpha)) <= 1e-12, "sweep: root fails the equation");
    ++checked;
  }
  out.note("short-selling edge cases + " + std::to_string(checked) + " uniqueness instances");
  return out;
}

// ---------------------------------------------------------------------------
// 3. Master objective identities.
struct Instance {
  Eigen::MatrixXd features;
  Eigen::MatrixXd mu;
  Eigen::MatrixXd prices;
};

Instance random_instance(int R, int m, int V, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.2, 1.0);
  Instance inst;
  inst.features.resize(R, V);
  for (int t = 0; t < R; ++t)
    for (int v = 0; v < V; ++v) inst.features(t, v) = v == 0 ? 1.0 : 0.5 * normal(rng);
  inst.prices.resize(R + 1, m);
  for (int j = 0; j < m; ++j) inst.prices(0, j) = uni(rng);
  for (int t = 1; t <= R; ++t)
    for (int j = 0; j < m; ++j) inst.prices(t, j) = inst.prices(t - 1, j) * std::exp(0.05 * normal(rng));
  inst.mu.resize(R + 1, m);
  for (int t = 0; t <= R; ++t) inst.mu.row(t) = inst.prices.row(t) / inst.prices.row(t).sum();
  return inst;
}

Outcome criterion_objective_identity() {
  Outcome out;
  std::mt19937_64 rng(303);
  std::normal_distribution<double> normal(0.0, 1.0);

  double worst_log = 0.0, worst_mv = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int m = 2 + rep % 2;          // d <= 3
    const int V = 2 + rep % 9;          // |V| <= 10
    const int R = 10 + (rep * 7) % 41;  // <= 50 steps
    const Instance inst = random_instance(R, m, V, rng);
    const PortfolioType type = rep % 2 == 0 ? PortfolioType::type1 : PortfolioType::type2;

    // Log objective vs direct discrete log-relative wealth.
    const auto [q, c] = assemble_logopt(inst.features, inst.mu, type);
    Eigen::VectorXd l(m * V);
    for (Eigen::Index i = 0; i < l.size(); ++i) l[i] = normal(rng);
    const Eigen::MatrixXd f = controlling_functions(l, inst.features, m);
    double first = 0.0, second = 0.0;
    for (int k = 0; k < R; ++k)
      for (int i = 0; i < m; ++i) {
        const double gi = type == PortfolioType::type2 ? 1.0 / inst.mu(k, i) : 1.0;
        first += gi * f(k, i) * (inst.mu(k + 1, i) - inst.mu(k, i));
        for (int j = 0; j < m; ++j) {
          const double gj = type == PortfolioType::type2 ? 1.0 / inst.mu(k, j) : 1.0;
          second += gi * gj * f(k, i) * f(k, j) * (inst.mu(k + 1, i) - inst.mu(k, i)) *
                    (inst.mu(k + 1, j) - inst.mu(k, j));
        }
      }
    const double direct_wealth = first - 0.5 * second;
    const double objective = 0.5 * l.dot(q * l) - c.dot(l);
    const double log_err = std::abs(objective + direct_wealth) / (1.0 + std::abs(direct_wealth));
    worst_log = std::max(worst_log, log_err);

    // MV objective vs realized strategy-return statistics.
    const int delta = 1 + rep % 2;
    const double lambda = 0.5 + 0.5 * (rep % 3);
    const MvMode mode = rep % 2 == 0 ? MvMode::relative : MvMode::wealth;
    const Eigen::MatrixXd tau = inst.mu.topRows(R);
    const Eigen::MatrixXd& gross = mode == MvMode::wealth ? inst.prices : inst.mu;
    const MvStatistics stats = estimate_mv_statistics(inst.features, gross, tau, delta, lambda, mode, type);
    const Eigen::MatrixXd pi = type == PortfolioType::type1 ? weights_type1(tau, f) : weights_type2(tau, f);
    std::vector<double> r_pi, r_tau;
    for (int t = 0; t + delta <= R; t += delta) {
      double rp = 0.0, rt = 0.0;
      for (int j = 0; j < m; ++j) {
        const double ratio = gross(t + delta, j) / gross(t, j);
        rp += pi(t, j) * ratio;
        rt += tau(t, j) * ratio;
      }
      r_pi.push_back(rp - 1.0);
      r_tau.push_back(rt - 1.0);
    }
    const int N = static_cast<int>(r_pi.size());
    auto stats_of = [N](const std::vector<double>& x) {
      double mean = 0.0;
      for (double v : x) mean += v;
      mean /= N;
      double var = 0.0;
      for (double v : x) var += (v - mean) * (v - mean);
      return std::make_pair(mean, var / (N - 1));
    };
    const auto [mean_pi, var_pi] = stats_of(r_pi);
    const auto [mean_tau, var_tau] = stats_of(r_tau);
    const double quad_form = l.dot(stats.var_y * l) - l.dot(lambda * stats.mean_y - stats.sigma);
    const double direct_mv = (var_pi - lambda * mean_pi) - (var_tau - lambda * mean_tau);
    const double mv_err = std::abs(quad_form - direct_mv) / (1.0 + std::abs(direct_mv));
    worst_mv = std::max(worst_mv, mv_err);
  }
  out.require(worst_log <= 1e-10, "log objective identity exceeded 1e-10");
  out.require(worst_mv <= 1e-10, "mv objective identity exceeded 1e-10");
  char buf[128];
  std::snprintf(buf, sizeof(buf), "worst log err %.2e, worst mv err %.2e over 100 instances", worst_log,
                worst_mv);
  out.note(buf);
  return out;
}

// ---------------------------------------------------------------------------
// 4. Trained portfolios vs the theoretical growth-optimal reference.
struct MarketCase {
  std::string name;
  SimConfig sim;
  PortfolioSpec spec;
  double gamma;
  double tolerance;  // relative gap vs the growth-optimal mean log V
};

std::vector<MarketCase> desk_scale_cases() {
  std::vector<MarketCase> cases;

  MarketCase bs;
  bs.name = "bs(deg3,typeI)";
  bs.sim.model = MarketModel::bs;
  bs.sim.d = 3;
  bs.sim.steps = 1000;
  bs.sim.horizon = 1.0;
  bs.sim.seed = 12001;
  bs.sim.s0 = Eigen::Vector3d(1.0, 1.2, 0.8);
  bs.sim.bs_drift = Eigen::Vector3d(0.25, 0.08, -0.06);
  Eigen::Matrix3d bs_sigma;
  bs_sigma << 0.20, 0.00, 0.00,
              0.04, 0.24, 0.00,
             -0.03, 0.05, 0.28;
  bs.sim.bs_sigma = bs_sigma;
  bs.spec.type = PortfolioType::type1;
  bs.spec.features.family = FeatureFamily::full_signature;
  bs.spec.features.level = 3;
  bs.spec.features.horizon = 1.0;
  bs.gamma = 1e-10;
  bs.tolerance = 0.01;
  cases.push_back(bs);

  MarketCase sm;
  sm.name = "sigmarket(deg2,typeII)";
  sm.sim.model = MarketModel::sigmarket;
  sm.sim.d = 3;
  sm.sim.steps = 1000;
  sm.sim.horizon = 1.0;
  sm.sim.seed = 12003;
  sm.sim.s0 = Eigen::Vector3d(1.0, 1.2, 0.8);
  Eigen::Matrix3d sm_sigma;
  sm_sigma << 0.25, 0.00, 0.00,
              0.05, 0.22, 0.00,
             -0.04, 0.03, 0.30;
  sm.sim.sig_sigma = sm_sigma;
  sm.sim.sig_drift.level = 2;
  sm.sim.sig_drift.strong_solution_only = true;
  sm.sim.sig_drift.terms = {
      {Word{}, Eigen::Vector3d(0.45, 0.15, -0.06)},
      {Word{1}, Eigen::Vector3d(-0.30, 0.18, 0.12)},
      {Word{2}, Eigen::Vector3d(0.90, -0.30, 0.15)},
      {Word{3}, Eigen::Vector3d(-0.15, 0.60, -0.30)},
      {Word{4}, Eigen::Vector3d(0.30, -0.15, 0.75)},
      {Word{2, 1}, Eigen::Vector3d(1.20, 0.00, -0.60)},
      {Word{4, 1}, Eigen::Vector3d(-0.45, 0.75, 0.30)},
  };
  sm.spec.type = PortfolioType::type2;
  sm.spec.features.family = FeatureFamily::full_signature;
  sm.spec.features.level = 2;
  sm.spec.features.horizon = 1.0;
  sm.gamma = 1e-7;
  sm.tolerance = 0.01;
  cases.push_back(sm);

  MarketCase vol;
  vol.name = "volstab(deg3,typeI)";
  vol.sim.model = MarketModel::volstab;
  vol.sim.d = 3;
  vol.sim.steps = 10000;  // alpha = 10 needs >= 1e4 steps per unit horizon
  vol.sim.horizon = 1.0;
  vol.sim.seed = 12002;
  vol.sim.s0 = Eigen::Vector3d(1.0, 1.2, 0.8);
  vol.sim.volstab_alpha = 10.0;
  vol.spec.type = PortfolioType::type1;
  vol.spec.features.family = FeatureFamily::full_signature;
  vol.spec.features.level = 3;
  vol.spec.features.horizon = 1.0;
  vol.gamma = 1e-10;
  vol.tolerance = 0.02;
  cases.push_back(vol);

  return cases;
}

Outcome criterion_growth_optimal_gap(int m_train, int m_test) {
  Outcome out;
  for (MarketCase mc : desk_scale_cases()) {
    const double t0 = now_seconds();
    McAssembly assembly = assemble_logopt_monte_carlo(mc.sim, m_train, mc.spec);
    QpProblem problem;
    problem.Q = std::move(assembly.q_hat);
    problem.c = std::move(assembly.c_hat);
    problem.gamma = mc.gamma;
    problem.bounds = Eigen::VectorXd::Constant(problem.size(), 1e4);
    mc.spec.coefficients = solve_qp(problem).l;

    SimConfig test_sim = mc.sim;
    test_sim.seed = mc.sim.seed + 777777;  // disjoint test set
    const SimEvaluation eval = evaluate_on_simulated(test_sim, m_test, mc.spec, true);
    const double gap = std::abs(eval.mean_model - eval.mean_reference) / std::abs(eval.mean_reference);
    char buf[192];
    std::snprintf(buf, sizeof(buf), "%s: go %.5f vs trained %.5f, rel gap %.3f%% (tol %.0f%%, %.0fs)",
                  mc.name.c_str(), eval.mean_reference, eval.mean_model, 100.0 * gap,
                  100.0 * mc.tolerance, now_seconds() - t0);
    out.note(buf);
    out.require(gap <= mc.tolerance, mc.name + " exceeded its tolerance");
  }
  return out;
}

// ---------------------------------------------------------------------------
// 5. QP solver accuracy.
Outcome criterion_qp_solver() {
  Outcome out;
  std::mt19937_64 rng(505);
  std::normal_distribution<double> normal(0.0, 1.0);

  double worst_rel = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 3 + rep % 12;
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
    QpProblem p;
    p.Q = a * a.transpose() + 0.05 * Eigen::MatrixXd::Identity(n, n);
    p.c.resize(n);
    for (int i = 0; i < n; ++i) p.c[i] = normal(rng);
    const Eigen::VectorXd got = solve_qp(p).l;
    const Eigen::VectorXd want = Eigen::FullPivLU<Eigen::MatrixXd>(p.Q).solve(p.c);
    worst_rel = std::max(worst_rel, (got - want).norm() / (1.0 + want.norm()));
  }
  out.require(worst_rel <= 1e-6, "dense-solve mismatch above 1e-6");

  double worst_kkt = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 4 + rep % 16;
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
    QpProblem p;
    p.Q = a * a.transpose() + (rep % 5 == 0 ? 0.0 : 0.02) * Eigen::MatrixXd::Identity(n, n);
    p.gamma = rep % 5 == 0 ? 1e-6 : 0.0;
    p.c.resize(n);
    for (int i = 0; i < n; ++i) p.c[i] = 2.0 * normal(rng);
    p.bounds = Eigen::VectorXd::Constant(n, 0.3 + 0.1 * (rep % 4));
    const QpSolution sol = solve_qp(p);
    const Eigen::VectorXd g = p.effective_Q() * sol.l - p.effective_c();
    const Eigen::VectorXd pg = sol.l - (sol.l - g).cwiseMin(p.bounds).cwiseMax(-p.bounds);
    worst_kkt = std::max(worst_kkt, pg.norm());
    if (sol.l.cwiseAbs().maxCoeff() > p.bounds[0] + 1e-15) out.require(false, "bounds violated");
  }
  out.require(worst_kkt <= 1e-8, "KKT residual above 1e-8");
  char buf[128];
  std::snprintf(buf, sizeof(buf), "worst dense-rel %.2e, worst KKT %.2e", worst_rel, worst_kkt);
  out.note(buf);
  return out;
}

// ---------------------------------------------------------------------------
// 6. Transaction-cost penalty behavior.
Outcome criterion_tc_penalty() {
  Outcome out;

  // One simulated trajectory with enough churn that the unpenalized log-opt
  // portfolio visibly overtrades at 5% costs, but tame enough that no beta
  // in the sweep is ruined (otherwise turnover averages are truncated at
  // different lengths and stop being comparable).
  SimConfig sim;
  sim.model = MarketModel::volstab;
  sim.d = 3;
  sim.steps = 600;
  sim.horizon = 0.06;
  sim.seed = 606;
  sim.s0 = Eigen::Vector3d(1.0, 1.2, 0.8);
  sim.volstab_alpha = 4.0;
  const MarketPanel panel = simulate_one(sim, 0);

  PortfolioSpec spec;
  spec.type = PortfolioType::type1;
  spec.tau_choice = AuxChoice::universe_weights;
  spec.features.family = FeatureFamily::full_signature;
  spec.features.level = 2;
  spec.features.horizon = sim.horizon;
  const EvalWindow window{0, 0, sim.steps};
  const EvalContext ctx = build_context(spec, panel, window);

  QpProblem base;
  std::tie(base.Q, base.c) = assemble_logopt(ctx.features, ctx.mu, spec.type);
  const int R = static_cast<int>(ctx.features.rows());

  auto problem_at_beta = [&](double beta) {
    QpProblem p = base;
    add_tc_penalty(p, beta, ctx.features, ctx.mu.topRows(R), spec.type, spec.tau_choice);
    return p;
  };
  const double tc_level = 0.05;
  auto backtest_of = [&](const Eigen::VectorXd& l) {
    PortfolioSpec candidate = spec;
    candidate.coefficients = l;
    return run_backtest(portfolio_weights(candidate, ctx), ctx.prices, tc_level);
  };
  auto wealth_of = [&](const Eigen::VectorXd& l) {
    const BacktestReport bt = backtest_of(l);
    return bt.ruined ? 0.0 : bt.wealth[bt.wealth.size() - 1];
  };

  // Ridge calibration: the smallest gamma whose floor-beta portfolio
  // survives the window. Turnover averages across the beta sweep are only
  // comparable when nothing is ruined and truncated.
  base.gamma = 1e-6;
  while (base.gamma < 1.0 && backtest_of(solve_qp(problem_at_beta(1e-8)).l).ruined) base.gamma *= 10.0;
  {
    char gbuf[64];
    std::snprintf(gbuf, sizeof(gbuf), "ridge calibrated to gamma %.0e", base.gamma);
    out.note(gbuf);
  }

  const BetaTuneResult tuned = tune_beta(problem_at_beta, wealth_of);
  const double wealth_floor = wealth_of(solve_qp(problem_at_beta(1e-8)).l);
  char buf[160];
  std::snprintf(buf, sizeof(buf), "tuned beta %.4g: wealth %.4f vs floor-beta wealth %.4f", tuned.beta,
                tuned.wealth, wealth_floor);
  out.note(buf);
  out.require(tuned.wealth >= wealth_floor, "tuned beta lost to the floor beta in-sample");

  double previous_turnover = std::numeric_limits<double>::infinity();
  for (double beta : {1e-8, 1.0, 10.0, 100.0}) {
    const BacktestReport bt = backtest_of(solve_qp(problem_at_beta(beta)).l);
    out.require(!bt.ruined, "beta sweep instance ruined; turnover comparison undefined");
    const double mean_turnover = bt.turnover.size() > 0 ? bt.turnover.mean() : 0.0;
    std::snprintf(buf, sizeof(buf), "beta %.0e: mean turnover %.5f", beta, mean_turnover);
    out.note(buf);
    out.require(mean_turnover <= previous_turnover + 1e-12, "turnover not monotone in beta");
    previous_turnover = mean_turnover;
  }
  return out;
}

// ---------------------------------------------------------------------------
// 7. Backtester conservation laws.
Outcome criterion_backtester() {
  Outcome out;
  std::mt19937_64 rng(707);
  std::normal_distribution<double> normal(0.0, 0.02);
  std::uniform_real_distribution<double> uni(0.05, 1.0);
  std::normal_distribution<double> short_bump(0.0, 0.08);

  double worst_product = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int R = 30 + rep % 40;
    const int m = 2 + rep % 3;
    Eigen::MatrixXd prices(R + 1, m);
    prices.row(0).setConstant(1.0);
    for (int t = 1; t <= R; ++t)
      for (int j = 0; j < m; ++j) prices(t, j) = prices(t - 1, j) * std::exp(normal(rng));
    Eigen::MatrixXd weights(R, m);
    for (int t = 0; t < R; ++t) {
      for (int j = 0; j < m; ++j) weights(t, j) = uni(rng) + (rep % 2 ? short_bump(rng) : 0.0);
      weights.row(t) /= weights.row(t).sum();
    }

    Eigen::MatrixXd mu(R + 1, m);
    for (int t = 0; t <= R; ++t) mu.row(t) = prices.row(t) / prices.row(t).sum();
    const BacktestReport free_run = run_backtest(weights, prices, 0.0);
    const double direct = log_relative_wealth_product(weights, mu);
    worst_product = std::max(worst_product,
                             std::abs(free_run.log_relative_final - direct) / (1.0 + std::abs(direct)));

    const double w0 = free_run.log_wealth_final;
    const double w1 = run_backtest(weights, prices, 0.01).log_wealth_final;
    const double w5 = run_backtest(weights, prices, 0.05).log_wealth_final;
    out.require(w5 <= w1 + 1e-12 && w1 <= w0 + 1e-12, "cost monotonicity violated");
  }
  out.require(worst_product <= 1e-12, "c=0 product formula mismatch above 1e-12");
  char buf[96];
  std::snprintf(buf, sizeof(buf), "worst product-formula error %.2e over 100 panels", worst_product);
  out.note(buf);
  return out;
}

// ---------------------------------------------------------------------------
// 8. Determinism of the CLI across reruns and thread counts.
std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion_determinism() {
  Outcome out;
  const fs::path root = fs::temp_directory_path() / "sigfolio_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);

  const std::string sim_cfg = R"({
    "sim": {"model": "volstab", "d": 3, "steps": 400, "horizon": 0.2, "seed": 8081,
            "s0": [1.0, 1.1, 0.9], "alpha": 6.0},
    "n_paths": 8
  })";
  std::ofstream(root / "sim.json") << sim_cfg;

  const std::string train_cfg = R"({
    "objective": "logopt",
    "mode": "monte_carlo",
    "data": {"sim": {"model": "bs", "d": 2, "steps": 300, "horizon": 1.0, "seed": 8082,
                     "a": [0.1, -0.02], "sigma": [[0.2, 0.0], [0.03, 0.25]]}},
    "n_paths": 96,
    "portfolio": {"type": "I", "tau": "universe"},
    "features": {"family": "signature", "level": 2, "horizon": 1.0},
    "gamma": 1e-8,
    "bounds": 10000.0
  })";
  std::ofstream(root / "train.json") << train_cfg;

  auto run = [&](std::initializer_list<std::string> args) {
    return sigfolio::cli::run(std::vector<std::string>(args));
  };

  for (const std::string threads : {"1", "8"}) {
    const std::string tag = "t" + threads;
    out.require(run({"simulate", "--config", (root / "sim.json").string(), "--out",
                     (root / ("sim_" + tag)).string(), "--threads", threads}) == 0,
                "simulate failed");
    out.require(run({"train", "--config", (root / "train.json").string(), "--out",
                     (root / ("train_" + tag)).string(), "--threads", threads}) == 0,
                "train failed");
  }
  for (int p = 0; p < 8; ++p) {
    char name[32];
    std::snprintf(name, sizeof(name), "path_%05d.csv", p);
    out.require(slurp(root / "sim_t1" / name) == slurp(root / "sim_t8" / name),
                std::string("panel bytes differ across thread counts: ") + name);
  }
  out.require(slurp(root / "train_t1" / "model.json") == slurp(root / "train_t8" / "model.json"),
              "model bytes differ across thread counts");

  // Re-run with the same seed and thread count: byte-identical again.
  out.require(run({"simulate", "--config", (root / "sim.json").string(), "--out",
                   (root / "sim_rerun").string(), "--threads", "8"}) == 0,
              "simulate rerun failed");
  out.require(slurp(root / "sim_t8" / "path_00003.csv") == slurp(root / "sim_rerun" / "path_00003.csv"),
              "rerun bytes differ");

  fs::remove_all(root);
  out.note("simulate + train byte-identical for threads {1, 8} and reruns");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  int m_train = 20000;
  int m_test = 5000;
  int only = 0;  // 0 = all
  for (int i = 1; i < argc; ++i) {
    if (std::strncmp(argv[i], "--train=", 8) == 0) m_train = std::atoi(argv[i] + 8);
    if (std::strncmp(argv[i], "--test=", 7) == 0) m_test = std::atoi(argv[i] + 7);
    if (std::strncmp(argv[i], "--only=", 7) == 0) only = std::atoi(argv[i] + 7);
  }
  set_thread_count(0);

  struct Entry {
    int id;
    const char* name;
    double budget_seconds;  // 0 = unbudgeted
    Outcome (*fn)();
  };

  std::vector<std::pair<int, std::string>> lines;
  int failures = 0;

  auto record = [&](int id, const std::string& name, double budget, const Outcome& out, double elapsed) {
    bool pass = out.pass;
    std::string detail = out.detail;
    if (budget > 0.0 && elapsed > budget) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("over time budget");
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), " [%.1fs]", elapsed);
    std::printf("criterion %d: %s - %s%s%s%s\n", id, pass ? "PASS" : "FAIL", name.c_str(), buf,
                detail.empty() ? "" : " | ", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
  };

  auto maybe_run = [&](int id, const std::string& name, double budget, auto&& fn) {
    if (only != 0 && only != id) return;
    const double t0 = now_seconds();
    const Outcome out = fn();
    record(id, name, budget, out, now_seconds() - t0);
  };

  maybe_run(1, "algebra and signature property suite", 10.0, criterion_algebra);
  maybe_run(2, "rebalancing alpha solver", 30.0, criterion_alpha_solver);
  maybe_run(3, "master objective identities", 0.0, criterion_objective_identity);
  maybe_run(4, "trained portfolios vs growth-optimal (M_train=" + std::to_string(m_train) +
                   ", M_test=" + std::to_string(m_test) + ")",
            0.0, [&] { return criterion_growth_optimal_gap(m_train, m_test); });
  maybe_run(5, "qp solver accuracy", 0.0, criterion_qp_solver);
  maybe_run(6, "transaction-cost penalty behavior", 0.0, criterion_tc_penalty);
  maybe_run(7, "backtester conservation", 0.0, criterion_backtester);
  maybe_run(8, "determinism across seeds and thread counts", 0.0, criterion_determinism);

  if (failures == 0)
    std::printf("acceptance: all criteria passed\n");
  else
    std::printf("acceptance: %d criterion(s) failed\n", failures);
  return failures;
}
