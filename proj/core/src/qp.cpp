#include "sigfolio/qp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "sigfolio/common.hpp"
#include "sigfolio/detail/json_util.hpp"

namespace sigfolio {

Eigen::MatrixXd QpProblem::effective_Q() const {
  Eigen::MatrixXd h = Q;
  if (gamma != 0.0) h.diagonal().array() += gamma;
  if (beta != 0.0 && tc_quad.size() > 0) h.noalias() += 2.0 * beta * tc_quad;
  return h;
}

Eigen::VectorXd QpProblem::effective_c() const {
  Eigen::VectorXd v = c;
  if (beta != 0.0 && tc_lin.size() > 0) v -= beta * tc_lin;
  return v;
}

double QpProblem::objective(const Eigen::VectorXd& l) const {
  const Eigen::MatrixXd h = effective_Q();
  return 0.5 * l.dot(h * l) - effective_c().dot(l);
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> assemble_logopt(const Eigen::MatrixXd& features,
                                                            const Eigen::MatrixXd& mu,
                                                            PortfolioType type, int t0_index,
                                                            double mu_floor) {
  const int R = static_cast<int>(features.rows());
  const int V = static_cast<int>(features.cols());
  const int m = static_cast<int>(mu.cols());
  if (mu.rows() != R + 1) throw DataError("assemble_logopt: mu must have one more row than features");
  if (t0_index < 0 || t0_index > R) throw DataError("assemble_logopt: t0 out of range");

  const int n = m * V;
  const int rows = R - t0_index;
  // z_k[(i,nu)] = gamma_k^i phi_k^nu dmu_k^i. Then c = sum_k z_k and
  // Q = Z'Z, which keeps Q PSD by construction.
  Eigen::MatrixXd z(rows, n);
  for (int k = t0_index; k < R; ++k) {
    for (int i = 0; i < m; ++i) {
      double g = 1.0;
      if (type == PortfolioType::type2) {
        if (!(mu(k, i) > mu_floor))
          throw DataError("assemble_logopt: type II needs mu above the floor (row " +
                          std::to_string(k) + ", asset " + std::to_string(i) + ")");
        g = 1.0 / mu(k, i);
      }
      const double w = g * (mu(k + 1, i) - mu(k, i));
      z.row(k - t0_index).segment(static_cast<Eigen::Index>(i) * V, V) = w * features.row(k);
    }
  }
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  q.selfadjointView<Eigen::Lower>().rankUpdate(z.transpose());
  q.triangularView<Eigen::StrictlyUpper>() = q.transpose();
  Eigen::VectorXd c = z.colwise().sum().transpose();
  return {std::move(q), std::move(c)};
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> monte_carlo_average(
    const std::vector<std::pair<Eigen::MatrixXd, Eigen::VectorXd>>& terms) {
  if (terms.empty()) throw DataError("monte_carlo_average: empty trajectory list");
  Eigen::MatrixXd q = terms.front().first;
  Eigen::VectorXd c = terms.front().second;
  for (std::size_t i = 1; i < terms.size(); ++i) {
    if (terms[i].first.rows() != q.rows() || terms[i].second.size() != c.size())
      throw DataError("monte_carlo_average: dimension mismatch at trajectory " + std::to_string(i));
    q += terms[i].first;
    c += terms[i].second;
  }
  const double inv = 1.0 / static_cast<double>(terms.size());
  return {q * inv, c * inv};
}

MvStatistics estimate_mv_statistics(const Eigen::MatrixXd& features, const Eigen::MatrixXd& gross,
                                    const Eigen::MatrixXd& tau, int delta, double lambda, MvMode mode,
                                    PortfolioType type, int t0_index) {
  const int R = static_cast<int>(features.rows());
  const int m = static_cast<int>(gross.cols());
  if (delta < 1) throw DataError("estimate_mv_statistics: delta must be >= 1 grid step");
  if (gross.rows() != R + 1) throw DataError("estimate_mv_statistics: gross must have R+1 rows");
  if (tau.rows() != R || tau.cols() != m) throw DataError("estimate_mv_statistics: tau shape mismatch");
  const int V = static_cast<int>(features.cols());
  const int n = m * V;

  // Non-overlapping observation grid t0, t0+delta, ...; the span return of
  // the buy-and-hold strategy over [t, t+delta] is linear in Y.
  std::vector<int> grid;
  for (int t = t0_index; t + delta <= R; t += delta) grid.push_back(t);
  const int N = static_cast<int>(grid.size());
  if (N < 2) throw DataError("estimate_mv_statistics: need at least 2 observations");

  Eigen::MatrixXd y(N, n);
  Eigen::VectorXd r_tau(N);
  for (int o = 0; o < N; ++o) {
    const int t = grid[static_cast<std::size_t>(o)];
    Eigen::VectorXd ratio(m);
    for (int i = 0; i < m; ++i) ratio[i] = gross(t + delta, i) / gross(t, i);
    r_tau[o] = tau.row(t).dot(ratio) - 1.0;
    for (int i = 0; i < m; ++i) {
      const double w = (type == PortfolioType::type1) ? tau(t, i) : 1.0;
      const double excess = ratio[i] - r_tau[o] - 1.0;
      y.row(o).segment(static_cast<Eigen::Index>(i) * V, V) = (w * excess) * features.row(t);
    }
  }

  MvStatistics stats;
  stats.lambda = lambda;
  stats.mode = mode;
  stats.observations = N;
  stats.mean_y = y.colwise().mean().transpose();
  Eigen::MatrixXd centered = y.rowwise() - stats.mean_y.transpose();
  Eigen::MatrixXd var = Eigen::MatrixXd::Zero(n, n);
  var.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
  var.triangularView<Eigen::StrictlyUpper>() = var.transpose();
  var /= static_cast<double>(N - 1);
  stats.var_y = std::move(var);
  const Eigen::VectorXd r_centered = r_tau.array() - r_tau.mean();
  stats.sigma = 2.0 * (centered.transpose() * r_centered) / static_cast<double>(N - 1);
  return stats;
}

QpProblem mv_problem(const MvStatistics& stats) {
  QpProblem p;
  p.Q = 2.0 * stats.var_y;
  p.c = stats.lambda * stats.mean_y - stats.sigma;
  return p;
}

void add_tc_penalty(QpProblem& problem, double beta, const Eigen::MatrixXd& features,
                    const Eigen::MatrixXd& mu, PortfolioType type, AuxChoice tau_choice) {
  if (beta < 0.0) throw SolverError("add_tc_penalty: beta must be >= 0");
  if (type != PortfolioType::type1 || tau_choice != AuxChoice::universe_weights)
    throw SolverError("add_tc_penalty: only type I with tau = universe weights is supported");
  const int R = static_cast<int>(features.rows());
  const int V = static_cast<int>(features.cols());
  const int m = static_cast<int>(mu.cols());
  if (mu.rows() != R) throw DataError("add_tc_penalty: mu rows must match features");
  if (R < 2) throw DataError("add_tc_penalty: need at least 2 rebalance times");
  const int n = m * V;
  if (problem.size() != n) throw DataError("add_tc_penalty: problem size mismatch");

  // pi^i/mu^i = f^i + 1 - sum_j mu^j f^j is affine in l with matrix
  // M_t[(i),(j,nu)] = (delta_ij - mu_t^j) phi_t^nu; the constant cancels in
  // differences, so the penalty is a pure PSD quadratic and l = 0 (the
  // universe portfolio) is not punished.
  Eigen::MatrixXd penalty = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd d_t(m, n);
  auto fill_m = [&](int t, Eigen::MatrixXd& out) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        const double coef = (i == j ? 1.0 : 0.0) - mu(t, j);
        out.row(i).segment(static_cast<Eigen::Index>(j) * V, V) = coef * features.row(t);
      }
  };
  Eigen::MatrixXd m_prev(m, n), m_next(m, n);
  fill_m(0, m_prev);
  for (int t = 0; t + 1 < R; ++t) {
    fill_m(t + 1, m_next);
    d_t = m_next - m_prev;
    penalty.selfadjointView<Eigen::Lower>().rankUpdate(d_t.transpose());
    m_prev.swap(m_next);
  }
  penalty.triangularView<Eigen::StrictlyUpper>() = penalty.transpose();
  penalty /= static_cast<double>(R - 1);

  problem.beta = beta;
  problem.tc_quad = std::move(penalty);
  problem.tc_lin = Eigen::VectorXd::Zero(n);
}

namespace {

Eigen::VectorXd clamp_to_box(const Eigen::VectorXd& x, const Eigen::VectorXd& bounds) {
  return x.cwiseMin(bounds).cwiseMax(-bounds);
}

QpSolution solve_unconstrained(const Eigen::MatrixXd& h, const Eigen::VectorXd& c) {
  Eigen::LLT<Eigen::MatrixXd> llt(h);
  QpSolution sol;
  sol.report.method = "llt";
  if (llt.info() == Eigen::Success) {
    sol.l = llt.solve(c);
  } else {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    sol.l = ldlt.solve(c);
    sol.report.method = "ldlt";
  }
  const double residual = (h * sol.l - c).norm();
  if (!sol.l.allFinite() || residual > 1e-8 * (1.0 + c.norm()))
    throw SolverError("solve_qp: singular unregularized system (residual " + std::to_string(residual) +
                      "); add ridge regularization");
  sol.report.converged = true;
  sol.report.kkt_residual = residual;
  return sol;
}

// Projected gradient with Barzilai-Borwein steps on
//   min 0.5 x'Hx - c'x  s.t. |x_i| <= b_i.
// Every few hundred iterations the active set suggested by the current
// iterate is polished with an exact solve on the free block, which finishes
// off ill-conditioned instances the raw BB iteration crawls on. H is PSD;
// the iterate stays feasible throughout.
QpSolution solve_box(const Eigen::MatrixXd& h, const Eigen::VectorXd& c, const Eigen::VectorXd& bounds) {
  const Eigen::Index n = c.size();
  const double tol = 1e-9 * (1.0 + c.norm());
  const int max_iter = 100000;
  const int polish_every = 250;

  QpSolution sol;
  sol.report.method = "bb_projected_gradient";

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);  // feasible: bounds are >= 0
  Eigen::VectorXd g = -c;                        // H*0 - c
  double step = 1.0 / std::max(1e-12, h.diagonal().maxCoeff());

  auto pg_norm = [&](const Eigen::VectorXd& xx, const Eigen::VectorXd& gg) {
    return (xx - clamp_to_box(xx - gg, bounds)).norm();
  };

  // Fix the bounds the iterate currently sits on, solve the free block
  // exactly, and accept the candidate if it reduces the projected gradient.
  auto try_polish = [&](Eigen::VectorXd& xx, Eigen::VectorXd& gg, double& residual) {
    std::vector<Eigen::Index> free_set;
    free_set.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool at_lower = xx[i] <= -bounds[i] + 1e-14 && gg[i] > 0.0;
      const bool at_upper = xx[i] >= bounds[i] - 1e-14 && gg[i] < 0.0;
      if (!(at_lower || at_upper)) free_set.push_back(i);
    }
    if (free_set.empty()) return;
    const Eigen::Index nf = static_cast<Eigen::Index>(free_set.size());
    Eigen::MatrixXd h_ff(nf, nf);
    Eigen::VectorXd rhs(nf);
    std::vector<char> is_free(static_cast<std::size_t>(n), 0);
    for (Eigen::Index i : free_set) is_free[static_cast<std::size_t>(i)] = 1;
    for (Eigen::Index a = 0; a < nf; ++a) {
      rhs[a] = c[free_set[static_cast<std::size_t>(a)]];
      for (Eigen::Index i = 0; i < n; ++i)
        if (!is_free[static_cast<std::size_t>(i)])
          rhs[a] -= h(free_set[static_cast<std::size_t>(a)], i) * xx[i];
      for (Eigen::Index b = 0; b < nf; ++b)
        h_ff(a, b) = h(free_set[static_cast<std::size_t>(a)], free_set[static_cast<std::size_t>(b)]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(h_ff);
    if (llt.info() != Eigen::Success) return;  // singular free block: keep the BB iterate
    const Eigen::VectorXd x_free = llt.solve(rhs);
    Eigen::VectorXd candidate = xx;
    for (Eigen::Index a = 0; a < nf; ++a) candidate[free_set[static_cast<std::size_t>(a)]] = x_free[a];
    candidate = clamp_to_box(candidate, bounds);
    Eigen::VectorXd g_cand = h * candidate - c;
    const double cand_residual = pg_norm(candidate, g_cand);
    if (cand_residual < residual) {
      xx = std::move(candidate);
      gg = std::move(g_cand);
      residual = cand_residual;
    }
  };

  int it = 0;
  double residual = pg_norm(x, g);
  while (it < max_iter && residual > tol) {
    for (int burst = 0; burst < polish_every && it < max_iter && residual > tol; ++burst, ++it) {
      Eigen::VectorXd x_next = clamp_to_box(x - step * g, bounds);
      Eigen::VectorXd g_next = h * x_next - c;

      const Eigen::VectorXd s = x_next - x;
      const Eigen::VectorXd y = g_next - g;
      const double sy = s.dot(y);
      const double ss = s.dot(s);
      const double yy = y.dot(y);
      // Alternate the two BB step lengths; keep the previous step when the
      // curvature estimate degenerates.
      double next_step = step;
      if (sy > 1e-300) next_step = (it % 2 == 0) ? ss / sy : sy / std::max(yy, 1e-300);
      step = std::clamp(next_step, 1e-12, 1e12);

      x = std::move(x_next);
      g = std::move(g_next);
      residual = pg_norm(x, g);
    }
    if (residual > tol) try_polish(x, g, residual);
  }
  if (residual > tol) try_polish(x, g, residual);

  if (residual > tol)
    throw SolverError("solve_qp: projected gradient did not converge (residual " +
                      std::to_string(residual) + ", tolerance " + std::to_string(tol) + ")");
  sol.l = x;
  sol.report.converged = true;
  sol.report.iterations = it;
  sol.report.kkt_residual = residual;
  return sol;
}

}  // namespace

QpSolution solve_qp(const QpProblem& problem) {
  if (problem.Q.rows() != problem.Q.cols() || problem.Q.rows() != problem.c.size())
    throw DataError("solve_qp: inconsistent problem dimensions");
  if (!problem.Q.isApprox(problem.Q.transpose(), 1e-10)) throw DataError("solve_qp: Q must be symmetric");
  const Eigen::MatrixXd h = problem.effective_Q();
  const Eigen::VectorXd c = problem.effective_c();

  QpSolution sol;
  if (problem.bounds.size() == 0) {
    sol = solve_unconstrained(h, c);
  } else {
    if (problem.bounds.size() != c.size()) throw DataError("solve_qp: bounds size mismatch");
    if ((problem.bounds.array() < 0.0).any()) throw DataError("solve_qp: bounds must be >= 0");
    sol = solve_box(h, c, problem.bounds);
  }
  sol.report.objective = 0.5 * sol.l.dot(h * sol.l) - c.dot(sol.l);
  return sol;
}

void dump_problem_json(const std::string& path, const QpProblem& problem) {
  detail::json j;
  j["n"] = problem.size();
  j["gamma"] = problem.gamma;
  j["beta"] = problem.beta;
  detail::json q = detail::json::array();
  for (Eigen::Index r = 0; r < problem.Q.rows(); ++r) {
    detail::json row = detail::json::array();
    for (Eigen::Index cc = 0; cc < problem.Q.cols(); ++cc) row.push_back(problem.Q(r, cc));
    q.push_back(row);
  }
  j["Q"] = q;
  detail::json cv = detail::json::array();
  for (Eigen::Index i = 0; i < problem.c.size(); ++i) cv.push_back(problem.c[i]);
  j["c"] = cv;
  if (problem.bounds.size() > 0) {
    detail::json b = detail::json::array();
    for (Eigen::Index i = 0; i < problem.bounds.size(); ++i) b.push_back(problem.bounds[i]);
    j["bounds"] = b;
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << '\n';
}

void dump_solution_json(const std::string& path, const QpSolution& solution) {
  detail::json j;
  detail::json l = detail::json::array();
  for (Eigen::Index i = 0; i < solution.l.size(); ++i) l.push_back(solution.l[i]);
  j["l"] = l;
  j["converged"] = solution.report.converged;
  j["iterations"] = solution.report.iterations;
  j["kkt_residual"] = solution.report.kkt_residual;
  j["objective"] = solution.report.objective;
  j["method"] = solution.report.method;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << '\n';
}

BetaTuneResult tune_beta(const std::function<QpProblem(double)>& problem_at_beta,
                         const std::function<double(const Eigen::VectorXd&)>& insample_wealth_under_tc,
                         double beta0) {
  constexpr double kFloor = 1e-8;
  constexpr double kCap = 1e4;
  constexpr double kRuinWealth = 1e-4;
  constexpr int kMaxSearchEvals = 40;

  BetaTuneResult result;
  std::map<double, std::pair<double, Eigen::VectorXd>> cache;  // beta -> (wealth, l)

  auto evaluate = [&](double beta) -> double {
    beta = std::clamp(beta, kFloor, kCap);
    auto it = cache.find(beta);
    if (it != cache.end()) return it->second.first;
    QpSolution sol = solve_qp(problem_at_beta(beta));
    const double wealth = insample_wealth_under_tc(sol.l);
    cache.emplace(beta, std::make_pair(wealth, sol.l));
    result.trace.emplace_back(beta, wealth);
    ++result.evaluations;
    return wealth;
  };

  // Escape initial betas whose optimum is ruined under the true costs; the
  // universe portfolio is in the feasible set, so some beta must survive.
  double b0 = std::max(beta0, kFloor);
  while (evaluate(b0) < kRuinWealth) {
    b0 += 0.5;
    if (b0 > kCap) throw SolverError("tune_beta: every tested beta leads to ruin");
  }

  // Golden-section on log beta over the full bracket.
  const double lo = std::log(kFloor);
  const double hi = std::log(kCap);
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  evaluate(kFloor);
  evaluate(kCap);
  double a = lo, b = hi;
  double x1 = b - gr * (b - a);
  double x2 = a + gr * (b - a);
  double f1 = -evaluate(std::exp(x1));
  double f2 = -evaluate(std::exp(x2));
  while (result.evaluations < kMaxSearchEvals && (b - a) > 1e-3) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = -evaluate(std::exp(x1));
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = -evaluate(std::exp(x2));
    }
  }

  // Best evaluated beta wins; ties prefer the smaller beta.
  double best_beta = kFloor;
  double best_wealth = -std::numeric_limits<double>::infinity();
  for (const auto& [beta, entry] : cache) {
    if (entry.first > best_wealth + 1e-15) {
      best_wealth = entry.first;
      best_beta = beta;
    }
  }
  result.beta = best_beta;
  result.wealth = best_wealth;
  result.solution = solve_qp(problem_at_beta(best_beta));
  return result;
}

namespace {

using RealWordSum = std::map<Word, double, WordOrder>;

RealWordSum to_real(const WordSum& ws, double scale = 1.0) {
  RealWordSum out;
  for (const auto& [w, k] : ws) out[w] = scale * static_cast<double>(k);
  return out;
}

RealWordSum shuffle_sums(const RealWordSum& a, const RealWordSum& b) {
  RealWordSum out;
  for (const auto& [wa, ca] : a)
    for (const auto& [wb, cb] : b)
      for (const auto& [w, k] : shuffle(wa, wb)) out[w] += ca * cb * static_cast<double>(k);
  return out;
}

RealWordSum append_letter(const RealWordSum& a, int letter) {
  RealWordSum out;
  for (const auto& [w, k] : a) out[w.appended(letter)] += k;
  return out;
}

double eval_words(const RealWordSum& a, const TruncatedTensor& g) {
  double v = 0.0;
  for (const auto& [w, k] : a) v += k * g.coeff(w);
  return v;
}

}  // namespace

std::pair<Eigen::MatrixXd, Eigen::VectorXd> assemble_logopt_volstab_shuffle(
    const SignatureStream& muhat_sig, const std::vector<Word>& feature_words,
    const Eigen::VectorXd& mu0, double horizon) {
  const int d = muhat_sig.alphabet() - 1;
  const int V = static_cast<int>(feature_words.size());
  const int n = d * V;
  const TruncatedTensor& g = muhat_sig.final();

  int max_len = 0;
  for (const Word& w : feature_words) max_len = std::max(max_len, w.length());
  if (muhat_sig.level() < 2 * max_len + 3)
    throw DataError("assemble_logopt_volstab_shuffle: signature level too low, need " +
                    std::to_string(2 * max_len + 3));

  // d[mu^i, mu^j]/dt as an affine-in-signature expression around mu0:
  // mu^i_t = mu0^i + <e_{i+1}, sig>.
  auto cov_rate = [&](int i, int j) -> RealWordSum {
    RealWordSum out;
    if (i == j) {
      out[Word{}] = mu0[i] * (1.0 - mu0[i]);
      out[Word{i + 2}] = 1.0 - 2.0 * mu0[i];
      out[Word{i + 2, i + 2}] = -2.0;
    } else {
      out[Word{}] = -mu0[i] * mu0[j];
      out[Word{i + 2}] = -mu0[j];
      out[Word{j + 2}] = -mu0[i];
      out[Word{i + 2, j + 2}] = -1.0;
      out[Word{j + 2, i + 2}] = -1.0;
    }
    return out;
  };

  Eigen::VectorXd c(n);
  Eigen::MatrixXd q(n, n);
  for (int i = 0; i < d; ++i) {
    for (int a = 0; a < V; ++a) {
      const Word& wa = feature_words[static_cast<std::size_t>(a)];
      const int idx_a = i * V + a;
      // Ito integral of the feature against dmu^i: the Stratonovich value
      // <e_{I (i+1)}, sig> minus half the covariation of the integrand with
      // mu^i (only the last letter's martingale part contributes).
      double value = g.coeff(wa.appended(i + 2));
      if (!wa.empty() && wa.back() != 1) {
        const int last_asset = wa.back() - 2;
        RealWordSum corr = shuffle_sums(RealWordSum{{wa.dropped_last(), 1.0}}, cov_rate(last_asset, i));
        value -= 0.5 * horizon * eval_words(append_letter(corr, 1), g);
      }
      c[idx_a] = value;

      for (int j = 0; j < d; ++j) {
        const RealWordSum rate = cov_rate(i, j);
        for (int b = 0; b < V; ++b) {
          const Word& wb = feature_words[static_cast<std::size_t>(b)];
          const int idx_b = j * V + b;
          if (idx_b < idx_a) continue;
          RealWordSum prod = to_real(shuffle(wa, wb));
          RealWordSum integrand = shuffle_sums(prod, rate);
          const double qv = horizon * eval_words(append_letter(integrand, 1), g);
          q(idx_a, idx_b) = qv;
          q(idx_b, idx_a) = qv;
        }
      }
    }
  }
  return {std::move(q), std::move(c)};
}

}  // namespace sigfolio
