#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "sigfolio/portfolio.hpp"
#include "sigfolio/signature.hpp"
#include "sigfolio/words.hpp"

namespace sigfolio {

// Convex quadratic program  min 0.5 l'(Q + gamma I + 2 beta P) l - (c - beta p)'l
// with optional box bounds |l_i| <= bounds_i. The transaction-cost penalty
// contributes beta (l'P l + p'l); for the supported tau = mu^U type-I case
// p = 0 and the universe portfolio l = 0 incurs zero penalty.
struct QpProblem {
  Eigen::MatrixXd Q;
  Eigen::VectorXd c;
  double gamma = 0.0;
  Eigen::VectorXd bounds;  // empty = unconstrained
  double beta = 0.0;
  Eigen::MatrixXd tc_quad;
  Eigen::VectorXd tc_lin;

  Eigen::Index size() const { return c.size(); }
  Eigen::MatrixXd effective_Q() const;
  Eigen::VectorXd effective_c() const;
  double objective(const Eigen::VectorXd& l) const;
};

// Per-trajectory (Q, c) of the log-relative-wealth objective: maximizing
// log V over coefficients l is  min 0.5 l'Q l - c'l  with
//   c_{(i,nu)}        = sum_{k>=t0} gamma_k^i phi_k^nu dmu_k^i
//   Q_{(i,nu),(j,rho)} = sum_{k>=t0} gamma_k^i gamma_k^j phi_k^nu phi_k^rho dmu_k^i dmu_k^j,
// dmu_k = mu_{k+1} - mu_k, left-point integrands, gamma = 1 (type I) or
// 1/mu_k^i (type II, mu below mu_floor is an error). Q is a sum of outer
// products, hence symmetric PSD. `features` has R rows aligned with the
// first R rows of `mu`, which must have R+1 rows.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> assemble_logopt(const Eigen::MatrixXd& features,
                                                            const Eigen::MatrixXd& mu,
                                                            PortfolioType type, int t0_index = 0,
                                                            double mu_floor = 1e-10);

// Arithmetic mean of per-trajectory (Q, c) pairs, summed in list order so
// the result does not depend on scheduling.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> monte_carlo_average(
    const std::vector<std::pair<Eigen::MatrixXd, Eigen::VectorXd>>& terms);

enum class MvMode { wealth, relative };

struct MvStatistics {
  Eigen::MatrixXd var_y;   // sample covariance of Y, divisor N-1
  Eigen::VectorXd mean_y;
  Eigen::VectorXd sigma;   // 2 Cov(Y_{(i,nu)}, R^tau), divisor N-1
  double lambda = 0.0;
  MvMode mode = MvMode::relative;
  int observations = 0;
};

// Time-average mean-variance statistics of the buy-and-hold returns over
// span delta on one trajectory. `gross` carries prices (wealth mode) or
// universe weights (relative mode); R+1 rows aligned with `features`/`tau`
// (R rows). Observations sit on the non-overlapping grid t0, t0+delta, ...
MvStatistics estimate_mv_statistics(const Eigen::MatrixXd& features, const Eigen::MatrixXd& gross,
                                    const Eigen::MatrixXd& tau, int delta, double lambda, MvMode mode,
                                    PortfolioType type, int t0_index = 0);

// min Var(R^pi) - lambda E(R^pi)  ⟺  min 0.5 l'(2 Var Y) l - (lambda E Y - sigma)'l.
QpProblem mv_problem(const MvStatistics& stats);

// Adds beta/T sum_t sum_i (pi^i_{t+1}/mu^i_{t+1} - pi^i_t/mu^i_t)^2 to the
// problem. Only type-I portfolios with tau = mu^U are supported (pi/mu is
// affine in l there); anything else throws. mu rows align with features.
void add_tc_penalty(QpProblem& problem, double beta, const Eigen::MatrixXd& features,
                    const Eigen::MatrixXd& mu, PortfolioType type, AuxChoice tau_choice);

struct SolveReport {
  bool converged = false;
  int iterations = 0;
  double kkt_residual = 0.0;
  double objective = 0.0;
  std::string method;
};

struct QpSolution {
  Eigen::VectorXd l;
  SolveReport report;
};

// Unconstrained problems: SPD factorization of Q + gamma I + 2 beta P.
// Box-constrained problems: projected gradient with Barzilai-Borwein steps,
// stopping when the projected-gradient norm is <= 1e-9 (1 + ||c||) (at most
// 1e5 iterations), followed by an exact solve on the identified free set.
// Throws SolverError on non-convergence or a singular unregularized system.
QpSolution solve_qp(const QpProblem& problem);

void dump_problem_json(const std::string& path, const QpProblem& problem);
void dump_solution_json(const std::string& path, const QpSolution& solution);

struct BetaTuneResult {
  double beta = 0.0;
  QpSolution solution;
  double wealth = 0.0;
  int evaluations = 0;
  std::vector<std::pair<double, double>> trace;  // (beta, wealth) in eval order
};

// Transaction-cost regularization search: solve the QP at a given beta,
// backtest the resulting coefficients in-sample under the true costs, and
// minimize the negative wealth over beta. Starts by escaping initial betas
// whose optimum is (near-)ruined: while wealth(beta0) < 1e-4, beta0 += 0.5.
// The 1-D search is golden-section over log beta on [1e-8, 1e4], at most 40
// evaluations; the best evaluated beta is returned with its re-solved l.
BetaTuneResult tune_beta(const std::function<QpProblem(double)>& problem_at_beta,
                         const std::function<double(const Eigen::VectorXd&)>& insample_wealth_under_tc,
                         double beta0 = 0.5);

// Cross-check route for the volatility stabilized model: (Q, c) of a type-I
// signature portfolio assembled from shuffle identities on the signature of
// the time-augmented weights, using d[mu^i,mu^j] = mu^i(1-mu^i) dt (i = j)
// and -mu^i mu^j dt (i != j), with the Ito correction for the left-point
// integrals. feature_words index the portfolio's features (alphabet = d+1,
// letter 1 = time); mu0 is the initial weight vector.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> assemble_logopt_volstab_shuffle(
    const SignatureStream& muhat_sig, const std::vector<Word>& feature_words,
    const Eigen::VectorXd& mu0, double horizon);

}  // namespace sigfolio
