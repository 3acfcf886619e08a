#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sigfolio/market.hpp"

namespace sigfolio {

enum class TcStatus { unique, multiple, ruin_no_solution, ruin_negative };

std::string tc_status_name(TcStatus s);

// Outcome of one rebalance under proportional costs: alpha is the post-cost
// wealth fraction solving 1 - alpha = c sum_i |alpha pi^i - pi^i_prev|.
struct TcOutcome {
  TcStatus status = TcStatus::unique;
  double alpha = 1.0;          // chosen root (largest root <= 1)
  std::vector<double> roots;   // all real roots, ascending
  double tc_paid = 0.0;        // 1 - alpha when alpha in [0, 1]
};

// Both sides of the defining equation are piecewise linear in alpha with
// breakpoints at pi_prev^i / pi_target^i; every segment is solved exactly.
// With short positions there may be zero, one or two roots; the largest
// root <= 1 is chosen (the trade with the least costs), negative best root
// or no root at all mean ruin.
TcOutcome solve_rebalance_alpha(const Eigen::VectorXd& prev, const Eigen::VectorXd& target, double cost);

struct BacktestReport {
  Eigen::VectorXd wealth;           // W_t, one entry per price row
  Eigen::VectorXd relative_wealth;  // V_t = W_t / W^U_t
  double log_wealth_final = 0.0;    // -inf when ruined
  double log_relative_final = 0.0;
  Eigen::VectorXd turnover;         // sum_i |alpha pi^i_t - pi^i_{t-}| per rebalance
  double total_tc_paid = 0.0;       // in currency units
  bool ruined = false;
  int ruin_index = -1;
};

// Daily-rebalanced buy-and-hold backtest: positions drift with prices
// between rebalances, the pre-trade weights are the drifted weights, and
// each rebalance solves the alpha equation toward the target row. At
// cost = 0 the final wealth telescopes to the product of one-step portfolio
// returns exactly. The benchmark (universe wealth, sum of prices normalized
// at the start) pays no costs. weights: R x m target rows; prices:
// (R+1) x m.
BacktestReport run_backtest(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& prices, double cost);

// Frictionless log metrics via the product formulas; used for reporting and
// as the c = 0 oracle. weights: R x m; panel: (R+1) x m of prices or weights.
double log_wealth_product(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& prices);
double log_relative_wealth_product(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& mu);

struct SplitWindows {
  EvalWindow train;
  EvalWindow cv;
  EvalWindow test;
  // After cross-validation picks hyper-parameters, coefficients are re-fit
  // on the T_ins samples directly before the test window.
  EvalWindow retrain;
};

// Consecutive, non-overlapping investment windows, each with a t0-sample
// observation lead-in. Requires t0 + T_ins + T_cv + T_test + 1 price rows.
SplitWindows split_train_cv_test(int n_samples, int t_ins, int t_cv, int t_test, int t0 = 100);

}  // namespace sigfolio
