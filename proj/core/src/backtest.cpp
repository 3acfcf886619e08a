#include "sigfolio/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sigfolio/common.hpp"

namespace sigfolio {

namespace {
constexpr double kWeightSumTol = 1e-8;
const double kNegInf = -std::numeric_limits<double>::infinity();
}  // namespace

std::string tc_status_name(TcStatus s) {
  switch (s) {
    case TcStatus::unique: return "unique";
    case TcStatus::multiple: return "multiple";
    case TcStatus::ruin_no_solution: return "ruin-no-solution";
    case TcStatus::ruin_negative: return "ruin-negative";
  }
  throw std::logic_error("tc_status_name");
}

TcOutcome solve_rebalance_alpha(const Eigen::VectorXd& prev, const Eigen::VectorXd& target, double cost) {
  if (prev.size() != target.size()) throw DataError("solve_rebalance_alpha: size mismatch");
  if (cost < 0.0) throw DataError("solve_rebalance_alpha: cost must be >= 0");
  if (std::abs(prev.sum() - 1.0) > kWeightSumTol || std::abs(target.sum() - 1.0) > kWeightSumTol)
    throw DataError("solve_rebalance_alpha: weights must sum to 1");

  const Eigen::Index d = prev.size();
  TcOutcome out;

  if (cost == 0.0) {
    out.status = TcStatus::unique;
    out.alpha = 1.0;
    out.roots = {1.0};
    out.tc_paid = 0.0;
    return out;
  }

  // Breakpoints of R(alpha) = c sum_i |alpha target_i - prev_i|.
  std::vector<double> breaks;
  for (Eigen::Index i = 0; i < d; ++i)
    if (target[i] != 0.0) breaks.push_back(prev[i] / target[i]);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  const double span = breaks.empty() ? 1.0 : std::max(1.0, std::abs(breaks.front()) + std::abs(breaks.back()));
  const double seg_tol = 1e-12 * span;

  std::vector<double> roots;
  auto consider_segment = [&](double lo, double hi, double probe) {
    // On the segment, R(alpha) = c (m alpha + q) with fixed signs.
    double m = 0.0, q = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double s = (probe * target[i] - prev[i]) >= 0.0 ? 1.0 : -1.0;
      m += s * target[i];
      q -= s * prev[i];
    }
    const double denom = 1.0 + cost * m;
    if (std::abs(denom) < 1e-15) {
      // Degenerate: both sides parallel on this segment. A whole-segment
      // solution exists only if the constants agree too.
      if (std::abs(1.0 - cost * q) < 1e-15) {
        const double candidate = std::min(hi, 1.0);
        if (candidate >= lo - seg_tol) roots.push_back(std::clamp(candidate, lo, hi));
      }
      return;
    }
    const double alpha = (1.0 - cost * q) / denom;
    if (alpha >= lo - seg_tol && alpha <= hi + seg_tol) roots.push_back(std::clamp(alpha, lo, hi));
  };

  const double inf = std::numeric_limits<double>::infinity();
  if (breaks.empty()) {
    consider_segment(-inf, inf, 0.0);
  } else {
    consider_segment(-inf, breaks.front(), breaks.front() - 1.0);
    for (std::size_t s = 0; s + 1 < breaks.size(); ++s)
      consider_segment(breaks[s], breaks[s + 1], 0.5 * (breaks[s] + breaks[s + 1]));
    consider_segment(breaks.back(), inf, breaks.back() + 1.0);
  }

  std::sort(roots.begin(), roots.end());
  std::vector<double> unique_roots;
  for (double r : roots)
    if (unique_roots.empty() || std::abs(r - unique_roots.back()) > 1e-9 * (1.0 + std::abs(r)))
      unique_roots.push_back(r);
  out.roots = unique_roots;

  if (unique_roots.empty()) {
    out.status = TcStatus::ruin_no_solution;
    out.alpha = kNegInf;
    out.tc_paid = 0.0;
    return out;
  }

  // L < 0 <= R for alpha > 1, so every root is <= 1; pick the largest (the
  // trade with the least costs).
  out.alpha = unique_roots.back();
  if (out.alpha < -1e-12) {
    out.status = TcStatus::ruin_negative;
    out.tc_paid = 0.0;
    return out;
  }
  out.status = unique_roots.size() == 1 ? TcStatus::unique : TcStatus::multiple;
  out.tc_paid = 1.0 - out.alpha;
  return out;
}

BacktestReport run_backtest(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& prices, double cost) {
  const int R = static_cast<int>(weights.rows());
  const int m = static_cast<int>(weights.cols());
  if (prices.rows() != R + 1 || prices.cols() != m)
    throw DataError("run_backtest: prices must be (R+1) x m for R weight rows");
  if (R < 1) throw DataError("run_backtest: need at least one rebalance row");
  for (int t = 0; t < R; ++t)
    if (std::abs(weights.row(t).sum() - 1.0) > kWeightSumTol)
      throw DataError("run_backtest: weight row " + std::to_string(t) + " does not sum to 1");

  BacktestReport report;
  report.wealth.setZero(R + 1);
  report.relative_wealth.setZero(R + 1);
  report.turnover.setZero(std::max(0, R - 1));

  // Benchmark: the universe portfolio, normalized at the window start; it
  // never trades and pays no costs.
  Eigen::VectorXd bench(R + 1);
  const double base = prices.row(0).sum();
  for (int t = 0; t <= R; ++t) bench[t] = prices.row(t).sum() / base;

  double wealth = 1.0;
  report.wealth[0] = wealth;
  Eigen::VectorXd positions = weights.row(0).transpose() * wealth;  // endowed, no entry trade

  for (int t = 0; t < R && !report.ruined; ++t) {
    // Held dollar amounts drift with prices over (t, t+1].
    for (int i = 0; i < m; ++i) positions[i] *= prices(t + 1, i) / prices(t, i);
    const double pre_wealth = positions.sum();
    if (!(pre_wealth > 0.0) || !std::isfinite(pre_wealth)) {
      report.ruined = true;
      report.ruin_index = t + 1;
      break;
    }
    if (t + 1 < R) {
      const Eigen::VectorXd drifted = positions / pre_wealth;  // pi_{t-}
      const TcOutcome tc = solve_rebalance_alpha(drifted, weights.row(t + 1).transpose(), cost);
      if (tc.status == TcStatus::ruin_no_solution || tc.status == TcStatus::ruin_negative) {
        report.ruined = true;
        report.ruin_index = t + 1;
        break;
      }
      wealth = tc.alpha * pre_wealth;
      report.total_tc_paid += tc.tc_paid * pre_wealth;
      report.turnover[t] = (tc.alpha * weights.row(t + 1).transpose() - drifted).cwiseAbs().sum();
      positions = weights.row(t + 1).transpose() * wealth;
    } else {
      wealth = pre_wealth;
    }
    report.wealth[t + 1] = wealth;
  }

  if (report.ruined) {
    for (int t = report.ruin_index; t <= R; ++t) report.wealth[t] = 0.0;
    report.log_wealth_final = kNegInf;
    report.log_relative_final = kNegInf;
  } else {
    report.log_wealth_final = std::log(report.wealth[R]);
    report.log_relative_final = std::log(report.wealth[R] / bench[R]);
  }
  for (int t = 0; t <= R; ++t) report.relative_wealth[t] = report.wealth[t] / bench[t];
  return report;
}

double log_wealth_product(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& prices) {
  const int R = static_cast<int>(weights.rows());
  if (prices.rows() != R + 1 || prices.cols() != weights.cols())
    throw DataError("log_wealth_product: shape mismatch");
  double acc = 0.0;
  for (int t = 0; t < R; ++t) {
    double gross = 0.0;
    for (int i = 0; i < weights.cols(); ++i) gross += weights(t, i) * prices(t + 1, i) / prices(t, i);
    if (!(gross > 0.0)) return kNegInf;
    acc += std::log(gross);
  }
  return acc;
}

double log_relative_wealth_product(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& mu) {
  return log_wealth_product(weights, mu);
}

SplitWindows split_train_cv_test(int n_samples, int t_ins, int t_cv, int t_test, int t0) {
  if (t0 < 0 || t_ins < 1 || t_cv < 0 || t_test < 2)
    throw DataError("split_train_cv_test: need t0 >= 0, T_ins >= 1, T_cv >= 0, T_test >= 2");
  const int needed = t0 + t_ins + t_cv + t_test;
  if (n_samples < needed)
    throw DataError("split_train_cv_test: panel has " + std::to_string(n_samples) +
                    " rows, needs " + std::to_string(needed) + " (short by " +
                    std::to_string(needed - n_samples) + ")");

  // Consecutive holding periods sharing boundary price rows; the test window
  // ends at the final sample, so a length-(t0+T_ins+T_cv+T_test) panel fits
  // with no slack.
  SplitWindows w;
  w.train = {0, t0, t0 + t_ins};
  w.cv = {t_ins, t0 + t_ins, t0 + t_ins + t_cv};
  w.test = {t_ins + t_cv, t0 + t_ins + t_cv, needed - 1};
  w.retrain = {t_cv, t0 + t_cv, t0 + t_cv + t_ins};
  return w;
}

}  // namespace sigfolio
