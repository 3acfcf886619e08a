#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "sigfolio/market.hpp"
#include "sigfolio/words.hpp"

namespace sigfolio {

enum class MarketModel { bs, volstab, sigmarket };

std::string market_model_name(MarketModel m);
MarketModel market_model_from_name(const std::string& s);

// Drift coefficient table of a signature market: the drift of asset i is
// a_i(t) = sum_I coeffs[I][i] * <e_I, sig(muhat)_t> over words of the
// time-augmented weight path (letter 1 = time, letter 1+j = asset j).
struct SigMarketDrift {
  int level = 2;
  std::vector<std::pair<Word, Eigen::VectorXd>> terms;
  // Restrict words to (i_1, 1, 1, ...): the index set with a unique strong
  // solution.
  bool strong_solution_only = true;
};

struct SimConfig {
  MarketModel model = MarketModel::bs;
  int d = 0;
  int steps = 0;
  double horizon = 1.0;
  std::uint64_t seed = 0;
  Eigen::VectorXd s0;

  Eigen::VectorXd bs_drift;   // d
  Eigen::MatrixXd bs_sigma;   // d x m
  double volstab_alpha = 0.0;
  SigMarketDrift sig_drift;
  Eigen::MatrixXd sig_sigma;  // d x m

  void validate() const;
};

struct SimResult {
  std::vector<MarketPanel> panels;
  int regenerated = 0;  // trajectories that blew up and were redrawn
};

// One trajectory, identified by its path index. Seeds are counter-based in
// (seed, path_index, attempt), so paths are independent of scheduling; a
// trajectory that produces a non-finite state is redrawn from the next
// attempt sub-seed and the redraw count is reported through `attempts`.
MarketPanel simulate_one(const SimConfig& config, std::uint64_t path_index, int* attempts = nullptr);

// Simulates n_paths trajectories in parallel.
SimResult simulate(const SimConfig& config, int n_paths);

// pi = (Sigma Sigma^T)^{-1} (a - kappa 1) with kappa chosen so the weights
// sum to one. Throws SolverError if Sigma Sigma^T is singular (condition
// number guard 1e12).
Eigen::VectorXd growth_optimal_weights(const Eigen::VectorXd& drift, const Eigen::MatrixXd& sigma);

// Growth-optimal weights of the configured model along one realized panel:
// constant rows for Black-Scholes, affine in mu for the volatility
// stabilized model, signature-drift dependent for the signature market.
Eigen::MatrixXd reference_go_stream(const SimConfig& config, const MarketPanel& panel);

}  // namespace sigfolio
