#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "sigfolio/portfolio.hpp"
#include "sigfolio/qp.hpp"
#include "sigfolio/sim.hpp"

namespace sigfolio {

// Monte-Carlo averaged (Q, c) of the log-relative-wealth objective over
// freshly simulated trajectories: Q_hat = (1/M) sum Q(omega_m), likewise c.
// Trajectories are streamed (never all held in memory) and folded in a
// fixed block order, so the averages are bit-identical for any thread
// count.
struct McAssembly {
  Eigen::MatrixXd q_hat;
  Eigen::VectorXd c_hat;
  int n_paths = 0;
  int regenerated = 0;
};

McAssembly assemble_logopt_monte_carlo(const SimConfig& sim, int n_paths, const PortfolioSpec& spec);

// Mean frictionless log-relative wealth of a trained portfolio over
// simulated test trajectories, optionally next to the model's theoretical
// growth-optimal portfolio evaluated on the same paths.
struct SimEvaluation {
  std::vector<double> log_v_model;      // per path
  std::vector<double> log_v_reference;  // per path; empty if not requested
  double mean_model = 0.0;
  double mean_reference = 0.0;
};

SimEvaluation evaluate_on_simulated(const SimConfig& sim, int n_paths, const PortfolioSpec& spec,
                                    bool with_reference);

}  // namespace sigfolio
