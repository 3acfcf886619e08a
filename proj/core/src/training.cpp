#include "sigfolio/training.hpp"

#include <map>
#include <mutex>

#include "sigfolio/backtest.hpp"
#include "sigfolio/common.hpp"
#include "sigfolio/parallel.hpp"

namespace sigfolio {

namespace {
constexpr std::size_t kBlock = 32;  // paths per reduction block
}

McAssembly assemble_logopt_monte_carlo(const SimConfig& sim, int n_paths, const PortfolioSpec& spec) {
  sim.validate();
  if (n_paths < 1) throw ConfigError("assemble_logopt_monte_carlo: n_paths must be >= 1");

  const EvalWindow window{0, 0, sim.steps};

  struct Block {
    Eigen::MatrixXd q;
    Eigen::VectorXd c;
    int regenerated = 0;
  };

  const std::size_t n_blocks = (static_cast<std::size_t>(n_paths) + kBlock - 1) / kBlock;

  McAssembly out;
  out.n_paths = n_paths;

  // Blocks are computed in parallel but folded strictly in block order;
  // within a block, paths run in ascending index order. The summation order
  // is therefore fixed, which makes Q_hat/c_hat independent of threading.
  std::mutex fold_mutex;
  std::map<std::size_t, Block> pending;
  std::size_t next_block = 0;
  bool first = true;

  parallel_for(n_blocks, [&](std::size_t b) {
    Block block;
    const std::size_t lo = b * kBlock;
    const std::size_t hi = std::min<std::size_t>(lo + kBlock, static_cast<std::size_t>(n_paths));
    for (std::size_t p = lo; p < hi; ++p) {
      int attempts = 0;
      const MarketPanel panel = simulate_one(sim, p, &attempts);
      block.regenerated += attempts;
      const EvalContext ctx = build_context(spec, panel, window);
      auto [q, c] = assemble_logopt(ctx.features, ctx.mu, spec.type);
      if (block.q.size() == 0) {
        block.q = std::move(q);
        block.c = std::move(c);
      } else {
        block.q += q;
        block.c += c;
      }
    }

    std::lock_guard<std::mutex> lock(fold_mutex);
    pending.emplace(b, std::move(block));
    while (!pending.empty() && pending.begin()->first == next_block) {
      Block& ready = pending.begin()->second;
      out.regenerated += ready.regenerated;
      if (first) {
        out.q_hat = std::move(ready.q);
        out.c_hat = std::move(ready.c);
        first = false;
      } else {
        out.q_hat += ready.q;
        out.c_hat += ready.c;
      }
      pending.erase(pending.begin());
      ++next_block;
    }
  });

  const double inv = 1.0 / static_cast<double>(n_paths);
  out.q_hat *= inv;
  out.c_hat *= inv;
  return out;
}

SimEvaluation evaluate_on_simulated(const SimConfig& sim, int n_paths, const PortfolioSpec& spec,
                                    bool with_reference) {
  sim.validate();
  if (n_paths < 1) throw ConfigError("evaluate_on_simulated: n_paths must be >= 1");
  if (with_reference && !spec.universe.empty())
    throw ConfigError("evaluate_on_simulated: the growth-optimal reference needs the full universe");
  const EvalWindow window{0, 0, sim.steps};

  SimEvaluation eval;
  eval.log_v_model.assign(static_cast<std::size_t>(n_paths), 0.0);
  if (with_reference) eval.log_v_reference.assign(static_cast<std::size_t>(n_paths), 0.0);

  parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t p) {
    const MarketPanel panel = simulate_one(sim, p);
    const EvalContext ctx = build_context(spec, panel, window);
    const Eigen::MatrixXd weights = portfolio_weights(spec, ctx);
    eval.log_v_model[p] = log_relative_wealth_product(weights, ctx.mu);
    if (with_reference) {
      const Eigen::MatrixXd go = reference_go_stream(sim, panel);
      eval.log_v_reference[p] = log_relative_wealth_product(go.topRows(sim.steps), ctx.mu);
    }
  });

  for (double v : eval.log_v_model) eval.mean_model += v;
  eval.mean_model /= static_cast<double>(n_paths);
  if (with_reference) {
    for (double v : eval.log_v_reference) eval.mean_reference += v;
    eval.mean_reference /= static_cast<double>(n_paths);
  }
  return eval;
}

}  // namespace sigfolio
