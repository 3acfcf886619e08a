#include "sigfolio/sim.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "sigfolio/common.hpp"
#include "sigfolio/parallel.hpp"
#include "sigfolio/path.hpp"
#include "sigfolio/signature.hpp"

namespace sigfolio {

namespace {
constexpr std::uint64_t kSimStream = 0x53494d55ULL;  // "SIMU"
constexpr int kMaxAttempts = 64;

Eigen::VectorXd weights_from_prices(const Eigen::VectorXd& s) { return s / s.sum(); }

// One trajectory in log-price coordinates; throws SolverError on a
// non-finite state so the caller can redraw.
Eigen::MatrixXd simulate_log_prices(const SimConfig& cfg, std::mt19937_64& rng) {
  const int d = cfg.d;
  const double dt = cfg.horizon / static_cast<double>(cfg.steps);
  const double sqrt_dt = std::sqrt(dt);
  std::normal_distribution<double> normal(0.0, 1.0);

  Eigen::MatrixXd logs(cfg.steps + 1, d);
  logs.row(0) = cfg.s0.array().log().matrix().transpose();

  const Eigen::MatrixXd& sigma =
      cfg.model == MarketModel::sigmarket ? cfg.sig_sigma : cfg.bs_sigma;
  const int m = cfg.model == MarketModel::volstab ? d : static_cast<int>(sigma.cols());
  Eigen::VectorXd noise(m);

  // Running signature of the time-augmented weights, only for the
  // self-referential signature-market drift.
  const bool needs_sig = cfg.model == MarketModel::sigmarket;
  TruncatedTensor sig = TruncatedTensor::unit(d + 1, needs_sig ? cfg.sig_drift.level : 1);
  Eigen::VectorXd mu = weights_from_prices(cfg.s0);
  Eigen::VectorXd ito_bs;
  if (cfg.model == MarketModel::bs)
    ito_bs = cfg.bs_drift - 0.5 * (cfg.bs_sigma * cfg.bs_sigma.transpose()).diagonal();
  Eigen::VectorXd ito_sig_corr;
  if (needs_sig) ito_sig_corr = 0.5 * (cfg.sig_sigma * cfg.sig_sigma.transpose()).diagonal();

  for (int k = 0; k < cfg.steps; ++k) {
    for (int j = 0; j < m; ++j) noise[j] = normal(rng);
    switch (cfg.model) {
      case MarketModel::bs:
        logs.row(k + 1) = logs.row(k) + (ito_bs * dt + sqrt_dt * (cfg.bs_sigma * noise)).transpose();
        break;
      case MarketModel::volstab: {
        // dlog S^i = (alpha/2)/mu^i dt + sqrt(1/mu^i) dB^i
        for (int i = 0; i < d; ++i) {
          const double inv_mu = 1.0 / mu[i];
          logs(k + 1, i) = logs(k, i) + 0.5 * cfg.volstab_alpha * inv_mu * dt +
                           std::sqrt(inv_mu) * sqrt_dt * noise[i];
        }
        break;
      }
      case MarketModel::sigmarket: {
        Eigen::VectorXd a = Eigen::VectorXd::Zero(d);
        for (const auto& [word, coeffs] : cfg.sig_drift.terms) a += coeffs * sig.coeff(word);
        logs.row(k + 1) = logs.row(k) + ((a - ito_sig_corr) * dt + sqrt_dt * (cfg.sig_sigma * noise)).transpose();
        break;
      }
    }
    if (!logs.row(k + 1).allFinite()) throw SolverError("simulate: non-finite state");

    const Eigen::VectorXd mu_next = weights_from_prices(logs.row(k + 1).array().exp().matrix().transpose());
    if (needs_sig) {
      // Chen update of sig(muhat) with the increment (dt/horizon, dmu).
      Eigen::VectorXd dmuhat(d + 1);
      dmuhat[0] = dt / cfg.horizon;
      dmuhat.tail(d) = mu_next - mu;
      TruncatedTensor inc(d + 1, cfg.sig_drift.level);
      for (int i = 0; i <= d; ++i) inc.set_coeff(Word{i + 1}, dmuhat[i]);
      sig = tensor_mul(sig, tensor_exp(inc));
    }
    mu = mu_next;
  }
  return logs;
}

void check_full_row_rank(const Eigen::MatrixXd& sigma, const std::string& what) {
  if (sigma.rows() < 1 || sigma.cols() < sigma.rows())
    throw ConfigError(what + ": sigma must be d x m with m >= d");
  // An exactly-zero sigma is allowed: degenerate deterministic dynamics are
  // still simulatable (the growth-optimal reference rejects it separately).
  if (sigma.cwiseAbs().maxCoeff() == 0.0) return;
  const Eigen::MatrixXd c = sigma * sigma.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12) throw ConfigError(what + ": sigma sigma^T numerically rank deficient");
}

}  // namespace

std::string market_model_name(MarketModel m) {
  switch (m) {
    case MarketModel::bs: return "bs";
    case MarketModel::volstab: return "volstab";
    case MarketModel::sigmarket: return "sigmarket";
  }
  throw std::logic_error("market_model_name");
}

MarketModel market_model_from_name(const std::string& s) {
  if (s == "bs") return MarketModel::bs;
  if (s == "volstab") return MarketModel::volstab;
  if (s == "sigmarket") return MarketModel::sigmarket;
  throw ConfigError("unknown market model: " + s);
}

void SimConfig::validate() const {
  if (d < 1) throw ConfigError("sim: d must be >= 1");
  if (steps < 1) throw ConfigError("sim: steps must be >= 1");
  if (!(horizon > 0.0)) throw ConfigError("sim: horizon must be positive");
  if (s0.size() != d || (s0.array() <= 0.0).any()) throw ConfigError("sim: s0 must be d positive values");
  switch (model) {
    case MarketModel::bs:
      if (bs_drift.size() != d) throw ConfigError("sim: bs drift must have d entries");
      check_full_row_rank(bs_sigma, "bs");
      break;
    case MarketModel::volstab:
      if (volstab_alpha < 0.0) throw ConfigError("sim: volstab alpha must be >= 0");
      break;
    case MarketModel::sigmarket: {
      check_full_row_rank(sig_sigma, "sigmarket");
      if (sig_drift.level < 0) throw ConfigError("sim: sigmarket level must be >= 0");
      for (const auto& [word, coeffs] : sig_drift.terms) {
        if (coeffs.size() != d) throw ConfigError("sigmarket: drift coefficients must have d entries");
        if (word.length() > sig_drift.level) throw ConfigError("sigmarket: drift word exceeds level");
        for (int letter : word.letters)
          if (letter < 1 || letter > d + 1) throw ConfigError("sigmarket: drift word letter out of range");
        if (sig_drift.strong_solution_only)
          for (std::size_t i = 1; i < word.letters.size(); ++i)
            if (word.letters[i] != 1)
              throw ConfigError("sigmarket: word " + word_label(word, d + 1) +
                                " not allowed with strong_solution_only (letters after the first must be 1)");
      }
      break;
    }
  }
}

MarketPanel simulate_one(const SimConfig& config, std::uint64_t path_index, int* attempts) {
  config.validate();
  Eigen::MatrixXd logs;
  int attempt = 0;
  for (;; ++attempt) {
    if (attempt >= kMaxAttempts)
      throw SolverError("simulate: path " + std::to_string(path_index) + " blew up " +
                        std::to_string(kMaxAttempts) + " times");
    std::mt19937_64 rng(mix_seed(config.seed, kSimStream + path_index, static_cast<std::uint64_t>(attempt)));
    try {
      logs = simulate_log_prices(config, rng);
      break;
    } catch (const SolverError&) {
      continue;
    }
  }
  if (attempts) *attempts = attempt;

  MarketPanel panel;
  panel.prices = logs.array().exp().matrix();
  panel.times.resize(static_cast<std::size_t>(config.steps) + 1);
  panel.dates.resize(panel.times.size());
  char buf[40];
  for (int k = 0; k <= config.steps; ++k) {
    const double t = config.horizon * static_cast<double>(k) / static_cast<double>(config.steps);
    panel.times[static_cast<std::size_t>(k)] = t;
    std::snprintf(buf, sizeof(buf), "%.17g", t);
    panel.dates[static_cast<std::size_t>(k)] = buf;
  }
  for (int j = 0; j < config.d; ++j) panel.assets.push_back("S" + std::to_string(j + 1));
  panel.validate();
  return panel;
}

SimResult simulate(const SimConfig& config, int n_paths) {
  config.validate();
  if (n_paths < 1) throw ConfigError("simulate: n_paths must be >= 1");

  SimResult result;
  result.panels.resize(static_cast<std::size_t>(n_paths));
  std::vector<int> attempts(static_cast<std::size_t>(n_paths), 0);

  parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t p) {
    result.panels[p] = simulate_one(config, p, &attempts[p]);
  });

  for (int a : attempts) result.regenerated += a;
  return result;
}

Eigen::VectorXd growth_optimal_weights(const Eigen::VectorXd& drift, const Eigen::MatrixXd& sigma) {
  const Eigen::MatrixXd c = sigma * sigma.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12) throw SolverError("growth_optimal_weights: singular covariance");
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  const Eigen::VectorXd x = llt.solve(drift);
  const Eigen::VectorXd y = llt.solve(Eigen::VectorXd::Ones(drift.size()));
  const double kappa = (x.sum() - 1.0) / y.sum();
  return x - kappa * y;
}

Eigen::MatrixXd reference_go_stream(const SimConfig& config, const MarketPanel& panel) {
  config.validate();
  if (panel.dim() != config.d) throw DataError("reference_go_stream: panel dimension mismatch");
  const int T = panel.samples();
  Eigen::MatrixXd out(T, config.d);

  switch (config.model) {
    case MarketModel::bs: {
      const Eigen::VectorXd pi = growth_optimal_weights(config.bs_drift, config.bs_sigma);
      out.rowwise() = pi.transpose();
      break;
    }
    case MarketModel::volstab: {
      const WeightPanel mu = market_weights(panel, Universe::all(config.d));
      for (int k = 0; k < T; ++k) {
        Eigen::VectorXd a(config.d);
        Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(config.d, config.d);
        for (int i = 0; i < config.d; ++i) {
          a[i] = 0.5 * (1.0 + config.volstab_alpha) / mu.weights(k, i);
          sigma(i, i) = std::sqrt(1.0 / mu.weights(k, i));
        }
        out.row(k) = growth_optimal_weights(a, sigma).transpose();
      }
      break;
    }
    case MarketModel::sigmarket: {
      const WeightPanel mu = market_weights(panel, Universe::all(config.d));
      DiscretePath mu_path(panel.times, mu.weights);
      DiscretePath muhat = time_augment(mu_path, config.horizon);
      SignatureStream sig(muhat, std::max(1, config.sig_drift.level));
      for (int k = 0; k < T; ++k) {
        Eigen::VectorXd a = Eigen::VectorXd::Zero(config.d);
        for (const auto& [word, coeffs] : config.sig_drift.terms)
          a += coeffs * sig.at(static_cast<std::size_t>(k)).coeff(word);
        out.row(k) = growth_optimal_weights(a, config.sig_sigma).transpose();
      }
      break;
    }
  }
  return out;
}

}  // namespace sigfolio
