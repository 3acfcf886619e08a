#include "sigfolio/randomized_signature.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "sigfolio/common.hpp"

namespace sigfolio {

namespace {
constexpr std::uint64_t kRsStream = 0x52537369ULL;  // "RSsi"

inline void apply_activation(Activation a, Eigen::VectorXd& v) {
  switch (a) {
    case Activation::tanh_fn:
      v = v.array().tanh();
      return;
    case Activation::sigmoid:
      v = 1.0 / (1.0 + (-v.array()).exp());
      return;
    case Activation::identity:
      return;
  }
}
}  // namespace

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::tanh_fn: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::identity: return "identity";
  }
  throw std::logic_error("activation_name");
}

Activation activation_from_name(const std::string& s) {
  if (s == "tanh") return Activation::tanh_fn;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "identity") return Activation::identity;
  throw ConfigError("unknown activation: " + s);
}

FeatureMatrix randomized_signature(const DiscretePath& path, const RandomizedSigConfig& cfg) {
  if (cfg.proj_dim < 1) throw std::invalid_argument("randomized_signature: proj_dim must be >= 1");
  const int n = path.dim();
  const int P = cfg.proj_dim;
  const int T = path.samples();

  // One random vector field per driving component, drawn once from the seed.
  std::vector<Eigen::MatrixXd> A(static_cast<std::size_t>(n));
  std::vector<Eigen::VectorXd> b(static_cast<std::size_t>(n));
  const double scale = 1.0 / std::sqrt(static_cast<double>(P));
  for (int i = 0; i < n; ++i) {
    std::mt19937_64 rng(mix_seed(cfg.seed, kRsStream, static_cast<std::uint64_t>(i)));
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd Ai(P, P);
    for (int r = 0; r < P; ++r)
      for (int c = 0; c < P; ++c) Ai(r, c) = normal(rng) * scale;
    Eigen::VectorXd bi(P);
    for (int r = 0; r < P; ++r) bi[r] = normal(rng) * cfg.bias_std;
    A[static_cast<std::size_t>(i)] = std::move(Ai);
    b[static_cast<std::size_t>(i)] = std::move(bi);
  }

  FeatureMatrix fm;
  fm.family = FeatureFamily::randomized;
  fm.proj_dim = P;
  fm.seed = cfg.seed;
  fm.values.resize(T, P);

  Eigen::VectorXd state = Eigen::VectorXd::Zero(P);
  state[0] = 1.0;
  fm.values.row(0) = state.transpose();

  Eigen::VectorXd field(P), field_mid(P), predictor(P), next(P);
  for (int k = 0; k + 1 < T; ++k) {
    const Eigen::VectorXd dx = path.values.row(k + 1) - path.values.row(k);
    // Heun: predictor with the left-point fields, then average the fields at
    // both ends of the step. Stratonovich-consistent for smooth activations.
    predictor = state;
    std::vector<Eigen::VectorXd> left_fields(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      field = b[static_cast<std::size_t>(i)] + A[static_cast<std::size_t>(i)] * state;
      apply_activation(cfg.activation, field);
      left_fields[static_cast<std::size_t>(i)] = field;
      predictor.noalias() += field * dx[i];
    }
    next = state;
    for (int i = 0; i < n; ++i) {
      field_mid = b[static_cast<std::size_t>(i)] + A[static_cast<std::size_t>(i)] * predictor;
      apply_activation(cfg.activation, field_mid);
      next.noalias() += 0.5 * (left_fields[static_cast<std::size_t>(i)] + field_mid) * dx[i];
    }
    if (!next.allFinite())
      throw SolverError("randomized_signature: non-finite state at step " + std::to_string(k + 1));
    state.swap(next);
    fm.values.row(k + 1) = state.transpose();
  }

  for (int p = 0; p < P; ++p) fm.labels.push_back("rs_" + std::to_string(p));
  return fm;
}

}  // namespace sigfolio
