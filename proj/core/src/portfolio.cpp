#include "sigfolio/portfolio.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "sigfolio/common.hpp"
#include "sigfolio/detail/json_util.hpp"
#include "sigfolio/jl.hpp"
#include "sigfolio/path.hpp"

namespace sigfolio {

using detail::json;

std::string portfolio_type_name(PortfolioType t) { return t == PortfolioType::type1 ? "I" : "II"; }

PortfolioType portfolio_type_from_name(const std::string& s) {
  if (s == "I") return PortfolioType::type1;
  if (s == "II") return PortfolioType::type2;
  throw ConfigError("unknown portfolio type: " + s + " (expected I or II)");
}

std::string aux_choice_name(AuxChoice a) {
  switch (a) {
    case AuxChoice::universe_weights: return "universe";
    case AuxChoice::equal: return "equal";
    case AuxChoice::constant_vector: return "constant";
    case AuxChoice::external: return "external";
  }
  throw std::logic_error("aux_choice_name");
}

AuxChoice aux_choice_from_name(const std::string& s) {
  if (s == "universe") return AuxChoice::universe_weights;
  if (s == "equal") return AuxChoice::equal;
  if (s == "constant") return AuxChoice::constant_vector;
  if (s == "external") return AuxChoice::external;
  throw ConfigError("unknown auxiliary portfolio choice: " + s);
}

std::string underlying_name(UnderlyingChoice u) {
  switch (u) {
    case UnderlyingChoice::universe_weights: return "universe_weights";
    case UnderlyingChoice::ranked_weights: return "ranked_weights";
    case UnderlyingChoice::prices: return "prices";
    case UnderlyingChoice::external: return "external";
  }
  throw std::logic_error("underlying_name");
}

UnderlyingChoice underlying_from_name(const std::string& s) {
  if (s == "universe_weights") return UnderlyingChoice::universe_weights;
  if (s == "ranked_weights") return UnderlyingChoice::ranked_weights;
  if (s == "prices") return UnderlyingChoice::prices;
  if (s == "external") return UnderlyingChoice::external;
  throw ConfigError("unknown underlying path choice: " + s);
}

int labelling(int asset_rank, int feature_rank, int n_features) {
  if (asset_rank < 0 || feature_rank < 0 || feature_rank >= n_features)
    throw std::out_of_range("labelling: index out of range");
  return asset_rank * n_features + feature_rank;
}

std::pair<int, int> labelling_inverse(int flat, int n_features) {
  if (flat < 0 || n_features < 1) throw std::out_of_range("labelling_inverse: index out of range");
  return {flat / n_features, flat % n_features};
}

Eigen::MatrixXd controlling_functions(const Eigen::VectorXd& coefficients,
                                      const Eigen::MatrixXd& features, int n_assets) {
  const int n_feat = static_cast<int>(features.cols());
  if (coefficients.size() != static_cast<Eigen::Index>(n_assets) * n_feat)
    throw DataError("controlling_functions: coefficient vector has wrong length");
  // Column i of L is asset i's coefficient block; f = features * L.
  Eigen::MatrixXd L(n_feat, n_assets);
  for (int i = 0; i < n_assets; ++i)
    L.col(i) = coefficients.segment(static_cast<Eigen::Index>(i) * n_feat, n_feat);
  return features * L;
}

Eigen::MatrixXd weights_type1(const Eigen::MatrixXd& tau, const Eigen::MatrixXd& f) {
  if (tau.rows() != f.rows() || tau.cols() != f.cols())
    throw DataError("weights_type1: shape mismatch");
  const Eigen::VectorXd mix = (tau.array() * f.array()).rowwise().sum();
  return tau.array() * (f.array().colwise() + (1.0 - mix.array()));
}

Eigen::MatrixXd weights_type2(const Eigen::MatrixXd& tau, const Eigen::MatrixXd& f) {
  if (tau.rows() != f.rows() || tau.cols() != f.cols())
    throw DataError("weights_type2: shape mismatch");
  const Eigen::VectorXd remainder = 1.0 - f.rowwise().sum().array();
  return f.array() + (tau.array().colwise() * remainder.array());
}

int FeatureSpec::feature_count(int underlying_dim) const {
  switch (family) {
    case FeatureFamily::full_signature:
      return static_cast<int>(words_up_to_level(underlying_dim + 1, level));
    case FeatureFamily::jl:
    case FeatureFamily::randomized:
      return proj_dim;
  }
  throw std::logic_error("feature_count");
}

MarketPanel ranked_panel(const MarketPanel& panel) {
  MarketPanel out = panel;
  std::vector<int> order(static_cast<std::size_t>(panel.dim()));
  for (int k = 0; k < panel.samples(); ++k) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (panel.prices(k, a) != panel.prices(k, b)) return panel.prices(k, a) > panel.prices(k, b);
      return a < b;
    });
    for (int r = 0; r < panel.dim(); ++r) out.prices(k, r) = panel.prices(k, order[static_cast<std::size_t>(r)]);
  }
  out.assets.clear();
  for (int r = 0; r < panel.dim(); ++r) out.assets.push_back("rank" + std::to_string(r + 1));
  return out;
}

namespace {

void check_window(const EvalWindow& w, int samples) {
  if (w.obs_start < 0 || w.invest_start < w.obs_start || w.invest_end <= w.invest_start)
    throw DataError("evaluation window is inconsistent");
  if (w.invest_end >= samples)
    throw DataError("evaluation window needs price row " + std::to_string(w.invest_end) +
                    " but the panel has only " + std::to_string(samples) + " rows");
}

}  // namespace

EvalContext build_context(const PortfolioSpec& spec, const MarketPanel& input_panel, const EvalWindow& window,
                          const Eigen::MatrixXd* external_tau, const Eigen::MatrixXd* external_underlying) {
  const MarketPanel panel = spec.rank_based ? ranked_panel(input_panel) : input_panel;
  check_window(window, panel.samples());

  const Universe universe =
      spec.universe.empty() ? Universe::all(panel.dim()) : Universe::of(spec.universe, panel.dim());
  const int m = universe.size();
  const int R = window.invest_steps();

  const WeightPanel mu_all = market_weights(panel, universe);

  EvalContext ctx;
  ctx.mu = mu_all.weights.middleRows(window.invest_start, R + 1);
  ctx.prices.resize(R + 1, m);
  for (int j = 0; j < m; ++j)
    ctx.prices.col(j) = panel.prices.col(universe.indices[static_cast<std::size_t>(j)]).segment(window.invest_start, R + 1);
  ctx.times.assign(panel.times.begin() + window.invest_start,
                   panel.times.begin() + window.invest_end + 1);

  // Auxiliary portfolio rows over the investment window.
  switch (spec.tau_choice) {
    case AuxChoice::universe_weights:
      ctx.tau = ctx.mu.topRows(R);
      break;
    case AuxChoice::equal:
      ctx.tau = Eigen::MatrixXd::Constant(R, m, 1.0 / static_cast<double>(m));
      break;
    case AuxChoice::constant_vector: {
      if (spec.tau_constant.size() != m) throw DataError("tau constant vector has wrong length");
      if (std::abs(spec.tau_constant.sum() - 1.0) > 1e-10)
        throw DataError("tau constant vector must sum to 1");
      ctx.tau = spec.tau_constant.transpose().replicate(R, 1);
      break;
    }
    case AuxChoice::external: {
      if (!external_tau) throw DataError("external tau panel required but not provided");
      if (external_tau->rows() != R || external_tau->cols() != m)
        throw DataError("external tau panel has wrong shape");
      ctx.tau = *external_tau;
      break;
    }
  }
  if (ctx.tau.cwiseAbs().maxCoeff() > spec.tau_bound)
    throw DataError("auxiliary portfolio exceeds the configured bound");
  for (int k = 0; k < R; ++k)
    if (std::abs(ctx.tau.row(k).sum() - 1.0) > 1e-10)
      throw DataError("auxiliary portfolio rows must sum to 1");

  // Underlying path X observed from obs_start, time re-based to the
  // observation start so phi(t) = (t - t_obs)/T_hor.
  const int obs_rows = window.invest_end - window.obs_start;  // feature rows end at invest_end-1
  Eigen::MatrixXd x;
  switch (spec.features.underlying) {
    case UnderlyingChoice::universe_weights:
      x = mu_all.weights.middleRows(window.obs_start, obs_rows);
      break;
    case UnderlyingChoice::ranked_weights: {
      WeightPanel ranked = rank_weights(mu_all);
      x = ranked.weights.middleRows(window.obs_start, obs_rows);
      break;
    }
    case UnderlyingChoice::prices: {
      x.resize(obs_rows, m);
      for (int j = 0; j < m; ++j)
        x.col(j) = panel.prices.col(universe.indices[static_cast<std::size_t>(j)]).segment(window.obs_start, obs_rows);
      break;
    }
    case UnderlyingChoice::external: {
      if (!external_underlying) throw DataError("external underlying path required but not provided");
      if (external_underlying->rows() != obs_rows)
        throw DataError("external underlying path has wrong row count");
      x = *external_underlying;
      break;
    }
  }

  std::vector<double> obs_times(static_cast<std::size_t>(obs_rows));
  const double t0 = panel.times[static_cast<std::size_t>(window.obs_start)];
  for (int k = 0; k < obs_rows; ++k)
    obs_times[static_cast<std::size_t>(k)] = panel.times[static_cast<std::size_t>(window.obs_start + k)] - t0;

  DiscretePath underlying(std::move(obs_times), std::move(x));
  DiscretePath augmented = time_augment(underlying, spec.features.horizon);

  FeatureMatrix fm;
  switch (spec.features.family) {
    case FeatureFamily::full_signature:
      fm = signature_features(augmented, spec.features.level);
      break;
    case FeatureFamily::jl:
      fm = jl_signature(augmented, spec.features.level, spec.features.proj_dim, spec.features.seed);
      break;
    case FeatureFamily::randomized: {
      RandomizedSigConfig rs;
      rs.proj_dim = spec.features.proj_dim;
      rs.seed = spec.features.seed;
      rs.activation = spec.features.activation;
      rs.bias_std = spec.features.bias_std;
      fm = randomized_signature(augmented, rs);
      break;
    }
  }
  ctx.n_features = fm.features();
  ctx.features = fm.values.middleRows(window.invest_start - window.obs_start, R);
  ctx.feature_labels = fm.labels;
  for (int j = 0; j < m; ++j)
    ctx.asset_names.push_back(panel.assets[static_cast<std::size_t>(universe.indices[static_cast<std::size_t>(j)])]);
  return ctx;
}

Eigen::MatrixXd portfolio_weights(const PortfolioSpec& spec, const EvalContext& ctx) {
  if (spec.coefficients.size() == 0) throw DataError("portfolio has no trained coefficients");
  const Eigen::MatrixXd f =
      controlling_functions(spec.coefficients, ctx.features, static_cast<int>(ctx.tau.cols()));
  Eigen::MatrixXd w =
      spec.type == PortfolioType::type1 ? weights_type1(ctx.tau, f) : weights_type2(ctx.tau, f);
  if (spec.clip_long_only) {
    for (Eigen::Index k = 0; k < w.rows(); ++k) {
      Eigen::RowVectorXd row = w.row(k).cwiseMax(0.0);
      const double total = row.sum();
      // An all-short row has nothing left to hold; fall back to tau.
      w.row(k) = total > 0.0 ? (row / total).eval() : ctx.tau.row(std::min(k, ctx.tau.rows() - 1)).eval();
    }
  }
  return w;
}

namespace {

json feature_spec_to_json(const FeatureSpec& f) {
  json j;
  j["family"] = feature_family_name(f.family);
  j["level"] = f.level;
  j["proj_dim"] = f.proj_dim;
  j["seed"] = f.seed;
  j["activation"] = activation_name(f.activation);
  j["bias_std"] = f.bias_std;
  j["underlying"] = underlying_name(f.underlying);
  j["horizon"] = f.horizon;
  return j;
}

FeatureSpec feature_spec_from_json(const json& j) {
  detail::check_keys(j, {"family", "level", "proj_dim", "seed", "activation", "bias_std", "underlying", "horizon"},
                     "model.features");
  FeatureSpec f;
  f.family = feature_family_from_name(detail::require(j, "family", "model.features").get<std::string>());
  f.level = detail::get_or<int>(j, "level", 0);
  f.proj_dim = detail::get_or<int>(j, "proj_dim", 0);
  f.seed = detail::get_or<std::uint64_t>(j, "seed", 0);
  f.activation = activation_from_name(detail::get_or<std::string>(j, "activation", "tanh"));
  f.bias_std = detail::get_or<double>(j, "bias_std", 1.0);
  f.underlying = underlying_from_name(detail::get_or<std::string>(j, "underlying", "universe_weights"));
  f.horizon = detail::get_or<double>(j, "horizon", 1.0);
  return f;
}

}  // namespace

void save_model(const std::string& path, const PortfolioSpec& spec,
                const std::map<std::string, double>& numeric_info,
                const std::map<std::string, std::string>& text_info) {
  json j;
  j["type"] = portfolio_type_name(spec.type);
  json universe = json::array();
  for (int i : spec.universe) universe.push_back(i + 1);  // 1-based on disk
  j["universe"] = universe;
  j["rank_based"] = spec.rank_based;
  j["tau"] = aux_choice_name(spec.tau_choice);
  if (spec.tau_choice == AuxChoice::constant_vector) {
    json tc = json::array();
    for (Eigen::Index i = 0; i < spec.tau_constant.size(); ++i) tc.push_back(spec.tau_constant[i]);
    j["tau_constant"] = tc;
  }
  j["tau_bound"] = spec.tau_bound;
  j["clip_long_only"] = spec.clip_long_only;
  j["features"] = feature_spec_to_json(spec.features);
  json coeffs = json::array();
  for (Eigen::Index i = 0; i < spec.coefficients.size(); ++i) coeffs.push_back(spec.coefficients[i]);
  j["coefficients"] = coeffs;
  json prov;
  for (const auto& [k, v] : numeric_info) prov[k] = v;
  for (const auto& [k, v] : text_info) prov[k] = v;
  j["provenance"] = prov;

  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file " + path);
  out << j.dump(2) << '\n';
}

PortfolioSpec load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("model file " + path + ": " + e.what());
  }
  detail::check_keys(j, {"type", "universe", "rank_based", "tau", "tau_constant", "tau_bound",
                         "clip_long_only", "features", "coefficients", "provenance"},
                     "model");
  PortfolioSpec spec;
  spec.type = portfolio_type_from_name(detail::require(j, "type", "model").get<std::string>());
  for (const auto& idx : detail::require(j, "universe", "model")) spec.universe.push_back(idx.get<int>() - 1);
  spec.rank_based = detail::get_or<bool>(j, "rank_based", false);
  spec.tau_choice = aux_choice_from_name(detail::get_or<std::string>(j, "tau", "universe"));
  if (j.contains("tau_constant")) {
    const auto& tc = j.at("tau_constant");
    spec.tau_constant.resize(static_cast<Eigen::Index>(tc.size()));
    for (std::size_t i = 0; i < tc.size(); ++i) spec.tau_constant[static_cast<Eigen::Index>(i)] = tc[i].get<double>();
  }
  spec.tau_bound = detail::get_or<double>(j, "tau_bound", 1e6);
  spec.clip_long_only = detail::get_or<bool>(j, "clip_long_only", false);
  spec.features = feature_spec_from_json(detail::require(j, "features", "model"));
  const auto& coeffs = detail::require(j, "coefficients", "model");
  spec.coefficients.resize(static_cast<Eigen::Index>(coeffs.size()));
  for (std::size_t i = 0; i < coeffs.size(); ++i)
    spec.coefficients[static_cast<Eigen::Index>(i)] = coeffs[i].get<double>();
  return spec;
}

}  // namespace sigfolio
