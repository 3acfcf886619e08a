#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sigfolio/market.hpp"
#include "sigfolio/randomized_signature.hpp"
#include "sigfolio/signature.hpp"

namespace sigfolio {

enum class PortfolioType { type1, type2 };
enum class AuxChoice { universe_weights, equal, constant_vector, external };
enum class UnderlyingChoice { universe_weights, ranked_weights, prices, external };

std::string portfolio_type_name(PortfolioType t);
PortfolioType portfolio_type_from_name(const std::string& s);
std::string aux_choice_name(AuxChoice a);
AuxChoice aux_choice_from_name(const std::string& s);
std::string underlying_name(UnderlyingChoice u);
UnderlyingChoice underlying_from_name(const std::string& s);

// Flat index of coefficient l^i_nu: asset-major, i.e. asset_rank * |V| +
// feature_rank. Fixed so that serialized coefficient vectors are unambiguous.
int labelling(int asset_rank, int feature_rank, int n_features);
std::pair<int, int> labelling_inverse(int flat, int n_features);

// f[t, i] = sum_nu l_{(i,nu)} phi[t, nu].
Eigen::MatrixXd controlling_functions(const Eigen::VectorXd& coefficients,
                                      const Eigen::MatrixXd& features, int n_assets);

// Type I:  pi^i = tau^i (f^i + 1 - sum_j tau^j f^j). Rows sum to one by the
// algebraic identity; f == 0 (or f constant across assets) recovers tau.
Eigen::MatrixXd weights_type1(const Eigen::MatrixXd& tau, const Eigen::MatrixXd& f);

// Type II: pi^i = f^i + tau^i (1 - sum_j f^j). f == 0 recovers tau.
Eigen::MatrixXd weights_type2(const Eigen::MatrixXd& tau, const Eigen::MatrixXd& f);

struct FeatureSpec {
  FeatureFamily family = FeatureFamily::full_signature;
  int level = 2;
  int proj_dim = 0;
  std::uint64_t seed = 0;
  Activation activation = Activation::tanh_fn;
  double bias_std = 1.0;
  UnderlyingChoice underlying = UnderlyingChoice::universe_weights;
  double horizon = 1.0;  // time-augmentation parametrization T_hor

  // Number of feature maps |V| given the underlying path dimension (before
  // time augmentation).
  int feature_count(int underlying_dim) const;
};

struct PortfolioSpec {
  PortfolioType type = PortfolioType::type1;
  std::vector<int> universe;  // 0-based panel columns; empty = all assets
  bool rank_based = false;    // trade the ranked market instead of names
  AuxChoice tau_choice = AuxChoice::universe_weights;
  Eigen::VectorXd tau_constant;
  double tau_bound = 1e6;
  // Optional long-only post-processor: clip short weights at zero and
  // renormalize each row. Off by default; shorts are allowed.
  bool clip_long_only = false;
  FeatureSpec features;
  Eigen::VectorXd coefficients;  // |U| * |V|, empty before training
};

// Slice of a panel used for one evaluation: features are streamed from
// obs_start (the observation lead-in), weights are produced on
// [invest_start, invest_end). invest_end must be a valid price row so the
// last rebalance still has a forward return.
struct EvalContext {
  Eigen::MatrixXd features;    // R x |V|, rows invest_start .. invest_end-1
  Eigen::MatrixXd tau;         // R x |U|
  Eigen::MatrixXd mu;          // (R+1) x |U|, rows invest_start .. invest_end
  Eigen::MatrixXd prices;      // (R+1) x |U|
  std::vector<double> times;   // R+1 entries
  std::vector<std::string> feature_labels;
  std::vector<std::string> asset_names;
  int n_features = 0;
};

EvalContext build_context(const PortfolioSpec& spec, const MarketPanel& panel, const EvalWindow& window,
                          const Eigen::MatrixXd* external_tau = nullptr,
                          const Eigen::MatrixXd* external_underlying = nullptr);

// Weight panel of a trained PortfolioSpec on a prepared context.
Eigen::MatrixXd portfolio_weights(const PortfolioSpec& spec, const EvalContext& ctx);

// Model file (JSON): full spec descriptor, coefficient vector and feature
// provenance, plus free-form training provenance entries.
void save_model(const std::string& path, const PortfolioSpec& spec,
                const std::map<std::string, double>& numeric_info = {},
                const std::map<std::string, std::string>& text_info = {});
PortfolioSpec load_model(const std::string& path);

// Ranked capitalization panel: prices sorted descending within each row
// (ties keep the smaller original column first); asset j becomes "rank{j+1}".
MarketPanel ranked_panel(const MarketPanel& panel);

}  // namespace sigfolio
