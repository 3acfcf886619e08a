#pragma once

#include <Eigen/Dense>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace sigfolio {

// A panel of strictly positive prices/capitalizations on a common time grid.
// No missing values are tolerated inside the window; rows with holes are a
// hard load error, not an imputation case.
struct MarketPanel {
  std::vector<std::string> dates;  // original first-column entries
  std::vector<double> times;      // strictly increasing numeric axis
  Eigen::MatrixXd prices;         // samples x d, all > 0
  std::vector<std::string> assets;

  int dim() const { return static_cast<int>(prices.cols()); }
  int samples() const { return static_cast<int>(prices.rows()); }
  void validate() const;
};

MarketPanel load_prices_csv(std::istream& is, const std::string& origin = "<stream>");
MarketPanel load_prices_csv_file(const std::string& path);
void write_prices_csv(std::ostream& os, const MarketPanel& panel);

// Subset of asset indices (0-based), kept sorted and unique.
struct Universe {
  std::vector<int> indices;

  static Universe all(int d);
  static Universe of(std::vector<int> idx, int d);
  int size() const { return static_cast<int>(indices.size()); }
};

// times x |U| portfolio/market weights. Rows sum to 1 within 1e-12.
struct WeightPanel {
  Eigen::MatrixXd weights;  // samples x |U|
  bool ranked = false;
  // Only for ranked panels: rank_to_asset[t][r] is the universe position of
  // the asset holding rank r (rank 0 = largest weight) at time t.
  std::vector<std::vector<int>> rank_to_asset;

  int dim() const { return static_cast<int>(weights.cols()); }
  int samples() const { return static_cast<int>(weights.rows()); }
};

// mu^{U,i} = S^i / sum_{j in U} S^j on the universe.
WeightPanel market_weights(const MarketPanel& panel, const Universe& universe);

// Row-wise descending sort. Ties give the smaller original label the better
// (smaller) rank.
WeightPanel rank_weights(const WeightPanel& raw);

// Per-step rank-one covariation estimates d[mu, mu]: step k is
// (mu_{k+1}-mu_k)(mu_{k+1}-mu_k)^T.
std::vector<Eigen::MatrixXd> covariation_increments(const WeightPanel& weights);

void write_weights_csv(std::ostream& os, const std::vector<double>& times, const WeightPanel& panel,
                       const std::vector<std::string>& column_names);

// One evaluation window on a panel: the signature is streamed from
// obs_start, investing happens on [invest_start, invest_end). invest_end is
// still a valid price row (the last rebalance needs a forward return).
struct EvalWindow {
  int obs_start = 0;
  int invest_start = 0;
  int invest_end = 0;

  int invest_steps() const { return invest_end - invest_start; }
};

}  // namespace sigfolio
