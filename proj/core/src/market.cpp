#include "sigfolio/market.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "sigfolio/common.hpp"

namespace sigfolio {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trimmed(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

bool parse_double(const std::string& s, double& out) {
  const std::string t = trimmed(s);
  if (t.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return errno == 0 && end == t.c_str() + t.size() && std::isfinite(out);
}

}  // namespace

void MarketPanel::validate() const {
  if (samples() < 2) throw DataError("panel: need at least 2 rows");
  if (static_cast<int>(times.size()) != samples()) throw DataError("panel: time axis size mismatch");
  if (static_cast<int>(assets.size()) != dim()) throw DataError("panel: asset label count mismatch");
  for (int k = 0; k + 1 < samples(); ++k)
    if (!(times[static_cast<std::size_t>(k)] < times[static_cast<std::size_t>(k + 1)]))
      throw DataError("panel: times must be strictly increasing");
  for (int k = 0; k < samples(); ++k)
    for (int j = 0; j < dim(); ++j)
      if (!(prices(k, j) > 0.0) || !std::isfinite(prices(k, j)))
        throw DataError("panel: nonpositive price at row " + std::to_string(k) + ", column " +
                        std::to_string(j));
}

MarketPanel load_prices_csv(std::istream& is, const std::string& origin) {
  std::string line;
  if (!std::getline(is, line)) throw DataError(origin + ": empty file");
  const auto header = split_csv_line(line);
  if (header.size() < 2) throw DataError(origin + ": header needs a date column and at least one asset");

  MarketPanel panel;
  for (std::size_t j = 1; j < header.size(); ++j) panel.assets.push_back(trimmed(header[j]));
  const int d = static_cast<int>(panel.assets.size());

  std::vector<std::string> dates;
  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (trimmed(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != d + 1)
      throw DataError(origin + ": row " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size()) + " fields, expected " + std::to_string(d + 1));
    dates.push_back(trimmed(fields[0]));
    std::vector<double> row(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
      double v;
      if (!parse_double(fields[static_cast<std::size_t>(j + 1)], v))
        throw DataError(origin + ": row " + std::to_string(line_no) + ", column " + panel.assets[static_cast<std::size_t>(j)] +
                        ": missing or malformed value");
      if (!(v > 0.0))
        throw DataError(origin + ": row " + std::to_string(line_no) + ", column " + panel.assets[static_cast<std::size_t>(j)] +
                        ": nonpositive price");
      row[static_cast<std::size_t>(j)] = v;
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) throw DataError(origin + ": need at least 2 data rows");

  // Numeric first column becomes the time axis; otherwise dates must be
  // strictly increasing strings (ISO dates sort correctly) and the axis is
  // the row count in days.
  bool numeric_dates = true;
  std::vector<double> numeric(dates.size());
  for (std::size_t k = 0; k < dates.size(); ++k)
    if (!parse_double(dates[k], numeric[k])) {
      numeric_dates = false;
      break;
    }
  panel.dates = dates;
  panel.times.resize(dates.size());
  if (numeric_dates) {
    panel.times = numeric;
  } else {
    for (std::size_t k = 0; k < dates.size(); ++k) panel.times[k] = static_cast<double>(k);
    for (std::size_t k = 0; k + 1 < dates.size(); ++k) {
      if (dates[k] == dates[k + 1])
        throw DataError(origin + ": duplicate date " + dates[k] + " at row " + std::to_string(k + 2));
      if (!(dates[k] < dates[k + 1]))
        throw DataError(origin + ": dates not increasing at row " + std::to_string(k + 2));
    }
  }

  panel.prices.resize(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (int j = 0; j < d; ++j) panel.prices(static_cast<Eigen::Index>(k), j) = rows[k][static_cast<std::size_t>(j)];

  panel.validate();
  return panel;
}

MarketPanel load_prices_csv_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);
  return load_prices_csv(f, path);
}

void write_prices_csv(std::ostream& os, const MarketPanel& panel) {
  os << "date";
  for (const auto& a : panel.assets) os << ',' << a;
  os << '\n';
  char buf[40];
  for (int k = 0; k < panel.samples(); ++k) {
    os << panel.dates[static_cast<std::size_t>(k)];
    for (int j = 0; j < panel.dim(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", panel.prices(k, j));
      os << ',' << buf;
    }
    os << '\n';
  }
}

Universe Universe::all(int d) {
  Universe u;
  u.indices.resize(static_cast<std::size_t>(d));
  std::iota(u.indices.begin(), u.indices.end(), 0);
  return u;
}

Universe Universe::of(std::vector<int> idx, int d) {
  if (idx.empty()) throw DataError("universe must be nonempty");
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  for (int i : idx)
    if (i < 0 || i >= d) throw DataError("universe index out of range: " + std::to_string(i));
  Universe u;
  u.indices = std::move(idx);
  return u;
}

WeightPanel market_weights(const MarketPanel& panel, const Universe& universe) {
  const int m = universe.size();
  WeightPanel out;
  out.weights.resize(panel.samples(), m);
  for (int k = 0; k < panel.samples(); ++k) {
    double total = 0.0;
    for (int j = 0; j < m; ++j) total += panel.prices(k, universe.indices[static_cast<std::size_t>(j)]);
    for (int j = 0; j < m; ++j)
      out.weights(k, j) = panel.prices(k, universe.indices[static_cast<std::size_t>(j)]) / total;
  }
  return out;
}

WeightPanel rank_weights(const WeightPanel& raw) {
  if (raw.ranked) throw DataError("rank_weights: input already ranked");
  const int m = raw.dim();
  WeightPanel out;
  out.ranked = true;
  out.weights.resize(raw.samples(), m);
  out.rank_to_asset.resize(static_cast<std::size_t>(raw.samples()));
  std::vector<int> order(static_cast<std::size_t>(m));
  for (int k = 0; k < raw.samples(); ++k) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (raw.weights(k, a) != raw.weights(k, b)) return raw.weights(k, a) > raw.weights(k, b);
      return a < b;  // ties: smaller label gets the better rank
    });
    for (int r = 0; r < m; ++r) out.weights(k, r) = raw.weights(k, order[static_cast<std::size_t>(r)]);
    out.rank_to_asset[static_cast<std::size_t>(k)] = order;
  }
  return out;
}

std::vector<Eigen::MatrixXd> covariation_increments(const WeightPanel& weights) {
  if (weights.samples() < 2) throw DataError("covariation_increments: need at least 2 rows");
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(weights.samples() - 1));
  for (int k = 0; k + 1 < weights.samples(); ++k) {
    const Eigen::VectorXd d = (weights.weights.row(k + 1) - weights.weights.row(k)).transpose();
    out.push_back(d * d.transpose());
  }
  return out;
}

void write_weights_csv(std::ostream& os, const std::vector<double>& times, const WeightPanel& panel,
                       const std::vector<std::string>& column_names) {
  os << "time";
  for (int j = 0; j < panel.dim(); ++j) {
    if (j < static_cast<int>(column_names.size()))
      os << ',' << column_names[static_cast<std::size_t>(j)];
    else
      os << ",w" << j;
  }
  os << '\n';
  char buf[40];
  for (int k = 0; k < panel.samples(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.17g", times.at(static_cast<std::size_t>(k)));
    os << buf;
    for (int j = 0; j < panel.dim(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", panel.weights(k, j));
      os << ',' << buf;
    }
    os << '\n';
  }
}

}  // namespace sigfolio
