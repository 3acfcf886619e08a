#pragma once

#include <vector>

#include "sigfolio/words.hpp"

namespace sigfolio {

// Element of the truncated tensor algebra T^N(R^n), stored dense per level:
// level k holds n^k coefficients indexed by words of length k in lex order.
// Values are immutable in spirit: all operations return new tensors, so
// sharing across threads is safe.
class TruncatedTensor {
 public:
  TruncatedTensor(int alphabet, int level);

  // The unit 1 = (1, 0, 0, ...).
  static TruncatedTensor unit(int alphabet, int level);

  int alphabet() const { return alphabet_; }
  int level() const { return level_; }

  const std::vector<double>& level_data(int k) const { return levels_[static_cast<std::size_t>(k)]; }
  std::vector<double>& level_data(int k) { return levels_[static_cast<std::size_t>(k)]; }

  double scalar() const { return levels_[0][0]; }

  double coeff(const Word& w) const;
  void set_coeff(const Word& w, double value);

  TruncatedTensor& operator+=(const TruncatedTensor& o);
  TruncatedTensor& operator-=(const TruncatedTensor& o);
  TruncatedTensor& operator*=(double s);

  // Flat coefficient vector in global (length, lex) word order, empty word first.
  std::vector<double> flatten() const;

 private:
  int alphabet_;
  int level_;
  std::vector<std::vector<double>> levels_;
};

// Truncated tensor product: c_k = sum_{j=0}^{k} a_j ⊗ b_{k-j}.
TruncatedTensor tensor_mul(const TruncatedTensor& a, const TruncatedTensor& b);

// exp: T_0^N -> T_1^N. Requires a_0 = 0; the series terminates at level N.
TruncatedTensor tensor_exp(const TruncatedTensor& a);

// Group inverse of g with g_0 = 1: g^{-1} = sum_{k>=0} (1 - g)^{⊗k}.
TruncatedTensor group_inverse(const TruncatedTensor& g);

// max_k ||a_k - b_k||_inf, for tests and convergence checks.
double max_abs_diff(const TruncatedTensor& a, const TruncatedTensor& b);

}  // namespace sigfolio
