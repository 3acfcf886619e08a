#include "sigfolio/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace sigfolio {

TruncatedTensor::TruncatedTensor(int alphabet, int level) : alphabet_(alphabet), level_(level) {
  if (alphabet < 1) throw std::invalid_argument("TruncatedTensor: alphabet must be >= 1");
  if (level < 0) throw std::invalid_argument("TruncatedTensor: level must be >= 0");
  levels_.resize(static_cast<std::size_t>(level) + 1);
  for (int k = 0; k <= level; ++k) levels_[static_cast<std::size_t>(k)].assign(words_at_level(alphabet, k), 0.0);
}

TruncatedTensor TruncatedTensor::unit(int alphabet, int level) {
  TruncatedTensor t(alphabet, level);
  t.levels_[0][0] = 1.0;
  return t;
}

double TruncatedTensor::coeff(const Word& w) const {
  if (w.length() > level_) throw std::invalid_argument("coeff: word longer than truncation level");
  return levels_[static_cast<std::size_t>(w.length())][word_level_index(w, alphabet_)];
}

void TruncatedTensor::set_coeff(const Word& w, double value) {
  if (w.length() > level_) throw std::invalid_argument("set_coeff: word longer than truncation level");
  levels_[static_cast<std::size_t>(w.length())][word_level_index(w, alphabet_)] = value;
}

TruncatedTensor& TruncatedTensor::operator+=(const TruncatedTensor& o) {
  if (o.alphabet_ != alphabet_ || o.level_ != level_)
    throw std::invalid_argument("tensor +=: dimension mismatch");
  for (int k = 0; k <= level_; ++k) {
    auto& dst = levels_[static_cast<std::size_t>(k)];
    const auto& src = o.levels_[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
  return *this;
}

TruncatedTensor& TruncatedTensor::operator-=(const TruncatedTensor& o) {
  if (o.alphabet_ != alphabet_ || o.level_ != level_)
    throw std::invalid_argument("tensor -=: dimension mismatch");
  for (int k = 0; k <= level_; ++k) {
    auto& dst = levels_[static_cast<std::size_t>(k)];
    const auto& src = o.levels_[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= src[i];
  }
  return *this;
}

TruncatedTensor& TruncatedTensor::operator*=(double s) {
  for (auto& lvl : levels_)
    for (double& x : lvl) x *= s;
  return *this;
}

std::vector<double> TruncatedTensor::flatten() const {
  std::vector<double> out;
  out.reserve(words_up_to_level(alphabet_, level_));
  for (const auto& lvl : levels_) out.insert(out.end(), lvl.begin(), lvl.end());
  return out;
}

TruncatedTensor tensor_mul(const TruncatedTensor& a, const TruncatedTensor& b) {
  if (a.alphabet() != b.alphabet() || a.level() != b.level())
    throw std::invalid_argument("tensor_mul: dimension mismatch");
  const int N = a.level();
  TruncatedTensor c(a.alphabet(), N);
  for (int k = 0; k <= N; ++k) {
    auto& dst = c.level_data(k);
    for (int j = 0; j <= k; ++j) {
      const auto& left = a.level_data(j);
      const auto& right = b.level_data(k - j);
      // dst[u*|right| + v] += left[u] * right[v]: lex index of the
      // concatenated word factors through the level offsets.
      std::size_t pos = 0;
      for (double lu : left) {
        if (lu == 0.0) {
          pos += right.size();
          continue;
        }
        for (double rv : right) dst[pos++] += lu * rv;
      }
    }
  }
  return c;
}

TruncatedTensor tensor_exp(const TruncatedTensor& a) {
  if (a.scalar() != 0.0) throw std::invalid_argument("tensor_exp: level-0 entry must be 0");
  const int N = a.level();
  TruncatedTensor out = TruncatedTensor::unit(a.alphabet(), N);
  TruncatedTensor term = TruncatedTensor::unit(a.alphabet(), N);
  for (int k = 1; k <= N; ++k) {
    term = tensor_mul(term, a);
    term *= 1.0 / static_cast<double>(k);
    out += term;
  }
  return out;
}

TruncatedTensor group_inverse(const TruncatedTensor& g) {
  if (std::abs(g.scalar() - 1.0) > 1e-12)
    throw std::invalid_argument("group_inverse: level-0 entry must be 1");
  const int N = g.level();
  // u = 1 - g has zero scalar part, so the Neumann series stops at level N.
  TruncatedTensor u = TruncatedTensor::unit(g.alphabet(), N);
  u -= g;
  TruncatedTensor out = TruncatedTensor::unit(g.alphabet(), N);
  TruncatedTensor term = TruncatedTensor::unit(g.alphabet(), N);
  for (int k = 1; k <= N; ++k) {
    term = tensor_mul(term, u);
    out += term;
  }
  return out;
}

double max_abs_diff(const TruncatedTensor& a, const TruncatedTensor& b) {
  if (a.alphabet() != b.alphabet() || a.level() != b.level())
    throw std::invalid_argument("max_abs_diff: dimension mismatch");
  double m = 0.0;
  for (int k = 0; k <= a.level(); ++k) {
    const auto& la = a.level_data(k);
    const auto& lb = b.level_data(k);
    for (std::size_t i = 0; i < la.size(); ++i) m = std::max(m, std::abs(la[i] - lb[i]));
  }
  return m;
}

}  // namespace sigfolio
