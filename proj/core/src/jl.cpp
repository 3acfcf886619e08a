#include "sigfolio/jl.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

#include "sigfolio/common.hpp"

namespace sigfolio {

namespace {
constexpr std::uint64_t kJlStream = 0x4a4c7369ULL;  // "JLsi"

// Next size-l subset of {0..n-1} in lexicographic order; false when done.
bool next_combination(std::vector<int>& c, int n) {
  const int l = static_cast<int>(c.size());
  for (int i = l - 1; i >= 0; --i) {
    if (c[static_cast<std::size_t>(i)] < n - (l - i)) {
      ++c[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < l; ++j) c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] + 1;
      return true;
    }
  }
  return false;
}

int distinct_letters(const Word& w) {
  std::set<int> s(w.letters.begin(), w.letters.end());
  return static_cast<int>(s.size());
}

}  // namespace

Eigen::VectorXd jl_column(std::uint64_t seed, std::size_t word_index, int proj_dim) {
  if (proj_dim < 1) throw std::invalid_argument("jl_column: proj_dim must be >= 1");
  std::mt19937_64 rng(mix_seed(seed, kJlStream, word_index));
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(proj_dim));
  Eigen::VectorXd col(proj_dim);
  for (int p = 0; p < proj_dim; ++p) col[p] = normal(rng) * scale;
  return col;
}

Eigen::MatrixXd jl_projection_matrix(int alphabet, int level, int proj_dim, std::uint64_t seed) {
  const std::size_t n_words = words_up_to_level(alphabet, level);
  Eigen::MatrixXd A(proj_dim, static_cast<Eigen::Index>(n_words));
  for (std::size_t j = 0; j < n_words; ++j) A.col(static_cast<Eigen::Index>(j)) = jl_column(seed, j, proj_dim);
  return A;
}

FeatureMatrix jl_signature(const DiscretePath& path, int level, int proj_dim, std::uint64_t seed) {
  if (proj_dim < 1) throw std::invalid_argument("jl_signature: proj_dim must be >= 1");
  const int n = path.dim();
  const int T = path.samples();

  FeatureMatrix fm;
  fm.family = FeatureFamily::jl;
  fm.level = level;
  fm.proj_dim = proj_dim;
  fm.seed = seed;
  fm.values = Eigen::MatrixXd::Zero(T, proj_dim);

  // Empty word: constant feature 1, projected through its own column.
  fm.values.rowwise() += jl_column(seed, 0, proj_dim).transpose();

  for (int l = 1; l <= std::min(level, n); ++l) {
    std::vector<int> combo(static_cast<std::size_t>(l));
    for (int i = 0; i < l; ++i) combo[static_cast<std::size_t>(i)] = i;
    do {
      const DiscretePath sub = path.components(combo);
      SignatureStream stream(sub, level);
      // Words of the sub-alphabet that use all |combo| components; each maps
      // to exactly one word of the full alphabet.
      std::vector<Word> kept;
      std::vector<std::size_t> global_index;
      for (const Word& w : enumerate_words(l, level)) {
        if (w.empty() || distinct_letters(w) != l) continue;
        Word full;
        full.letters.reserve(w.letters.size());
        for (int letter : w.letters) full.letters.push_back(combo[static_cast<std::size_t>(letter - 1)] + 1);
        kept.push_back(w);
        global_index.push_back(word_global_index(full, n));
      }
      if (kept.empty()) continue;

      Eigen::MatrixXd sig_block(T, static_cast<Eigen::Index>(kept.size()));
      for (int k = 0; k < T; ++k)
        for (std::size_t j = 0; j < kept.size(); ++j)
          sig_block(k, static_cast<Eigen::Index>(j)) = stream.at(static_cast<std::size_t>(k)).coeff(kept[j]);

      Eigen::MatrixXd proj_block(proj_dim, static_cast<Eigen::Index>(kept.size()));
      for (std::size_t j = 0; j < kept.size(); ++j)
        proj_block.col(static_cast<Eigen::Index>(j)) = jl_column(seed, global_index[j], proj_dim);

      fm.values.noalias() += sig_block * proj_block.transpose();
    } while (next_combination(combo, n));
  }

  for (int p = 0; p < proj_dim; ++p) fm.labels.push_back("jl_" + std::to_string(p));
  return fm;
}

FeatureMatrix jl_signature_with_matrix(const DiscretePath& path, int level, const Eigen::MatrixXd& projection) {
  const FeatureMatrix full = signature_features(path, level);
  if (projection.cols() != full.values.cols())
    throw std::invalid_argument("jl_signature_with_matrix: projection has wrong column count");
  FeatureMatrix fm;
  fm.family = FeatureFamily::jl;
  fm.level = level;
  fm.proj_dim = static_cast<int>(projection.rows());
  fm.values = full.values * projection.transpose();
  for (int p = 0; p < fm.proj_dim; ++p) fm.labels.push_back("jl_" + std::to_string(p));
  return fm;
}

}  // namespace sigfolio
