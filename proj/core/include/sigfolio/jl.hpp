#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "sigfolio/signature.hpp"

namespace sigfolio {

// Column of the Johnson-Lindenstrauss matrix for one global word index,
// entries i.i.d. N(0, 1/P). Keyed by (seed, word index) so any evaluation
// order and any batching produce identical projections; storing (seed, n, N,
// P) with a model is enough to rebuild the whole matrix.
Eigen::VectorXd jl_column(std::uint64_t seed, std::size_t word_index, int proj_dim);

// Full P x L projection matrix, L = number of words up to `level` (constant
// included), columns in (length, lex) word order.
Eigen::MatrixXd jl_projection_matrix(int alphabet, int level, int proj_dim, std::uint64_t seed);

// JL-projected signature features: A · vec(signature), evaluated with the
// memory-efficient batch loop over component combinations. A sub-word from
// combination c is kept only when its distinct-letter count equals |c|, so
// each word of the full alphabet is accumulated exactly once.
FeatureMatrix jl_signature(const DiscretePath& path, int level, int proj_dim, std::uint64_t seed);

// Direct route: compute the full signature, then project with an explicit
// matrix. Used as the oracle for the batch loop and as the identity hook.
FeatureMatrix jl_signature_with_matrix(const DiscretePath& path, int level, const Eigen::MatrixXd& projection);

}  // namespace sigfolio
