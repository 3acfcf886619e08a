#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "sigfolio/path.hpp"
#include "sigfolio/tensor.hpp"

namespace sigfolio {

// Signatures of the piecewise-linear interpolant of a sampled path, built by
// Chen's identity: g_{k+1} = g_k ⊗ exp(x_{k+1} - x_k). g_k is the signature
// of the path restricted to [t_0, t_k]; every g_k is a group element and
// g_0 = 1. This is the Stratonovich-signature estimator for sampled
// semimartingales, and the shuffle identity holds exactly for it.
class SignatureStream {
 public:
  SignatureStream(const DiscretePath& path, int level);

  int level() const { return level_; }
  int alphabet() const { return alphabet_; }
  std::size_t size() const { return sigs_.size(); }
  const TruncatedTensor& at(std::size_t k) const { return sigs_.at(k); }
  const TruncatedTensor& final() const { return sigs_.back(); }

  // g_j^{-1} ⊗ g_k: signature of the sub-path between samples j and k.
  TruncatedTensor increment(std::size_t j, std::size_t k) const;

 private:
  int alphabet_;
  int level_;
  std::vector<TruncatedTensor> sigs_;
};

SignatureStream path_signature(const DiscretePath& path, int level);

enum class FeatureFamily { full_signature, jl, randomized };

std::string feature_family_name(FeatureFamily f);
FeatureFamily feature_family_from_name(const std::string& s);

// times x features evaluation of one feature-map family along one
// trajectory, with enough provenance to rebuild the same random features.
struct FeatureMatrix {
  Eigen::MatrixXd values;  // samples x P
  FeatureFamily family = FeatureFamily::full_signature;
  std::vector<std::string> labels;
  std::uint64_t seed = 0;
  int level = 0;
  int proj_dim = 0;

  int features() const { return static_cast<int>(values.cols()); }
  int samples() const { return static_cast<int>(values.rows()); }
};

// Full truncated-signature features: one column per word of length <= level
// in (length, lex) order; the empty-word column is identically 1.
FeatureMatrix signature_features(const DiscretePath& path, int level);

void write_features_csv(std::ostream& os, const std::vector<double>& times, const FeatureMatrix& fm);

}  // namespace sigfolio
