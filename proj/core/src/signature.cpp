#include "sigfolio/signature.hpp"

#include <stdexcept>

#include "sigfolio/common.hpp"

namespace sigfolio {

namespace {

// Signature of a single straight segment with displacement v: exp(v) with
// level k equal to v^{⊗k}/k!, built level by level without a generic mul.
void segment_signature(const Eigen::VectorXd& v, TruncatedTensor& out) {
  const int n = static_cast<int>(v.size());
  const int N = out.level();
  out.level_data(0)[0] = 1.0;
  if (N == 0) return;
  auto& l1 = out.level_data(1);
  for (int i = 0; i < n; ++i) l1[static_cast<std::size_t>(i)] = v[i];
  for (int k = 2; k <= N; ++k) {
    const auto& prev = out.level_data(k - 1);
    auto& cur = out.level_data(k);
    const double inv_k = 1.0 / static_cast<double>(k);
    std::size_t pos = 0;
    for (double p : prev)
      for (int i = 0; i < n; ++i) cur[pos++] = p * v[i] * inv_k;
  }
}

}  // namespace

SignatureStream::SignatureStream(const DiscretePath& path, int level)
    : alphabet_(path.dim()), level_(level) {
  if (level < 1) throw std::invalid_argument("SignatureStream: level must be >= 1");
  sigs_.reserve(static_cast<std::size_t>(path.samples()));
  sigs_.push_back(TruncatedTensor::unit(alphabet_, level_));
  TruncatedTensor seg(alphabet_, level_);
  for (int k = 0; k + 1 < path.samples(); ++k) {
    Eigen::VectorXd dx = path.values.row(k + 1) - path.values.row(k);
    segment_signature(dx, seg);
    sigs_.push_back(tensor_mul(sigs_.back(), seg));
  }
}

TruncatedTensor SignatureStream::increment(std::size_t j, std::size_t k) const {
  if (j > k || k >= sigs_.size()) throw std::out_of_range("SignatureStream::increment: bad index");
  if (j == 0) return sigs_[k];
  return tensor_mul(group_inverse(sigs_[j]), sigs_[k]);
}

SignatureStream path_signature(const DiscretePath& path, int level) {
  return SignatureStream(path, level);
}

std::string feature_family_name(FeatureFamily f) {
  switch (f) {
    case FeatureFamily::full_signature: return "signature";
    case FeatureFamily::jl: return "jl";
    case FeatureFamily::randomized: return "randomized";
  }
  throw std::logic_error("feature_family_name");
}

FeatureFamily feature_family_from_name(const std::string& s) {
  if (s == "signature") return FeatureFamily::full_signature;
  if (s == "jl") return FeatureFamily::jl;
  if (s == "randomized") return FeatureFamily::randomized;
  throw ConfigError("unknown feature family: " + s);
}

FeatureMatrix signature_features(const DiscretePath& path, int level) {
  SignatureStream stream(path, level);
  const std::size_t n_words = words_up_to_level(path.dim(), level);
  FeatureMatrix fm;
  fm.family = FeatureFamily::full_signature;
  fm.level = level;
  fm.proj_dim = static_cast<int>(n_words);
  fm.values.resize(path.samples(), static_cast<Eigen::Index>(n_words));
  for (int k = 0; k < path.samples(); ++k) {
    const std::vector<double> flat = stream.at(static_cast<std::size_t>(k)).flatten();
    for (std::size_t j = 0; j < n_words; ++j) fm.values(k, static_cast<Eigen::Index>(j)) = flat[j];
  }
  for (const Word& w : enumerate_words(path.dim(), level)) fm.labels.push_back(word_label(w, path.dim()));
  return fm;
}

void write_features_csv(std::ostream& os, const std::vector<double>& times, const FeatureMatrix& fm) {
  os << "time";
  for (const auto& label : fm.labels) os << ',' << label;
  os << '\n';
  char buf[40];
  for (int k = 0; k < fm.samples(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.17g", times.at(static_cast<std::size_t>(k)));
    os << buf;
    for (int j = 0; j < fm.features(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", fm.values(k, j));
      os << ',' << buf;
    }
    os << '\n';
  }
}

}  // namespace sigfolio
