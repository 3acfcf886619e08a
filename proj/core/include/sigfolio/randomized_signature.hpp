#pragma once

#include <cstdint>
#include <string>

#include "sigfolio/signature.hpp"

namespace sigfolio {

enum class Activation { tanh_fn, sigmoid, identity };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& s);

struct RandomizedSigConfig {
  int proj_dim = 0;
  std::uint64_t seed = 0;
  Activation activation = Activation::tanh_fn;
  // Standard deviation of the bias vectors b^(i); 0 disables the bias.
  double bias_std = 1.0;
};

// Reservoir state of the random controlled system
//   dS = sum_i sigma(b^(i) + A^(i) S) ∘ dX^i,   S_0 = (1, 0, ..., 0),
// discretized with an explicit Heun (midpoint-predictor) step per path
// increment. A^(i) entries are i.i.d. N(0, 1/P), b^(i) i.i.d.
// N(0, bias_std^2), drawn once from the seed.
FeatureMatrix randomized_signature(const DiscretePath& path, const RandomizedSigConfig& cfg);

}  // namespace sigfolio
