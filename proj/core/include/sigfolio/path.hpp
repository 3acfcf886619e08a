#pragma once

#include <Eigen/Dense>
#include <vector>

namespace sigfolio {

// A sampled trajectory: strictly increasing times and a (samples x dim)
// value matrix. Immutable after construction.
struct DiscretePath {
  std::vector<double> times;
  Eigen::MatrixXd values;

  DiscretePath(std::vector<double> t, Eigen::MatrixXd v);

  int dim() const { return static_cast<int>(values.cols()); }
  int samples() const { return static_cast<int>(values.rows()); }

  // Sub-path over sample indices [first, last] (inclusive).
  DiscretePath slice(int first, int last) const;
  // Sub-path keeping only the given (0-based) components.
  DiscretePath components(const std::vector<int>& cols) const;
};

// Prepends the time coordinate phi(t) = t / horizon as component 1; output
// dimension is dim()+1.
DiscretePath time_augment(const DiscretePath& path, double horizon);

}  // namespace sigfolio
