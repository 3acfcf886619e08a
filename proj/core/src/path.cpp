#include "sigfolio/path.hpp"

#include <cmath>
#include <stdexcept>

#include "sigfolio/common.hpp"

namespace sigfolio {

DiscretePath::DiscretePath(std::vector<double> t, Eigen::MatrixXd v)
    : times(std::move(t)), values(std::move(v)) {
  if (times.size() < 2) throw DataError("DiscretePath: need at least 2 samples");
  if (static_cast<Eigen::Index>(times.size()) != values.rows())
    throw DataError("DiscretePath: times/values row mismatch");
  if (values.cols() < 1) throw DataError("DiscretePath: need at least 1 component");
  for (std::size_t i = 0; i + 1 < times.size(); ++i)
    if (!(times[i] < times[i + 1])) throw DataError("DiscretePath: times must be strictly increasing");
  if (!values.allFinite()) throw DataError("DiscretePath: values must be finite");
}

DiscretePath DiscretePath::slice(int first, int last) const {
  if (first < 0 || last >= samples() || first >= last)
    throw std::out_of_range("DiscretePath::slice: bad range");
  std::vector<double> t(times.begin() + first, times.begin() + last + 1);
  return DiscretePath(std::move(t), values.middleRows(first, last - first + 1));
}

DiscretePath DiscretePath::components(const std::vector<int>& cols) const {
  Eigen::MatrixXd v(values.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] < 0 || cols[j] >= dim()) throw std::out_of_range("DiscretePath::components");
    v.col(static_cast<Eigen::Index>(j)) = values.col(cols[j]);
  }
  return DiscretePath(times, std::move(v));
}

DiscretePath time_augment(const DiscretePath& path, double horizon) {
  if (!(horizon > 0.0)) throw DataError("time_augment: horizon must be positive");
  Eigen::MatrixXd v(path.samples(), path.dim() + 1);
  for (int k = 0; k < path.samples(); ++k) v(k, 0) = path.times[static_cast<std::size_t>(k)] / horizon;
  v.rightCols(path.dim()) = path.values;
  return DiscretePath(path.times, std::move(v));
}

}  // namespace sigfolio
