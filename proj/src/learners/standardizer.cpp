#include "forage/learners/standardizer.hpp"

#include <algorithm>
#include <cmath>

namespace forage {

Standardizer Standardizer::fit(const Matrix& x, bool keep_first_column) {
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  Standardizer s = identity(p);
  if (n == 0) return s;
  for (std::size_t c = keep_first_column ? 1 : 0; c < p; ++c) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += x(i, c);
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = x(i, c) - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    s.mean[c] = mean;
    s.scale[c] = sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 1.0;
  }
  return s;
}

Standardizer Standardizer::identity(std::size_t cols) {
  Standardizer s;
  s.mean.assign(cols, 0.0);
  s.scale.assign(cols, 1.0);
  return s;
}

void Standardizer::apply(std::span<const double> in, std::span<double> out) const {
  for (std::size_t c = 0; c < in.size(); ++c) out[c] = (in[c] - mean[c]) / scale[c];
}

Matrix Standardizer::transform(const Matrix& x) const {
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) apply(x.row(i), out.row(i));
  return out;
}

}  // namespace forage
