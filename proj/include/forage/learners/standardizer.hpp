#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "forage/matrix.hpp"

namespace forage {

/// Per-column z-scoring captured at fit time. Columns whose standard
/// deviation is (numerically) zero use scale 1 so nothing divides by zero.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  /// `keep_first_column` leaves column 0 untouched (the bias column for
  /// logistic regression).
  static Standardizer fit(const Matrix& x, bool keep_first_column);
  static Standardizer identity(std::size_t cols);

  void apply(std::span<const double> in, std::span<double> out) const;
  Matrix transform(const Matrix& x) const;

  friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

}  // namespace forage
