#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace forage {

struct Confusion {
  std::size_t tp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
};

/// Labels are 0/1. Lengths must match.
Confusion confusion(std::span<const std::uint8_t> y_true, std::span<const std::uint8_t> y_pred);

/// Mean of the recall of both classes: (TP/(TP+FN) + TN/(TN+FP)) / 2.
/// Throws DataError when y_true lacks either class or lengths differ.
double balanced_accuracy(std::span<const std::uint8_t> y_true, std::span<const std::uint8_t> y_pred);

}  // namespace forage
