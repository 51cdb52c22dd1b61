#include "forage/metrics.hpp"

#include <string>

#include "forage/error.hpp"

namespace forage {

Confusion confusion(std::span<const std::uint8_t> y_true, std::span<const std::uint8_t> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw DataError("label length mismatch: " + std::to_string(y_true.size()) + " vs " +
                    std::to_string(y_pred.size()));
  }
  Confusion c;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i]) {
      y_pred[i] ? ++c.tp : ++c.fn;
    } else {
      y_pred[i] ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

double balanced_accuracy(std::span<const std::uint8_t> y_true, std::span<const std::uint8_t> y_pred) {
  if (y_true.empty()) throw DataError("balanced accuracy of an empty label vector");
  const auto c = confusion(y_true, y_pred);
  if (c.tp + c.fn == 0 || c.tn + c.fp == 0) {
    throw DataError("balanced accuracy needs both classes in y_true");
  }
  const double tpr = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  const double tnr = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
  return 0.5 * (tpr + tnr);
}

}  // namespace forage
