#include "forage/feature_matrix.hpp"

#include <cmath>
#include <ostream>

#include "forage/cohort.hpp"
#include "forage/error.hpp"

namespace forage {

std::string_view feature_name(std::size_t id) {
  static constexpr std::array<std::string_view, kFeatureCount> names{
      "bias",
      "time since last eating",
      "time since last food purchasing",
      "distance from nearest FoodBeverage stores",
      "distance from nearest Health Care places",
      "distance from nearest Gasoline Station",
      "distance from nearest Drinks places",
      "distance from nearest Eating places",
      "time since last stationary activity",
      "time since last physical activity",
      "time since last moderate or vigorous activity",
      "activity",
      "axis2",
      "axis3",
      "distance",
      "speed",
      "vectorMag",
      "lux",
      "wearing",
      "eat at home",
      "time pattern",
      "Monday",
      "Tuesday",
      "Wednesday",
      "Thursday",
      "Friday",
      "Saturday",
      "Sunday",
      "0am-6am",
      "6am-10am",
      "10am-14pm",
      "14pm-17pm",
      "17pm-20pm",
      "20pm-23:59pm",
      "time",
  };
  return names.at(id);
}

std::size_t FeatureMatrix::positives() const {
  std::size_t n = 0;
  for (auto l : labels) n += l;
  return n;
}

void validate_feature_matrix(const FeatureMatrix& m) {
  const auto n = m.values.rows();
  if (n > 0 && m.values.cols() != kFeatureCount) {
    throw DataError("feature matrix has " + std::to_string(m.values.cols()) + " columns, expected 35");
  }
  if (m.labels.size() != n || m.groups.size() != n || m.timestamps.size() != n) {
    throw DataError("feature matrix side vectors are not aligned with its rows");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = m.values.row(i);
    auto fail = [&](const std::string& what) {
      throw DataError("feature matrix row " + std::to_string(i) + ": " + what);
    };
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
      if (!std::isfinite(r[c])) fail("non-finite value in column " + std::to_string(c));
    }
    if (r[col::kBias] != 1.0) fail("bias column is not 1");
    double day_sum = 0.0;
    for (std::size_t c = 0; c < 7; ++c) day_sum += r[col::kMonday + c];
    if (day_sum != 1.0) fail("weekday one-hot does not sum to 1");
    double range_sum = 0.0;
    for (std::size_t c = 0; c < 6; ++c) range_sum += r[col::kTimeRange0 + c];
    if (range_sum != 1.0) fail("time-range one-hot does not sum to 1");
    for (auto c : {col::kWearing, col::kInHome}) {
      if (r[c] != 0.0 && r[c] != 1.0) fail("column " + std::to_string(c) + " is not binary");
    }
    if (r[col::kNumericTime] < 0.0 || r[col::kNumericTime] >= 24.0) fail("numeric time out of [0, 24)");
    if (m.groups[i] >= m.participants.size()) fail("group index out of range");
  }
}

Matrix lr_view(const Matrix& values) {
  const std::size_t width = values.cols() == 0 ? 0 : values.cols() - 1;
  Matrix out(values.rows(), width);
  for (std::size_t i = 0; i < values.rows(); ++i) {
    const auto src = values.row(i);
    std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(width), out.row(i).begin());
  }
  return out;
}

std::vector<int> signed_labels(std::span<const std::uint8_t> labels) {
  std::vector<int> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] ? 1 : -1;
  return y;
}

void write_feature_csv(const FeatureMatrix& m, std::ostream& out) {
  out << "participant_id,timestamp,label";
  for (std::size_t c = 0; c < kFeatureCount; ++c) out << ",f" << c;
  out << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out << m.participants[m.groups[i]] << ',' << format_timestamp(m.timestamps[i]) << ','
        << static_cast<int>(m.labels[i]);
    for (double v : m.values.row(i)) out << ',' << format_double(v);
    out << '\n';
  }
}

}  // namespace forage
