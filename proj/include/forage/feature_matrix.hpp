#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "forage/matrix.hpp"
#include "forage/time.hpp"

namespace forage {

/// Column layout of the feature vector (feature IDs 0-34).
namespace col {
inline constexpr std::size_t kBias = 0;
inline constexpr std::size_t kSinceEating = 1;
inline constexpr std::size_t kSincePurchasing = 2;
inline constexpr std::size_t kDistFoodBeverage = 3;
inline constexpr std::size_t kDistHealthCare = 4;
inline constexpr std::size_t kDistGasoline = 5;
inline constexpr std::size_t kDistDrinking = 6;
inline constexpr std::size_t kDistEating = 7;
inline constexpr std::size_t kSinceSedentary = 8;
inline constexpr std::size_t kSincePa = 9;
inline constexpr std::size_t kSinceMvpa = 10;
inline constexpr std::size_t kActivity = 11;
inline constexpr std::size_t kAxis2 = 12;
inline constexpr std::size_t kAxis3 = 13;
inline constexpr std::size_t kGpsDistance = 14;
inline constexpr std::size_t kGpsSpeed = 15;
inline constexpr std::size_t kVectorMag = 16;
inline constexpr std::size_t kLux = 17;
inline constexpr std::size_t kWearing = 18;
inline constexpr std::size_t kInHome = 19;
inline constexpr std::size_t kTimePattern = 20;
inline constexpr std::size_t kMonday = 21;      // 21..27 Monday..Sunday
inline constexpr std::size_t kTimeRange0 = 28;  // 28..33 six clock ranges
inline constexpr std::size_t kNumericTime = 34;
}  // namespace col

inline constexpr std::size_t kFeatureCount = 35;
inline constexpr std::size_t kLrFeatureCount = 34;

std::string_view feature_name(std::size_t id);

/// N x 35 feature rows with aligned labels, participant groups and minutes.
/// `groups[i]` indexes into `participants`.
struct FeatureMatrix {
  Matrix values;
  std::vector<std::uint8_t> labels;
  std::vector<std::uint32_t> groups;
  std::vector<std::string> participants;
  std::vector<Minute> timestamps;

  std::size_t rows() const { return values.rows(); }
  std::size_t positives() const;

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

/// Checks every layout invariant (bias, one-hot sums, binary flags, clock
/// range, finiteness). Throws DataError naming the first violation.
void validate_feature_matrix(const FeatureMatrix& m);

/// The 34-column view used by logistic regression: column 34 removed.
Matrix lr_view(const Matrix& values);

/// Labels as -1/+1.
std::vector<int> signed_labels(std::span<const std::uint8_t> labels);

/// CSV with header `participant_id,timestamp,label,f0..f34`.
void write_feature_csv(const FeatureMatrix& m, std::ostream& out);

}  // namespace forage
