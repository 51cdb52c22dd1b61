#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "forage/cohort.hpp"
#include "forage/features.hpp"

namespace forage {

/// Decision rule the generator plants. Eating: within `outlet_radius_m` of
/// an Eating outlet and within `meal_time_pattern_max` minutes of a meal
/// midpoint. Purchasing: within `outlet_radius_m` of a FoodBeverage store.
struct SynthRule {
  double outlet_radius_m = 30.0;
  double meal_time_pattern_max = 70.0;
};

/// The planted rule applied to one 35-column feature row.
bool planted_rule(const SynthRule& rule, Problem problem, std::span<const double> row);

struct SynthConfig {
  std::size_t n_participants = 81;
  std::size_t days = 7;
  std::size_t minutes_per_day = 840;  // 03:00-04:00 plus a wake block from 07:00
  std::string start_date = "2023-03-06";
  BoundingBox bbox{32.6, 33.1, -117.2, -116.7};
  std::array<std::size_t, kOutletCategoryCount> outlet_counts{120, 80, 80, 60, 200};
  double meal_probability = 0.55;       // per meal window per day
  double confuser_probability = 0.6;    // per non-meal visit slot per day
  double purchase_probability = 0.35;   // per day
  double away_night_probability = 0.1;
  double missing_gps_fraction = 0.002;
  double outlier_fraction = 0.002;
  double gps_noise_m = 8.0;
  double home_jitter_m = 15.0;
  std::uint64_t seed = 7;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

struct SynthData {
  std::string records_csv;
  std::string events_csv;
  std::string outlets_csv;
  nlohmann::ordered_json ground_truth;
};

SynthData generate(const SynthConfig& config);

/// Writes records.csv, events.csv, outlets.csv and ground_truth.json.
std::vector<std::filesystem::path> write_synth(const SynthData& data, const std::filesystem::path& dir);

}  // namespace forage
