#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace forage {

/// A naive local wall-clock minute, counted from 1970-01-01T00:00.
/// No time zone or DST arithmetic is ever applied.
struct Minute {
  std::int64_t value = 0;

  friend constexpr auto operator<=>(Minute, Minute) = default;
  constexpr Minute operator+(std::int64_t minutes) const { return {value + minutes}; }
  constexpr Minute operator-(std::int64_t minutes) const { return {value - minutes}; }
  constexpr std::int64_t operator-(Minute other) const { return value - other.value; }
};

inline constexpr int kMinutesPerDay = 1440;

/// Parses `YYYY-MM-DDTHH:MM` (optionally followed by `:00`). A space is accepted
/// in place of `T`. Non-zero seconds and impossible dates throw DataError.
Minute parse_timestamp(std::string_view text);

/// Formats as `YYYY-MM-DDTHH:MM`.
std::string format_timestamp(Minute m);

Minute make_minute(int year, unsigned month, unsigned day, int hour, int minute);

/// Minutes past local midnight, in [0, 1440).
int minute_of_day(Minute m);

/// 0 = Monday ... 6 = Sunday.
int weekday_index(Minute m);

/// Day number since the epoch (floor division).
std::int64_t day_number(Minute m);

std::string_view weekday_name(int index);

/// Parses a clock time `HH:MM` into minutes past midnight; `24:00` is allowed.
int parse_clock(std::string_view text);
std::string format_clock(int minute_of_day);

}  // namespace forage
