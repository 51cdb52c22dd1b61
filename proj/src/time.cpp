#include "forage/time.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <cstdio>

#include "forage/error.hpp"

namespace forage {
namespace {

namespace chr = std::chrono;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

int parse_fixed(std::string_view text, std::size_t pos, std::size_t len, std::string_view whole) {
  int value = 0;
  if (pos + len > text.size()) throw DataError("malformed timestamp '" + std::string(whole) + "'");
  auto first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, value);
  if (ec != std::errc{} || ptr != first + len) {
    throw DataError("malformed timestamp '" + std::string(whole) + "'");
  }
  return value;
}

}  // namespace

Minute make_minute(int year, unsigned month, unsigned day, int hour, int minute) {
  chr::year_month_day ymd{chr::year{year}, chr::month{month}, chr::day{day}};
  if (!ymd.ok()) throw DataError("invalid calendar date");
  if (hour < 0 || hour > 23 || minute < 0 || minute > 59) throw DataError("invalid clock time");
  const auto days = chr::sys_days{ymd}.time_since_epoch().count();
  return {static_cast<std::int64_t>(days) * kMinutesPerDay + hour * 60 + minute};
}

Minute parse_timestamp(std::string_view text) {
  // YYYY-MM-DDTHH:MM[:SS]
  if (text.size() != 16 && text.size() != 19) {
    throw DataError("malformed timestamp '" + std::string(text) + "'");
  }
  if (text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') || text[13] != ':') {
    throw DataError("malformed timestamp '" + std::string(text) + "'");
  }
  const int year = parse_fixed(text, 0, 4, text);
  const int month = parse_fixed(text, 5, 2, text);
  const int day = parse_fixed(text, 8, 2, text);
  const int hour = parse_fixed(text, 11, 2, text);
  const int minute = parse_fixed(text, 14, 2, text);
  if (text.size() == 19) {
    if (text[16] != ':') throw DataError("malformed timestamp '" + std::string(text) + "'");
    if (parse_fixed(text, 17, 2, text) != 0) {
      throw DataError("timestamp '" + std::string(text) + "' is not on a minute boundary");
    }
  }
  try {
    return make_minute(year, static_cast<unsigned>(month), static_cast<unsigned>(day), hour, minute);
  } catch (const DataError&) {
    throw DataError("invalid timestamp '" + std::string(text) + "'");
  }
}

std::int64_t day_number(Minute m) { return floor_div(m.value, kMinutesPerDay); }

int minute_of_day(Minute m) {
  return static_cast<int>(m.value - day_number(m) * kMinutesPerDay);
}

int weekday_index(Minute m) {
  // 1970-01-01 was a Thursday (index 3).
  return static_cast<int>(((day_number(m) + 3) % 7 + 7) % 7);
}

std::string format_timestamp(Minute m) {
  const chr::sys_days days{chr::days{day_number(m)}};
  const chr::year_month_day ymd{days};
  const int mod = minute_of_day(m);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), mod / 60,
                mod % 60);
  return buf;
}

std::string_view weekday_name(int index) {
  static constexpr std::array<std::string_view, 7> names{"Monday",   "Tuesday", "Wednesday",
                                                         "Thursday", "Friday",  "Saturday",
                                                         "Sunday"};
  return names.at(static_cast<std::size_t>(index));
}

int parse_clock(std::string_view text) {
  if (text.size() != 5 || text[2] != ':') throw DataError("malformed clock time '" + std::string(text) + "'");
  const int hour = parse_fixed(text, 0, 2, text);
  const int minute = parse_fixed(text, 3, 2, text);
  if (hour > 24 || minute > 59 || (hour == 24 && minute != 0)) {
    throw DataError("malformed clock time '" + std::string(text) + "'");
  }
  return hour * 60 + minute;
}

std::string format_clock(int minute_of_day) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d:%02d", minute_of_day / 60, minute_of_day % 60);
  return buf;
}

}  // namespace forage
