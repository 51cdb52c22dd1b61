#include "forage/cohort.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <unordered_map>

#include "csv_util.hpp"
#include "forage/error.hpp"

namespace forage {

bool valid_coordinates(const LatLon& p) {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 &&
         p.lon >= -180.0 && p.lon <= 180.0;
}

std::string_view to_string(EventType type) {
  switch (type) {
    case EventType::Eating: return "eating";
    case EventType::Purchasing: return "purchasing";
    case EventType::SedentaryBout: return "sedentary_bout";
    case EventType::PaBout: return "pa_bout";
    case EventType::MvpaBout: return "mvpa_bout";
  }
  return "?";
}

std::optional<EventType> parse_event_type(std::string_view text) {
  for (std::size_t i = 0; i < kEventTypeCount; ++i) {
    const auto t = static_cast<EventType>(i);
    if (to_string(t) == text) return t;
  }
  return std::nullopt;
}

void EventTimeline::add(EventType type, Minute m) {
  sets_[static_cast<std::size_t>(type)].push_back(m);
}

bool EventTimeline::contains(EventType type, Minute m) const {
  const auto& set = minutes(type);
  return std::binary_search(set.begin(), set.end(), m);
}

std::size_t EventTimeline::total() const {
  std::size_t n = 0;
  for (const auto& set : sets_) n += set.size();
  return n;
}

void EventTimeline::normalize() {
  for (auto& set : sets_) {
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
  }
}

const Participant* Cohort::find(std::string_view id) const {
  auto it = std::lower_bound(participants.begin(), participants.end(), id,
                             [](const Participant& p, std::string_view key) { return p.id < key; });
  if (it == participants.end() || it->id != id) return nullptr;
  return &*it;
}

std::size_t Cohort::record_count() const {
  std::size_t n = 0;
  for (const auto& p : participants) n += p.records.size();
  return n;
}

std::vector<std::string> Cohort::participant_ids() const {
  std::vector<std::string> ids;
  ids.reserve(participants.size());
  for (const auto& p : participants) ids.push_back(p.id);
  return ids;
}

int naics_code(OutletCategory c) {
  static constexpr int codes[] = {445, 446, 447, 7224, 7225};
  return codes[static_cast<std::size_t>(c)];
}

std::optional<OutletCategory> category_from_naics(int code) {
  for (std::size_t i = 0; i < kOutletCategoryCount; ++i) {
    const auto c = static_cast<OutletCategory>(i);
    if (naics_code(c) == code) return c;
  }
  return std::nullopt;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

namespace {

struct RawRow {
  Minute timestamp;
  std::optional<LatLon> position;
  MinuteRecord record;
  std::size_t line = 0;
};

double parse_non_negative(csv::LineReader& reader, std::string_view field, std::string_view name) {
  double v = 0.0;
  if (!csv::parse_double(field, v) || !std::isfinite(v)) {
    reader.fail("column '" + std::string(name) + "': not a number: '" + std::string(field) + "'");
  }
  if (v < 0.0) reader.fail("column '" + std::string(name) + "' must be >= 0");
  return v;
}

bool parse_bool(csv::LineReader& reader, std::string_view field) {
  if (field == "1" || field == "true" || field == "TRUE" || field == "True") return true;
  if (field == "0" || field == "false" || field == "FALSE" || field == "False") return false;
  reader.fail("column 'wearing': expected 0/1 or true/false, got '" + std::string(field) + "'");
}

}  // namespace

Cohort ingest_cohort(std::istream& records, std::istream& events, std::string_view records_name,
                     std::string_view events_name) {
  csv::LineReader reader(records, records_name);
  std::string line;
  if (!reader.next(line)) reader.fail("empty file, expected header");
  bool has_weekday_column = false;
  if (line == std::string(kRecordsHeader) + ",day_of_week") {
    has_weekday_column = true;
  } else if (line != kRecordsHeader) {
    reader.fail("unexpected header, expected '" + std::string(kRecordsHeader) + "'");
  }
  const std::size_t expected_fields = has_weekday_column ? 13 : 12;

  std::map<std::string, std::vector<RawRow>, std::less<>> rows;
  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != expected_fields) {
      reader.fail("expected " + std::to_string(expected_fields) + " fields, got " +
                  std::to_string(f.size()));
    }
    if (f[0].empty()) reader.fail("empty participant_id");
    RawRow row;
    row.line = reader.line_no();
    try {
      row.timestamp = parse_timestamp(f[1]);
    } catch (const DataError& e) {
      reader.fail(e.what());
    }
    if (f[2].empty() != f[3].empty()) reader.fail("lat and lon must both be present or both empty");
    if (!f[2].empty()) {
      LatLon p;
      if (!csv::parse_double(f[2], p.lat) || !csv::parse_double(f[3], p.lon)) {
        reader.fail("malformed coordinates");
      }
      if (!valid_coordinates(p)) {
        reader.fail("coordinates out of range (lat " + std::string(f[2]) + ", lon " +
                    std::string(f[3]) + ")");
      }
      row.position = p;
    }
    auto& r = row.record;
    r.timestamp = row.timestamp;
    r.gps_distance = parse_non_negative(reader, f[4], "gps_distance");
    r.gps_speed = parse_non_negative(reader, f[5], "gps_speed");
    r.activity = parse_non_negative(reader, f[6], "activity");
    r.axis2 = parse_non_negative(reader, f[7], "axis2");
    r.axis3 = parse_non_negative(reader, f[8], "axis3");
    r.vector_mag = parse_non_negative(reader, f[9], "vector_mag");
    r.lux = parse_non_negative(reader, f[10], "lux");
    r.wearing = parse_bool(reader, f[11]);
    r.day_of_week = weekday_index(row.timestamp);
    if (has_weekday_column) {
      const auto& given = f[12];
      bool ok = false;
      for (int d = 0; d < 7; ++d) {
        const auto full = weekday_name(d);
        if (given == full || given == full.substr(0, 3)) {
          ok = (d == r.day_of_week);
          if (!ok) reader.fail("day_of_week '" + std::string(given) + "' does not match timestamp");
        }
      }
      if (!ok) reader.fail("unknown day_of_week '" + std::string(given) + "'");
    }
    rows[std::string(f[0])].push_back(std::move(row));
  }

  Cohort cohort;
  // Minutes that existed but lacked GPS; events on them are dropped with the row.
  std::unordered_map<std::string, std::vector<Minute>> dropped;
  for (auto& [id, list] : rows) {
    std::stable_sort(list.begin(), list.end(),
                     [](const RawRow& a, const RawRow& b) { return a.timestamp < b.timestamp; });
    Participant p;
    p.id = id;
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (i > 0 && list[i].timestamp == list[i - 1].timestamp) {
        throw DataError(std::string(records_name) + ":" + std::to_string(list[i].line) +
                        ": duplicate minute " + format_timestamp(list[i].timestamp) +
                        " for participant '" + id + "'");
      }
      if (!list[i].position) {
        ++cohort.dropped_missing_gps;
        dropped[id].push_back(list[i].timestamp);
        continue;
      }
      list[i].record.position = *list[i].position;
      p.records.push_back(list[i].record);
    }
    if (!p.records.empty()) cohort.participants.push_back(std::move(p));
  }

  csv::LineReader ev(events, events_name);
  if (!ev.next(line)) ev.fail("empty file, expected header");
  if (line != kEventsHeader) ev.fail("unexpected header, expected '" + std::string(kEventsHeader) + "'");
  while (ev.next(line)) {
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 3) ev.fail("expected 3 fields, got " + std::to_string(f.size()));
    Minute m;
    try {
      m = parse_timestamp(f[1]);
    } catch (const DataError& e) {
      ev.fail(e.what());
    }
    const auto type = parse_event_type(f[2]);
    if (!type) ev.fail("unknown event_type '" + std::string(f[2]) + "'");

    auto it = std::lower_bound(
        cohort.participants.begin(), cohort.participants.end(), f[0],
        [](const Participant& p, std::string_view key) { return p.id < key; });
    const bool known = it != cohort.participants.end() && it->id == f[0];
    if (known) {
      auto rec = std::lower_bound(
          it->records.begin(), it->records.end(), m,
          [](const MinuteRecord& r, Minute key) { return r.timestamp < key; });
      if (rec != it->records.end() && rec->timestamp == m) {
        it->events.add(*type, m);
        continue;
      }
    }
    auto d = dropped.find(std::string(f[0]));
    if (d != dropped.end() && std::binary_search(d->second.begin(), d->second.end(), m)) continue;
    ev.fail("event for participant '" + std::string(f[0]) + "' at " + format_timestamp(m) +
            " has no matching minute record");
  }
  for (auto& p : cohort.participants) p.events.normalize();
  return cohort;
}

Cohort ingest_cohort(const std::filesystem::path& records_file,
                     const std::filesystem::path& events_file) {
  std::ifstream records(records_file);
  if (!records) throw DataError("cannot open records file '" + records_file.string() + "'");
  std::ifstream events(events_file);
  if (!events) throw DataError("cannot open events file '" + events_file.string() + "'");
  return ingest_cohort(records, events, records_file.filename().string(),
                       events_file.filename().string());
}

std::vector<Outlet> load_outlets(std::istream& in, std::string_view name) {
  csv::LineReader reader(in, name);
  std::string line;
  if (!reader.next(line)) reader.fail("empty file, expected header");
  if (line != kOutletsHeader) reader.fail("unexpected header, expected '" + std::string(kOutletsHeader) + "'");
  std::vector<Outlet> outlets;
  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 3) reader.fail("expected 3 fields, got " + std::to_string(f.size()));
    long long code = 0;
    if (!csv::parse_int(f[0], code)) reader.fail("malformed category '" + std::string(f[0]) + "'");
    const auto category = category_from_naics(static_cast<int>(code));
    if (!category) reader.fail("unknown outlet category " + std::string(f[0]));
    Outlet o;
    o.category = *category;
    if (!csv::parse_double(f[1], o.position.lat) || !csv::parse_double(f[2], o.position.lon)) {
      reader.fail("malformed coordinates");
    }
    if (!valid_coordinates(o.position)) reader.fail("coordinates out of range");
    outlets.push_back(o);
  }
  return outlets;
}

std::vector<Outlet> load_outlets(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open outlets file '" + file.string() + "'");
  return load_outlets(in, file.filename().string());
}

void write_records_csv(const Cohort& cohort, std::ostream& out) {
  out << kRecordsHeader << '\n';
  for (const auto& p : cohort.participants) {
    for (const auto& r : p.records) {
      out << p.id << ',' << format_timestamp(r.timestamp) << ',' << format_double(r.position.lat)
          << ',' << format_double(r.position.lon) << ',' << format_double(r.gps_distance) << ','
          << format_double(r.gps_speed) << ',' << format_double(r.activity) << ','
          << format_double(r.axis2) << ',' << format_double(r.axis3) << ','
          << format_double(r.vector_mag) << ',' << format_double(r.lux) << ','
          << (r.wearing ? '1' : '0') << '\n';
    }
  }
}

void write_events_csv(const Cohort& cohort, std::ostream& out) {
  out << kEventsHeader << '\n';
  for (const auto& p : cohort.participants) {
    for (std::size_t t = 0; t < kEventTypeCount; ++t) {
      const auto type = static_cast<EventType>(t);
      for (Minute m : p.events.minutes(type)) {
        out << p.id << ',' << format_timestamp(m) << ',' << to_string(type) << '\n';
      }
    }
  }
}

void write_outlets_csv(const std::vector<Outlet>& outlets, std::ostream& out) {
  out << kOutletsHeader << '\n';
  for (const auto& o : outlets) {
    out << naics_code(o.category) << ',' << format_double(o.position.lat) << ','
        << format_double(o.position.lon) << '\n';
  }
}

Cohort drop_out_of_bounds(const Cohort& cohort, const BoundingBox& bbox) {
  Cohort out;
  out.dropped_missing_gps = cohort.dropped_missing_gps;
  for (const auto& p : cohort.participants) {
    Participant q;
    q.id = p.id;
    std::vector<Minute> removed;
    for (const auto& r : p.records) {
      if (bbox.contains(r.position)) {
        q.records.push_back(r);
      } else {
        removed.push_back(r.timestamp);
      }
    }
    q.events = p.events;
    if (!removed.empty()) {
      q.events.retain([&](Minute m) { return !std::binary_search(removed.begin(), removed.end(), m); });
    }
    if (!q.records.empty()) out.participants.push_back(std::move(q));
  }
  return out;
}

}  // namespace forage
