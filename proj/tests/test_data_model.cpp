#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "forage/cohort.hpp"
#include "forage/error.hpp"
#include "test_util.hpp"

using namespace forage;
using namespace forage::testing;

namespace {

const std::string kHeader(kRecordsHeader);
const std::string kEvHeader(kEventsHeader);

Cohort ingest_text(const std::string& records, const std::string& events) {
  std::istringstream r(records);
  std::istringstream e(events);
  return ingest_cohort(r, e);
}

std::string row(const std::string& id, const std::string& ts, const std::string& lat = "32.8",
                const std::string& lon = "-117.1") {
  return id + "," + ts + "," + lat + "," + lon + ",1.5,0.09,10,5,3,11.6,200,1\n";
}

}  // namespace

TEST(Ingest, ThreeRowsNoEvents) {
  const auto c = ingest_text(kHeader + "\n" + row("A", "2023-03-06T10:00") + row("A", "2023-03-06T10:01") +
                                 row("A", "2023-03-06T10:02"),
                             kEvHeader + "\n");
  ASSERT_EQ(c.participants.size(), 1u);
  EXPECT_EQ(c.participants[0].records.size(), 3u);
  EXPECT_EQ(c.participants[0].events.total(), 0u);
  EXPECT_EQ(c.participants[0].records[0].day_of_week, 0);  // Monday
  EXPECT_DOUBLE_EQ(c.participants[0].records[1].gps_speed, 0.09);
}

TEST(Ingest, LatitudeOutOfRangeIsRejected) {
  EXPECT_THROW(ingest_text(kHeader + "\n" + row("A", "2023-03-06T10:00", "91", "-117"), kEvHeader + "\n"),
               DataError);
}

TEST(Ingest, AbsentCoordinatesAreDroppedAndCounted) {
  const auto c = ingest_text(kHeader + "\n" + row("A", "2023-03-06T10:00") + row("A", "2023-03-06T10:01", "", ""),
                             kEvHeader + "\n");
  EXPECT_EQ(c.dropped_missing_gps, 1u);
  EXPECT_EQ(c.record_count(), 1u);
}

TEST(Ingest, MalformedRowNamesLine) {
  try {
    ingest_text(kHeader + "\n" + row("A", "2023-03-06T10:00") + "A,garbage\n", kEvHeader + "\n");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("3"), std::string::npos) << e.what();
  }
}

TEST(Ingest, DuplicateMinuteIsRejected) {
  EXPECT_THROW(ingest_text(kHeader + "\n" + row("A", "2023-03-06T10:00") + row("A", "2023-03-06T10:00"),
                           kEvHeader + "\n"),
               DataError);
}

TEST(Ingest, NonZeroSecondsAreRejected) {
  EXPECT_THROW(ingest_text(kHeader + "\n" + row("A", "2023-03-06T10:00:30"), kEvHeader + "\n"), DataError);
}

TEST(Ingest, EventWithoutRecordNamesParticipantAndTime) {
  try {
    ingest_text(kHeader + "\n" + row("A", "2023-03-06T10:00"), kEvHeader + "\nA,2023-03-06T11:00,eating\n");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("A"), std::string::npos);
    EXPECT_NE(what.find("2023-03-06T11:00"), std::string::npos);
  }
}

TEST(Ingest, UnknownEventTypeIsRejected) {
  EXPECT_THROW(ingest_text(kHeader + "\n" + row("A", "2023-03-06T10:00"), kEvHeader + "\nA,2023-03-06T10:00,nap\n"),
               DataError);
}

TEST(Ingest, NegativeSensorValueIsRejected) {
  EXPECT_THROW(ingest_text(kHeader + "\nA,2023-03-06T10:00,32.8,-117.1,-1,0,0,0,0,0,0,1\n", kEvHeader + "\n"),
               DataError);
}

TEST(Ingest, OrderingIsIndependentOfInputOrder) {
  Rng rng(11);
  const Cohort c = random_cohort(rng);
  std::ostringstream rec;
  std::ostringstream ev;
  write_records_csv(c, rec);
  write_events_csv(c, ev);
  auto shuffle_lines = [&](const std::string& text) {
    std::istringstream in(text);
    std::string header;
    std::getline(in, header);
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    rng.shuffle(lines);
    std::string out = header + "\n";
    for (const auto& l : lines) out += l + "\n";
    return out;
  };
  const Cohort a = ingest_text(rec.str(), ev.str());
  const Cohort b = ingest_text(shuffle_lines(rec.str()), shuffle_lines(ev.str()));
  EXPECT_EQ(a.participants, b.participants);
}

TEST(Ingest, RoundTripIsAFixedPoint) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    const Cohort c = random_cohort(rng);
    std::ostringstream rec;
    std::ostringstream ev;
    write_records_csv(c, rec);
    write_events_csv(c, ev);
    const Cohort once = ingest_text(rec.str(), ev.str());
    EXPECT_EQ(once.participants, c.participants);
    std::ostringstream rec2;
    std::ostringstream ev2;
    write_records_csv(once, rec2);
    write_events_csv(once, ev2);
    EXPECT_EQ(rec.str(), rec2.str());
    EXPECT_EQ(ev.str(), ev2.str());
  }
}

TEST(Ingest, DayOfWeekColumnIsValidated) {
  const std::string header = kHeader + ",day_of_week\n";
  const auto ok = ingest_text(header + "A,2023-03-06T10:00,32.8,-117.1,0,0,0,0,0,0,0,1,Mon\n", kEvHeader + "\n");
  EXPECT_EQ(ok.participants[0].records[0].day_of_week, 0);
  EXPECT_THROW(ingest_text(header + "A,2023-03-06T10:00,32.8,-117.1,0,0,0,0,0,0,0,1,Tue\n", kEvHeader + "\n"),
               DataError);
}

TEST(Outlets, LoadAndRejectUnknownCategory) {
  std::istringstream good("category,lat,lon\n445,32.8,-117.1\n7225,32.9,-117.0\n");
  const auto outlets = load_outlets(good);
  ASSERT_EQ(outlets.size(), 2u);
  EXPECT_EQ(outlets[0].category, OutletCategory::FoodBeverage);
  EXPECT_EQ(outlets[1].category, OutletCategory::Eating);
  std::istringstream bad("category,lat,lon\n999,32.8,-117.1\n");
  EXPECT_THROW(load_outlets(bad), DataError);
}

TEST(DropOutOfBounds, AllInsideIsIdentity) {
  Rng rng(3);
  const Cohort c = random_cohort(rng);
  const Cohort d = drop_out_of_bounds(c, BoundingBox{30, 35, -120, -115});
  EXPECT_EQ(d.participants, c.participants);
}

TEST(DropOutOfBounds, CornerPlusEpsilonIsRemovedWithEvents) {
  const BoundingBox box{32.0, 33.0, -118.0, -117.0};
  Participant p;
  p.id = "A";
  const Minute t0 = make_minute(2023, 3, 6, 10, 0);
  p.records.push_back(record_at(t0, {33.0, -117.0}));             // corner, inclusive
  p.records.push_back(record_at(t0 + 1, {33.0 + 1e-9, -117.0}));  // just outside
  p.records.push_back(record_at(t0 + 2, {32.5, -117.5}));
  p.events.add(EventType::Eating, t0 + 1);
  p.events.add(EventType::Eating, t0 + 2);
  Cohort c;
  c.participants.push_back(p);
  const Cohort d = drop_out_of_bounds(c, box);
  ASSERT_EQ(d.participants[0].records.size(), 2u);
  EXPECT_EQ(d.participants[0].records[1].timestamp, t0 + 2);
  EXPECT_EQ(d.participants[0].events.minutes(EventType::Eating), std::vector<Minute>{t0 + 2});
  for (const auto& part : d.participants) {
    for (const auto& r : part.records) EXPECT_TRUE(box.contains(r.position));
  }
}

TEST(Time, ParseFormatRoundTrip) {
  const Minute m = parse_timestamp("2024-02-29T23:59");
  EXPECT_EQ(format_timestamp(m), "2024-02-29T23:59");
  EXPECT_EQ(minute_of_day(m), 23 * 60 + 59);
  EXPECT_EQ(weekday_index(m), 3);  // Thursday
  EXPECT_EQ(parse_timestamp("2024-02-29 23:59:00"), m);
  EXPECT_THROW(parse_timestamp("2023-02-29T10:00"), DataError);
  EXPECT_THROW(parse_timestamp("2023-01-01T24:00"), DataError);
}
