#include <doctest.h>

#include <stdexcept>

#include "floodsignal/calendar.hpp"

using namespace floodsignal;

TEST_CASE("days round-trip through ISO text") {
    const Day d = parse_day("2019-10-01");
    CHECK(d == make_day(2019, 10, 1));
    CHECK(format_day(d) == "2019-10-01");
    CHECK(format_day(d + 31) == "2019-11-01");
    CHECK(format_day(Day{0}) == "1970-01-01");
    CHECK_THROWS_AS(parse_day("2019-02-30"), std::invalid_argument);
    CHECK_THROWS_AS(parse_day("2019-1-01"), std::invalid_argument);
}

TEST_CASE("RFC 3339 timestamps") {
    const auto t = parse_rfc3339("2019-10-01T06:00:00Z");
    REQUIRE(t);
    CHECK(*t == start_of(make_day(2019, 10, 1)) + 6 * 3600);
    CHECK(parse_rfc3339("2019-10-01T08:00:00+02:00") == t);
    CHECK(parse_rfc3339("2019-10-01T06:00:00.987Z") == t);
    CHECK(parse_rfc3339("2019-09-30T23:00:00-07:00") == t);
    CHECK_FALSE(parse_rfc3339("2019-10-01 06:00"));
    CHECK_FALSE(parse_rfc3339("2019-10-01T06:00:00"));
    CHECK_FALSE(parse_rfc3339("2019-10-01T25:00:00Z"));
    CHECK(format_rfc3339(*t) == "2019-10-01T06:00:00Z");
}

TEST_CASE("day_of floors towards the earlier date") {
    CHECK(day_of(0) == Day{0});
    CHECK(day_of(kSecondsPerDay - 1) == Day{0});
    CHECK(day_of(-1) == Day{-1});
}

TEST_CASE("windows and months") {
    const DayRange w = parse_window("2019-09-01:2019-09-30");
    CHECK(w.size() == 30);
    CHECK(format_window(w) == "2019-09-01:2019-09-30");
    CHECK_THROWS_AS(parse_window("2019-09-30:2019-09-01"), std::invalid_argument);
    CHECK_THROWS_AS(parse_window("2019-09-30"), std::invalid_argument);
    CHECK(days_in_month(parse_year_month("2019-02")) == 28);
    CHECK(days_in_month(parse_year_month("2020-02")) == 29);
    CHECK(days_in_month(parse_year_month("2019-08")) == 31);
}
