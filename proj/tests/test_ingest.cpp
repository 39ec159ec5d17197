#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "floodsignal/ingest.hpp"
#include "floodsignal/random.hpp"

using namespace floodsignal;

namespace {

const Day kDay = make_day(2019, 10, 1);

Timestamp at(Day d, int h, int m = 0) { return start_of(d) + h * 3600 + m * 60; }

Posting posting(std::string id, Timestamp ts, std::string region, double p = 0.5) {
    return Posting{std::move(id), ts, region, region_country(region), p};
}

}  // namespace

TEST_CASE("parse_postings maps fields and rejects bad records") {
    std::istringstream in(
        "# header comment\n"
        R"({"id":"a","ts":"2019-10-01T06:00:00Z","region_id":"ZAF.3.2","country":"ZAF","p":0.93})" "\n"
        R"({"id":"b","ts":"2019-10-01T07:00:00Z","region_id":"ZAF.3.2","country":"ZAF","p":1.7})" "\n"
        R"({"id":"c","ts":"2019-10-01T07:00:00Z","region_id":"USA.1.2","country":"ZAF","p":0.2})" "\n"
        R"({"id":"d","ts":"yesterday","region_id":"ZAF.3.2","country":"ZAF","p":0.2})" "\n"
        "not json\n"
        "\n");
    const auto batch = parse_postings(in);
    REQUIRE(batch.postings.size() == 1);
    const auto& p = batch.postings[0];
    CHECK(p.id == "a");
    CHECK(p.region_id == "ZAF.3.2");
    CHECK(p.country == "ZAF");
    CHECK(p.relevance == doctest::Approx(0.93));
    CHECK(p.timestamp == at(kDay, 6));
    CHECK(batch.rejected == 4);
    CHECK(batch.reject_reasons.size() == 4);
}

TEST_CASE("parse_postings edge cases") {
    std::istringstream empty("");
    const auto batch = parse_postings(empty);
    CHECK(batch.postings.empty());
    CHECK(batch.rejected == 0);

    std::istringstream bad(R"({"id":"b","ts":"2019-10-01T07:00:00Z","region_id":"ZAF.3.2","country":"ZAF","p":1.7})");
    CHECK_THROWS_AS(parse_postings(bad, ParseOptions{true}), InputError);

    std::ifstream missing("/nonexistent/postings.jsonl");
    CHECK_THROWS_AS(parse_postings(missing), InputError);
    CHECK_THROWS_AS(parse_postings_file("/nonexistent/postings.jsonl"), InputError);
}

TEST_CASE("parse_regions validates fields") {
    std::istringstream ok("region_id,country,english_status,expected_daily_postings\nZAF.3.2,ZAF,2,25.5\n");
    const auto regions = parse_regions(ok);
    REQUIRE(regions.contains("ZAF.3.2"));
    CHECK(regions.at("ZAF.3.2").english_status == EnglishStatus::Second);
    CHECK(regions.at("ZAF.3.2").expected_daily_postings == 25.5);

    std::istringstream bad_lang("region_id,country,english_status,expected_daily_postings\nZAF.3.2,ZAF,3,1\n");
    CHECK_THROWS_AS(parse_regions(bad_lang), InputError);
    std::istringstream negative("region_id,country,english_status,expected_daily_postings\nZAF.3.2,ZAF,1,-1\n");
    CHECK_THROWS_AS(parse_regions(negative), InputError);
}

TEST_CASE("day_validity: a 6h15m silence invalidates the day") {
    const DayRange w{kDay, kDay};
    const Timestamp ts[] = {at(kDay, 0, 30), at(kDay, 6), at(kDay, 12, 15), at(kDay, 18), at(kDay, 23, 50)};
    const auto v = day_validity(ts, w);
    CHECK_FALSE(v.at(kDay).valid);
    CHECK(v.at(kDay).max_gap_seconds == (6 * 60 + 15) * 60);
}

TEST_CASE("day_validity: hourly postings are valid, empty days are not") {
    std::vector<Timestamp> ts;
    for (int h = 0; h < 24; ++h) ts.push_back(at(kDay, h, 10));
    const auto hourly = day_validity(ts, DayRange{kDay, kDay});
    CHECK(hourly.at(kDay).valid);
    CHECK(hourly.at(kDay).max_gap_seconds == 60 * 60);

    const auto empty = day_validity(std::span<const Timestamp>{}, DayRange{kDay, kDay});
    CHECK_FALSE(empty.at(kDay).valid);
    CHECK(empty.at(kDay).max_gap_seconds == kSecondsPerDay);

    // a silent day in the middle also reaches into the late hours of the day before
    std::vector<Timestamp> around;
    for (int h = 0; h < 24; ++h) {
        around.push_back(at(kDay, h));
        around.push_back(at(kDay + 2, h));
    }
    const auto v = day_validity(around, DayRange{kDay, kDay + 2});
    CHECK_FALSE(v.at(kDay).valid);
    CHECK_FALSE(v.at(kDay + 1).valid);
    CHECK(v.at(kDay + 2).valid);
    CHECK(v.at(kDay + 1).max_gap_seconds == 25 * 3600);
}

TEST_CASE("day_validity: threshold is strict and gaps spanning midnight hit both days") {
    const DayRange w{kDay, kDay + 1};
    std::vector<Timestamp> ts;
    for (int h = 0; h < 24; ++h) ts.push_back(at(kDay, h));
    for (int h = 0; h < 24; ++h) ts.push_back(at(kDay + 1, h));
    SUBCASE("exactly six hours") {
        std::erase_if(ts, [&](Timestamp t) { return t > at(kDay, 3) && t < at(kDay, 9); });
        const auto v = day_validity(ts, w);
        CHECK(v.at(kDay).valid);
        CHECK(v.at(kDay).max_gap_seconds == 6 * 3600);
    }
    SUBCASE("seven hours over midnight") {
        std::erase_if(ts, [&](Timestamp t) { return t > at(kDay, 20) && t < at(kDay + 1, 3); });
        const auto v = day_validity(ts, w);
        CHECK_FALSE(v.at(kDay).valid);
        CHECK_FALSE(v.at(kDay + 1).valid);
    }
    SUBCASE("gap ending exactly at midnight does not touch the next day") {
        std::erase_if(ts, [&](Timestamp t) { return t > at(kDay, 17) && t < at(kDay + 1, 0); });
        const auto v = day_validity(ts, w);
        CHECK_FALSE(v.at(kDay).valid);
        CHECK(v.at(kDay + 1).valid);
    }
    CHECK_THROWS_AS(day_validity(std::span<const Timestamp>{}, DayRange{kDay + 1, kDay}), std::invalid_argument);
}

TEST_CASE("day_validity property: removing postings never revalidates a day") {
    Rng rng(11);
    const DayRange w{kDay, kDay + 4};
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Timestamp> ts;
        const auto n = 5 + rng.below(40);
        for (std::uint64_t i = 0; i < n; ++i)
            ts.push_back(w.begin_time() + static_cast<Timestamp>(rng.below(5 * kSecondsPerDay)));
        const auto before = day_validity(ts, w);
        std::vector<Timestamp> fewer;
        for (Timestamp t : ts)
            if (rng.below(3) != 0) fewer.push_back(t);
        const auto after = day_validity(fewer, w);
        for (const auto& [d, s] : before) {
            if (!s.valid) CHECK_FALSE(after.at(d).valid);
            CHECK(after.at(d).max_gap_seconds >= s.max_gap_seconds);
        }
    }
}

TEST_CASE("group_region_day partitions postings") {
    DayValidity validity{{kDay, {true, 0}}, {kDay + 1, {false, 0}}};
    SUBCASE("two regions one day") {
        const Posting ps[] = {posting("1", at(kDay, 1), "USA.1"), posting("2", at(kDay, 2), "USA.1"),
                              posting("3", at(kDay, 3), "USA.2")};
        const auto bundles = group_region_day(ps, validity);
        REQUIRE(bundles.size() == 2);
        CHECK(bundles[0].region_id == "USA.1");
        CHECK(bundles[0].postings.size() == 2);
        CHECK(bundles[1].postings.size() == 1);
        CHECK(bundles[0].valid);
    }
    SUBCASE("midnight assigns UTC dates and invalid days keep their bundles") {
        const Posting ps[] = {posting("1", at(kDay, 23, 59), "USA.1"), posting("2", at(kDay + 1, 0, 1), "USA.1")};
        const auto bundles = group_region_day(ps, validity);
        REQUIRE(bundles.size() == 2);
        CHECK(bundles[0].day == kDay);
        CHECK(bundles[1].day == kDay + 1);
        CHECK_FALSE(bundles[1].valid);
    }
    SUBCASE("uncovered day is a precondition violation") {
        const Posting ps[] = {posting("1", at(kDay + 5, 1), "USA.1")};
        CHECK_THROWS_AS(group_region_day(ps, validity), std::invalid_argument);
    }
}

TEST_CASE("group_region_day property: counts add up and ids are preserved") {
    Rng rng(5);
    const DayRange w{kDay, kDay + 3};
    const char* regions[] = {"GBR.1", "GBR.2", "IND.7"};
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Posting> ps;
        const auto n = rng.below(200);
        for (std::uint64_t i = 0; i < n; ++i)
            ps.push_back(posting(std::to_string(i), w.begin_time() + Timestamp(rng.below(4 * kSecondsPerDay)),
                                 regions[rng.below(3)]));
        const auto validity = day_validity(ps, w);
        const auto bundles = group_region_day(ps, validity);
        std::multiset<std::string> ids;
        for (const auto& b : bundles) {
            CHECK_FALSE(b.postings.empty());
            CHECK(b.valid == validity.at(b.day).valid);
            for (const auto& p : b.postings) {
                CHECK(day_of(p.timestamp) == b.day);
                CHECK(p.region_id == b.region_id);
                ids.insert(p.id);
            }
        }
        CHECK(ids.size() == ps.size());
        CHECK(std::set<std::string>(ids.begin(), ids.end()).size() == ps.size());
    }
}

TEST_CASE("bundles file keeps relevance values and day validity") {
    const DayRange w{kDay, kDay + 2};
    DayValidity validity{{kDay, {true, 0}}, {kDay + 1, {false, 0}}, {kDay + 2, {false, 0}}};
    const Posting ps[] = {posting("1", at(kDay, 1), "USA.1", 0.25), posting("2", at(kDay, 2), "USA.1", 1.0),
                          posting("3", at(kDay + 1, 3), "USA.2", 0.0)};
    const auto bundles = group_region_day(ps, validity);
    std::stringstream ss;
    write_bundles(ss, bundles, w, ArtifactHeader{});
    const auto file = read_bundles(ss);
    REQUIRE(file.window);
    CHECK(file.window->first == w.first);
    REQUIRE(file.bundles.size() == 2);
    CHECK(file.bundles[0].postings.size() == 2);
    CHECK(file.bundles[0].postings[1].relevance == 1.0);
    CHECK(file.validity.at(kDay).valid);
    CHECK_FALSE(file.validity.at(kDay + 1).valid);
    CHECK_FALSE(file.validity.at(kDay + 2).valid);
}
