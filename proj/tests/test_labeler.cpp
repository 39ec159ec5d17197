#include <doctest.h>

#include <sstream>

#include "fixtures.hpp"
#include "floodsignal/labeler.hpp"

using namespace floodsignal;

namespace {

const Day kDay = make_day(2019, 10, 1);

DailyVolume series(Day first, std::vector<double> values) {
    DailyVolume v;
    for (std::size_t i = 0; i < values.size(); ++i) v[first + static_cast<std::int32_t>(i)] = values[i];
    return v;
}

GroundTruthEvent event(Day start, Day end, std::string region = "USA.1") {
    return GroundTruthEvent{"E", region, region_country(region), start, end, "", ""};
}

}  // namespace

TEST_CASE("peak day") {
    CHECK(peak_day(series(kDay, {10, 50, 80, 40}), event(kDay, kDay + 3)) == kDay + 2);
    CHECK(peak_day(series(kDay, {7, 7, 7}), event(kDay, kDay + 2)) == kDay);
    CHECK(peak_day(series(kDay, {3}), event(kDay, kDay)) == kDay);
    CHECK(peak_day(series(kDay, {1, 2, 99, 3}), event(kDay, kDay + 1)) == kDay + 1);  // outside the span is ignored
    CHECK_FALSE(peak_day(series(kDay + 5, {1, 2}), event(kDay, kDay + 3)));
}

TEST_CASE("increase start") {
    const auto e = event(kDay + 10, kDay + 14);
    // values ... 5, 9, 20, 80 with 80 the peak at kDay+13
    CHECK(increase_start(series(kDay + 9, {30, 5, 9, 20, 80}), kDay + 13, e) == kDay + 10);
    CHECK(increase_start(series(kDay + 12, {80, 80}), kDay + 13, e) == kDay + 13);
    // rise of 15 days ending at the peak is clamped to start - 10
    std::vector<double> rise;
    for (int i = 0; i < 16; ++i) rise.push_back(i + 1);
    CHECK(increase_start(series(kDay - 2, rise), kDay + 13, e) == kDay);
    // a missing day stops the walk
    auto gap = series(kDay + 9, {1, 2, 3, 4, 5});
    gap.erase(kDay + 11);
    CHECK(increase_start(gap, kDay + 13, e) == kDay + 12);
}

TEST_CASE("eight-day event yields True from the rise to one day after the peak") {
    const auto t = fixture::hand_built();
    const auto result = label_dataset(t.rows(), t.ground_truth(), t.volume_table());
    REQUIRE(result.ranges.size() == 2);
    CHECK(result.ranges[0].begin == t.origin + 12);
    CHECK(result.ranges[0].peak == t.origin + 14);
    CHECK(result.ranges[0].end == t.origin + 15);
    std::map<std::pair<std::string, int>, Label> got;
    for (const auto& r : result.rows) got[{r.region_id, r.day - t.origin}] = r.label;
    for (int d = 12; d <= 15; ++d) CHECK(got.at({"USA.1", d}) == Label::True);
    CHECK(got.at({"USA.1", 16}) == Label::False);
    CHECK(got.at({"USA.1", 9}) == Label::Undefined);
    CHECK(got.at({"USA.1", 27}) == Label::Undefined);
    CHECK(got.at({"USA.1", 28}) == Label::False);
    CHECK(got.at({"USA.2", 6}) == Label::Undefined);   // scrub [5, 37]
    CHECK(got.at({"USA.2", 37}) == Label::Undefined);
    CHECK(got.at({"USA.2", 38}) == Label::False);
    CHECK(got.at({"USA.2", 4}) == Label::False);
    CHECK(got.at({"USA.1", 47}) == Label::Undefined);  // neighbor's scrub
    for (int d = 0; d < 60; ++d) CHECK(got.at({"USA.3", d}) == Label::Undefined);
    for (const auto& r : result.rows)
        if (r.label == Label::True) CHECK(r.event_id == (r.region_id == "USA.1" ? "E1" : "E2"));
        else CHECK(r.event_id.empty());
}

TEST_CASE("scrub is skipped for a neighbor flooded in the same period") {
    auto t = fixture::hand_built();
    t.events[1] = {"USA.2", "USA", 20, 21};
    const auto result = label_dataset(t.rows(), t.ground_truth(), t.volume_table());
    std::map<std::pair<std::string, int>, Label> got;
    for (const auto& r : result.rows) got[{r.region_id, r.day - t.origin}] = r.label;
    CHECK(got.at({"USA.2", 6}) == Label::False);
}

TEST_CASE("event without a valid day is excluded and blanked") {
    fixture::Timeline t = fixture::hand_built();
    for (int d = 10; d <= 17; ++d) t.volumes["USA.1"].erase(d);
    const auto result = label_dataset(t.rows(), t.ground_truth(), t.volume_table());
    REQUIRE(result.excluded_events.size() == 1);
    CHECK(result.excluded_events[0] == "E1");
    for (const auto& r : result.rows)
        if (r.region_id == "USA.1") CHECK(r.label != Label::True);
}

TEST_CASE("labels match the day-by-day oracle on random timelines") {
    for (std::uint64_t seed = 1; seed <= 300; ++seed) {
        const auto t = fixture::random_timeline(seed);
        const auto want = fixture::oracle_labels(t);
        const auto result = label_dataset(t.rows(), t.ground_truth(), t.volume_table());
        const auto again = label_dataset(t.rows(), t.ground_truth(), t.volume_table());
        for (std::size_t i = 0; i < result.rows.size(); ++i) {
            const auto& r = result.rows[i];
            INFO("seed " << seed << " " << r.region_id << " " << format_day(r.day));
            CHECK(r.label == want.at({r.region_id, r.day}));
            CHECK(r.label == again.rows[i].label);
        }
    }
}

TEST_CASE("training filter") {
    RegionTable regions;
    regions["USA.1"] = RegionMeta{"USA.1", "USA", EnglishStatus::First, 10};
    regions["ITA.1"] = RegionMeta{"ITA.1", "ITA", EnglishStatus::NotOfficial, 10};
    VolumeTable volumes;
    auto row = [&](std::string region, int offset, Label label, std::int64_t count, bool complete = true) {
        FeatureRow r;
        r.region_id = region;
        r.day = kDay + offset;
        r.label = label;
        r.complete = complete;
        volumes[CellKey{region, r.day}] = DayVolume{count, 0.0};
        return r;
    };
    const std::vector<FeatureRow> rows = {row("USA.1", 0, Label::True, 250), row("USA.1", 1, Label::False, 100),
                                          row("USA.1", 2, Label::False, 101), row("USA.1", 3, Label::Undefined, 500),
                                          row("ITA.1", 0, Label::True, 500), row("USA.1", 4, Label::True, 500, false)};
    const auto out = training_filter(rows, regions, volumes);
    REQUIRE(out.rows.size() == 2);
    CHECK(out.rows[0].day == kDay);
    CHECK(out.rows[1].day == kDay + 2);
    CHECK(out.dropped_volume == 1);
    CHECK(out.dropped_label == 1);
    CHECK(out.dropped_language == 1);
    CHECK(out.dropped_incomplete == 1);
}

TEST_CASE("events and labels files round-trip") {
    const auto t = fixture::hand_built();
    const auto events = t.ground_truth();
    std::stringstream es;
    write_events(es, events, ArtifactHeader{});
    const auto back = read_events(es);
    REQUIRE(back.size() == 2);
    CHECK(back[0].start == events[0].start);
    CHECK(back[1].region_id == "USA.2");

    const auto result = label_dataset(t.rows(), events, t.volume_table());
    std::stringstream ls;
    write_labels(ls, result.rows, ArtifactHeader{});
    const auto labels = read_labels(ls);
    auto rows = t.rows();
    apply_labels(rows, labels);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].label == result.rows[i].label);
        CHECK(rows[i].event_id == result.rows[i].event_id);
    }

    std::istringstream bad("event_id,region_id,country,start,end\nE1,USA.1,USA,2019-10-05,2019-10-01\n");
    CHECK_THROWS(read_events(bad));
}
