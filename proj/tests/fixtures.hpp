// Test fixtures shared by the unit and acceptance binaries.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "floodsignal/features.hpp"
#include "floodsignal/labeler.hpp"
#include "floodsignal/random.hpp"
#include "oracles.hpp"

namespace fixture {

using namespace floodsignal;

/// Day offsets relative to `origin`; a region-day is valid iff it has a volume.
struct Timeline {
    Day origin = make_day(2019, 9, 1);
    int days = 60;
    std::vector<std::string> regions;
    std::map<std::string, std::string> country_of;
    std::vector<oracle::Event> events;
    std::map<std::string, std::map<int, double>> volumes;

    std::vector<FeatureRow> rows() const {
        std::vector<FeatureRow> out;
        for (const auto& r : regions)
            for (int d = 0; d < days; ++d) {
                const auto it = volumes.find(r);
                if (it == volumes.end() || !it->second.contains(d)) continue;
                FeatureRow row;
                row.day = origin + d;
                row.region_id = r;
                row.complete = true;
                out.push_back(row);
            }
        return out;
    }

    std::vector<GroundTruthEvent> ground_truth() const {
        std::vector<GroundTruthEvent> out;
        int n = 0;
        for (const auto& e : events)
            out.push_back(GroundTruthEvent{"E" + std::to_string(++n), e.region, e.country, origin + e.start,
                                           origin + e.end, "", ""});
        return out;
    }

    VolumeTable volume_table() const {
        VolumeTable out;
        for (const auto& [r, series] : volumes)
            for (const auto& [d, v] : series)
                out[CellKey{r, origin + d}] = DayVolume{static_cast<std::int64_t>(v), v / 2.0};
        return out;
    }
};

/// 60 days, three regions of one country: USA.1 holds an eight-day event
/// (days 10-17) peaking on its fifth day after a rise from its third; USA.2
/// is the neighbor, flooded only late (days 52-53); USA.3 never floods.
/// USA.1 loses day 30 to an outage.
inline Timeline hand_built() {
    Timeline t;
    t.regions = {"USA.1", "USA.2", "USA.3"};
    for (const auto& r : t.regions) t.country_of[r] = "USA";
    t.events = {{"USA.1", "USA", 10, 17}, {"USA.2", "USA", 52, 53}};
    for (int d = 0; d < t.days; ++d) {
        t.volumes["USA.1"][d] = 120 + (d % 3);
        t.volumes["USA.2"][d] = 200;
        t.volumes["USA.3"][d] = 90;
    }
    const double ramp[] = {130, 160, 150, 400, 900, 600, 300, 200};  // days 10..17
    for (int i = 0; i < 8; ++i) t.volumes["USA.1"][10 + i] = ramp[i];
    t.volumes["USA.1"].erase(30);
    t.volumes["USA.2"][52] = 500;
    t.volumes["USA.2"][53] = 260;
    return t;
}

/// Up to 60 days and 3 regions over two countries with 0-3 random events
/// and a few missing days.
inline Timeline random_timeline(std::uint64_t seed) {
    Rng rng(seed);
    Timeline t;
    t.days = 20 + static_cast<int>(rng.below(41));
    const char* ids[] = {"AAA.1", "AAA.2", "BBB.1"};
    const auto n_regions = 1 + rng.below(3);
    for (std::uint64_t i = 0; i < n_regions; ++i) {
        t.regions.push_back(ids[i]);
        t.country_of[ids[i]] = std::string(ids[i]).substr(0, 3);
    }
    for (const auto& r : t.regions)
        for (int d = 0; d < t.days; ++d)
            if (rng.below(12) != 0) t.volumes[r][d] = static_cast<double>(50 + rng.below(8) * 10);
    const auto n_events = rng.below(4);
    for (std::uint64_t i = 0; i < n_events; ++i) {
        const auto& r = t.regions[rng.below(t.regions.size())];
        const int start = static_cast<int>(rng.below(static_cast<std::uint64_t>(t.days)));
        const int end = std::min(t.days - 1, start + static_cast<int>(rng.below(9)));
        t.events.push_back({r, t.country_of[r], start, end});
    }
    return t;
}

/// Brute-force label map keyed like the library's rows.
inline std::map<std::pair<std::string, Day>, Label> oracle_labels(const Timeline& t) {
    std::map<std::pair<std::string, Day>, Label> out;
    for (const auto& [key, label] : oracle::labels(t.regions, t.country_of, t.days, t.events, t.volumes))
        out[{key.first, t.origin + key.second}] = label;
    return out;
}

}  // namespace fixture
