#include "floodsignal/labeler.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>

namespace floodsignal {

std::optional<Day> peak_day(const DailyVolume& volumes, const GroundTruthEvent& event) {
    std::optional<Day> best;
    double best_volume = 0.0;
    for (auto it = volumes.lower_bound(event.start); it != volumes.end() && it->first <= event.end; ++it) {
        if (!best || it->second > best_volume) {
            best = it->first;
            best_volume = it->second;
        }
    }
    return best;
}

Day increase_start(const DailyVolume& volumes, Day peak, const GroundTruthEvent& event) {
    const Day floor = event.start - kUndefinedBuffer;
    Day cur = peak;
    while (cur - 1 >= floor) {
        auto prev = volumes.find(cur - 1);
        auto here = volumes.find(cur);
        if (prev == volumes.end() || here == volumes.end() || !(prev->second < here->second)) break;
        cur = cur - 1;
    }
    return cur;
}

std::optional<LabelRange> label_range(const DailyVolume& volumes, const GroundTruthEvent& event) {
    auto peak = peak_day(volumes, event);
    if (!peak) return std::nullopt;
    return LabelRange{event.event_id, increase_start(volumes, *peak, event), *peak, *peak + 1};
}

VolumeSeries parse_volume_series(std::string_view name) {
    if (name == "total") return VolumeSeries::Total;
    if (name == "flood_weighted") return VolumeSeries::FloodWeighted;
    throw std::invalid_argument("unknown volume series '" + std::string(name) + "'");
}

DailyVolume region_series(const VolumeTable& volumes, const std::string& region_id, VolumeSeries series) {
    DailyVolume out;
    for (auto it = volumes.lower_bound(CellKey{region_id, Day{INT32_MIN}});
         it != volumes.end() && it->first.region_id == region_id; ++it)
        out[it->first.day] = series == VolumeSeries::Total ? static_cast<double>(it->second.total)
                                                           : it->second.flood_weighted;
    return out;
}

namespace {

// Priority encoding for painting: higher wins.
enum Paint : int { kUnset = 0, kFalse = 1, kUndefined = 2, kTrue = 3 };

struct Interval {
    Day first;
    Day last;
    bool intersects(const Interval& o) const { return first <= o.last && o.first <= last; }
};

struct RegionPaint {
    std::map<Day, int> paint;
    std::map<Day, std::string> true_event;
    bool flooded = false;

    void apply(const Interval& iv, int level, const std::string* event_id = nullptr) {
        for (Day d = iv.first; d <= iv.last; ++d) {
            int& cur = paint[d];
            if (level > cur) cur = level;
            if (level == kTrue && event_id) true_event.try_emplace(d, *event_id);
        }
    }
};

}  // namespace

LabelResult label_dataset(std::vector<FeatureRow> rows, std::span<const GroundTruthEvent> events,
                          const VolumeTable& volumes, const LabelOptions& options) {
    LabelResult result;
    std::map<std::string, RegionPaint> regions;
    std::map<std::string, std::set<std::string>> country_regions;
    std::map<std::string, std::vector<Interval>> flood_spans;

    for (const auto& r : rows) country_regions[region_country(r.region_id)].insert(r.region_id);
    for (const auto& e : events) {
        if (e.end < e.start) throw std::invalid_argument("event " + e.event_id + " ends before it starts");
        regions[e.region_id].flooded = true;
        country_regions[e.country].insert(e.region_id);
        flood_spans[e.region_id].push_back(Interval{e.start, e.end});
    }

    for (const auto& e : events) {
        auto& paint = regions[e.region_id];
        paint.apply(Interval{e.start - kUndefinedBuffer, e.start - 1}, kUndefined);
        paint.apply(Interval{e.end + 1, e.end + kUndefinedBuffer}, kUndefined);
        const auto range = label_range(region_series(volumes, e.region_id, options.series), e);
        if (range) {
            paint.apply(Interval{range->begin, range->end}, kTrue, &e.event_id);
            result.ranges.push_back(*range);
        } else {
            paint.apply(Interval{e.start, e.end}, kUndefined);
            result.excluded_events.push_back(e.event_id);
        }

        const Interval scrub{e.start - kScrubBefore, e.end + kScrubAfter};
        for (const auto& other : country_regions[e.country]) {
            if (other == e.region_id) continue;
            const auto spans = flood_spans.find(other);
            const bool flooded_in_period =
                spans != flood_spans.end() &&
                std::any_of(spans->second.begin(), spans->second.end(),
                            [&](const Interval& s) { return s.intersects(scrub); });
            if (!flooded_in_period) regions[other].apply(scrub, kUndefined);
        }
    }

    for (auto& row : rows) {
        row.event_id.clear();
        const auto it = regions.find(row.region_id);
        if (it == regions.end() || !it->second.flooded) {
            row.label = Label::Undefined;
            continue;
        }
        const auto p = it->second.paint.find(row.day);
        const int level = p == it->second.paint.end() ? kUnset : p->second;
        switch (level) {
            case kTrue:
                row.label = Label::True;
                row.event_id = it->second.true_event.at(row.day);
                break;
            case kUndefined: row.label = Label::Undefined; break;
            default: row.label = Label::False; break;
        }
    }
    result.rows = std::move(rows);
    return result;
}

FilterResult training_filter(std::span<const FeatureRow> rows, const RegionTable& regions,
                             const VolumeTable& raw_counts, const FilterOptions& options) {
    FilterResult out;
    for (const auto& r : rows) {
        if (r.label != Label::True && r.label != Label::False) {
            ++out.dropped_label;
            continue;
        }
        const auto meta = regions.find(r.region_id);
        if (meta == regions.end() || meta->second.english_status == EnglishStatus::NotOfficial) {
            ++out.dropped_language;
            continue;
        }
        if (!r.complete) {
            ++out.dropped_incomplete;
            continue;
        }
        const auto vol = raw_counts.find(CellKey{r.region_id, r.day});
        const double count = vol == raw_counts.end() ? 0.0
                             : options.count_series == VolumeSeries::Total
                                 ? static_cast<double>(vol->second.total)
                                 : vol->second.flood_weighted;
        if (!(count > static_cast<double>(options.min_postings_exclusive))) {
            ++out.dropped_volume;
            continue;
        }
        out.rows.push_back(r);
    }
    return out;
}

std::vector<GroundTruthEvent> read_events(std::istream& in) {
    const CsvTable csv = read_csv(in, "events.csv");
    const auto c_id = csv.column("event_id");
    const auto c_region = csv.column("region_id");
    const auto c_country = csv.column("country");
    const auto c_start = csv.column("start");
    const auto c_end = csv.column("end");
    const bool has_place = csv.has_column("place");
    const bool has_type = csv.has_column("type");
    std::vector<GroundTruthEvent> events;
    for (const auto& rec : csv.rows) {
        GroundTruthEvent e;
        e.event_id = rec[c_id];
        e.region_id = rec[c_region];
        e.country = rec[c_country];
        try {
            e.start = parse_day(rec[c_start]);
            e.end = parse_day(rec[c_end]);
        } catch (const std::invalid_argument& err) {
            throw InputError(std::string("events.csv: ") + err.what());
        }
        if (e.end < e.start) throw InputError("events.csv: event " + e.event_id + " ends before it starts");
        if (has_place) e.place = rec[csv.column("place")];
        if (has_type) e.type = rec[csv.column("type")];
        events.push_back(std::move(e));
    }
    return events;
}

std::vector<GroundTruthEvent> read_events_file(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_events(in);
}

void write_events(std::ostream& out, std::span<const GroundTruthEvent> events, const ArtifactHeader& header) {
    out << header.line() << '\n' << "event_id,region_id,country,start,end,place,type\n";
    for (const auto& e : events)
        out << csv_escape(e.event_id) << ',' << e.region_id << ',' << e.country << ',' << format_day(e.start)
            << ',' << format_day(e.end) << ',' << csv_escape(e.place) << ',' << csv_escape(e.type) << '\n';
}

void write_labels(std::ostream& out, std::span<const FeatureRow> rows, const ArtifactHeader& header) {
    out << header.line() << '\n' << "day,region_id,label,event_id\n";
    for (const auto& r : rows)
        out << format_day(r.day) << ',' << r.region_id << ',' << label_name(r.label) << ',' << csv_escape(r.event_id)
            << '\n';
}

void write_label_ranges(std::ostream& out, std::span<const LabelRange> ranges, const ArtifactHeader& header) {
    out << header.line() << '\n' << "event_id,begin,peak,end\n";
    for (const auto& r : ranges)
        out << csv_escape(r.event_id) << ',' << format_day(r.begin) << ',' << format_day(r.peak) << ','
            << format_day(r.end) << '\n';
}

std::map<CellKey, LabelAssignment> read_labels(std::istream& in) {
    const CsvTable csv = read_csv(in, "labels.csv");
    const auto c_day = csv.column("day");
    const auto c_region = csv.column("region_id");
    const auto c_label = csv.column("label");
    const bool has_event = csv.has_column("event_id");
    std::map<CellKey, LabelAssignment> out;
    for (const auto& rec : csv.rows) {
        LabelAssignment a{parse_label(rec[c_label]), has_event ? rec[csv.column("event_id")] : std::string{}};
        out[CellKey{rec[c_region], parse_day(rec[c_day])}] = std::move(a);
    }
    return out;
}

std::map<CellKey, LabelAssignment> read_labels_file(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_labels(in);
}

void apply_labels(std::vector<FeatureRow>& rows, const std::map<CellKey, LabelAssignment>& labels) {
    for (auto& r : rows) {
        const auto it = labels.find(CellKey{r.region_id, r.day});
        if (it == labels.end()) {
            r.label = Label::Unlabeled;
            r.event_id.clear();
        } else {
            r.label = it->second.label;
            r.event_id = it->second.event_id;
        }
    }
}

}  // namespace floodsignal
