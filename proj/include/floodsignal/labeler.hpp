#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "floodsignal/calendar.hpp"
#include "floodsignal/features.hpp"
#include "floodsignal/ingest.hpp"

namespace floodsignal {

struct GroundTruthEvent {
    std::string event_id;
    std::string region_id;
    std::string country;
    Day start;
    Day end;
    std::string place;  // optional display name
    std::string type;   // optional event type
};

/// Days labeled True for one event: [begin, end] with end = peak + 1.
struct LabelRange {
    std::string event_id;
    Day begin;
    Day peak;
    Day end;
};

using DailyVolume = std::map<Day, double>;

inline constexpr std::int32_t kUndefinedBuffer = 10;
inline constexpr std::int32_t kScrubBefore = 5;
inline constexpr std::int32_t kScrubAfter = 20;

/// Day of maximum volume within [start, end], earliest on ties. Only days
/// present in `volumes` count. nullopt when none is present.
std::optional<Day> peak_day(const DailyVolume& volumes, const GroundTruthEvent& event);

/// Start of the strictly increasing run that ends at `peak`, never earlier
/// than start - 10 and stopping at a missing day.
Day increase_start(const DailyVolume& volumes, Day peak, const GroundTruthEvent& event);

std::optional<LabelRange> label_range(const DailyVolume& volumes, const GroundTruthEvent& event);

enum class VolumeSeries { Total, FloodWeighted };

VolumeSeries parse_volume_series(std::string_view name);

DailyVolume region_series(const VolumeTable& volumes, const std::string& region_id, VolumeSeries series);

struct LabelOptions {
    VolumeSeries series = VolumeSeries::Total;
};

struct LabelResult {
    std::vector<FeatureRow> rows;
    std::vector<LabelRange> ranges;
    std::vector<std::string> excluded_events;  // no valid day to locate a peak
};

/// Labels every row:
///  - regions without any event: Undefined;
///  - [begin, end] of an event's range: True (union over events);
///  - [start-10, start-1] and [end+1, end+10]: Undefined;
///  - other regions of the same country that have no flood overlapping
///    [start-5, end+20]: Undefined over that period;
///  - everything else in a flooded region: False.
/// Precedence True > Undefined > False. An event without a locatable peak
/// contributes Undefined over [start-10, end+10].
LabelResult label_dataset(std::vector<FeatureRow> rows, std::span<const GroundTruthEvent> events,
                          const VolumeTable& volumes, const LabelOptions& options = {});

struct FilterOptions {
    std::int64_t min_postings_exclusive = 100;
    VolumeSeries count_series = VolumeSeries::Total;
};

struct FilterResult {
    std::vector<FeatureRow> rows;
    std::size_t dropped_label = 0;
    std::size_t dropped_language = 0;
    std::size_t dropped_incomplete = 0;
    std::size_t dropped_volume = 0;
};

/// Keeps True/False rows of English-official regions that are complete and
/// have strictly more than `min_postings_exclusive` collected postings.
FilterResult training_filter(std::span<const FeatureRow> rows, const RegionTable& regions,
                             const VolumeTable& raw_counts, const FilterOptions& options = {});

std::vector<GroundTruthEvent> read_events(std::istream& in);
std::vector<GroundTruthEvent> read_events_file(const std::filesystem::path& path);
void write_events(std::ostream& out, std::span<const GroundTruthEvent> events, const ArtifactHeader& header);

void write_labels(std::ostream& out, std::span<const FeatureRow> rows, const ArtifactHeader& header);
void write_label_ranges(std::ostream& out, std::span<const LabelRange> ranges, const ArtifactHeader& header);

struct LabelAssignment {
    Label label = Label::Unlabeled;
    std::string event_id;
};

std::map<CellKey, LabelAssignment> read_labels(std::istream& in);
std::map<CellKey, LabelAssignment> read_labels_file(const std::filesystem::path& path);

/// Copies labels and event ids onto matching rows; unmatched rows become Unlabeled.
void apply_labels(std::vector<FeatureRow>& rows, const std::map<CellKey, LabelAssignment>& labels);

}  // namespace floodsignal
