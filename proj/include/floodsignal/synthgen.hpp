#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "floodsignal/calendar.hpp"
#include "floodsignal/features.hpp"
#include "floodsignal/forest.hpp"
#include "floodsignal/ingest.hpp"
#include "floodsignal/labeler.hpp"

namespace floodsignal::synth {

/// Uniform relevance on [low, high] with relative weight.
struct MixtureComponent {
    double weight = 1.0;
    double low = 0.0;
    double high = 1.0;
};

struct RegionSpec {
    std::string region_id;
    std::string country;
    EnglishStatus english_status = EnglishStatus::First;
    double baseline_rate = 0.0;  // postings per day
    std::vector<MixtureComponent> relevance_mixture;
};

/// Volume rises linearly from `start` to the peak at start + ramp_days
/// (capped at end), then halves daily until three days after `end`.
struct EventSpec {
    std::string event_id;
    std::string region_id;
    Day start;
    Day end;
    double burst_peak_multiplier = 1.0;
    std::int32_t ramp_days = 0;
    double flood_relevance_shift = 0.0;  // share of burst postings that are flood-related
    std::string place;
    std::string type;

    Day peak() const;
    double multiplier(Day d) const;
};

struct Outage {
    Timestamp from = 0;
    Timestamp to = 0;  // exclusive
};

/// Volume spikes unrelated to floods; relevance stays at the background.
struct SpuriousBursts {
    double probability = 0.0;  // per region-day
    double max_multiplier = 1.0;
};

struct SynthConfig {
    std::uint64_t seed = 0;
    DayRange window;
    YearMonth baseline_month;
    std::vector<RegionSpec> regions;
    std::vector<EventSpec> events;
    std::vector<Outage> outages;
    SpuriousBursts spurious;

    /// Throws std::invalid_argument with the offending field path.
    void validate() const;
};

/// Parses the JSON form; errors name the field path.
SynthConfig parse_config(const std::string& json_text);
SynthConfig load_config(const std::filesystem::path& path);

struct TraceRow {
    Day day;
    std::string region_id;
    double mean = 0.0;
    std::uint64_t intended = 0;
    std::uint64_t deleted = 0;  // removed by outages
    double relevance_mean = 0.0;
};

struct Corpus {
    std::vector<Posting> postings;  // ordered by (timestamp, id)
    RegionTable regions;
    std::vector<BaselineCount> baseline;
    std::vector<GroundTruthEvent> events;
    std::vector<TraceRow> trace;
};

/// Deterministic under config.seed; each region stream has its own derived seed.
Corpus generate(const SynthConfig& config);

/// postings.jsonl, regions.csv, baseline.csv, events.csv, trace.csv.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir, const ArtifactHeader& header);

struct SeparableData {
    Dataset data;
    std::vector<std::size_t> informative;
};

/// Balanced two-class matrix of width `n_features`; the informative
/// columns are shifted by three standard deviations between classes, the
/// rest are standard normal noise.
SeparableData separable_dataset(std::size_t n_rows, std::size_t n_informative, std::uint64_t seed,
                                std::size_t n_features = kFeatureCount);

}  // namespace floodsignal::synth
