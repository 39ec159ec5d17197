#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "floodsignal/calendar.hpp"
#include "floodsignal/table_io.hpp"

namespace floodsignal {

struct Posting {
    std::string id;
    Timestamp timestamp = 0;
    std::string region_id;  // GADM-style, e.g. "USA.33.52"
    std::string country;    // ISO-3166 alpha-3
    double relevance = 0.0; // probability the posting is about a flood
};

enum class EnglishStatus : int { NotOfficial = 0, First = 1, Second = 2 };

struct RegionMeta {
    std::string region_id;
    std::string country;
    EnglishStatus english_status = EnglishStatus::NotOfficial;
    double expected_daily_postings = 0.0;
};

using RegionTable = std::map<std::string, RegionMeta>;

/// Country code a region id starts with ("USA.33.52" -> "USA").
std::string region_country(std::string_view region_id);

struct ParseOptions {
    bool strict = false;
};

struct PostingBatch {
    std::vector<Posting> postings;
    std::size_t rejected = 0;
    std::vector<std::string> reject_reasons;  // first few only
};

/// One JSON object per line: {"id","ts","region_id","country","p"}.
/// Blank lines and '#' comments are ignored. Malformed records are counted,
/// or throw InputError when options.strict is set.
PostingBatch parse_postings(std::istream& in, const ParseOptions& options = {});
PostingBatch parse_postings_file(const std::filesystem::path& path, const ParseOptions& options = {});
void write_postings(std::ostream& out, std::span<const Posting> postings, const ArtifactHeader& header);

RegionTable parse_regions(std::istream& in);
RegionTable parse_regions_file(const std::filesystem::path& path);
void write_regions(std::ostream& out, const RegionTable& regions, const ArtifactHeader& header);

/// Validity of one day under the six-hour rule.
struct DayStatus {
    bool valid = false;
    Timestamp max_gap_seconds = 0;  // longest posting-free interval touching the day
};

using DayValidity = std::map<Day, DayStatus>;

inline constexpr Timestamp kMaxSilenceSeconds = 6 * 3600;

/// A day is invalid iff some posting-free interval longer than six hours
/// overlaps it. Gaps are measured on the global stream and bounded by the
/// nearest postings (possibly on adjacent days) or the window edges.
/// Postings outside the window are ignored.
DayValidity day_validity(std::span<const Timestamp> timestamps, const DayRange& window);
DayValidity day_validity(std::span<const Posting> postings, const DayRange& window);

void write_validity(std::ostream& out, const DayValidity& validity, const ArtifactHeader& header);

struct RegionDayBundle {
    Day day;
    std::string region_id;
    std::vector<Posting> postings;
    bool valid = false;
};

/// One bundle per (day, region) with at least one posting, ordered by
/// (region_id, day). Throws std::invalid_argument if a posting's day is not
/// covered by `validity`.
std::vector<RegionDayBundle> group_region_day(std::span<const Posting> postings, const DayValidity& validity);

/// Bundles file: '#' header, then one JSON object per bundle. Only the
/// relevance values are kept per posting.
void write_bundles(std::ostream& out, std::span<const RegionDayBundle> bundles, const DayRange& window,
                   const ArtifactHeader& header);

struct BundleFile {
    std::vector<RegionDayBundle> bundles;
    DayValidity validity;  // days seen in the file; missing days are invalid
    std::optional<DayRange> window;
};

BundleFile read_bundles(std::istream& in);
BundleFile read_bundles_file(const std::filesystem::path& path);

}  // namespace floodsignal
