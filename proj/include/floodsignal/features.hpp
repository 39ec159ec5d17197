#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "floodsignal/calendar.hpp"
#include "floodsignal/ingest.hpp"

namespace floodsignal {

inline constexpr std::size_t kBuckets = 10;
inline constexpr std::size_t kFeatureCount = 73;

using BucketCounts = std::array<std::int64_t, kBuckets>;
using BucketFractions = std::array<double, kBuckets>;

/// Bucket i holds probabilities in (i/10, (i+1)/10]; 0 goes to bucket 0.
/// Throws std::invalid_argument outside [0, 1].
std::size_t bucket_index(double p);

struct DailyFeatures {
    Day day;
    std::string region_id;
    int lang = 0;
    std::int64_t tot = 0;
    BucketCounts t{};
    BucketFractions p{};
};

struct LaggedFeatures {
    BucketCounts t3p{};
    BucketFractions m3p{};
    BucketFractions a3p{};
    BucketCounts d1t{};
    BucketCounts i3t{};
};

enum class NormalizationPolicy {
    Consistent,   // excepts Lang, P*, M3P*, A3P*
    TextLiteral,  // excepts Lang, P*, T3P*
};

NormalizationPolicy parse_policy(std::string_view name);
std::string_view policy_name(NormalizationPolicy policy);

enum class Label { True, False, Undefined, Unlabeled };

std::string_view label_name(Label label);
Label parse_label(std::string_view text);

/// Canonical layout of the 73-long feature vector.
namespace feature_index {
inline constexpr std::size_t kLang = 0;
inline constexpr std::size_t kTot = 1;
inline constexpr std::size_t kT = 2;
inline constexpr std::size_t kP = 12;
inline constexpr std::size_t kT3P = 22;
inline constexpr std::size_t kM3P = 32;
inline constexpr std::size_t kA3P = 42;
inline constexpr std::size_t kD1T = 52;
inline constexpr std::size_t kI3T = 62;
inline constexpr std::size_t kExpected = 72;
}  // namespace feature_index

/// Names in canonical order: Lang, TOT, T00-10..T90-100, P.., T3P.., M3P..,
/// A3P.., D1T.., I3T.., EXPECTED.
const std::array<std::string, kFeatureCount>& feature_names();

/// FNV-1a digest (hex) of the comma-joined canonical names.
const std::string& feature_order_digest();

/// True where the policy divides the feature by the expected posting rate.
std::array<bool, kFeatureCount> normalized_mask(NormalizationPolicy policy);

struct FeatureRow {
    Day day;
    std::string region_id;
    std::array<double, kFeatureCount> values{};
    bool complete = false;
    Label label = Label::Unlabeled;
    std::string event_id;
};

struct CellKey {
    std::string region_id;
    Day day;
    auto operator<=>(const CellKey&) const = default;
};

struct DayVolume {
    std::int64_t total = 0;
    double flood_weighted = 0.0;  // sum of relevance
};

using VolumeTable = std::map<CellKey, DayVolume>;

DailyFeatures daily_features(const RegionDayBundle& bundle, const RegionMeta& meta);

/// Window ordered oldest first: d-2, d-1, d.
LaggedFeatures lagged_features(const DailyFeatures& two_back, const DailyFeatures& one_back,
                               const DailyFeatures& today);

FeatureRow normalize_features(const DailyFeatures& daily, const LaggedFeatures& lagged, const RegionMeta& meta,
                              NormalizationPolicy policy);

struct BaselineCount {
    std::string region_id;
    YearMonth month;
    double count = 0.0;
};

std::map<std::string, double> expected_rate(std::span<const BaselineCount> baseline);

std::vector<BaselineCount> read_baseline(std::istream& in);
std::vector<BaselineCount> read_baseline_file(const std::filesystem::path& path);
void write_baseline(std::ostream& out, std::span<const BaselineCount> baseline, const ArtifactHeader& header);

struct FeaturizeResult {
    std::vector<FeatureRow> rows;  // ordered by (region_id, day)
    VolumeTable volumes;           // every (region, valid day) cell
    std::vector<std::string> skipped_regions;
};

/// Rows for every region in `regions` and every valid day of `window`.
/// Rows whose two preceding days are not both valid and inside the window
/// are complete=false and carry NaN lagged features. Regions with a zero
/// expected rate are skipped. Parallel over regions.
FeaturizeResult featurize(std::span<const RegionDayBundle> bundles, const DayValidity& validity,
                          const RegionTable& regions, const DayRange& window, NormalizationPolicy policy);

void write_features(std::ostream& out, std::span<const FeatureRow> rows, const ArtifactHeader& header);
std::vector<FeatureRow> read_features(std::istream& in);
std::vector<FeatureRow> read_features_file(const std::filesystem::path& path);

void write_volumes(std::ostream& out, const VolumeTable& volumes, const ArtifactHeader& header);
VolumeTable read_volumes(std::istream& in);
VolumeTable read_volumes_file(const std::filesystem::path& path);

namespace serial {
FeaturizeResult featurize(std::span<const RegionDayBundle> bundles, const DayValidity& validity,
                          const RegionTable& regions, const DayRange& window, NormalizationPolicy policy);
}  // namespace serial

}  // namespace floodsignal
