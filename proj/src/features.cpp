#include "floodsignal/features.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "floodsignal/random.hpp"
#include "parallel.hpp"

namespace floodsignal {

namespace fi = feature_index;

std::size_t bucket_index(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("relevance outside [0,1]");
    // ceil(10p) - 1 with p = 0 clamped to bucket 0; exact decimal edges such
    // as 0.3 must land in the lower bucket, so compare against i/10 directly.
    std::size_t i = static_cast<std::size_t>(std::ceil(p * 10.0));
    if (i > 0) --i;
    while (i > 0 && p <= static_cast<double>(i) / 10.0) --i;
    while (i + 1 < kBuckets && p > static_cast<double>(i + 1) / 10.0) ++i;
    return i;
}

NormalizationPolicy parse_policy(std::string_view name) {
    if (name == "consistent") return NormalizationPolicy::Consistent;
    if (name == "text-literal") return NormalizationPolicy::TextLiteral;
    throw std::invalid_argument("unknown normalization policy '" + std::string(name) + "'");
}

std::string_view policy_name(NormalizationPolicy policy) {
    return policy == NormalizationPolicy::Consistent ? "consistent" : "text-literal";
}

std::string_view label_name(Label label) {
    switch (label) {
        case Label::True: return "True";
        case Label::False: return "False";
        case Label::Undefined: return "Undefined";
        case Label::Unlabeled: return "Unlabeled";
    }
    return "Unlabeled";
}

Label parse_label(std::string_view text) {
    if (text == "True") return Label::True;
    if (text == "False") return Label::False;
    if (text == "Undefined") return Label::Undefined;
    if (text == "Unlabeled" || text.empty()) return Label::Unlabeled;
    throw InputError("unknown label '" + std::string(text) + "'");
}

const std::array<std::string, kFeatureCount>& feature_names() {
    static const auto names = [] {
        std::array<std::string, kFeatureCount> n;
        n[fi::kLang] = "Lang";
        n[fi::kTot] = "TOT";
        const std::pair<std::size_t, const char*> groups[] = {
            {fi::kT, "T"}, {fi::kP, "P"}, {fi::kT3P, "T3P"}, {fi::kM3P, "M3P"},
            {fi::kA3P, "A3P"}, {fi::kD1T, "D1T"}, {fi::kI3T, "I3T"}};
        for (const auto& [base, prefix] : groups) {
            for (std::size_t i = 0; i < kBuckets; ++i) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%s%02zu-%zu", prefix, i * 10, (i + 1) * 10);
                n[base + i] = buf;
            }
        }
        n[fi::kExpected] = "EXPECTED";
        return n;
    }();
    return names;
}

const std::string& feature_order_digest() {
    static const std::string digest = [] {
        std::string joined;
        for (const auto& name : feature_names()) {
            if (!joined.empty()) joined += ',';
            joined += name;
        }
        char buf[24];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(joined)));
        return std::string(buf);
    }();
    return digest;
}

std::array<bool, kFeatureCount> normalized_mask(NormalizationPolicy policy) {
    std::array<bool, kFeatureCount> mask{};
    auto set = [&](std::size_t base) {
        for (std::size_t i = 0; i < kBuckets; ++i) mask[base + i] = true;
    };
    mask[fi::kTot] = true;
    set(fi::kT);
    set(fi::kD1T);
    set(fi::kI3T);
    if (policy == NormalizationPolicy::Consistent) {
        set(fi::kT3P);
    } else {
        set(fi::kM3P);
        set(fi::kA3P);
    }
    return mask;
}

DailyFeatures daily_features(const RegionDayBundle& bundle, const RegionMeta& meta) {
    if (!bundle.valid)
        throw std::invalid_argument("cannot featurize invalid day " + format_day(bundle.day) + " for " +
                                    bundle.region_id);
    if (bundle.region_id != meta.region_id)
        throw std::invalid_argument("bundle region " + bundle.region_id + " does not match metadata " +
                                    meta.region_id);
    DailyFeatures f;
    f.day = bundle.day;
    f.region_id = bundle.region_id;
    f.lang = static_cast<int>(meta.english_status);
    f.tot = static_cast<std::int64_t>(bundle.postings.size());
    for (const auto& p : bundle.postings) ++f.t[bucket_index(p.relevance)];
    if (f.tot > 0)
        for (std::size_t i = 0; i < kBuckets; ++i) f.p[i] = static_cast<double>(f.t[i]) / static_cast<double>(f.tot);
    return f;
}

LaggedFeatures lagged_features(const DailyFeatures& two_back, const DailyFeatures& one_back,
                               const DailyFeatures& today) {
    if (two_back.region_id != today.region_id || one_back.region_id != today.region_id)
        throw std::invalid_argument("lagged window mixes regions");
    if (one_back.day != today.day - 1 || two_back.day != today.day - 2)
        throw std::invalid_argument("lagged window days are not consecutive");
    LaggedFeatures l;
    std::int64_t total = 0;
    for (std::size_t i = 0; i < kBuckets; ++i) {
        l.t3p[i] = two_back.t[i] + one_back.t[i] + today.t[i];
        total += l.t3p[i];
        l.a3p[i] = (two_back.p[i] + one_back.p[i] + today.p[i]) / 3.0;
        l.d1t[i] = today.t[i] - one_back.t[i];
        l.i3t[i] = std::max<std::int64_t>({0, today.t[i] - one_back.t[i], one_back.t[i] - two_back.t[i]});
    }
    if (total > 0)
        for (std::size_t i = 0; i < kBuckets; ++i)
            l.m3p[i] = static_cast<double>(l.t3p[i]) / static_cast<double>(total);
    return l;
}

namespace {

void fill_daily(std::array<double, kFeatureCount>& v, const DailyFeatures& daily) {
    v[fi::kLang] = daily.lang;
    v[fi::kTot] = static_cast<double>(daily.tot);
    for (std::size_t i = 0; i < kBuckets; ++i) {
        v[fi::kT + i] = static_cast<double>(daily.t[i]);
        v[fi::kP + i] = daily.p[i];
    }
}

void apply_normalization(std::array<double, kFeatureCount>& v, const RegionMeta& meta, NormalizationPolicy policy) {
    if (!(meta.expected_daily_postings > 0.0))
        throw std::invalid_argument("region " + meta.region_id + " has no expected posting rate");
    const auto mask = normalized_mask(policy);
    for (std::size_t k = 0; k < fi::kExpected; ++k)
        if (mask[k]) v[k] /= meta.expected_daily_postings;
    v[fi::kExpected] = meta.expected_daily_postings;
}

}  // namespace

FeatureRow normalize_features(const DailyFeatures& daily, const LaggedFeatures& lagged, const RegionMeta& meta,
                              NormalizationPolicy policy) {
    FeatureRow row;
    row.day = daily.day;
    row.region_id = daily.region_id;
    row.complete = true;
    auto& v = row.values;
    fill_daily(v, daily);
    for (std::size_t i = 0; i < kBuckets; ++i) {
        v[fi::kT3P + i] = static_cast<double>(lagged.t3p[i]);
        v[fi::kM3P + i] = lagged.m3p[i];
        v[fi::kA3P + i] = lagged.a3p[i];
        v[fi::kD1T + i] = static_cast<double>(lagged.d1t[i]);
        v[fi::kI3T + i] = static_cast<double>(lagged.i3t[i]);
    }
    apply_normalization(v, meta, policy);
    return row;
}

std::map<std::string, double> expected_rate(std::span<const BaselineCount> baseline) {
    std::map<std::string, double> rates;
    for (const auto& b : baseline) {
        if (b.count < 0) throw std::invalid_argument("negative baseline count for " + b.region_id);
        rates[b.region_id] = b.count / static_cast<double>(days_in_month(b.month));
    }
    return rates;
}

std::vector<BaselineCount> read_baseline(std::istream& in) {
    const CsvTable csv = read_csv(in, "baseline.csv");
    const auto c_id = csv.column("region_id");
    const auto c_month = csv.column("month");
    const auto c_count = csv.column("count");
    std::vector<BaselineCount> out;
    for (const auto& row : csv.rows) {
        BaselineCount b;
        b.region_id = row[c_id];
        try {
            b.month = parse_year_month(row[c_month]);
        } catch (const std::invalid_argument& e) {
            throw InputError(std::string("baseline.csv: ") + e.what());
        }
        b.count = parse_number(row[c_count]);
        if (!(b.count >= 0)) throw InputError("baseline.csv: negative count for " + b.region_id);
        out.push_back(std::move(b));
    }
    return out;
}

std::vector<BaselineCount> read_baseline_file(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_baseline(in);
}

void write_baseline(std::ostream& out, std::span<const BaselineCount> baseline, const ArtifactHeader& header) {
    out << header.line() << '\n' << "region_id,month,count\n";
    for (const auto& b : baseline)
        out << b.region_id << ',' << format_year_month(b.month) << ',' << format_number(b.count) << '\n';
}

namespace {

struct RegionWork {
    const RegionMeta* meta = nullptr;
    std::map<Day, const RegionDayBundle*> bundles;
};

struct RegionOutput {
    std::vector<FeatureRow> rows;
    std::vector<std::pair<Day, DayVolume>> volumes;
};

bool is_valid(const DayValidity& validity, const DayRange& window, Day d) {
    if (!window.contains(d)) return false;
    auto it = validity.find(d);
    return it != validity.end() && it->second.valid;
}

RegionOutput featurize_region(const RegionWork& work, const DayValidity& validity, const DayRange& window,
                              NormalizationPolicy policy) {
    RegionOutput out;
    const RegionMeta& meta = *work.meta;
    std::map<Day, DailyFeatures> daily;
    for (Day d = window.first; d <= window.last; ++d) {
        if (!is_valid(validity, window, d)) continue;
        auto it = work.bundles.find(d);
        DailyFeatures f;
        DayVolume vol;
        if (it != work.bundles.end()) {
            f = daily_features(*it->second, meta);
            for (const auto& p : it->second->postings) vol.flood_weighted += p.relevance;
        } else {
            f.day = d;
            f.region_id = meta.region_id;
            f.lang = static_cast<int>(meta.english_status);
        }
        vol.total = f.tot;
        out.volumes.emplace_back(d, vol);
        daily.emplace(d, std::move(f));
    }
    for (const auto& [d, today] : daily) {
        auto one = daily.find(d - 1);
        auto two = daily.find(d - 2);
        if (one != daily.end() && two != daily.end()) {
            out.rows.push_back(normalize_features(today, lagged_features(two->second, one->second, today), meta, policy));
        } else {
            FeatureRow row;
            row.day = d;
            row.region_id = meta.region_id;
            row.complete = false;
            row.values.fill(std::numeric_limits<double>::quiet_NaN());
            fill_daily(row.values, today);
            apply_normalization(row.values, meta, policy);
            out.rows.push_back(std::move(row));
        }
    }
    return out;
}

std::vector<RegionWork> plan_regions(std::span<const RegionDayBundle> bundles, const RegionTable& regions,
                                     std::vector<std::string>& skipped) {
    std::map<std::string, RegionWork> by_region;
    for (const auto& [id, meta] : regions) {
        if (meta.expected_daily_postings > 0.0)
            by_region[id].meta = &meta;
        else
            skipped.push_back(id + ": zero expected posting rate");
    }
    for (const auto& b : bundles) {
        auto it = by_region.find(b.region_id);
        if (it == by_region.end()) continue;
        it->second.bundles[b.day] = &b;
    }
    for (const auto& b : bundles) {
        if (!regions.contains(b.region_id)) {
            const std::string msg = b.region_id + ": not in region metadata";
            if (skipped.empty() || skipped.back() != msg) skipped.push_back(msg);
        }
    }
    std::vector<RegionWork> work;
    work.reserve(by_region.size());
    for (auto& [id, w] : by_region) work.push_back(std::move(w));
    return work;
}

FeaturizeResult collect(const std::vector<RegionWork>& work, std::vector<RegionOutput>& outputs,
                        std::vector<std::string> skipped) {
    FeaturizeResult result;
    result.skipped_regions = std::move(skipped);
    for (std::size_t r = 0; r < work.size(); ++r) {
        for (auto& row : outputs[r].rows) result.rows.push_back(std::move(row));
        for (const auto& [d, vol] : outputs[r].volumes)
            result.volumes.emplace(CellKey{work[r].meta->region_id, d}, vol);
    }
    return result;
}

}  // namespace

FeaturizeResult featurize(std::span<const RegionDayBundle> bundles, const DayValidity& validity,
                          const RegionTable& regions, const DayRange& window, NormalizationPolicy policy) {
    std::vector<std::string> skipped;
    const auto work = plan_regions(bundles, regions, skipped);
    std::vector<RegionOutput> outputs(work.size());
    const auto n = static_cast<std::ptrdiff_t>(work.size());
    detail::LoopErrors errors;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t r = 0; r < n; ++r)
        errors.guard(r, [&] { outputs[r] = featurize_region(work[r], validity, window, policy); });
    errors.rethrow();
    return collect(work, outputs, std::move(skipped));
}

namespace serial {

FeaturizeResult featurize(std::span<const RegionDayBundle> bundles, const DayValidity& validity,
                          const RegionTable& regions, const DayRange& window, NormalizationPolicy policy) {
    std::vector<std::string> skipped;
    const auto work = plan_regions(bundles, regions, skipped);
    std::vector<RegionOutput> outputs(work.size());
    for (std::size_t r = 0; r < work.size(); ++r) outputs[r] = featurize_region(work[r], validity, window, policy);
    return collect(work, outputs, std::move(skipped));
}

}  // namespace serial

void write_features(std::ostream& out, std::span<const FeatureRow> rows, const ArtifactHeader& header) {
    out << header.line() << '\n' << "# features:";
    for (std::size_t k = 0; k < kFeatureCount; ++k) out << (k ? "," : " ") << feature_names()[k];
    out << '\n' << "# feature_order_digest=" << feature_order_digest() << '\n';
    out << "day,region_id,complete,label";
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
        char buf[8];
        std::snprintf(buf, sizeof buf, ",f%03zu", k);
        out << buf;
    }
    out << '\n';
    for (const auto& r : rows) {
        out << format_day(r.day) << ',' << r.region_id << ',' << (r.complete ? 1 : 0) << ',' << label_name(r.label);
        for (double v : r.values) out << ',' << format_number(v);
        out << '\n';
    }
}

std::vector<FeatureRow> read_features(std::istream& in) {
    const CsvTable csv = read_csv(in, "features.csv");
    for (const auto& c : csv.comments) {
        const std::string key = "# feature_order_digest=";
        if (c.rfind(key, 0) == 0 && c.substr(key.size()) != feature_order_digest())
            throw InputError("features.csv was written with a different feature ordering");
    }
    const auto c_day = csv.column("day");
    const auto c_region = csv.column("region_id");
    const auto c_complete = csv.column("complete");
    const auto c_label = csv.column("label");
    const auto c_first = csv.column("f000");
    if (csv.header.size() < c_first + kFeatureCount) throw InputError("features.csv: too few feature columns");
    std::vector<FeatureRow> rows;
    rows.reserve(csv.rows.size());
    for (const auto& rec : csv.rows) {
        FeatureRow r;
        try {
            r.day = parse_day(rec[c_day]);
        } catch (const std::invalid_argument& e) {
            throw InputError(std::string("features.csv: ") + e.what());
        }
        r.region_id = rec[c_region];
        r.complete = rec[c_complete] == "1";
        r.label = parse_label(rec[c_label]);
        for (std::size_t k = 0; k < kFeatureCount; ++k) r.values[k] = parse_number(rec[c_first + k]);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<FeatureRow> read_features_file(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_features(in);
}

void write_volumes(std::ostream& out, const VolumeTable& volumes, const ArtifactHeader& header) {
    out << header.line() << '\n' << "day,region_id,total,flood_weighted\n";
    for (const auto& [key, v] : volumes)
        out << format_day(key.day) << ',' << key.region_id << ',' << v.total << ',' << format_number(v.flood_weighted)
            << '\n';
}

VolumeTable read_volumes(std::istream& in) {
    const CsvTable csv = read_csv(in, "volumes.csv");
    const auto c_day = csv.column("day");
    const auto c_region = csv.column("region_id");
    const auto c_total = csv.column("total");
    const auto c_weighted = csv.column("flood_weighted");
    VolumeTable table;
    for (const auto& rec : csv.rows) {
        CellKey key{rec[c_region], parse_day(rec[c_day])};
        table[key] = DayVolume{parse_integer(rec[c_total]), parse_number(rec[c_weighted])};
    }
    return table;
}

VolumeTable read_volumes_file(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_volumes(in);
}

}  // namespace floodsignal
