#include "floodsignal/ingest.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace floodsignal {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxReasons = 20;

std::optional<Posting> decode_posting(const std::string& line, std::string& why) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        why = "not a JSON object";
        return std::nullopt;
    }
    for (const char* key : {"id", "ts", "region_id", "country"}) {
        if (!j.contains(key) || !j[key].is_string()) {
            why = std::string("missing string field '") + key + "'";
            return std::nullopt;
        }
    }
    if (!j.contains("p") || !j["p"].is_number()) {
        why = "missing numeric field 'p'";
        return std::nullopt;
    }
    Posting p;
    p.id = j["id"].get<std::string>();
    p.region_id = j["region_id"].get<std::string>();
    p.country = j["country"].get<std::string>();
    p.relevance = j["p"].get<double>();
    auto ts = parse_rfc3339(j["ts"].get<std::string>());
    if (!ts) {
        why = "timestamp is not RFC 3339";
        return std::nullopt;
    }
    p.timestamp = *ts;
    if (!(p.relevance >= 0.0 && p.relevance <= 1.0)) {
        why = "relevance outside [0,1]";
        return std::nullopt;
    }
    if (region_country(p.region_id) != p.country) {
        why = "region_id '" + p.region_id + "' does not belong to country '" + p.country + "'";
        return std::nullopt;
    }
    return p;
}

}  // namespace

std::string region_country(std::string_view region_id) {
    return std::string(region_id.substr(0, region_id.find('.')));
}

PostingBatch parse_postings(std::istream& in, const ParseOptions& options) {
    if (!in) throw InputError("postings stream is not readable");
    PostingBatch batch;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        std::string why;
        auto posting = decode_posting(line, why);
        if (posting) {
            batch.postings.push_back(std::move(*posting));
            continue;
        }
        const std::string reason = "line " + std::to_string(line_no) + ": " + why;
        if (options.strict) throw InputError("postings " + reason);
        ++batch.rejected;
        if (batch.reject_reasons.size() < kMaxReasons) batch.reject_reasons.push_back(reason);
    }
    if (in.bad()) throw InputError("error while reading postings stream");
    return batch;
}

PostingBatch parse_postings_file(const std::filesystem::path& path, const ParseOptions& options) {
    auto in = open_input(path);
    return parse_postings(in, options);
}

void write_postings(std::ostream& out, std::span<const Posting> postings, const ArtifactHeader& header) {
    out << header.line() << '\n';
    for (const auto& p : postings) {
        json j;
        j["id"] = p.id;
        j["ts"] = format_rfc3339(p.timestamp);
        j["region_id"] = p.region_id;
        j["country"] = p.country;
        j["p"] = p.relevance;
        out << j.dump() << '\n';
    }
}

RegionTable parse_regions(std::istream& in) {
    const CsvTable csv = read_csv(in, "regions.csv");
    const auto c_id = csv.column("region_id");
    const auto c_country = csv.column("country");
    const auto c_lang = csv.column("english_status");
    const auto c_rate = csv.column("expected_daily_postings");
    RegionTable regions;
    for (const auto& row : csv.rows) {
        RegionMeta m;
        m.region_id = row[c_id];
        m.country = row[c_country];
        const auto lang = parse_integer(row[c_lang]);
        if (lang < 0 || lang > 2) throw InputError("regions.csv: english_status must be 0, 1 or 2 for " + m.region_id);
        m.english_status = static_cast<EnglishStatus>(lang);
        m.expected_daily_postings = parse_number(row[c_rate]);
        if (!(m.expected_daily_postings >= 0.0))
            throw InputError("regions.csv: negative expected_daily_postings for " + m.region_id);
        if (!regions.emplace(m.region_id, m).second)
            throw InputError("regions.csv: duplicate region " + m.region_id);
    }
    return regions;
}

RegionTable parse_regions_file(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_regions(in);
}

void write_regions(std::ostream& out, const RegionTable& regions, const ArtifactHeader& header) {
    out << header.line() << '\n' << "region_id,country,english_status,expected_daily_postings\n";
    for (const auto& [id, m] : regions)
        out << id << ',' << m.country << ',' << static_cast<int>(m.english_status) << ','
            << format_number(m.expected_daily_postings) << '\n';
}

DayValidity day_validity(std::span<const Timestamp> timestamps, const DayRange& window) {
    if (window.empty()) throw std::invalid_argument("observation window is empty");
    std::vector<Timestamp> ts;
    ts.reserve(timestamps.size() + 2);
    const Timestamp lo = window.begin_time();
    const Timestamp hi = window.end_time();
    ts.push_back(lo);
    for (Timestamp t : timestamps)
        if (t >= lo && t < hi) ts.push_back(t);
    std::sort(ts.begin() + 1, ts.end());
    ts.push_back(hi);

    DayValidity validity;
    for (Day d = window.first; d <= window.last; ++d) validity[d] = DayStatus{true, 0};

    for (std::size_t i = 1; i < ts.size(); ++i) {
        const Timestamp a = ts[i - 1];
        const Timestamp b = ts[i];
        if (b <= a) continue;
        const Timestamp gap = b - a;
        // The open interval (a, b) touches days day_of(a) .. day_of(b - 1).
        for (Day d = day_of(a); d <= day_of(b - 1); ++d) {
            auto& status = validity[d];
            status.max_gap_seconds = std::max(status.max_gap_seconds, gap);
            if (gap > kMaxSilenceSeconds) status.valid = false;
        }
    }
    return validity;
}

DayValidity day_validity(std::span<const Posting> postings, const DayRange& window) {
    std::vector<Timestamp> ts;
    ts.reserve(postings.size());
    for (const auto& p : postings) ts.push_back(p.timestamp);
    return day_validity(ts, window);
}

void write_validity(std::ostream& out, const DayValidity& validity, const ArtifactHeader& header) {
    out << header.line() << '\n' << "day,valid,max_gap_minutes\n";
    for (const auto& [day, status] : validity)
        out << format_day(day) << ',' << (status.valid ? 1 : 0) << ','
            << format_number(static_cast<double>(status.max_gap_seconds) / 60.0) << '\n';
}

std::vector<RegionDayBundle> group_region_day(std::span<const Posting> postings, const DayValidity& validity) {
    std::map<std::pair<std::string, Day>, std::vector<Posting>> cells;
    for (const auto& p : postings) {
        const Day d = day_of(p.timestamp);
        if (!validity.contains(d))
            throw std::invalid_argument("posting " + p.id + " falls on " + format_day(d) +
                                        ", which the validity map does not cover");
        cells[{p.region_id, d}].push_back(p);
    }
    std::vector<RegionDayBundle> bundles;
    bundles.reserve(cells.size());
    for (auto& [key, list] : cells)
        bundles.push_back(RegionDayBundle{key.second, key.first, std::move(list), validity.at(key.second).valid});
    return bundles;
}

void write_bundles(std::ostream& out, std::span<const RegionDayBundle> bundles, const DayRange& window,
                   const ArtifactHeader& header) {
    out << header.line() << '\n' << "# window=" << format_window(window) << '\n';
    for (const auto& b : bundles) {
        json j;
        j["day"] = format_day(b.day);
        j["region_id"] = b.region_id;
        j["valid"] = b.valid;
        json ps = json::array();
        for (const auto& p : b.postings) ps.push_back(p.relevance);
        j["p"] = std::move(ps);
        out << j.dump() << '\n';
    }
}

BundleFile read_bundles(std::istream& in) {
    if (!in) throw InputError("bundles stream is not readable");
    BundleFile file;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line.front() == '#') {
            if (line.rfind("# window=", 0) == 0) file.window = parse_window(std::string_view(line).substr(9));
            continue;
        }
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("day") || !j.contains("region_id") ||
            !j.contains("valid") || !j.contains("p"))
            throw InputError("bundles line " + std::to_string(line_no) + " is malformed");
        RegionDayBundle b;
        b.day = parse_day(j["day"].get<std::string>());
        b.region_id = j["region_id"].get<std::string>();
        b.valid = j["valid"].get<bool>();
        const std::string country = region_country(b.region_id);
        const Timestamp t0 = start_of(b.day);
        std::size_t k = 0;
        for (const auto& v : j["p"]) {
            Posting p;
            p.id = b.region_id + "/" + format_day(b.day) + "/" + std::to_string(k++);
            p.timestamp = t0;
            p.region_id = b.region_id;
            p.country = country;
            p.relevance = v.get<double>();
            b.postings.push_back(std::move(p));
        }
        auto& status = file.validity[b.day];
        status.valid = status.valid || b.valid;
        file.bundles.push_back(std::move(b));
    }
    if (file.window)
        for (Day d = file.window->first; d <= file.window->last; ++d) file.validity.try_emplace(d, DayStatus{});
    return file;
}

BundleFile read_bundles_file(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_bundles(in);
}

}  // namespace floodsignal
