#include "floodsignal/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "floodsignal/random.hpp"
#include "parallel.hpp"

namespace floodsignal::synth {

using nlohmann::json;

namespace {
constexpr std::int32_t kDecayTail = 3;
constexpr double kFloodRelevanceLow = 0.8;
}  // namespace

Day EventSpec::peak() const { return std::min(start + ramp_days, end); }

double EventSpec::multiplier(Day d) const {
    const Day top = peak();
    const double excess = burst_peak_multiplier - 1.0;
    if (d < start || d > end + kDecayTail) return 1.0;
    if (d <= top) {
        const double span = static_cast<double>(top - start) + 1.0;
        return 1.0 + excess * (static_cast<double>(d - start) + 1.0) / span;
    }
    return 1.0 + excess * std::pow(0.5, static_cast<double>(d - top));
}

void SynthConfig::validate() const {
    auto fail = [](const std::string& path, const std::string& what) {
        throw std::invalid_argument("synth config: " + path + " " + what);
    };
    if (window.empty()) fail("window", "is empty");
    if (regions.empty()) fail("regions", "must not be empty");
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < regions.size(); ++i) {
        const auto& r = regions[i];
        const std::string path = "regions[" + std::to_string(i) + "]";
        if (r.region_id.empty()) fail(path + ".region_id", "is empty");
        if (region_country(r.region_id) != r.country) fail(path + ".country", "does not prefix region_id");
        if (!(r.baseline_rate >= 0.0)) fail(path + ".baseline_rate", "must be >= 0");
        if (r.relevance_mixture.empty()) fail(path + ".relevance_mixture", "must not be empty");
        for (std::size_t k = 0; k < r.relevance_mixture.size(); ++k) {
            const auto& c = r.relevance_mixture[k];
            const std::string cp = path + ".relevance_mixture[" + std::to_string(k) + "]";
            if (!(c.weight > 0.0)) fail(cp + ".weight", "must be > 0");
            if (!(0.0 <= c.low && c.low <= c.high && c.high <= 1.0)) fail(cp, "needs 0 <= low <= high <= 1");
        }
        ids.push_back(r.region_id);
    }
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) fail("regions", "contain duplicate ids");
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& e = events[i];
        const std::string path = "events[" + std::to_string(i) + "]";
        if (!std::binary_search(ids.begin(), ids.end(), e.region_id)) fail(path + ".region_id", "is not a region");
        if (e.end < e.start) fail(path + ".end", "precedes start");
        if (!(e.burst_peak_multiplier >= 1.0)) fail(path + ".burst_peak_multiplier", "must be >= 1");
        if (e.ramp_days < 0) fail(path + ".ramp_days", "must be >= 0");
        if (!(e.flood_relevance_shift >= 0.0 && e.flood_relevance_shift <= 1.0))
            fail(path + ".flood_relevance_shift", "must be in [0, 1]");
    }
    for (std::size_t i = 0; i < outages.size(); ++i) {
        const auto& o = outages[i];
        const std::string path = "outages[" + std::to_string(i) + "]";
        if (!(o.from < o.to)) fail(path, "must have from < to");
        if (o.from < window.begin_time() || o.to > window.end_time()) fail(path, "lies outside the window");
    }
    if (!(spurious.probability >= 0.0 && spurious.probability <= 1.0))
        fail("spurious_bursts.probability", "must be in [0, 1]");
    if (!(spurious.max_multiplier >= 1.0)) fail("spurious_bursts.max_multiplier", "must be >= 1");
}

namespace {

template <class T>
T field(const json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key)) throw std::invalid_argument("synth config: " + path + "." + key + " is missing");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw std::invalid_argument("synth config: " + path + "." + key + " has the wrong type");
    }
}

template <class T>
T field_or(const json& j, const std::string& key, const std::string& path, T fallback) {
    return j.contains(key) ? field<T>(j, key, path) : fallback;
}

Day day_field(const json& j, const std::string& key, const std::string& path) {
    try {
        return parse_day(field<std::string>(j, key, path));
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        if (msg.rfind("synth config", 0) == 0) throw;
        throw std::invalid_argument("synth config: " + path + "." + key + ": " + msg);
    }
}

Timestamp time_field(const json& j, const std::string& key, const std::string& path) {
    const auto ts = parse_rfc3339(field<std::string>(j, key, path));
    if (!ts) throw std::invalid_argument("synth config: " + path + "." + key + " is not RFC 3339");
    return *ts;
}

}  // namespace

SynthConfig parse_config(const std::string& json_text) {
    const json root = json::parse(json_text, nullptr, false);
    if (root.is_discarded() || !root.is_object()) throw std::invalid_argument("synth config: not a JSON object");
    SynthConfig c;
    c.seed = field<std::uint64_t>(root, "seed", "$");
    try {
        c.window = parse_window(field<std::string>(root, "window", "$"));
        c.baseline_month = parse_year_month(field<std::string>(root, "baseline_month", "$"));
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        if (msg.rfind("synth config", 0) == 0) throw;
        throw std::invalid_argument("synth config: " + msg);
    }
    const auto& regions = root.contains("regions") ? root["regions"] : json::array();
    for (std::size_t i = 0; i < regions.size(); ++i) {
        const auto& r = regions[i];
        const std::string path = "regions[" + std::to_string(i) + "]";
        RegionSpec spec;
        spec.region_id = field<std::string>(r, "region_id", path);
        spec.country = field_or<std::string>(r, "country", path, region_country(spec.region_id));
        const int lang = field<int>(r, "english_status", path);
        if (lang < 0 || lang > 2) throw std::invalid_argument("synth config: " + path + ".english_status must be 0, 1 or 2");
        spec.english_status = static_cast<EnglishStatus>(lang);
        spec.baseline_rate = field<double>(r, "baseline_rate", path);
        if (r.contains("relevance_mixture")) {
            const auto& mix = r["relevance_mixture"];
            for (std::size_t k = 0; k < mix.size(); ++k) {
                const std::string cp = path + ".relevance_mixture[" + std::to_string(k) + "]";
                spec.relevance_mixture.push_back(MixtureComponent{field<double>(mix[k], "weight", cp),
                                                                  field<double>(mix[k], "low", cp),
                                                                  field<double>(mix[k], "high", cp)});
            }
        }
        c.regions.push_back(std::move(spec));
    }
    if (root.contains("events")) {
        const auto& events = root["events"];
        for (std::size_t i = 0; i < events.size(); ++i) {
            const auto& e = events[i];
            const std::string path = "events[" + std::to_string(i) + "]";
            EventSpec spec;
            spec.event_id = field<std::string>(e, "event_id", path);
            spec.region_id = field<std::string>(e, "region_id", path);
            spec.start = day_field(e, "start", path);
            spec.end = day_field(e, "end", path);
            spec.burst_peak_multiplier = field<double>(e, "burst_peak_multiplier", path);
            spec.ramp_days = field<std::int32_t>(e, "ramp_days", path);
            spec.flood_relevance_shift = field<double>(e, "flood_relevance_shift", path);
            spec.place = field_or<std::string>(e, "place", path, "");
            spec.type = field_or<std::string>(e, "type", path, "");
            c.events.push_back(std::move(spec));
        }
    }
    if (root.contains("outages")) {
        const auto& outages = root["outages"];
        for (std::size_t i = 0; i < outages.size(); ++i) {
            const std::string path = "outages[" + std::to_string(i) + "]";
            c.outages.push_back(Outage{time_field(outages[i], "from", path), time_field(outages[i], "to", path)});
        }
    }
    if (root.contains("spurious_bursts")) {
        const auto& s = root["spurious_bursts"];
        c.spurious.probability = field<double>(s, "probability", "spurious_bursts");
        c.spurious.max_multiplier = field<double>(s, "max_multiplier", "spurious_bursts");
    }
    c.validate();
    return c;
}

SynthConfig load_config(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

namespace {

double draw_background(Rng& rng, const RegionSpec& region, double total_weight) {
    double pick = rng.uniform() * total_weight;
    const MixtureComponent* chosen = &region.relevance_mixture.back();
    for (const auto& c : region.relevance_mixture) {
        if (pick < c.weight) {
            chosen = &c;
            break;
        }
        pick -= c.weight;
    }
    return chosen->low + (chosen->high - chosen->low) * rng.uniform();
}

bool in_outage(const std::vector<Outage>& outages, Timestamp ts) {
    return std::any_of(outages.begin(), outages.end(), [&](const Outage& o) { return o.from <= ts && ts < o.to; });
}

struct RegionStream {
    std::vector<Posting> postings;
    std::vector<TraceRow> trace;
};

RegionStream generate_region(const SynthConfig& config, const RegionSpec& region) {
    RegionStream out;
    Rng rng(derive_seed(config.seed, "region:" + region.region_id));
    double total_weight = 0.0;
    for (const auto& c : region.relevance_mixture) total_weight += c.weight;

    std::vector<const EventSpec*> events;
    for (const auto& e : config.events)
        if (e.region_id == region.region_id) events.push_back(&e);

    for (Day d = config.window.first; d <= config.window.last; ++d) {
        double flood_mult = 1.0;
        double shift = 0.0;
        for (const auto* e : events) {
            const double m = e->multiplier(d);
            if (m > flood_mult) {
                flood_mult = m;
                shift = e->flood_relevance_shift;
            }
        }
        double noise_mult = 1.0;
        if (config.spurious.probability > 0.0 && rng.uniform() < config.spurious.probability)
            noise_mult = 1.0 + (config.spurious.max_multiplier - 1.0) * rng.uniform();

        TraceRow tr;
        tr.day = d;
        tr.region_id = region.region_id;
        tr.mean = region.baseline_rate * flood_mult * noise_mult;
        tr.intended = rng.poisson(tr.mean);
        const double flood_share = shift * (flood_mult - 1.0) / flood_mult;

        std::vector<std::pair<Timestamp, double>> day_posts;
        day_posts.reserve(tr.intended);
        double relevance_sum = 0.0;
        for (std::uint64_t k = 0; k < tr.intended; ++k) {
            const Timestamp ts = start_of(d) + static_cast<Timestamp>(rng.below(kSecondsPerDay));
            double p;
            if (flood_share > 0.0 && rng.uniform() < flood_share)
                p = kFloodRelevanceLow + (1.0 - kFloodRelevanceLow) * rng.uniform();
            else
                p = draw_background(rng, region, total_weight);
            p = std::round(p * 1e4) / 1e4;
            relevance_sum += p;
            day_posts.emplace_back(ts, p);
        }
        tr.relevance_mean = tr.intended ? relevance_sum / double(tr.intended) : 0.0;
        std::sort(day_posts.begin(), day_posts.end());
        const std::string prefix = region.region_id + ":" + format_day(d) + ":";
        std::size_t seq = 0;
        for (const auto& [ts, p] : day_posts) {
            if (in_outage(config.outages, ts)) {
                ++tr.deleted;
                continue;
            }
            out.postings.push_back(Posting{prefix + std::to_string(seq++), ts, region.region_id, region.country, p});
        }
        out.trace.push_back(std::move(tr));
    }
    return out;
}

}  // namespace

Corpus generate(const SynthConfig& config) {
    config.validate();
    std::vector<RegionStream> streams(config.regions.size());
    const auto n = static_cast<std::ptrdiff_t>(config.regions.size());
    detail::LoopErrors errors;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t r = 0; r < n; ++r)
        errors.guard(r, [&] { streams[r] = generate_region(config, config.regions[r]); });
    errors.rethrow();

    Corpus corpus;
    for (auto& s : streams) {
        corpus.postings.insert(corpus.postings.end(), std::make_move_iterator(s.postings.begin()),
                               std::make_move_iterator(s.postings.end()));
        corpus.trace.insert(corpus.trace.end(), s.trace.begin(), s.trace.end());
    }
    std::sort(corpus.postings.begin(), corpus.postings.end(), [](const Posting& a, const Posting& b) {
        return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.id < b.id;
    });

    const int month_days = days_in_month(config.baseline_month);
    for (const auto& r : config.regions) {
        corpus.regions[r.region_id] = RegionMeta{r.region_id, r.country, r.english_status, r.baseline_rate};
        Rng rng(derive_seed(config.seed, "baseline:" + r.region_id));
        corpus.baseline.push_back(BaselineCount{r.region_id, config.baseline_month,
                                                static_cast<double>(rng.poisson(r.baseline_rate * month_days))});
    }
    for (const auto& e : config.events)
        corpus.events.push_back(
            GroundTruthEvent{e.event_id, e.region_id, region_country(e.region_id), e.start, e.end, e.place, e.type});
    return corpus;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir, const ArtifactHeader& header) {
    {
        auto out = open_output(dir / "postings.jsonl");
        write_postings(out, corpus.postings, header);
    }
    {
        auto out = open_output(dir / "regions.csv");
        write_regions(out, corpus.regions, header);
    }
    {
        auto out = open_output(dir / "baseline.csv");
        write_baseline(out, corpus.baseline, header);
    }
    {
        auto out = open_output(dir / "events.csv");
        write_events(out, corpus.events, header);
    }
    {
        auto out = open_output(dir / "trace.csv");
        out << header.line() << '\n' << "day,region_id,mean,intended,deleted,relevance_mean\n";
        for (const auto& t : corpus.trace)
            out << format_day(t.day) << ',' << t.region_id << ',' << format_number(t.mean) << ',' << t.intended
                << ',' << t.deleted << ',' << format_number(t.relevance_mean) << '\n';
    }
}

SeparableData separable_dataset(std::size_t n_rows, std::size_t n_informative, std::uint64_t seed,
                                std::size_t n_features) {
    if (n_informative > n_features) throw std::invalid_argument("more informative features than columns");
    SeparableData out{Dataset(n_features), {}};
    Rng rng(derive_seed(seed, "separable"));
    // Spread the informative columns over the vector.
    for (std::size_t i = 0; i < n_informative; ++i)
        out.informative.push_back((i * n_features) / n_informative + (n_features / (2 * n_informative)));
    std::vector<double> row(n_features);
    for (std::size_t r = 0; r < n_rows; ++r) {
        const bool positive = r % 2 == 1;
        for (auto& v : row) v = rng.normal();
        for (std::size_t f : out.informative) row[f] += positive ? 3.0 : 0.0;
        out.data.add_row(row, positive);
    }
    return out;
}

}  // namespace floodsignal::synth
