#include "floodsignal/pipeline.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "floodsignal/random.hpp"
#include "floodsignal/report.hpp"

namespace floodsignal {

using nlohmann::json;

namespace {

std::string hex64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string read_text(const fs::path& path) {
    auto in = open_input(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) return {};
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& section) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw std::invalid_argument("config: " + section + "." + key + " has the wrong type");
    }
}

ForestParams parse_forest(const json& j, bool& seed_explicit) {
    ForestParams p;
    p.n_trees = get_or<std::size_t>(j, "n_trees", p.n_trees, "forest");
    p.max_depth = get_or<std::size_t>(j, "max_depth", p.max_depth, "forest");
    p.k_features = get_or<std::size_t>(j, "k_features", p.k_features, "forest");
    p.mtry = get_or<std::size_t>(j, "mtry", p.mtry, "forest");
    p.threshold = get_or<double>(j, "threshold", p.threshold, "forest");
    p.balanced_bootstrap = get_or<bool>(j, "balanced_bootstrap", p.balanced_bootstrap, "forest");
    seed_explicit = j.contains("seed");
    p.seed = get_or<std::uint64_t>(j, "seed", 0, "forest");
    p.validate();
    return p;
}

template <class F>
auto run_stage(const char* name, const fs::path& out_dir, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const std::exception& e) {
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        std::ofstream stale(out_dir / "STALE");
        stale << "stage=" << name << "\ncause=" << e.what() << "\n";
        throw StageError(name, e.what());
    }
}

}  // namespace

ArtifactHeader PipelineConfig::header() const {
    ArtifactHeader h;
    h.seed = seed;
    h.config_digest = digest;
    return h;
}

std::uint64_t PipelineConfig::forest_seed() const {
    return forest_seed_explicit ? forest.seed : derive_seed(seed, "forest");
}
std::uint64_t PipelineConfig::fold_seed() const { return derive_seed(seed, "folds"); }
std::uint64_t PipelineConfig::synth_seed() const { return derive_seed(seed, "synth"); }

ForestParams PipelineConfig::forest_params() const {
    ForestParams p = forest;
    p.seed = forest_seed();
    return p;
}

void PipelineConfig::override_seed(std::uint64_t s) {
    seed = s;
    forest_seed_explicit = false;
    if (synth) synth->seed = synth_seed();
}

PipelineConfig PipelineConfig::parse(const std::string& json_text, const fs::path& base_dir) {
    const json root = json::parse(json_text, nullptr, false);
    if (root.is_discarded() || !root.is_object()) throw std::invalid_argument("config: not a JSON object");
    PipelineConfig c;
    c.seed = get_or<std::uint64_t>(root, "seed", 0, "$");
    c.digest = hex64(fnv1a(root.dump()));

    if (root.contains("synth")) {
        json synth_json;
        if (root["synth"].is_string())
            synth_json = json::parse(read_text(resolve(base_dir, root["synth"].get<std::string>())));
        else
            synth_json = root["synth"];
        synth_json["seed"] = c.synth_seed();
        c.synth = synth::parse_config(synth_json.dump());
        c.window = c.synth->window;
    }
    if (root.contains("inputs")) {
        const auto& in = root["inputs"];
        c.inputs.postings = resolve(base_dir, get_or<std::string>(in, "postings", "", "inputs"));
        c.inputs.regions = resolve(base_dir, get_or<std::string>(in, "regions", "", "inputs"));
        c.inputs.baseline = resolve(base_dir, get_or<std::string>(in, "baseline", "", "inputs"));
        c.inputs.events = resolve(base_dir, get_or<std::string>(in, "events", "", "inputs"));
        c.inputs.external = resolve(base_dir, get_or<std::string>(in, "external", "", "inputs"));
    }
    if (root.contains("window")) c.window = parse_window(root["window"].get<std::string>());
    if (root.contains("ingest")) c.strict = get_or<bool>(root["ingest"], "strict", false, "ingest");
    if (root.contains("features"))
        c.policy = parse_policy(get_or<std::string>(root["features"], "policy", "consistent", "features"));
    if (root.contains("labeling")) {
        const auto& l = root["labeling"];
        c.labeling.series = parse_volume_series(get_or<std::string>(l, "volume_series", "total", "labeling"));
        c.filter.min_postings_exclusive = get_or<std::int64_t>(l, "min_postings", 100, "labeling");
        c.filter.count_series = parse_volume_series(get_or<std::string>(l, "filter_count", "total", "labeling"));
    }
    if (root.contains("forest")) c.forest = parse_forest(root["forest"], c.forest_seed_explicit);
    if (root.contains("evaluation")) {
        const auto& e = root["evaluation"];
        c.folds = get_or<std::size_t>(e, "folds", 3, "evaluation");
        c.loo.hit_range = parse_hit_range(get_or<std::string>(e, "hit_range", "true_range", "evaluation"));
    }
    return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
    return parse(read_text(path), path.has_parent_path() ? path.parent_path() : fs::path("."));
}

ForestParams load_forest_params(const fs::path& path) {
    const json root = json::parse(read_text(path), nullptr, false);
    if (root.is_discarded() || !root.is_object()) throw std::invalid_argument("params: not a JSON object");
    bool explicit_seed = false;
    if (root.contains("forest")) {
        ForestParams p = parse_forest(root["forest"], explicit_seed);
        if (!explicit_seed) p.seed = derive_seed(get_or<std::uint64_t>(root, "seed", 0, "$"), "forest");
        return p;
    }
    return parse_forest(root, explicit_seed);
}

IngestSummary stage_ingest(const fs::path& postings, const fs::path& regions, const DayRange& window, bool strict,
                           const fs::path& out_dir, const ArtifactHeader& header) {
    const RegionTable region_table = parse_regions_file(regions);
    PostingBatch batch = parse_postings_file(postings, ParseOptions{strict});
    IngestSummary summary;
    summary.rejected = batch.rejected;

    std::vector<Posting> kept;
    kept.reserve(batch.postings.size());
    for (auto& p : batch.postings)
        if (window.contains(day_of(p.timestamp))) kept.push_back(std::move(p));
    summary.accepted = kept.size();

    const DayValidity validity = day_validity(kept, window);
    const auto bundles = group_region_day(kept, validity);
    summary.days = validity.size();
    for (const auto& [d, s] : validity) summary.valid_days += s.valid ? 1 : 0;
    summary.bundles = bundles.size();
    (void)region_table;

    {
        auto out = open_output(out_dir / "validity.csv");
        write_validity(out, validity, header);
    }
    {
        auto out = open_output(out_dir / "bundles.jsonl");
        write_bundles(out, bundles, window, header);
    }
    return summary;
}

FeaturizeSummary stage_featurize(const fs::path& bundles, const fs::path& regions, const fs::path& baseline,
                                 NormalizationPolicy policy, const fs::path& out_dir, const ArtifactHeader& header) {
    const BundleFile file = read_bundles_file(bundles);
    if (!file.window) throw InputError("bundles file has no window header");
    RegionTable region_table = parse_regions_file(regions);
    if (!baseline.empty()) {
        const auto baseline_counts = read_baseline_file(baseline);
        for (const auto& [id, rate] : expected_rate(baseline_counts)) {
            auto it = region_table.find(id);
            if (it != region_table.end()) it->second.expected_daily_postings = rate;
        }
    }
    const FeaturizeResult result = featurize(file.bundles, file.validity, region_table, *file.window, policy);
    FeaturizeSummary summary;
    summary.rows = result.rows.size();
    for (const auto& r : result.rows) summary.complete_rows += r.complete ? 1 : 0;
    summary.skipped_regions = result.skipped_regions;
    {
        auto out = open_output(out_dir / "features.csv");
        write_features(out, result.rows, header);
    }
    {
        auto out = open_output(out_dir / "volumes.csv");
        write_volumes(out, result.volumes, header);
    }
    return summary;
}

LabelSummary stage_label(const fs::path& features, const fs::path& events, const fs::path& volumes,
                         const fs::path& regions, const LabelOptions& labeling, const FilterOptions& filter,
                         const fs::path& out_dir, const ArtifactHeader& header) {
    auto rows = read_features_file(features);
    const auto event_list = read_events_file(events);
    const VolumeTable volume_table = read_volumes_file(volumes);
    LabelResult labeled = label_dataset(std::move(rows), event_list, volume_table, labeling);

    LabelSummary summary;
    summary.rows = labeled.rows.size();
    for (const auto& r : labeled.rows) {
        summary.true_rows += r.label == Label::True;
        summary.false_rows += r.label == Label::False;
        summary.undefined_rows += r.label == Label::Undefined;
    }
    summary.excluded_events = labeled.excluded_events;
    {
        auto out = open_output(out_dir / "labels.csv");
        write_labels(out, labeled.rows, header);
    }
    {
        auto out = open_output(out_dir / "ranges.csv");
        write_label_ranges(out, labeled.ranges, header);
    }
    if (!regions.empty()) {
        const RegionTable region_table = parse_regions_file(regions);
        const FilterResult filtered = training_filter(labeled.rows, region_table, volume_table, filter);
        summary.training_rows = filtered.rows.size();
        for (const auto& r : filtered.rows) summary.training_positives += r.label == Label::True;
        auto out = open_output(out_dir / "train.csv");
        write_features(out, filtered.rows, header);
    }
    return summary;
}

Forest stage_train(const fs::path& train, const ForestParams& params, const fs::path& model_out,
                   const ArtifactHeader& header) {
    auto rows = read_features_file(train);
    std::erase_if(rows, [](const FeatureRow& r) {
        return !r.complete || (r.label != Label::True && r.label != Label::False);
    });
    const Forest forest = fit_model(to_dataset(rows), params);
    auto out = open_output(model_out);
    write_model(out, forest, header);
    return forest;
}

std::size_t stage_predict(const fs::path& model, const fs::path& features, const fs::path& out_path,
                          const ArtifactHeader& header) {
    const Forest forest = read_model_file(model);
    const auto rows = read_features_file(features);
    auto out = open_output(out_path);
    out << header.line() << '\n' << "day,region_id,score,alert\n";
    std::size_t scored = 0;
    for (const auto& r : rows) {
        if (!r.complete) continue;
        const double s = predict_proba(forest, r);
        out << format_day(r.day) << ',' << r.region_id << ',' << format_number(s) << ','
            << (classify(s, forest.params.threshold) ? 1 : 0) << '\n';
        ++scored;
    }
    return scored;
}

void write_loo_results(std::ostream& out, const LooReport& report, const ArtifactHeader& header) {
    out << header.line() << '\n' << "# hit_rate=" << format_number(report.hit_rate) << '\n'
        << "event_id,outcome,max_score\n";
    for (const auto& r : report.results) {
        double best = 0.0;
        for (const auto& [d, s] : r.per_day_scores) best = std::max(best, s);
        out << csv_escape(r.event_id) << ',' << outcome_name(r.outcome) << ',' << format_number(best) << '\n';
    }
    for (const auto& s : report.skipped) out << csv_escape(s.event_id) << ",skipped,nan\n";
}

std::vector<EventResult> read_loo_results(const fs::path& path) {
    const CsvTable csv = read_csv_file(path);
    const auto c_id = csv.column("event_id");
    const auto c_out = csv.column("outcome");
    std::vector<EventResult> out;
    for (const auto& rec : csv.rows) {
        if (rec[c_out] == "skipped") continue;
        EventResult r;
        r.event_id = rec[c_id];
        if (rec[c_out] == "hit")
            r.outcome = Outcome::Hit;
        else if (rec[c_out] == "miss")
            r.outcome = Outcome::Miss;
        else
            throw InputError("loo results: unknown outcome '" + rec[c_out] + "'");
        out.push_back(std::move(r));
    }
    return out;
}

RocCurve read_roc_csv(const fs::path& path) {
    const CsvTable csv = read_csv_file(path);
    RocCurve roc;
    for (const auto& c : csv.comments)
        if (c.rfind("# auc=", 0) == 0) roc.auc = parse_number(c.substr(6));
    const auto c_t = csv.column("threshold");
    const auto c_f = csv.column("fpr");
    const auto c_p = csv.column("tpr");
    for (const auto& rec : csv.rows)
        roc.points.push_back(RocPoint{parse_number(rec[c_t]), parse_number(rec[c_p]), parse_number(rec[c_f])});
    return roc;
}

namespace {

struct EvalRows {
    std::vector<FeatureRow> train;
    std::vector<FeatureRow> scoring;
};

EvalRows load_eval_rows(const EvaluateInputs& in, bool need_scoring) {
    EvalRows rows;
    rows.train = read_features_file(in.train);
    if (!in.labels.empty()) {
        const auto labels = read_labels_file(in.labels);
        apply_labels(rows.train, labels);
    }
    std::erase_if(rows.train, [](const FeatureRow& r) {
        return !r.complete || (r.label != Label::True && r.label != Label::False);
    });
    if (need_scoring) rows.scoring = in.features.empty() ? rows.train : read_features_file(in.features);
    return rows;
}

std::vector<LabelRange> read_ranges(const fs::path& path) {
    const CsvTable csv = read_csv_file(path);
    std::vector<LabelRange> out;
    for (const auto& rec : csv.rows)
        out.push_back(LabelRange{rec[csv.column("event_id")], parse_day(rec[csv.column("begin")]),
                                 parse_day(rec[csv.column("peak")]), parse_day(rec[csv.column("end")])});
    return out;
}

LooReport run_loo(const EvalRows& rows, const EvaluateInputs& in, const ForestParams& params, const LooOptions& loo,
                  const fs::path& out_dir, const ArtifactHeader& header, std::vector<GroundTruthEvent>& events) {
    events = read_events_file(in.events);
    const auto ranges = read_ranges(in.ranges);
    LooReport report = loo_events(rows.train, rows.scoring, events, ranges, params, loo);
    {
        auto out = open_output(out_dir / "loo_scores.csv");
        write_loo_scores(out, report.results, header);
    }
    {
        auto out = open_output(out_dir / "loo_results.csv");
        write_loo_results(out, report, header);
    }
    return report;
}

void write_metrics(const fs::path& path, const EvaluationSummary& s, std::size_t rows, std::size_t positives,
                   const ArtifactHeader& header) {
    auto out = open_output(path);
    out << header.line() << '\n' << "metric,value\n";
    out << "training_rows," << rows << '\n' << "training_positives," << positives << '\n';
    out << "cv_auc," << format_number(s.cv.pooled_roc.auc) << '\n';
    out << "cv_pooled_precision," << format_precision(s.cv.pooled.precision) << '\n';
    out << "cv_pooled_recall," << format_number(s.cv.pooled.recall) << '\n';
    out << "cv_mean_precision," << format_precision(s.cv.mean_precision) << '\n';
    out << "cv_mean_recall," << format_number(s.cv.mean_recall) << '\n';
    if (s.loo) {
        out << "loo_events_scored," << s.loo->results.size() << '\n';
        out << "loo_events_skipped," << s.loo->skipped.size() << '\n';
        out << "loo_leakage_checks," << s.loo->leakage_checks << '\n';
        out << "loo_hit_rate," << format_number(s.loo->hit_rate) << '\n';
    }
}

}  // namespace

EvaluationSummary stage_evaluate(const EvaluateInputs& in, const ForestParams& params, std::size_t folds,
                                 std::uint64_t fold_seed, const LooOptions& loo, const fs::path& out_dir,
                                 const ArtifactHeader& header) {
    const bool with_loo = !in.events.empty();
    const EvalRows rows = load_eval_rows(in, with_loo);
    const Dataset data = to_dataset(rows.train);

    EvaluationSummary summary;
    summary.cv = cross_validate(data, params, folds, fold_seed);
    {
        auto out = open_output(out_dir / "folds.csv");
        out << header.line() << '\n' << "fold,train_rows,test_rows,auc,precision,recall\n";
        for (std::size_t f = 0; f < summary.cv.folds.size(); ++f) {
            const auto& m = summary.cv.folds[f];
            out << f << ',' << m.train_rows << ',' << m.test_rows << ',' << format_number(m.auc) << ','
                << format_precision(m.pr.precision) << ',' << format_number(m.pr.recall) << '\n';
        }
    }
    {
        auto out = open_output(out_dir / "scores.csv");
        out << header.line() << '\n' << "day,region_id,label,score\n";
        for (std::size_t i = 0; i < rows.train.size(); ++i)
            out << format_day(rows.train[i].day) << ',' << rows.train[i].region_id << ','
                << label_name(rows.train[i].label) << ',' << format_number(summary.cv.scores[i]) << '\n';
    }
    if (with_loo) {
        std::vector<GroundTruthEvent> events;
        summary.loo = run_loo(rows, in, params, loo, out_dir, header, events);
        ExternalForecasts external;
        if (!in.external.empty()) external = read_external_file(in.external);
        if (!summary.loo->results.empty())
            render_report(summary.loo->results, events, summary.cv.pooled_roc,
                          in.external.empty() ? nullptr : &external, out_dir, header);
    } else {
        auto roc_out = open_output(out_dir / "roc.csv");
        write_roc_csv(roc_out, summary.cv.pooled_roc, header);
        auto svg_out = open_output(out_dir / "roc.svg");
        write_roc_svg(svg_out, summary.cv.pooled_roc, header);
    }
    write_metrics(out_dir / "metrics.csv", summary, data.rows(), data.positives(), header);
    return summary;
}

LooReport stage_loo(const EvaluateInputs& in, const ForestParams& params, const LooOptions& loo,
                    const fs::path& out_dir, const ArtifactHeader& header) {
    if (in.events.empty() || in.ranges.empty()) throw std::invalid_argument("loo needs --events and --ranges");
    const EvalRows rows = load_eval_rows(in, true);
    std::vector<GroundTruthEvent> events;
    LooReport report = run_loo(rows, in, params, loo, out_dir, header, events);
    std::vector<EventResult> results = report.results;
    if (!in.external.empty()) join_external(results, read_external_file(in.external));
    auto out = open_output(out_dir / "report.csv");
    write_event_report(out, results, events, !in.external.empty(), header);
    return report;
}

void stage_report(const fs::path& loo_results, const fs::path& events, const fs::path& roc_csv,
                  const fs::path& external, const fs::path& out_dir, const ArtifactHeader& header) {
    auto results = read_loo_results(loo_results);
    const auto event_list = read_events_file(events);
    ExternalForecasts ext;
    if (!external.empty()) ext = read_external_file(external);
    const RocCurve roc = roc_csv.empty() ? RocCurve{} : read_roc_csv(roc_csv);
    render_report(std::move(results), event_list, roc, external.empty() ? nullptr : &ext, out_dir, header);
}

PipelineResult run_pipeline(const PipelineConfig& config, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    fs::remove(out_dir / "STALE");
    const ArtifactHeader header = config.header();
    InputPaths paths = config.inputs;
    PipelineResult result;

    if (config.synth) {
        run_stage("synth", out_dir, [&] {
            const auto corpus = synth::generate(*config.synth);
            synth::write_corpus(corpus, out_dir / "synth", header);
            return 0;
        });
        const fs::path dir = out_dir / "synth";
        if (paths.postings.empty()) paths.postings = dir / "postings.jsonl";
        if (paths.regions.empty()) paths.regions = dir / "regions.csv";
        if (paths.baseline.empty()) paths.baseline = dir / "baseline.csv";
        if (paths.events.empty()) paths.events = dir / "events.csv";
    }

    result.ingest = run_stage("ingest", out_dir, [&] {
        if (!config.window) throw std::invalid_argument("no observation window configured");
        if (paths.postings.empty() || paths.regions.empty())
            throw std::invalid_argument("postings and regions inputs are required");
        return stage_ingest(paths.postings, paths.regions, *config.window, config.strict, out_dir, header);
    });
    result.features = run_stage("featurize", out_dir, [&] {
        return stage_featurize(out_dir / "bundles.jsonl", paths.regions, paths.baseline, config.policy, out_dir,
                               header);
    });
    result.labels = run_stage("label", out_dir, [&] {
        if (paths.events.empty()) throw std::invalid_argument("events input is required");
        return stage_label(out_dir / "features.csv", paths.events, out_dir / "volumes.csv", paths.regions,
                           config.labeling, config.filter, out_dir, header);
    });
    const ForestParams params = config.forest_params();
    run_stage("train", out_dir, [&] { return stage_train(out_dir / "train.csv", params, out_dir / "model.txt", header); });
    result.evaluation = run_stage("evaluate", out_dir, [&] {
        EvaluateInputs in;
        in.train = out_dir / "train.csv";
        in.labels = out_dir / "labels.csv";
        in.features = out_dir / "features.csv";
        in.events = paths.events;
        in.ranges = out_dir / "ranges.csv";
        in.external = paths.external;
        return stage_evaluate(in, params, config.folds, config.fold_seed(), config.loo, out_dir, header);
    });
    {
        auto out = open_output(out_dir / "summary.csv");
        out << header.line() << '\n' << "metric,value\n";
        out << "postings_accepted," << result.ingest.accepted << '\n';
        out << "postings_rejected," << result.ingest.rejected << '\n';
        out << "days," << result.ingest.days << '\n';
        out << "valid_days," << result.ingest.valid_days << '\n';
        out << "valid_day_fraction,"
            << format_number(result.ingest.days ? double(result.ingest.valid_days) / double(result.ingest.days) : 0.0)
            << '\n';
        out << "feature_rows," << result.features.rows << '\n';
        out << "complete_rows," << result.features.complete_rows << '\n';
        out << "true_rows," << result.labels.true_rows << '\n';
        out << "false_rows," << result.labels.false_rows << '\n';
        out << "undefined_rows," << result.labels.undefined_rows << '\n';
        out << "training_rows," << result.labels.training_rows << '\n';
        out << "training_positives," << result.labels.training_positives << '\n';
    }
    return result;
}

}  // namespace floodsignal
