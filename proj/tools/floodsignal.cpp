// floodsignal: flood-event detection from relevance-scored postings.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "floodsignal/pipeline.hpp"
#include "floodsignal/random.hpp"
#include "floodsignal/report.hpp"
#include "floodsignal/synthgen.hpp"

namespace fs = std::filesystem;
using namespace floodsignal;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = ".";

    PipelineConfig load() const {
        PipelineConfig c = config.empty() ? PipelineConfig{} : PipelineConfig::load(config);
        if (seed) c.override_seed(*seed);
        return c;
    }
};

void add_common(CLI::App* cmd, Common& common) {
    cmd->add_option("--config", common.config, "Pipeline configuration (JSON)");
    cmd->add_option("--seed", common.seed, "Override the master seed");
    cmd->add_option("--out", common.out, "Output directory");
}

ForestParams params_for(const Common& common, const std::string& params_path) {
    if (!params_path.empty()) {
        ForestParams p = load_forest_params(params_path);
        if (common.seed) p.seed = derive_seed(*common.seed, "forest");
        return p;
    }
    return common.load().forest_params();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"floodsignal: detect flood events per day and region from social-media postings"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(FLOODSIGNAL_VERSION));

    Common common;

    std::string postings, regions, window, baseline, bundles, features, events, volumes, labels, train, params,
        model, external, ranges, results, roc, policy, hit_range;
    bool strict = false;

    auto* ingest = app.add_subcommand("ingest", "Validate days and bundle postings by (day, region)");
    add_common(ingest, common);
    ingest->add_option("--postings", postings, "postings.jsonl")->required();
    ingest->add_option("--regions", regions, "regions.csv")->required();
    ingest->add_option("--window", window, "<start>:<end> (ISO dates)");
    ingest->add_flag("--strict", strict, "Fail on malformed posting lines");

    auto* featurize = app.add_subcommand("featurize", "Compute the 73 features per (day, region)");
    add_common(featurize, common);
    featurize->add_option("--bundles", bundles, "bundles.jsonl from ingest")->required();
    featurize->add_option("--regions", regions, "regions.csv")->required();
    featurize->add_option("--baseline", baseline, "baseline.csv (monthly posting counts)");
    featurize->add_option("--policy", policy, "consistent | text-literal")
        ->check(CLI::IsMember({"consistent", "text-literal"}));

    auto* label = app.add_subcommand("label", "Assign True/False/Undefined labels and filter training rows");
    add_common(label, common);
    label->add_option("--features", features, "features.csv")->required();
    label->add_option("--events", events, "events.csv")->required();
    label->add_option("--volumes", volumes, "volumes.csv")->required();
    label->add_option("--regions", regions, "regions.csv (enables the training filter)");

    auto* train_cmd = app.add_subcommand("train", "Select features and train the forest");
    add_common(train_cmd, common);
    train_cmd->add_option("--train", train, "labeled training rows (features.csv format)")->required();
    train_cmd->add_option("--params", params, "forest parameters (JSON)");

    auto* predict = app.add_subcommand("predict", "Score feature rows with a trained model");
    add_common(predict, common);
    predict->add_option("--model", model, "model file")->required();
    predict->add_option("--features", features, "features.csv")->required();

    auto* evaluate = app.add_subcommand("evaluate", "Cross-validate; with --events also run leave-one-out");
    add_common(evaluate, common);
    evaluate->add_option("--features", train, "labeled training rows")->required();
    evaluate->add_option("--labels", labels, "labels.csv");
    evaluate->add_option("--params", params, "forest parameters (JSON)");
    evaluate->add_option("--external", external, "external forecasts: event_id,forecast_text");
    evaluate->add_option("--events", events, "events.csv");
    evaluate->add_option("--ranges", ranges, "ranges.csv from label");
    evaluate->add_option("--all-features", features, "all rows to score during leave-one-out");

    auto* loo = app.add_subcommand("loo", "Leave-one-event-out hit/miss experiment");
    add_common(loo, common);
    loo->add_option("--train", train, "labeled training rows")->required();
    loo->add_option("--labels", labels, "labels.csv (event ids)")->required();
    loo->add_option("--features", features, "all rows to score");
    loo->add_option("--events", events, "events.csv")->required();
    loo->add_option("--ranges", ranges, "ranges.csv from label")->required();
    loo->add_option("--params", params, "forest parameters (JSON)");
    loo->add_option("--external", external, "external forecasts: event_id,forecast_text");
    loo->add_option("--hit-range", hit_range, "true_range | event_span")
        ->check(CLI::IsMember({"true_range", "event_span"}));

    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus");
    add_common(synth_cmd, common);
    std::string synth_config;
    synth_cmd->add_option("--synth-config", synth_config, "generator configuration (JSON)");

    auto* report = app.add_subcommand("report", "Render report.csv, roc.csv and roc.svg");
    add_common(report, common);
    report->add_option("--results", results, "loo_results.csv")->required();
    report->add_option("--events", events, "events.csv")->required();
    report->add_option("--roc", roc, "roc.csv");
    report->add_option("--external", external, "external forecasts: event_id,forecast_text");

    auto* run = app.add_subcommand("run", "Run the whole pipeline from a configuration file");
    add_common(run, common);

    CLI11_PARSE(app, argc, argv);

    try {
        const fs::path out(common.out);
        if (*ingest) {
            const PipelineConfig c = common.load();
            std::optional<DayRange> w = window.empty() ? c.window : std::optional(parse_window(window));
            if (!w) throw std::invalid_argument("--window is required");
            const auto s = stage_ingest(postings, regions, *w, strict || c.strict, out, c.header());
            std::cerr << "ingest: " << s.accepted << " postings, " << s.rejected << " rejected, " << s.valid_days
                      << "/" << s.days << " valid days, " << s.bundles << " bundles\n";
        } else if (*featurize) {
            const PipelineConfig c = common.load();
            const auto pol = policy.empty() ? c.policy : parse_policy(policy);
            const auto s = stage_featurize(bundles, regions, baseline, pol, out, c.header());
            for (const auto& r : s.skipped_regions) std::cerr << "warning: skipped region " << r << '\n';
            std::cerr << "featurize: " << s.rows << " rows, " << s.complete_rows << " complete\n";
        } else if (*label) {
            const PipelineConfig c = common.load();
            const auto s = stage_label(features, events, volumes, regions, c.labeling, c.filter, out, c.header());
            for (const auto& e : s.excluded_events) std::cerr << "warning: event " << e << " has no locatable peak\n";
            std::cerr << "label: " << s.true_rows << " True, " << s.false_rows << " False, " << s.undefined_rows
                      << " Undefined";
            if (!regions.empty()) std::cerr << "; training set " << s.training_rows << " rows (" << s.training_positives << " True)";
            std::cerr << '\n';
            if (!regions.empty() && s.training_rows == 0) std::cerr << "warning: training set is empty\n";
        } else if (*train_cmd) {
            const PipelineConfig c = common.load();
            const auto f = stage_train(train, params_for(common, params), out / "model.txt", c.header());
            std::cerr << "train: " << f.trees.size() << " trees on " << f.selected_features.size() << " features\n";
        } else if (*predict) {
            const PipelineConfig c = common.load();
            const auto n = stage_predict(model, features, out / "predictions.csv", c.header());
            std::cerr << "predict: scored " << n << " rows\n";
        } else if (*evaluate) {
            const PipelineConfig c = common.load();
            EvaluateInputs in{train, labels, features, events, ranges, external};
            const auto s = stage_evaluate(in, params_for(common, params), c.folds, c.fold_seed(), c.loo, out,
                                          c.header());
            std::cout << "auc " << format_number(s.cv.pooled_roc.auc) << "\nprecision "
                      << format_precision(s.cv.pooled.precision) << "\nrecall " << format_number(s.cv.pooled.recall)
                      << '\n';
            if (s.loo) std::cout << "hit_rate " << format_number(s.loo->hit_rate) << '\n';
        } else if (*loo) {
            PipelineConfig c = common.load();
            if (!hit_range.empty()) c.loo.hit_range = parse_hit_range(hit_range);
            EvaluateInputs in{train, labels, features, events, ranges, external};
            const auto r = stage_loo(in, params_for(common, params), c.loo, out, c.header());
            for (const auto& s : r.skipped) std::cerr << "skipped " << s.event_id << ": " << s.reason << '\n';
            std::cout << "hit_rate " << format_number(r.hit_rate) << " over " << r.results.size() << " events\n";
        } else if (*synth_cmd) {
            PipelineConfig c = common.load();
            std::optional<synth::SynthConfig> sc;
            if (!synth_config.empty()) {
                sc = synth::load_config(synth_config);
                if (common.seed) sc->seed = c.synth_seed();
            } else {
                sc = c.synth;
            }
            if (!sc) throw std::invalid_argument("synth needs --synth-config or a config with a synth section");
            ArtifactHeader h = c.header();
            if (c.digest == "none") h.seed = sc->seed;
            const auto corpus = synth::generate(*sc);
            synth::write_corpus(corpus, out, h);
            std::cerr << "synth: " << corpus.postings.size() << " postings, " << corpus.events.size() << " events\n";
        } else if (*report) {
            const PipelineConfig c = common.load();
            stage_report(results, events, roc, external, out, c.header());
        } else if (*run) {
            if (common.config.empty()) throw std::invalid_argument("run needs --config");
            const PipelineConfig c = common.load();
            const auto r = run_pipeline(c, out);
            std::cout << "valid_day_fraction "
                      << format_number(r.ingest.days ? double(r.ingest.valid_days) / double(r.ingest.days) : 0.0)
                      << "\ntraining_rows " << r.labels.training_rows << "\ntraining_positives "
                      << r.labels.training_positives << "\nauc " << format_number(r.evaluation.cv.pooled_roc.auc)
                      << "\nprecision " << format_precision(r.evaluation.cv.pooled.precision) << "\nrecall "
                      << format_number(r.evaluation.cv.pooled.recall) << '\n';
            if (r.evaluation.loo) std::cout << "hit_rate " << format_number(r.evaluation.loo->hit_rate) << '\n';
        }
    } catch (const StageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        const auto active = app.get_subcommands();
        std::cerr << "error: " << (active.empty() ? std::string("floodsignal") : active.front()->get_name()) << ": "
                  << e.what() << '\n';
        return 1;
    }
    return 0;
}
