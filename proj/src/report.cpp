#include "floodsignal/report.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace floodsignal {

ExternalForecasts read_external(std::istream& in) {
    const CsvTable csv = read_csv(in, "external forecasts");
    const auto c_id = csv.column("event_id");
    const auto c_text = csv.column("forecast_text");
    ExternalForecasts out;
    for (const auto& rec : csv.rows) out[rec[c_id]] = rec[c_text];
    return out;
}

ExternalForecasts read_external_file(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_external(in);
}

std::vector<std::string> join_external(std::span<EventResult> results, const ExternalForecasts& external) {
    std::vector<std::string> missing;
    for (auto& r : results) {
        const auto it = external.find(r.event_id);
        if (it == external.end()) {
            r.external_forecast.reset();
            missing.push_back(r.event_id);
        } else {
            r.external_forecast = it->second;
        }
    }
    return missing;
}

std::string_view outcome_name(Outcome outcome) { return outcome == Outcome::Hit ? "hit" : "miss"; }

void write_event_report(std::ostream& out, std::span<const EventResult> results,
                        std::span<const GroundTruthEvent> events, bool with_external, const ArtifactHeader& header) {
    std::map<std::string, const GroundTruthEvent*> by_id;
    for (const auto& e : events) by_id.emplace(e.event_id, &e);
    out << header.line() << '\n' << "event_id,place,country,days,result";
    if (with_external) out << ",external_forecast";
    out << ",event_type\n";
    for (const auto& r : results) {
        const auto it = by_id.find(r.event_id);
        const GroundTruthEvent* e = it == by_id.end() ? nullptr : it->second;
        out << csv_escape(r.event_id) << ',' << csv_escape(e ? (e->place.empty() ? e->region_id : e->place) : "")
            << ',' << (e ? e->country : "") << ',' << (e ? std::to_string((e->end - e->start) + 1) : "") << ','
            << outcome_name(r.outcome);
        if (with_external) out << ',' << csv_escape(r.external_forecast.value_or(""));
        out << ',' << csv_escape(e ? e->type : "") << '\n';
    }
}

void write_roc_csv(std::ostream& out, const RocCurve& roc, const ArtifactHeader& header) {
    out << header.line() << '\n' << "# auc=" << format_number(roc.auc) << '\n' << "threshold,fpr,tpr\n";
    for (const auto& p : roc.points)
        out << format_number(p.threshold) << ',' << format_number(p.false_positive_rate) << ','
            << format_number(p.true_positive_rate) << '\n';
}

void write_roc_svg(std::ostream& out, const RocCurve& roc, const ArtifactHeader& header) {
    constexpr double size = 400, margin = 50;
    auto x = [&](double fpr) { return margin + fpr * size; };
    auto y = [&](double tpr) { return margin + (1.0 - tpr) * size; };
    char buf[128];
    out << "<!-- " << header.line().substr(2) << " -->\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"500\" height=\"500\" viewBox=\"0 0 500 500\">\n";
    out << "<rect x=\"50\" y=\"50\" width=\"400\" height=\"400\" fill=\"none\" stroke=\"#333\"/>\n";
    out << "<line x1=\"50\" y1=\"450\" x2=\"450\" y2=\"50\" stroke=\"#aaa\" stroke-dasharray=\"4 4\"/>\n";
    out << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < roc.points.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", i ? " " : "", x(roc.points[i].false_positive_rate),
                      y(roc.points[i].true_positive_rate));
        out << buf;
    }
    out << "\"/>\n";
    std::snprintf(buf, sizeof buf, "AUC = %.3f", roc.auc);
    out << "<text x=\"250\" y=\"30\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">ROC (" << buf
        << ")</text>\n";
    out << "<text x=\"250\" y=\"485\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
           "False positive rate</text>\n";
    out << "<text x=\"18\" y=\"250\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
           "transform=\"rotate(-90 18 250)\">True positive rate</text>\n";
    out << "</svg>\n";
}

void write_loo_scores(std::ostream& out, std::span<const EventResult> results, const ArtifactHeader& header) {
    out << header.line() << '\n' << "event_id,day,score\n";
    for (const auto& r : results)
        for (const auto& [day, s] : r.per_day_scores)
            out << csv_escape(r.event_id) << ',' << format_day(day) << ',' << format_number(s) << '\n';
}

ReportFiles render_report(std::vector<EventResult> results, std::span<const GroundTruthEvent> events,
                          const RocCurve& roc, const ExternalForecasts* external, const std::filesystem::path& dir,
                          const ArtifactHeader& header) {
    if (results.empty()) throw std::invalid_argument("no event results to report");
    ReportFiles files;
    files.report_csv = dir / "report.csv";
    files.roc_csv = dir / "roc.csv";
    files.roc_svg = dir / "roc.svg";
    if (external)
        for (const auto& id : join_external(results, *external))
            files.warnings.push_back("no external forecast for event " + id);
    {
        auto out = open_output(files.report_csv);
        write_event_report(out, results, events, external != nullptr, header);
    }
    {
        auto out = open_output(files.roc_csv);
        write_roc_csv(out, roc, header);
    }
    {
        auto out = open_output(files.roc_svg);
        write_roc_svg(out, roc, header);
    }
    return files;
}

}  // namespace floodsignal
