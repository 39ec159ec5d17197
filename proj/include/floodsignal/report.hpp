#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "floodsignal/evaluator.hpp"
#include "floodsignal/labeler.hpp"
#include "floodsignal/table_io.hpp"

namespace floodsignal {

/// event_id -> forecast text such as "30-40%".
using ExternalForecasts = std::map<std::string, std::string>;

ExternalForecasts read_external(std::istream& in);
ExternalForecasts read_external_file(const std::filesystem::path& path);

/// Fills EventResult::external_forecast; returns the ids with no entry.
std::vector<std::string> join_external(std::span<EventResult> results, const ExternalForecasts& external);

std::string_view outcome_name(Outcome outcome);

/// Columns: event_id,place,country,days,result[,external_forecast],event_type.
/// The forecast column is present only when `with_external` is set.
void write_event_report(std::ostream& out, std::span<const EventResult> results,
                        std::span<const GroundTruthEvent> events, bool with_external, const ArtifactHeader& header);

void write_roc_csv(std::ostream& out, const RocCurve& roc, const ArtifactHeader& header);
void write_roc_svg(std::ostream& out, const RocCurve& roc, const ArtifactHeader& header);

/// Per-event, per-day scores from a leave-one-out run.
void write_loo_scores(std::ostream& out, std::span<const EventResult> results, const ArtifactHeader& header);

struct ReportFiles {
    std::filesystem::path report_csv;
    std::filesystem::path roc_csv;
    std::filesystem::path roc_svg;
    std::vector<std::string> warnings;
};

/// Writes report.csv, roc.csv and roc.svg into `dir`. Throws
/// std::invalid_argument when `results` is empty.
ReportFiles render_report(std::vector<EventResult> results, std::span<const GroundTruthEvent> events,
                          const RocCurve& roc, const ExternalForecasts* external, const std::filesystem::path& dir,
                          const ArtifactHeader& header);

}  // namespace floodsignal
