#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace floodsignal {

/// Malformed or unreadable input file.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Provenance written as the leading comment line of every artifact.
struct ArtifactHeader {
    std::string tool_version = FLOODSIGNAL_VERSION;
    std::uint64_t seed = 0;
    std::string config_digest = "none";

    std::string line() const;
};

/// Shortest round-trip decimal form; NaN prints as "nan".
std::string format_number(double value);
double parse_number(std::string_view text);
std::int64_t parse_integer(std::string_view text);

/// Minimal CSV: comma separated, double-quoted fields may contain commas.
/// Lines starting with '#' are comments.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> comments;

    /// Column position by name; throws InputError if absent.
    std::size_t column(std::string_view name) const;
    bool has_column(std::string_view name) const;
};

std::vector<std::string> split_csv_line(std::string_view line);
CsvTable read_csv(std::istream& in, std::string_view what);
CsvTable read_csv_file(const std::filesystem::path& path);
std::string csv_escape(std::string_view field);

std::ifstream open_input(const std::filesystem::path& path);
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace floodsignal
