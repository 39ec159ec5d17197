#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace floodsignal {

/// UTC calendar date, stored as days since 1970-01-01.
struct Day {
    std::int32_t index = 0;

    constexpr auto operator<=>(const Day&) const = default;

    constexpr Day operator+(std::int32_t n) const { return Day{index + n}; }
    constexpr Day operator-(std::int32_t n) const { return Day{index - n}; }
    constexpr std::int32_t operator-(Day other) const { return index - other.index; }
    constexpr Day& operator++() { ++index; return *this; }
};

/// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

inline constexpr std::int64_t kSecondsPerDay = 86400;

/// Closed range of days [first, last].
struct DayRange {
    Day first;
    Day last;

    bool empty() const { return last < first; }
    bool contains(Day d) const { return first <= d && d <= last; }
    std::int32_t size() const { return empty() ? 0 : (last - first) + 1; }
    Timestamp begin_time() const { return Timestamp{first.index} * kSecondsPerDay; }
    Timestamp end_time() const { return (Timestamp{last.index} + 1) * kSecondsPerDay; }
};

Day make_day(int year, unsigned month, unsigned day);
Day day_of(Timestamp ts);
Timestamp start_of(Day d);

/// Throws std::invalid_argument on anything but YYYY-MM-DD.
Day parse_day(std::string_view text);
std::string format_day(Day d);

/// "<start>:<end>" with ISO dates on both sides.
DayRange parse_window(std::string_view text);
std::string format_window(const DayRange& window);

/// RFC 3339 date-time with Z or numeric offset; fractional seconds truncated.
std::optional<Timestamp> parse_rfc3339(std::string_view text);
std::string format_rfc3339(Timestamp ts);

/// Calendar month written as YYYY-MM.
struct YearMonth {
    int year = 1970;
    unsigned month = 1;
    auto operator<=>(const YearMonth&) const = default;
};

YearMonth parse_year_month(std::string_view text);
std::string format_year_month(const YearMonth& ym);
int days_in_month(const YearMonth& ym);

}  // namespace floodsignal
