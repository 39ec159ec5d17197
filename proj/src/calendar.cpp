#include "floodsignal/calendar.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <stdexcept>

namespace floodsignal {

namespace {

bool read_digits(std::string_view text, std::size_t pos, std::size_t count, int& out) {
    if (pos + count > text.size()) return false;
    int value = 0;
    for (std::size_t i = pos; i < pos + count; ++i) {
        const char c = text[i];
        if (c < '0' || c > '9') return false;
        value = value * 10 + (c - '0');
    }
    out = value;
    return true;
}

std::optional<Day> try_parse_day(std::string_view text) {
    int y = 0, m = 0, d = 0;
    if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    if (!read_digits(text, 0, 4, y) || !read_digits(text, 5, 2, m) || !read_digits(text, 8, 2, d))
        return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(m)},
                                          std::chrono::day{unsigned(d)}};
    if (!ymd.ok()) return std::nullopt;
    return Day{static_cast<std::int32_t>(std::chrono::sys_days{ymd}.time_since_epoch().count())};
}

}  // namespace

Day make_day(int year, unsigned month, unsigned day) {
    const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                          std::chrono::day{day}};
    if (!ymd.ok()) throw std::invalid_argument("invalid calendar date");
    return Day{static_cast<std::int32_t>(std::chrono::sys_days{ymd}.time_since_epoch().count())};
}

Day day_of(Timestamp ts) {
    Timestamp q = ts / kSecondsPerDay;
    if (ts % kSecondsPerDay < 0) --q;
    return Day{static_cast<std::int32_t>(q)};
}

Timestamp start_of(Day d) { return Timestamp{d.index} * kSecondsPerDay; }

Day parse_day(std::string_view text) {
    if (text.size() != 10) throw std::invalid_argument("expected YYYY-MM-DD, got '" + std::string(text) + "'");
    auto d = try_parse_day(text);
    if (!d) throw std::invalid_argument("expected YYYY-MM-DD, got '" + std::string(text) + "'");
    return *d;
}

std::string format_day(Day d) {
    const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{d.index}}};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                  unsigned(ymd.day()));
    return buf;
}

DayRange parse_window(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos)
        throw std::invalid_argument("window must be <start>:<end>, got '" + std::string(text) + "'");
    DayRange w{parse_day(text.substr(0, colon)), parse_day(text.substr(colon + 1))};
    if (w.empty()) throw std::invalid_argument("window end precedes start: '" + std::string(text) + "'");
    return w;
}

std::string format_window(const DayRange& window) {
    return format_day(window.first) + ":" + format_day(window.last);
}

std::optional<Timestamp> parse_rfc3339(std::string_view text) {
    // YYYY-MM-DDTHH:MM:SS[.frac](Z|+HH:MM|-HH:MM)
    if (text.size() < 20) return std::nullopt;
    auto day = try_parse_day(text.substr(0, 10));
    if (!day) return std::nullopt;
    if (text[10] != 'T' && text[10] != 't' && text[10] != ' ') return std::nullopt;
    int hh = 0, mm = 0, ss = 0;
    if (!read_digits(text, 11, 2, hh) || text[13] != ':' || !read_digits(text, 14, 2, mm) ||
        text[16] != ':' || !read_digits(text, 17, 2, ss))
        return std::nullopt;
    if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
    std::size_t pos = 19;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        const std::size_t digits_start = pos;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
        if (pos == digits_start) return std::nullopt;
    }
    if (pos >= text.size()) return std::nullopt;
    std::int64_t offset = 0;
    const char z = text[pos];
    if (z == 'Z' || z == 'z') {
        if (pos + 1 != text.size()) return std::nullopt;
    } else if (z == '+' || z == '-') {
        int oh = 0, om = 0;
        if (pos + 6 != text.size() || !read_digits(text, pos + 1, 2, oh) || text[pos + 3] != ':' ||
            !read_digits(text, pos + 4, 2, om) || oh > 23 || om > 59)
            return std::nullopt;
        offset = (oh * 3600 + om * 60) * (z == '+' ? 1 : -1);
    } else {
        return std::nullopt;
    }
    return start_of(*day) + hh * 3600 + mm * 60 + ss - offset;
}

std::string format_rfc3339(Timestamp ts) {
    const Day d = day_of(ts);
    const Timestamp sec = ts - start_of(d);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02dZ", format_day(d).c_str(), int(sec / 3600),
                  int(sec / 60 % 60), int(sec % 60));
    return buf;
}

YearMonth parse_year_month(std::string_view text) {
    int y = 0, m = 0;
    if (text.size() != 7 || text[4] != '-' || !read_digits(text, 0, 4, y) || !read_digits(text, 5, 2, m) ||
        m < 1 || m > 12)
        throw std::invalid_argument("expected YYYY-MM, got '" + std::string(text) + "'");
    return YearMonth{y, unsigned(m)};
}

std::string format_year_month(const YearMonth& ym) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u", ym.year, ym.month);
    return buf;
}

int days_in_month(const YearMonth& ym) {
    using namespace std::chrono;
    const year_month_day_last last{year{ym.year} / month{ym.month} / std::chrono::last};
    return static_cast<int>(unsigned(last.day()));
}

}  // namespace floodsignal
