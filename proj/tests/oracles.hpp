// Brute-force reference computations written straight from the rule
// definitions, sharing no code with the library beyond plain data types.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "floodsignal/features.hpp"
#include "floodsignal/labeler.hpp"

namespace oracle {

using floodsignal::Day;
using floodsignal::Label;

inline int bucket(double p) {
    if (p == 0.0) return 0;
    for (int i = 0; i < 10; ++i)
        if (i / 10.0 < p && p <= (i + 1) / 10.0) return i;
    return -1;
}

inline std::array<double, 10> counts(const std::vector<double>& relevances) {
    std::array<double, 10> c{};
    for (double p : relevances) c[static_cast<std::size_t>(bucket(p))] += 1.0;
    return c;
}

/// Full 73-long vector for the last of three consecutive days.
inline std::array<double, 73> feature_vector(const std::vector<double>& d2, const std::vector<double>& d1,
                                             const std::vector<double>& d0, int lang, double expected,
                                             floodsignal::NormalizationPolicy policy) {
    const auto c2 = counts(d2), c1 = counts(d1), c0 = counts(d0);
    auto fractions = [](const std::array<double, 10>& c, double total) {
        std::array<double, 10> f{};
        for (int i = 0; i < 10; ++i) f[i] = total > 0 ? c[i] / total : 0.0;
        return f;
    };
    const auto p2 = fractions(c2, double(d2.size())), p1 = fractions(c1, double(d1.size())),
               p0 = fractions(c0, double(d0.size()));
    const bool consistent = policy == floodsignal::NormalizationPolicy::Consistent;

    std::array<double, 73> v{};
    std::size_t k = 0;
    v[k++] = lang;
    v[k++] = double(d0.size()) / expected;
    for (int i = 0; i < 10; ++i) v[k++] = c0[i] / expected;
    for (int i = 0; i < 10; ++i) v[k++] = p0[i];
    const double window_total = double(d0.size() + d1.size() + d2.size());
    for (int i = 0; i < 10; ++i) {
        const double t3 = c0[i] + c1[i] + c2[i];
        v[k++] = consistent ? t3 / expected : t3;
    }
    for (int i = 0; i < 10; ++i) {
        const double m = window_total > 0 ? (c0[i] + c1[i] + c2[i]) / window_total : 0.0;
        v[k++] = consistent ? m : m / expected;
    }
    for (int i = 0; i < 10; ++i) {
        const double a = (p0[i] + p1[i] + p2[i]) / 3.0;
        v[k++] = consistent ? a : a / expected;
    }
    for (int i = 0; i < 10; ++i) v[k++] = (c0[i] - c1[i]) / expected;
    for (int i = 0; i < 10; ++i) {
        double inc = 0;
        if (c0[i] - c1[i] > inc) inc = c0[i] - c1[i];
        if (c1[i] - c2[i] > inc) inc = c1[i] - c2[i];
        v[k++] = inc / expected;
    }
    v[k++] = expected;
    return v;
}

struct Event {
    std::string region;
    std::string country;
    int start;  // day offsets within the timeline
    int end;
};

/// Day-by-day labels for `regions` x [0, days), from volumes[region][day]
/// (missing day -> absent from the inner map).
inline std::map<std::pair<std::string, int>, Label> labels(
    const std::vector<std::string>& regions, const std::map<std::string, std::string>& country_of, int days,
    const std::vector<Event>& events, const std::map<std::string, std::map<int, double>>& volumes) {
    struct Range {
        bool located = false;
        int begin = 0, end = 0;
    };
    std::vector<Range> ranges;
    for (const auto& e : events) {
        Range r;
        const auto vit = volumes.find(e.region);
        const std::map<int, double> empty;
        const auto& vol = vit == volumes.end() ? empty : vit->second;
        int peak = 0;
        double best = -1;
        for (int d = e.start; d <= e.end; ++d) {
            auto it = vol.find(d);
            if (it != vol.end() && it->second > best) {
                best = it->second;
                peak = d;
                r.located = true;
            }
        }
        if (r.located) {
            int b = peak;
            while (b - 1 >= e.start - 10 && vol.count(b - 1) && vol.count(b) && vol.at(b - 1) < vol.at(b)) --b;
            r.begin = b;
            r.end = peak + 1;
        }
        ranges.push_back(r);
    }

    std::map<std::pair<std::string, int>, Label> out;
    for (const auto& region : regions) {
        bool has_event = false;
        for (const auto& e : events) has_event = has_event || e.region == region;
        for (int d = 0; d < days; ++d) {
            if (!has_event) {
                out[{region, d}] = Label::Undefined;
                continue;
            }
            bool is_true = false, is_undefined = false;
            for (std::size_t i = 0; i < events.size(); ++i) {
                const auto& e = events[i];
                if (e.region == region) {
                    if (ranges[i].located && d >= ranges[i].begin && d <= ranges[i].end) is_true = true;
                    if (!ranges[i].located && d >= e.start && d <= e.end) is_undefined = true;
                    if (d >= e.start - 10 && d <= e.start - 1) is_undefined = true;
                    if (d >= e.end + 1 && d <= e.end + 10) is_undefined = true;
                } else if (country_of.at(region) == e.country && d >= e.start - 5 && d <= e.end + 20) {
                    bool own_flood_in_period = false;
                    for (const auto& o : events)
                        if (o.region == region && o.start <= e.end + 20 && o.end >= e.start - 5)
                            own_flood_in_period = true;
                    if (!own_flood_in_period) is_undefined = true;
                }
            }
            out[{region, d}] = is_true ? Label::True : is_undefined ? Label::Undefined : Label::False;
        }
    }
    return out;
}

struct RootSplit {
    bool leaf = true;
    std::size_t feature = 0;
    double threshold = 0.0;
};

/// Exhaustive search over every (feature, midpoint) pair; first of the
/// minimum-impurity candidates in (feature, threshold) order wins.
inline RootSplit root_split(const std::vector<std::array<double, 2>>& x, const std::vector<int>& y) {
    const double n = double(y.size());
    double pos = 0;
    for (int v : y) pos += v;
    if (pos == 0 || pos == n) return {};
    auto gini_n = [](double p, double m) { return m == 0 ? 0.0 : m * (1.0 - (p / m) * (p / m) - ((m - p) / m) * ((m - p) / m)); };
    const double parent = gini_n(pos, n);

    struct Candidate {
        std::size_t f;
        double t;
        double impurity;
    };
    std::vector<Candidate> all;
    for (std::size_t f = 0; f < 2; ++f) {
        std::set<double> distinct;
        for (const auto& row : x) distinct.insert(row[f]);
        std::vector<double> vals(distinct.begin(), distinct.end());
        for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
            const double t = (vals[i] + vals[i + 1]) / 2.0;
            double ln = 0, lp = 0, rn = 0, rp = 0;
            for (std::size_t r = 0; r < x.size(); ++r) {
                if (x[r][f] <= t) {
                    ln += 1;
                    lp += y[r];
                } else {
                    rn += 1;
                    rp += y[r];
                }
            }
            all.push_back({f, t, gini_n(lp, ln) + gini_n(rp, rn)});
        }
    }
    if (all.empty()) return {};
    double lowest = std::numeric_limits<double>::infinity();
    for (const auto& c : all) lowest = std::min(lowest, c.impurity);
    if (!(lowest < parent - 1e-9)) return {};
    for (const auto& c : all)
        if (c.impurity <= lowest + 1e-9) return {false, c.f, c.t};
    return {};
}

/// Probability that a random positive outranks a random negative (ties 1/2).
inline double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            pairs += 1;
            if (scores[i] > scores[j]) wins += 1;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / pairs;
}

/// F = (SST - SSW) / (SSW / (N - 2)), two-pass.
inline double anova(const std::vector<double>& x, const std::vector<int>& y) {
    double n = 0, sum = 0;
    double n1 = 0, s1 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        n += 1;
        sum += x[i];
        if (y[i]) {
            n1 += 1;
            s1 += x[i];
        }
    }
    const double mean = sum / n, mean1 = s1 / n1, mean0 = (sum - s1) / (n - n1);
    double sst = 0, ssw = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sst += (x[i] - mean) * (x[i] - mean);
        const double g = y[i] ? mean1 : mean0;
        ssw += (x[i] - g) * (x[i] - g);
    }
    return (sst - ssw) / (ssw / (n - 2));
}

}  // namespace oracle
