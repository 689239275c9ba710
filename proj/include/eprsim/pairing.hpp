#pragma once

// Coincidence identification. The simulation criterion pairs the n-th events
// of the two logs when |k1 - k2| < k; the three stream procedures (fixed
// time bins, relative window, shifted relative window) make no use of the
// pair index and work on any two time-ordered event streams, as in the
// analysis of laboratory data.

#include "eprsim/core.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <utility>

namespace eprsim {

/// C_xy(alpha_m, beta_m'): coincidence counts per setting pair and outcome
/// pair, plus the totals needed for frequencies.
struct CoincidenceTally {
    int m1 = 1, m2 = 1;
    std::vector<std::uint64_t> counts;  // (m,m') blocks of {++, +-, -+, --}
    std::uint64_t total_events_1 = 0;
    std::uint64_t total_events_2 = 0;
    std::uint64_t num_coincidences = 0;

    CoincidenceTally() : counts(4, 0) {}
    CoincidenceTally(int m1_, int m2_) : m1(m1_), m2(m2_), counts(static_cast<std::size_t>(m1_) * m2_ * 4, 0) {}

    static std::size_t xy_slot(int x, int y) {
        return static_cast<std::size_t>(x > 0 ? 0 : 2) + static_cast<std::size_t>(y > 0 ? 0 : 1);
    }

    std::uint64_t& at(int m, int mp, int x, int y) {
        return counts[(static_cast<std::size_t>(m - 1) * m2 + (mp - 1)) * 4 + xy_slot(x, y)];
    }
    std::uint64_t at(int m, int mp, int x, int y) const {
        return counts[(static_cast<std::size_t>(m - 1) * m2 + (mp - 1)) * 4 + xy_slot(x, y)];
    }

    void add_match(const DetectionEvent& a, const DetectionEvent& b) {
        at(a.setting_index, b.setting_index, a.outcome, b.outcome) += 1;
        ++num_coincidences;
    }

    /// Merging partial tallies is associative and commutative.
    void merge(const CoincidenceTally& o) {
        for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
        total_events_1 += o.total_events_1;
        total_events_2 += o.total_events_2;
        num_coincidences += o.num_coincidences;
    }

    friend bool operator==(const CoincidenceTally& a, const CoincidenceTally& b) {
        return a.m1 == b.m1 && a.m2 == b.m2 && a.counts == b.counts &&
               a.num_coincidences == b.num_coincidences;
    }
};

enum class PairingProcedure { index_window, binned_clock, relative_window, shifted_window };

struct PairingSpec {
    PairingProcedure procedure = PairingProcedure::index_window;
    double window = 0.0;               // W, for relative/shifted
    double bin_size = 0.0;             // B, for binned (convention B = 2W)
    std::int64_t k = 1;                // for index_window
    double histogram_resolution = 0.0; // for shifted
};

/// Optional record of which event indices were matched, for cross-procedure
/// consistency checks.
using MatchList = std::vector<std::pair<std::size_t, std::size_t>>;

namespace detail {

inline CoincidenceTally make_tally(const EventLog& log1, const EventLog& log2) {
    CoincidenceTally t(log1.num_settings, log2.num_settings);
    t.total_events_1 = log1.events.size();
    t.total_events_2 = log2.events.size();
    return t;
}

}  // namespace detail

/// Simulation criterion: the n-th events form a pair iff |k_n1 - k_n2| < k.
/// Requires pair-indexed logs with identical pair sets.
inline CoincidenceTally count_index_window(const EventLog& log1, const EventLog& log2,
                                           std::int64_t k, MatchList* matches = nullptr) {
    if (log1.events.size() != log2.events.size())
        throw std::invalid_argument("count_index_window: logs are not pair-aligned (sizes differ)");
    CoincidenceTally tally = detail::make_tally(log1, log2);
    for (std::size_t i = 0; i < log1.events.size(); ++i) {
        const DetectionEvent& a = log1.events[i];
        const DetectionEvent& b = log2.events[i];
        if (a.pair_index != b.pair_index)
            throw std::invalid_argument("count_index_window: logs are not pair-aligned (pair sets differ)");
        if (std::llabs(a.tag - b.tag) < k) {
            tally.add_match(a, b);
            if (matches) matches->emplace_back(i, i);
        }
    }
    return tally;
}

/// First stream procedure: equally spaced bins [jB, (j+1)B) against a
/// reference clock; events in the same bin are matched one-to-one in time
/// order. Events in adjacent bins never match, however close in time.
inline CoincidenceTally count_binned(const EventLog& log1, const EventLog& log2, double bin_size,
                                     MatchList* matches = nullptr) {
    CoincidenceTally tally = detail::make_tally(log1, log2);
    const auto& e1 = log1.events;
    const auto& e2 = log2.events;
    auto bin_of = [bin_size](const DetectionEvent& e) {
        return static_cast<std::int64_t>(std::floor(e.absolute_time / bin_size));
    };
    std::size_t i = 0, j = 0;
    while (i < e1.size() && j < e2.size()) {
        const std::int64_t b1 = bin_of(e1[i]);
        const std::int64_t b2 = bin_of(e2[j]);
        if (b1 < b2) { ++i; continue; }
        if (b2 < b1) { ++j; continue; }
        std::size_t i_end = i, j_end = j;
        while (i_end < e1.size() && bin_of(e1[i_end]) == b1) ++i_end;
        while (j_end < e2.size() && bin_of(e2[j_end]) == b1) ++j_end;
        const std::size_t n = std::min(i_end - i, j_end - j);
        for (std::size_t q = 0; q < n; ++q) {
            tally.add_match(e1[i + q], e2[j + q]);
            if (matches) matches->emplace_back(i + q, j + q);
        }
        i = i_end;
        j = j_end;
    }
    return tally;
}

/// Second stream procedure: greedy forward scan pairing each station-1 event
/// with the earliest unmatched station-2 event satisfying
/// |s1 - (s2 - delta)| < W. Each event is used at most once.
inline CoincidenceTally count_relative_window(const EventLog& log1, const EventLog& log2,
                                              double window, double delta = 0.0,
                                              MatchList* matches = nullptr) {
    CoincidenceTally tally = detail::make_tally(log1, log2);
    const auto& e1 = log1.events;
    const auto& e2 = log2.events;
    std::size_t j = 0;
    for (std::size_t i = 0; i < e1.size() && j < e2.size(); ++i) {
        const double s1 = e1[i].absolute_time;
        // station-2 events this early can no longer match any later s1 either
        while (j < e2.size() && e2[j].absolute_time - delta <= s1 - window) ++j;
        if (j == e2.size()) break;
        if (e2[j].absolute_time - delta - s1 < window) {
            tally.add_match(e1[i], e2[j]);
            if (matches) matches->emplace_back(i, j);
            ++j;
        }
    }
    return tally;
}

/// Third procedure, step one: estimate the constant clock offset of station 2
/// relative to station 1 from the histogram of time differences between
/// nearby events. Returns the center of the most populated bin; ties prefer
/// the smallest |delta|, then the positive sign.
inline double find_delta_shift(const EventLog& log1, const EventLog& log2, double resolution,
                               std::int64_t search_radius_bins = 100) {
    if (log1.events.empty() || log2.events.empty())
        throw std::invalid_argument("find_delta_shift: empty event log");
    const double radius = resolution * static_cast<double>(search_radius_bins);
    std::map<std::int64_t, std::uint64_t> histogram;
    const auto& e1 = log1.events;
    const auto& e2 = log2.events;
    std::size_t j_lo = 0;
    for (const DetectionEvent& a : e1) {
        while (j_lo < e2.size() && e2[j_lo].absolute_time < a.absolute_time - radius) ++j_lo;
        for (std::size_t j = j_lo; j < e2.size() && e2[j].absolute_time <= a.absolute_time + radius; ++j) {
            const double diff = e2[j].absolute_time - a.absolute_time;
            histogram[static_cast<std::int64_t>(std::llround(diff / resolution))] += 1;
        }
    }
    if (histogram.empty())
        throw std::runtime_error("find_delta_shift: no event pairs within the search radius");
    std::int64_t best_bin = 0;
    std::uint64_t best_count = 0;
    bool have = false;
    for (const auto& [bin, count] : histogram) {
        const bool better =
            !have || count > best_count ||
            (count == best_count && (std::llabs(bin) < std::llabs(best_bin) ||
                                     (std::llabs(bin) == std::llabs(best_bin) && bin > best_bin)));
        if (better) {
            best_bin = bin;
            best_count = count;
            have = true;
        }
    }
    return static_cast<double>(best_bin) * resolution;
}

struct ShiftedWindowResult {
    double delta = 0.0;
    CoincidenceTally tally;
};

/// Third procedure: maximize coincidences over the clock shift, then count
/// with the relative window.
inline ShiftedWindowResult count_shifted(const EventLog& log1, const EventLog& log2, double window,
                                         double resolution, MatchList* matches = nullptr,
                                         std::int64_t search_radius_bins = 100) {
    ShiftedWindowResult r;
    r.delta = find_delta_shift(log1, log2, resolution, search_radius_bins);
    r.tally = count_relative_window(log1, log2, window, r.delta, matches);
    return r;
}

}  // namespace eprsim
