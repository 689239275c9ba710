#pragma once

// Turns coincidence tallies into single-particle averages, two-particle
// correlations, CHSH quantities and coincidence frequencies.

#include "eprsim/core.hpp"
#include "eprsim/pairing.hpp"

#include <functional>

namespace eprsim {

/// Per-(m, m') slice of a correlation report. Entries with no coincidences
/// keep their correlations undefined rather than dividing by zero.
struct SettingPairEntry {
    Angle alpha, beta;
    std::uint64_t c_pp = 0, c_pm = 0, c_mp = 0, c_mm = 0;
    std::uint64_t pairs = 0;  // pairs carrying this setting combination (0 if unknown)
    std::optional<double> e1, e2, e;
    std::optional<double> gamma;  // coincidence frequency

    std::uint64_t coincidences() const { return c_pp + c_pm + c_mp + c_mm; }
};

struct CorrelationReport {
    int m1 = 1, m2 = 1;
    std::vector<SettingPairEntry> entries;  // m-major order
    std::vector<std::optional<double>> station1_means;  // unconditioned mean outcome per setting
    std::vector<std::optional<double>> station2_means;
    int undefined_entries = 0;

    // run summary (meaningful for simulated reports)
    std::optional<double> s_max;
    double window = 0.0, delay_exponent = 0.0, tag_resolution = 0.0;
    std::uint64_t seed = 0;

    const SettingPairEntry& at(int m, int mp) const {
        return entries[static_cast<std::size_t>(m - 1) * m2 + (mp - 1)];
    }
    SettingPairEntry& at(int m, int mp) {
        return entries[static_cast<std::size_t>(m - 1) * m2 + (mp - 1)];
    }
};

/// E1, E2, E per setting pair from the coincidence counts:
///   E = (C++ + C-- - C+- - C-+) / (sum of all four).
inline std::vector<SettingPairEntry> correlations(const CoincidenceTally& tally,
                                                  const std::vector<Angle>& angles1,
                                                  const std::vector<Angle>& angles2) {
    std::vector<SettingPairEntry> out;
    out.reserve(static_cast<std::size_t>(tally.m1) * tally.m2);
    for (int m = 1; m <= tally.m1; ++m) {
        for (int mp = 1; mp <= tally.m2; ++mp) {
            SettingPairEntry en;
            en.alpha = angles1[static_cast<std::size_t>(m - 1)];
            en.beta = angles2[static_cast<std::size_t>(mp - 1)];
            en.c_pp = tally.at(m, mp, +1, +1);
            en.c_pm = tally.at(m, mp, +1, -1);
            en.c_mp = tally.at(m, mp, -1, +1);
            en.c_mm = tally.at(m, mp, -1, -1);
            const std::uint64_t total = en.coincidences();
            if (total > 0) {
                const double n = static_cast<double>(total);
                const double pp = static_cast<double>(en.c_pp), pm = static_cast<double>(en.c_pm);
                const double mp_ = static_cast<double>(en.c_mp), mm = static_cast<double>(en.c_mm);
                en.e1 = (pp + pm - mp_ - mm) / n;
                en.e2 = (pp - pm + mp_ - mm) / n;
                en.e = (pp + mm - pm - mp_) / n;
            }
            out.push_back(en);
        }
    }
    return out;
}

/// S(alpha, alpha', beta, beta') = E(a,b) - E(a,b') + E(a',b) + E(a',b').
inline double chsh_s(double e_ab, double e_abp, double e_apb, double e_apbp) {
    return e_ab - e_abp + e_apb + e_apbp;
}

using CorrelationFn = std::function<std::optional<double>(Angle, Angle)>;

/// S(theta): the CHSH combination at the angle relations beta = alpha + theta,
/// alpha' = alpha + 2 theta, beta' = alpha + 3 theta, with alpha = 0 by
/// rotational invariance.
inline std::optional<double> s_theta(const CorrelationFn& corr, double theta) {
    const auto e_ab = corr(Angle(0.0), Angle(theta));
    const auto e_abp = corr(Angle(0.0), Angle(3.0 * theta));
    const auto e_apb = corr(Angle(2.0 * theta), Angle(theta));
    const auto e_apbp = corr(Angle(2.0 * theta), Angle(3.0 * theta));
    if (!e_ab || !e_abp || !e_apb || !e_apbp) return std::nullopt;
    return chsh_s(*e_ab, *e_abp, *e_apb, *e_apbp);
}

struct SmaxResult {
    double s_max = 0.0;
    double arg_theta = 0.0;       // argmax for the theta scan
    int skipped = 0;              // grid points with undefined correlations
};

/// max over a theta grid on [0, pi) of S(theta).
inline SmaxResult smax_theta_scan(const CorrelationFn& corr, int grid_points = 360) {
    SmaxResult r;
    bool have = false;
    for (int i = 0; i < grid_points; ++i) {
        const double theta = kPi * static_cast<double>(i) / grid_points;
        const auto s = s_theta(corr, theta);
        if (!s) {
            ++r.skipped;
            continue;
        }
        if (!have || *s > r.s_max) {
            r.s_max = *s;
            r.arg_theta = theta;
            have = true;
        }
    }
    if (!have) throw std::runtime_error("smax_theta_scan: no grid point has all four correlations defined");
    return r;
}

/// max over all setting 4-tuples (a, a', b, b') of |S| for a tabulated
/// E(a_i, b_j); the magnitude absorbs the sign freedom a relabeling of
/// channels or settings would give. Tuples touching an undefined entry are
/// skipped.
inline SmaxResult smax_four_angle(const std::vector<std::vector<std::optional<double>>>& table) {
    const std::size_t na = table.size();
    const std::size_t nb = na ? table[0].size() : 0;
    SmaxResult r;
    bool have = false;
    for (std::size_t a = 0; a < na; ++a)
        for (std::size_t ap = 0; ap < na; ++ap)
            for (std::size_t b = 0; b < nb; ++b)
                for (std::size_t bp = 0; bp < nb; ++bp) {
                    const auto& e_ab = table[a][b];
                    const auto& e_abp = table[a][bp];
                    const auto& e_apb = table[ap][b];
                    const auto& e_apbp = table[ap][bp];
                    if (!e_ab || !e_abp || !e_apb || !e_apbp) {
                        ++r.skipped;
                        continue;
                    }
                    const double s = std::abs(chsh_s(*e_ab, *e_abp, *e_apb, *e_apbp));
                    if (!have || s > r.s_max) {
                        r.s_max = s;
                        have = true;
                    }
                }
    if (!have) throw std::runtime_error("smax_four_angle: table has no fully defined 4-tuple");
    return r;
}

/// Coincidence frequency Gamma over pair-indexed logs: the fraction of pairs
/// whose recorded (tag) times differ by less than W. Evaluated on the
/// discretized clock readings, exactly as the coincidence counting is.
inline double gamma_frequency(const EventLog& log1, const EventLog& log2, double window) {
    if (log1.events.size() != log2.events.size() || log1.events.empty())
        throw std::invalid_argument("gamma_frequency: logs must be pair-indexed and nonempty");
    const double tau = log1.tag_resolution;
    const std::int64_t k = tag_window(window, tau);
    std::uint64_t hits = 0;
    for (std::size_t i = 0; i < log1.events.size(); ++i) {
        if (log1.events[i].pair_index != log2.events[i].pair_index)
            throw std::invalid_argument("gamma_frequency: logs are not pair-aligned");
        if (std::llabs(log1.events[i].tag - log2.events[i].tag) < k) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(log1.events.size());
}

struct SettingMeans {
    std::vector<std::optional<double>> mean;  // per setting index, undefined if no events
    std::vector<std::uint64_t> count;
};

/// Per-setting mean outcome over all events, disregarding any coincidence
/// criterion.
inline SettingMeans unconditioned_means(const EventLog& log) {
    SettingMeans out;
    out.mean.resize(static_cast<std::size_t>(log.num_settings));
    out.count.resize(static_cast<std::size_t>(log.num_settings), 0);
    std::vector<std::int64_t> sum(static_cast<std::size_t>(log.num_settings), 0);
    for (const DetectionEvent& e : log.events) {
        const auto i = static_cast<std::size_t>(e.setting_index - 1);
        sum[i] += e.outcome;
        out.count[i] += 1;
    }
    for (std::size_t i = 0; i < sum.size(); ++i)
        if (out.count[i] > 0)
            out.mean[i] = static_cast<double>(sum[i]) / static_cast<double>(out.count[i]);
    return out;
}

}  // namespace eprsim
