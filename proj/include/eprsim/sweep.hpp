#pragma once

// Parameter scans over theta, the delay exponent d and the window W. Each
// grid point runs as an independent deterministic simulation whose seed is
// derived from the base seed and the grid coordinate.

#include "eprsim/oracle.hpp"
#include "eprsim/simulate.hpp"
#include "eprsim/ttio.hpp"

#include <limits>

namespace eprsim {

struct SweepConfig {
    ExperimentCase experiment = ExperimentCase::case_one;
    std::uint64_t num_pairs = 1000000;
    double delay_exponent = 4.0;
    double tag_resolution = 0.00025;
    double window = 0.00025;
    std::int64_t k_override = 0;  // 0: k = ceil(W/tau); <0: no window (all pairs)
    std::optional<Angle> eta1, eta2;
    double emission_spacing = 4.0;
    std::uint64_t seed = 1;
    unsigned workers = 0;
};

inline std::uint64_t sub_seed(std::uint64_t seed, const std::string& coordinate) {
    return derive_stream(seed, "sweep/" + coordinate).next_u64();
}

struct ThetaSweepRow {
    double theta = 0.0;
    std::optional<double> e;        // simulated two-particle correlation
    std::optional<double> gamma;    // coincidence frequency C/N
    std::uint64_t coincidences = 0;
    std::uint64_t pairs = 0;
    double e_oracle = 0.0;
    std::optional<double> s;        // S(theta) composed from the measured curve
    double p1_plus = 0.0, p2_plus = 0.0;  // unconditioned +1 fractions
};

struct ThetaSweepResult {
    std::vector<ThetaSweepRow> rows;
    std::optional<double> s_max;
    double s_max_arg = 0.0;
};

namespace detail {

// Case-I correlations depend on the settings only through alpha - beta
// (rotational invariance), with period pi and even symmetry; fold a lookup
// angle onto the sampled grid.
inline std::optional<double> lookup_e(const std::vector<ThetaSweepRow>& rows, double phi) {
    double f = std::fmod(phi, kPi);
    if (f < 0.0) f += kPi;
    const double alt = kPi - f;
    for (const auto& r : rows) {
        if (std::abs(r.theta - f) < 1e-9 || std::abs(r.theta - alt) < 1e-9) return r.e;
    }
    return std::nullopt;
}

}  // namespace detail

/// One simulation per theta. Case I measures E(0, theta); Case II measures
/// E(theta, theta + pi/4) with the pre-polarizers fixed (the paper's Fig. 6
/// arrangement). For Case I, S(theta) is composed from the measured curve via
/// rotational invariance and maximized over the grid.
inline ThetaSweepResult theta_sweep(const SweepConfig& sweep, const std::vector<double>& thetas) {
    ThetaSweepResult out;
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        const double theta = thetas[i];
        SimConfig cfg;
        cfg.experiment = sweep.experiment;
        cfg.num_pairs = sweep.num_pairs;
        cfg.delay_exponent = sweep.delay_exponent;
        cfg.tag_resolution = sweep.tag_resolution;
        cfg.window = sweep.window;
        cfg.emission_spacing = sweep.emission_spacing;
        cfg.eta1 = sweep.eta1;
        cfg.eta2 = sweep.eta2;
        cfg.seed = sub_seed(sweep.seed, "theta/" + detail::format_double(theta));
        if (sweep.experiment == ExperimentCase::case_one) {
            cfg.angles1 = {Angle(0.0)};
            cfg.angles2 = {Angle(theta)};
        } else {
            cfg.angles1 = {Angle(theta)};
            cfg.angles2 = {Angle(theta + kPi / 4.0)};
        }
        const std::int64_t k = sweep.k_override < 0 ? std::numeric_limits<std::int64_t>::max()
                                                    : sweep.k_override;
        RunStats stats = simulate_stats(cfg, k, sweep.workers);
        const CorrelationReport rep = make_report(stats, cfg);
        ThetaSweepRow row;
        row.theta = theta;
        row.e = rep.at(1, 1).e;
        row.gamma = rep.at(1, 1).gamma;
        row.coincidences = rep.at(1, 1).coincidences();
        row.pairs = rep.at(1, 1).pairs;
        if (sweep.experiment == ExperimentCase::case_one) {
            row.e_oracle = model_e_first_order(theta, sweep.delay_exponent);
        } else {
            row.e_oracle = qt_product(cfg.angles1[0], cfg.angles2[0], *sweep.eta1, *sweep.eta2).e;
        }
        row.p1_plus = rep.station1_means[0] ? 0.5 * (1.0 + *rep.station1_means[0]) : 0.0;
        row.p2_plus = rep.station2_means[0] ? 0.5 * (1.0 + *rep.station2_means[0]) : 0.0;
        out.rows.push_back(row);
    }
    if (sweep.experiment == ExperimentCase::case_one) {
        for (auto& row : out.rows) {
            const auto e_t = detail::lookup_e(out.rows, row.theta);
            const auto e_3t = detail::lookup_e(out.rows, 3.0 * row.theta);
            if (e_t && e_3t) {
                // E(0,t) - E(0,3t) + E(2t,t) + E(2t,3t), all from the E(theta) curve
                row.s = chsh_s(*e_t, *e_3t, *e_t, *e_t);
                if (!out.s_max || *row.s > *out.s_max) {
                    out.s_max = row.s;
                    out.s_max_arg = row.theta;
                }
            }
        }
    }
    return out;
}

struct DSweepRow {
    double d = 0.0;
    std::optional<double> s_max_sim;
    double s_max_oracle = 0.0;  // first-order theta scan
    std::optional<double> gamma_min;
};

struct WSweepRow {
    double window = 0.0;
    std::optional<double> s_max_sim;
    std::optional<double> gamma_min;
    double gamma_oracle = 0.0;  // 16 W / (3 pi T0)
};

inline std::vector<double> theta_grid(int n) {
    std::vector<double> g;
    g.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) g.push_back(kPi * static_cast<double>(i) / n);
    return g;
}

/// S_max(d) at fixed tau and W, simulated and to first order in W.
inline std::vector<DSweepRow> d_sweep(const SweepConfig& base, const std::vector<double>& ds,
                                      int theta_grid_n = 16) {
    std::vector<DSweepRow> rows;
    const std::vector<double> grid = theta_grid(theta_grid_n);
    for (double d : ds) {
        SweepConfig sw = base;
        sw.delay_exponent = d;
        sw.seed = sub_seed(base.seed, "d/" + detail::format_double(d));
        const ThetaSweepResult res = theta_sweep(sw, grid);
        DSweepRow row;
        row.d = d;
        row.s_max_sim = res.s_max;
        row.s_max_oracle =
            smax_theta_scan([d](Angle a, Angle b) -> std::optional<double> {
                return model_e_first_order(a.radians() - b.radians(), d);
            }).s_max;
        for (const auto& r : res.rows)
            if (r.gamma && (!row.gamma_min || *r.gamma < *row.gamma_min)) row.gamma_min = r.gamma;
        rows.push_back(row);
    }
    return rows;
}

/// S_max(W) and the minimum coincidence frequency, with the first-order
/// gamma reference.
inline std::vector<WSweepRow> w_sweep(const SweepConfig& base, const std::vector<double>& windows,
                                      int theta_grid_n = 16) {
    std::vector<WSweepRow> rows;
    const std::vector<double> grid = theta_grid(theta_grid_n);
    for (double w : windows) {
        SweepConfig sw = base;
        sw.window = w;
        sw.tag_resolution = std::min(base.tag_resolution, w);  // keep tau <= W
        sw.seed = sub_seed(base.seed, "w/" + detail::format_double(w));
        const ThetaSweepResult res = theta_sweep(sw, grid);
        WSweepRow row;
        row.window = w;
        row.s_max_sim = res.s_max;
        row.gamma_oracle = gamma_first_order(w).value;
        for (const auto& r : res.rows)
            if (r.gamma && (!row.gamma_min || *r.gamma < *row.gamma_min)) row.gamma_min = r.gamma;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace eprsim
