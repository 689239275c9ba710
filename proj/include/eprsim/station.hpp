#pragma once

// The observation station: random selection among M preset analyzer
// directions, the two-channel polarizer rule, the time-delay mechanism
// T(x) = T0*|sin 2x|^d, and time-tag discretization k = ceil(t/tau).
//
// Each operation comes in two layers: a pure kernel taking the uniform
// variate explicitly (unit-testable against the stated rules) and a wrapper
// drawing from a stream.

#include "eprsim/core.hpp"

#include <utility>

namespace eprsim {

struct StationConfig {
    StationId station = StationId::one;
    std::vector<Angle> angles;   // M analyzer directions
    double delay_exponent = 4.0; // d
    double max_delay = 1.0;      // T0
    double tag_resolution = 0.00025;
};

struct SettingChoice {
    int index = 1;  // 1..M
    Angle angle;
};

/// m = 1 + floor(u*M), clamped to M (u is strictly below 1 but the product
/// may round up).
inline SettingChoice setting_from_uniform(double u, const std::vector<Angle>& angles) {
    const auto m = static_cast<std::size_t>(u * static_cast<double>(angles.size()));
    const std::size_t i = m < angles.size() ? m : angles.size() - 1;
    return {static_cast<int>(i) + 1, angles[i]};
}

inline SettingChoice select_setting(RngStream& rng, const std::vector<Angle>& angles) {
    return setting_from_uniform(rng.uniform(), angles);
}

struct PolarizerResult {
    int outcome = 0;   // +1 or -1
    Angle polarization_out;
};

/// Two-channel polarizer: +1 iff r <= cos^2(xi - theta). The particle leaves
/// with polarization theta (channel +1) or theta + pi/2 (channel -1).
inline PolarizerResult polarize_with(Angle xi, Angle theta, double r) {
    const double c = std::cos(xi.radians() - theta.radians());
    const int x = (r <= c * c) ? +1 : -1;
    return {x, x > 0 ? theta : theta + kPi / 2.0};
}

inline PolarizerResult polarize(Angle xi, Angle theta, RngStream& rng) {
    return polarize_with(xi, theta, rng.uniform());
}

/// |s|^d with |0|^0 defined as 1 (d = 0 means the delay ignores the angles).
inline double abs_pow(double s, double d) {
    const double a = std::abs(s);
    if (d == 0.0) return 1.0;
    if (d == 4.0) {  // the paper's working exponent; avoid pow in the hot loop
        const double a2 = a * a;
        return a2 * a2;
    }
    const double r = static_cast<double>(static_cast<int>(d));
    if (r == d && d <= 16.0) {
        double acc = 1.0;
        for (int i = 0; i < static_cast<int>(d); ++i) acc *= a;
        return acc;
    }
    return std::pow(a, d);
}

/// t = u * T0 * |sin 2(xi - theta)|^d. A degenerate interval (T = 0) still
/// consumes the draw so downstream stream positions do not depend on angles.
inline double delay_from_uniform(Angle xi, Angle theta, double d, double t0, double u) {
    const double s = std::sin(2.0 * (xi.radians() - theta.radians()));
    return u * t0 * abs_pow(s, d);
}

inline double time_delay(Angle xi, Angle theta, double d, double t0, RngStream& rng) {
    return delay_from_uniform(xi, theta, d, t0, rng.uniform());
}

/// k = ceil(t / tau), the smallest integer with k >= t/tau; t = 0 gives k = 0.
inline std::int64_t discretize(double t, double tau) {
    return static_cast<std::int64_t>(std::ceil(t / tau));
}

struct StationStreams {
    RngStream setting;
    RngStream polarizer;
    RngStream delay;
};

/// Full station pass for one particle: setting choice, polarizer, delay, tag.
inline DetectionEvent process_particle(const EmittedPair& pair, const StationConfig& cfg,
                                       StationStreams& streams) {
    const Angle xi = (cfg.station == StationId::one) ? pair.xi1 : pair.xi2;
    const SettingChoice sel = select_setting(streams.setting, cfg.angles);
    const PolarizerResult pol = polarize(xi, sel.angle, streams.polarizer);
    const double t = time_delay(xi, sel.angle, cfg.delay_exponent, cfg.max_delay, streams.delay);

    DetectionEvent ev;
    ev.pair_index = pair.pair_index;
    ev.station = cfg.station;
    ev.outcome = pol.outcome;
    ev.setting_index = sel.index;
    ev.setting = sel.angle;
    ev.delay = t;
    ev.tag = discretize(t, cfg.tag_resolution);
    ev.absolute_time = pair.emission_time + t;
    return ev;
}

}  // namespace eprsim
