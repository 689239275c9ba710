#pragma once

// Core domain types for the event-by-event EPRB simulator: angles, the
// deterministic splittable random streams, experiment configuration and
// per-detection event records.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace eprsim {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Plane polarization / analyzer orientation, stored normalized to [0, 2*pi).
/// All polarization-dependent physics (Malus rule, time delay) has period pi,
/// so angles differing by pi are physically equivalent; we keep the full
/// circle because the emission model is stated on [0, 2*pi).
class Angle {
public:
    Angle() = default;
    explicit Angle(double radians) : value_(wrap(radians)) {}

    double radians() const { return value_; }

    Angle operator+(Angle o) const { return Angle(value_ + o.value_); }
    Angle operator-(Angle o) const { return Angle(value_ - o.value_); }
    Angle operator+(double r) const { return Angle(value_ + r); }
    Angle operator-(double r) const { return Angle(value_ - r); }

    friend bool operator==(Angle a, Angle b) { return a.value_ == b.value_; }

    static double wrap(double r) {
        double v = std::fmod(r, kTwoPi);
        if (v < 0.0) v += kTwoPi;
        if (v >= kTwoPi) v = 0.0;  // fmod may land exactly on 2*pi
        return v;
    }

private:
    double value_ = 0.0;
};

namespace detail {

// SplitMix64 finalizer (Steele/Lea/Flood); also used to mix derived states.
inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

}  // namespace detail

/// Deterministic counter-style uniform stream. A stream is a pure function of
/// (seed, label): the same pair yields the same sequence on every platform
/// and for any work partition. fork(n) derives an independent child stream;
/// forking by pair index is what makes chunked parallel runs bit-identical
/// to serial ones.
class RngStream {
public:
    RngStream() = default;

    std::uint64_t next_u64() {
        state_ += detail::kGolden;
        return detail::mix64(state_);
    }

    /// Uniform draw strictly inside (0, 1).
    double uniform() {
        return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1p-52;
    }

    /// Independent child stream; pure function of (*this, n).
    RngStream fork(std::uint64_t n) const {
        RngStream s;
        s.state_ = detail::mix64(state_ ^ detail::mix64(n + detail::kGolden));
        return s;
    }

    friend RngStream derive_stream(std::uint64_t seed, std::string_view label);

private:
    std::uint64_t state_ = 0;
};

/// Derive the labeled stream for a role ("source", "station1.delay", ...).
/// Pure in (seed, label); distinct labels give statistically independent
/// streams.
inline RngStream derive_stream(std::uint64_t seed, std::string_view label) {
    RngStream s;
    s.state_ = detail::mix64(detail::mix64(seed ^ 0xA0761D6478BD642Full) ^ detail::fnv1a(label));
    return s;
}

enum class ExperimentCase { case_one, case_two };

enum class StationId : int { one = 1, two = 2 };

/// Full description of one simulated experiment run.
struct SimConfig {
    ExperimentCase experiment = ExperimentCase::case_one;
    std::uint64_t num_pairs = 1000000;       // N
    std::vector<Angle> angles1 = {Angle(0)}; // station-1 analyzer directions
    std::vector<Angle> angles2 = {Angle(0)}; // station-2 analyzer directions
    std::optional<Angle> eta1;               // Case II pre-polarizer orientations
    std::optional<Angle> eta2;
    double delay_exponent = 4.0;             // d
    double max_delay = 1.0;                  // T0, the unit of time
    double tag_resolution = 0.00025;         // tau
    double window = 0.00025;                 // W (default W = tau, i.e. k = 1)
    double emission_spacing = 4.0;           // time between emissions
    std::uint64_t seed = 1;
};

/// Validates every SimConfig invariant; returns the config unchanged or
/// throws std::invalid_argument naming the violated invariant.
inline SimConfig validate_config(const SimConfig& cfg) {
    auto fail = [](const std::string& what) { throw std::invalid_argument("invalid config: " + what); };
    if (cfg.num_pairs == 0) fail("num_pairs must be positive");
    if (cfg.angles1.empty()) fail("angles1 must contain at least one setting");
    if (cfg.angles2.empty()) fail("angles2 must contain at least one setting");
    if (!(cfg.delay_exponent >= 0.0)) fail("delay exponent d must be nonnegative");
    if (!(cfg.max_delay > 0.0)) fail("max delay T0 must be positive");
    if (!(cfg.tag_resolution > 0.0)) fail("tag resolution tau must be positive");
    if (!(cfg.window > 0.0)) fail("window W must be positive");
    if (cfg.window < cfg.tag_resolution) fail("window smaller than tag resolution");
    if (!(cfg.emission_spacing > 2.0 * cfg.max_delay + cfg.window))
        fail("emission spacing must exceed 2*T0 + W");
    if (cfg.experiment == ExperimentCase::case_two && (!cfg.eta1 || !cfg.eta2))
        fail("Case II requires eta1 and eta2");
    return cfg;
}

/// Coincidence half-width in tag units, k = ceil(W / tau).
inline std::int64_t tag_window(double window, double tag_resolution) {
    return static_cast<std::int64_t>(std::ceil(window / tag_resolution));
}

/// One detector firing. `delay` is the continuous transmission delay the
/// model assigns; `tag` is the discretized clock reading ceil(delay / tau)
/// that the laboratory actually records.
struct DetectionEvent {
    std::uint64_t pair_index = 0;
    StationId station = StationId::one;
    int outcome = 0;                // +1 or -1
    int setting_index = 1;          // 1..M
    Angle setting;
    double delay = 0.0;             // t, in [0, T0]
    std::int64_t tag = 0;           // k = ceil(t / tau)
    double absolute_time = 0.0;     // emission time + t
};

/// A particle pair in flight: polarizations carried to the two stations.
/// Case I: xi2 = xi1 + pi/2 with xi1 uniform. Case II: (xi1, xi2) = (eta1, eta2).
struct EmittedPair {
    std::uint64_t pair_index = 0;
    Angle xi1;
    Angle xi2;
    double emission_time = 0.0;
};

/// Ordered per-station record of a run (the paper's data set Upsilon_i).
/// emission_spacing is the known schedule of a simulated run (0 for ingested
/// data, where only the recorded times exist).
struct EventLog {
    StationId station = StationId::one;
    int num_settings = 1;
    double tag_resolution = 0.0;
    double emission_spacing = 0.0;
    std::vector<Angle> settings;         // index -> analyzer angle (may be empty)
    std::vector<DetectionEvent> events;  // nondecreasing absolute_time
};

}  // namespace eprsim
