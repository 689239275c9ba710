#pragma once

// Run engine. Every random decision for pair n comes from per-pair forks of
// role-labeled streams, so a run is a pure function of the config: chunked
// parallel execution is bit-identical to a serial one for any worker count.

#include "eprsim/core.hpp"
#include "eprsim/emission.hpp"
#include "eprsim/estimators.hpp"
#include "eprsim/pairing.hpp"
#include "eprsim/station.hpp"

#include <thread>

namespace eprsim {

struct RoleStreams {
    RngStream source, prepol1, prepol2;
    RngStream s1_setting, s1_polarizer, s1_delay;
    RngStream s2_setting, s2_polarizer, s2_delay;
};

inline RoleStreams derive_role_streams(std::uint64_t seed) {
    RoleStreams r;
    r.source = derive_stream(seed, "source");
    r.prepol1 = derive_stream(seed, "source.prepol1");
    r.prepol2 = derive_stream(seed, "source.prepol2");
    r.s1_setting = derive_stream(seed, "station1.setting");
    r.s1_polarizer = derive_stream(seed, "station1.polarizer");
    r.s1_delay = derive_stream(seed, "station1.delay");
    r.s2_setting = derive_stream(seed, "station2.setting");
    r.s2_polarizer = derive_stream(seed, "station2.polarizer");
    r.s2_delay = derive_stream(seed, "station2.delay");
    return r;
}

struct PairOutcome {
    DetectionEvent event1, event2;
    std::uint32_t source_attempts = 1;
};

/// The two detection events of pair n. Deterministic in (cfg, n).
inline PairOutcome simulate_pair(const SimConfig& cfg, const RoleStreams& roles,
                                 const StationConfig& st1, const StationConfig& st2,
                                 std::uint64_t n) {
    PairOutcome out;
    EmittedPair pair;
    if (cfg.experiment == ExperimentCase::case_one) {
        RngStream src = roles.source.fork(n);
        pair = emit_pair_case1(n, src, cfg.emission_spacing);
    } else {
        RngStream src = roles.source.fork(n);
        RngStream p1 = roles.prepol1.fork(n);
        RngStream p2 = roles.prepol2.fork(n);
        Case2Emission em = emit_pair_case2(n, *cfg.eta1, *cfg.eta2, src, p1, p2, cfg.emission_spacing);
        pair = em.pair;
        out.source_attempts = em.attempts;
    }
    StationStreams ss1{roles.s1_setting.fork(n), roles.s1_polarizer.fork(n), roles.s1_delay.fork(n)};
    StationStreams ss2{roles.s2_setting.fork(n), roles.s2_polarizer.fork(n), roles.s2_delay.fork(n)};
    out.event1 = process_particle(pair, st1, ss1);
    out.event2 = process_particle(pair, st2, ss2);
    return out;
}

inline StationConfig station_config(const SimConfig& cfg, StationId id) {
    StationConfig st;
    st.station = id;
    st.angles = (id == StationId::one) ? cfg.angles1 : cfg.angles2;
    st.delay_exponent = cfg.delay_exponent;
    st.max_delay = cfg.max_delay;
    st.tag_resolution = cfg.tag_resolution;
    return st;
}

namespace detail {

inline unsigned resolve_workers(unsigned workers) {
    if (workers != 0) return workers;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

template <typename Fn>
void parallel_chunks(std::uint64_t n, unsigned workers, Fn&& body) {
    workers = resolve_workers(workers);
    if (workers <= 1 || n < 2) {
        body(0u, 0ull, n);
        return;
    }
    std::vector<std::thread> threads;
    const std::uint64_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::uint64_t lo = static_cast<std::uint64_t>(w) * chunk;
        const std::uint64_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        threads.emplace_back([&body, w, lo, hi] { body(w, lo, hi); });
    }
    for (auto& t : threads) t.join();
}

}  // namespace detail

struct RunLogs {
    EventLog log1, log2;
};

/// Materializes the two per-station event logs (one event per pair per
/// station; ordered by pair index == absolute time).
inline RunLogs generate_logs(const SimConfig& cfg_in, unsigned workers = 0) {
    const SimConfig cfg = validate_config(cfg_in);
    const RoleStreams roles = derive_role_streams(cfg.seed);
    const StationConfig st1 = station_config(cfg, StationId::one);
    const StationConfig st2 = station_config(cfg, StationId::two);

    RunLogs out;
    out.log1.station = StationId::one;
    out.log2.station = StationId::two;
    out.log1.num_settings = static_cast<int>(cfg.angles1.size());
    out.log2.num_settings = static_cast<int>(cfg.angles2.size());
    out.log1.settings = cfg.angles1;
    out.log2.settings = cfg.angles2;
    out.log1.tag_resolution = cfg.tag_resolution;
    out.log2.tag_resolution = cfg.tag_resolution;
    out.log1.emission_spacing = cfg.emission_spacing;
    out.log2.emission_spacing = cfg.emission_spacing;
    out.log1.events.resize(cfg.num_pairs);
    out.log2.events.resize(cfg.num_pairs);

    detail::parallel_chunks(cfg.num_pairs, workers, [&](unsigned, std::uint64_t lo, std::uint64_t hi) {
        for (std::uint64_t n = lo; n < hi; ++n) {
            PairOutcome p = simulate_pair(cfg, roles, st1, st2, n);
            out.log1.events[n] = p.event1;
            out.log2.events[n] = p.event2;
        }
    });
    return out;
}

/// Streaming per-run statistics: the coincidence tally under the simulation
/// criterion |k1-k2| < k, per-combination pair counts, and per-station
/// unconditioned outcome sums. Merge of chunk results is exact.
struct RunStats {
    CoincidenceTally tally;
    std::vector<std::uint64_t> pairs_per_combo;     // (m,m') occurrences among all pairs
    std::vector<std::int64_t> outcome_sum_1;        // per station-1 setting
    std::vector<std::uint64_t> outcome_count_1;
    std::vector<std::int64_t> outcome_sum_2;
    std::vector<std::uint64_t> outcome_count_2;
    std::uint64_t total_source_attempts = 0;        // Case II rejection cost
    std::uint64_t num_pairs = 0;

    RunStats() = default;
    RunStats(int m1, int m2)
        : tally(m1, m2),
          pairs_per_combo(static_cast<std::size_t>(m1) * m2, 0),
          outcome_sum_1(static_cast<std::size_t>(m1), 0),
          outcome_count_1(static_cast<std::size_t>(m1), 0),
          outcome_sum_2(static_cast<std::size_t>(m2), 0),
          outcome_count_2(static_cast<std::size_t>(m2), 0) {}

    void merge(const RunStats& o) {
        tally.merge(o.tally);
        for (std::size_t i = 0; i < pairs_per_combo.size(); ++i) pairs_per_combo[i] += o.pairs_per_combo[i];
        for (std::size_t i = 0; i < outcome_sum_1.size(); ++i) {
            outcome_sum_1[i] += o.outcome_sum_1[i];
            outcome_count_1[i] += o.outcome_count_1[i];
        }
        for (std::size_t i = 0; i < outcome_sum_2.size(); ++i) {
            outcome_sum_2[i] += o.outcome_sum_2[i];
            outcome_count_2[i] += o.outcome_count_2[i];
        }
        total_source_attempts += o.total_source_attempts;
        num_pairs += o.num_pairs;
    }
};

/// Runs the experiment without materializing logs. Identical counting to
/// count_index_window(generate_logs(cfg), k) but O(1) memory.
inline RunStats simulate_stats(const SimConfig& cfg_in, std::int64_t k = 0, unsigned workers = 0) {
    const SimConfig cfg = validate_config(cfg_in);
    if (k <= 0) k = tag_window(cfg.window, cfg.tag_resolution);
    const RoleStreams roles = derive_role_streams(cfg.seed);
    const StationConfig st1 = station_config(cfg, StationId::one);
    const StationConfig st2 = station_config(cfg, StationId::two);
    const int m1 = static_cast<int>(cfg.angles1.size());
    const int m2 = static_cast<int>(cfg.angles2.size());

    const unsigned nw = detail::resolve_workers(workers);
    std::vector<RunStats> partial(nw, RunStats(m1, m2));
    detail::parallel_chunks(cfg.num_pairs, workers, [&](unsigned w, std::uint64_t lo, std::uint64_t hi) {
        RunStats& acc = partial[w];
        for (std::uint64_t n = lo; n < hi; ++n) {
            PairOutcome p = simulate_pair(cfg, roles, st1, st2, n);
            const DetectionEvent& a = p.event1;
            const DetectionEvent& b = p.event2;
            acc.pairs_per_combo[static_cast<std::size_t>(a.setting_index - 1) * m2 +
                                (b.setting_index - 1)] += 1;
            acc.outcome_sum_1[static_cast<std::size_t>(a.setting_index - 1)] += a.outcome;
            acc.outcome_count_1[static_cast<std::size_t>(a.setting_index - 1)] += 1;
            acc.outcome_sum_2[static_cast<std::size_t>(b.setting_index - 1)] += b.outcome;
            acc.outcome_count_2[static_cast<std::size_t>(b.setting_index - 1)] += 1;
            if (std::llabs(a.tag - b.tag) < k) acc.tally.add_match(a, b);
            acc.total_source_attempts += p.source_attempts;
            acc.num_pairs += 1;
        }
        acc.tally.total_events_1 = acc.num_pairs;
        acc.tally.total_events_2 = acc.num_pairs;
    });
    RunStats total(m1, m2);
    for (const RunStats& p : partial) total.merge(p);
    return total;
}

/// Assembles the full per-setting-pair report for a simulated run.
inline CorrelationReport make_report(const RunStats& stats, const SimConfig& cfg) {
    CorrelationReport rep;
    rep.m1 = stats.tally.m1;
    rep.m2 = stats.tally.m2;
    rep.entries = correlations(stats.tally, cfg.angles1, cfg.angles2);
    for (int m = 1; m <= rep.m1; ++m) {
        for (int mp = 1; mp <= rep.m2; ++mp) {
            SettingPairEntry& en = rep.entries[static_cast<std::size_t>(m - 1) * rep.m2 + (mp - 1)];
            en.pairs = stats.pairs_per_combo[static_cast<std::size_t>(m - 1) * rep.m2 + (mp - 1)];
            if (en.pairs > 0)
                en.gamma = static_cast<double>(en.coincidences()) / static_cast<double>(en.pairs);
            if (!en.e) ++rep.undefined_entries;
        }
    }
    rep.station1_means.resize(static_cast<std::size_t>(rep.m1));
    rep.station2_means.resize(static_cast<std::size_t>(rep.m2));
    for (int m = 0; m < rep.m1; ++m)
        if (stats.outcome_count_1[static_cast<std::size_t>(m)] > 0)
            rep.station1_means[static_cast<std::size_t>(m)] =
                static_cast<double>(stats.outcome_sum_1[static_cast<std::size_t>(m)]) /
                static_cast<double>(stats.outcome_count_1[static_cast<std::size_t>(m)]);
    for (int m = 0; m < rep.m2; ++m)
        if (stats.outcome_count_2[static_cast<std::size_t>(m)] > 0)
            rep.station2_means[static_cast<std::size_t>(m)] =
                static_cast<double>(stats.outcome_sum_2[static_cast<std::size_t>(m)]) /
                static_cast<double>(stats.outcome_count_2[static_cast<std::size_t>(m)]);

    if (rep.m1 >= 2 && rep.m2 >= 2) {
        std::vector<std::vector<std::optional<double>>> table(
            static_cast<std::size_t>(rep.m1),
            std::vector<std::optional<double>>(static_cast<std::size_t>(rep.m2)));
        for (int m = 1; m <= rep.m1; ++m)
            for (int mp = 1; mp <= rep.m2; ++mp)
                table[static_cast<std::size_t>(m - 1)][static_cast<std::size_t>(mp - 1)] =
                    rep.at(m, mp).e;
        try {
            rep.s_max = smax_four_angle(table).s_max;
        } catch (const std::runtime_error&) {
            // no fully defined 4-tuple; leave s_max unset
        }
    }
    rep.window = cfg.window;
    rep.delay_exponent = cfg.delay_exponent;
    rep.tag_resolution = cfg.tag_resolution;
    rep.seed = cfg.seed;
    return rep;
}

}  // namespace eprsim
