#include "eprsim/ttio.hpp"

#include "eprsim/simulate.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace eprsim;

namespace {

RunLogs small_run() {
    SimConfig cfg;
    cfg.num_pairs = 500;
    cfg.angles1 = {Angle(0.0), Angle(kPi / 4.0)};
    cfg.angles2 = {Angle(kPi / 8.0), Angle(3.0 * kPi / 8.0)};
    cfg.seed = 13;
    return generate_logs(cfg);
}

}  // namespace

TEST_CASE("TTAG roundtrip preserves the log up to tick quantization") {
    const RunLogs logs = small_run();
    const double res = logs.log1.tag_resolution;
    const std::string bytes = write_log(logs.log1, res);
    const EventLog back = read_log(bytes);

    REQUIRE(back.events.size() == logs.log1.events.size());
    CHECK(back.station == StationId::one);
    CHECK(back.tag_resolution == res);
    CHECK(back.num_settings == 2);
    for (std::size_t i = 0; i < back.events.size(); ++i) {
        const DetectionEvent& orig = logs.log1.events[i];
        const DetectionEvent& got = back.events[i];
        REQUIRE(got.pair_index == orig.pair_index);
        REQUIRE(got.outcome == orig.outcome);
        REQUIRE(got.setting_index == orig.setting_index);
        REQUIRE(got.setting.radians() == Catch::Approx(orig.setting.radians()));
        REQUIRE(std::abs(got.absolute_time - orig.absolute_time) <= res);
    }
}

TEST_CASE("TTAG output bytes are deterministic") {
    const RunLogs a = small_run();
    const RunLogs b = small_run();
    CHECK(write_log(a.log1, a.log1.tag_resolution) == write_log(b.log1, b.log1.tag_resolution));
    CHECK(write_log(a.log2, 0.001) == write_log(b.log2, 0.001));
}

TEST_CASE("an empty log writes a valid header-only file") {
    EventLog empty;
    empty.station = StationId::two;
    empty.num_settings = 1;
    empty.settings = {Angle(0.5)};
    const std::string bytes = write_log(empty, 0.25);
    const EventLog back = read_log(bytes);
    CHECK(back.events.empty());
    CHECK(back.station == StationId::two);
    CHECK(back.tag_resolution == 0.25);
}

TEST_CASE("TTAG parser rejects malformed input with line numbers") {
    const std::string good =
        "# TTAG/1\n# station=1\n# tick_resolution=0.5\n# setting.1=0\n0,10,1,1\n1,12,1,-1\n";
    CHECK(read_log(good).events.size() == 2);

    SECTION("missing format tag") {
        CHECK_THROWS_WITH(read_log("# station=1\n"), Catch::Matchers::ContainsSubstring("line 1"));
    }
    SECTION("outcome must be +-1") {
        const std::string bad =
            "# TTAG/1\n# station=1\n# tick_resolution=0.5\n# setting.1=0\n0,10,1,0\n";
        CHECK_THROWS_WITH(read_log(bad), Catch::Matchers::ContainsSubstring("line 5"));
        CHECK_THROWS_WITH(read_log(bad), Catch::Matchers::ContainsSubstring("outcome"));
    }
    SECTION("decreasing ticks") {
        const std::string bad =
            "# TTAG/1\n# station=1\n# tick_resolution=0.5\n# setting.1=0\n0,10,1,1\n1,9,1,1\n";
        CHECK_THROWS_WITH(read_log(bad), Catch::Matchers::ContainsSubstring("line 6"));
        CHECK_THROWS_WITH(read_log(bad), Catch::Matchers::ContainsSubstring("decreasing"));
    }
    SECTION("unknown setting index") {
        const std::string bad =
            "# TTAG/1\n# station=1\n# tick_resolution=0.5\n# setting.1=0\n0,10,7,1\n";
        CHECK_THROWS_WITH(read_log(bad), Catch::Matchers::ContainsSubstring("unknown setting index"));
    }
    SECTION("missing resolution") {
        CHECK_THROWS_WITH(read_log("# TTAG/1\n# station=1\n0,1,1,1\n"),
                          Catch::Matchers::ContainsSubstring("tick_resolution"));
    }
    SECTION("malformed record") {
        const std::string bad =
            "# TTAG/1\n# station=1\n# tick_resolution=0.5\n# setting.1=0\n0,10,1\n";
        CHECK_THROWS_WITH(read_log(bad), Catch::Matchers::ContainsSubstring("line 5"));
    }
}

TEST_CASE("report CSV has the documented columns and empty undefined cells") {
    CorrelationReport rep;
    rep.m1 = rep.m2 = 1;
    SettingPairEntry en;
    en.alpha = Angle(0.0);
    en.beta = Angle(kPi / 8.0);
    en.c_pp = 3;
    en.c_pm = 1;
    en.c_mp = 2;
    en.c_mm = 4;
    en.e1 = 0.5;
    en.e2 = -0.25;
    // e left undefined on purpose
    rep.entries.push_back(en);

    const std::string csv = write_report_csv(rep);
    const std::size_t nl = csv.find('\n');
    CHECK(csv.substr(0, nl) == "alpha,beta,c_pp,c_pm,c_mp,c_mm,e1,e2,e,gamma");
    const std::string row = csv.substr(nl + 1, csv.find('\n', nl + 1) - nl - 1);
    CHECK(row.find(",,") != std::string::npos);  // undefined e, then empty gamma
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
}

TEST_CASE("report JSON roundtrips") {
    SimConfig cfg;
    cfg.num_pairs = 2000;
    cfg.angles1 = {Angle(0.0), Angle(kPi / 4.0)};
    cfg.angles2 = {Angle(kPi / 8.0), Angle(3.0 * kPi / 8.0)};
    cfg.seed = 77;
    const CorrelationReport rep = make_report(simulate_stats(cfg), cfg);
    const CorrelationReport back = read_report_json(write_report_json(rep));

    CHECK(back.m1 == rep.m1);
    CHECK(back.m2 == rep.m2);
    CHECK(back.s_max == rep.s_max);
    CHECK(back.seed == rep.seed);
    CHECK(back.window == rep.window);
    REQUIRE(back.entries.size() == rep.entries.size());
    for (std::size_t i = 0; i < rep.entries.size(); ++i) {
        CHECK(back.entries[i].c_pp == rep.entries[i].c_pp);
        CHECK(back.entries[i].c_mm == rep.entries[i].c_mm);
        CHECK(back.entries[i].pairs == rep.entries[i].pairs);
        CHECK(back.entries[i].e == rep.entries[i].e);
        CHECK(back.entries[i].gamma == rep.entries[i].gamma);
    }
    CHECK(back.station1_means == rep.station1_means);
}
