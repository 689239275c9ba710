#pragma once

// TTAG/1, the interchange format for per-station time-tag streams, plus the
// CSV/JSON correlation-report writers.
//
// TTAG/1 is UTF-8 text, LF line endings. Header lines are "# key=value"
// ("# TTAG/1" first); record lines are "event_index,tick,setting_index,outcome"
// with integer ticks at the header's tick_resolution. Ticks must be
// nondecreasing, outcomes +-1, and every setting index must appear in the
// header dictionary.

#include "eprsim/core.hpp"
#include "eprsim/estimators.hpp"

#include <charconv>
#include <cstdio>
#include <map>
#include <sstream>

#include "json.hpp"

namespace eprsim {

namespace detail {

// Locale-independent shortest-roundtrip double formatting.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

inline std::string csv_cell(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

}  // namespace detail

/// Serializes a log as TTAG/1. Ticks are the clock reading
/// ceil(absolute_time / tick_resolution); output bytes are a pure function of
/// the log.
inline std::string write_log(const EventLog& log, double tick_resolution) {
    if (!(tick_resolution > 0.0)) throw std::invalid_argument("write_log: tick_resolution must be positive");
    std::string out;
    out += "# TTAG/1\n";
    out += "# station=" + std::to_string(static_cast<int>(log.station)) + "\n";
    out += "# tick_resolution=" + detail::format_double(tick_resolution) + "\n";
    if (log.emission_spacing > 0.0)
        out += "# emission_spacing=" + detail::format_double(log.emission_spacing) + "\n";

    // When the emission schedule lies on the tick grid, split the clock
    // reading into schedule ticks plus delay ticks. The naive
    // ceil(absolute_time / resolution) loses delays below one ulp of the
    // absolute time.
    const double spacing_ticks = log.emission_spacing / tick_resolution;
    const bool exact_split = log.emission_spacing > 0.0 &&
                             spacing_ticks == std::floor(spacing_ticks) &&
                             spacing_ticks < 9.0e15;

    std::map<int, Angle> dict;
    for (std::size_t i = 0; i < log.settings.size(); ++i)
        dict.emplace(static_cast<int>(i) + 1, log.settings[i]);
    for (const DetectionEvent& e : log.events) dict.emplace(e.setting_index, e.setting);
    for (const auto& [idx, angle] : dict)
        out += "# setting." + std::to_string(idx) + "=" + detail::format_double(angle.radians()) + "\n";

    for (const DetectionEvent& e : log.events) {
        std::int64_t tick;
        if (exact_split) {
            tick = static_cast<std::int64_t>(e.pair_index) * static_cast<std::int64_t>(spacing_ticks) +
                   static_cast<std::int64_t>(std::ceil(e.delay / tick_resolution));
        } else {
            tick = static_cast<std::int64_t>(std::ceil(e.absolute_time / tick_resolution));
        }
        out += std::to_string(e.pair_index) + "," + std::to_string(tick) + "," +
               std::to_string(e.setting_index) + "," + (e.outcome > 0 ? "1" : "-1") + "\n";
    }
    return out;
}

namespace detail {

inline std::runtime_error parse_error(std::size_t line, const std::string& what) {
    return std::runtime_error("TTAG parse error at line " + std::to_string(line) + ": " + what);
}

inline bool parse_int(std::string_view s, std::int64_t& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

inline bool parse_double(std::string_view s, double& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace detail

/// Parses TTAG/1 bytes into an EventLog, validating every format invariant.
/// Recorded (tick) times land in absolute_time and delay; the tag keeps the
/// integer tick.
inline EventLog read_log(std::string_view text) {
    EventLog log;
    std::map<int, Angle> dict;
    double tick_resolution = 0.0;
    bool have_station = false, have_resolution = false, in_records = false;
    std::int64_t prev_tick = 0;
    bool have_prev_tick = false;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    if (text.substr(0, 8) != "# TTAG/1") throw detail::parse_error(1, "missing TTAG/1 format tag");
    while (pos < text.size()) {
        ++line_no;
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (line.empty()) continue;

        if (line[0] == '#') {
            if (in_records) throw detail::parse_error(line_no, "header line after records");
            if (line_no == 1) continue;  // format tag
            std::string_view body = line.substr(1);
            while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
            const std::size_t eq = body.find('=');
            if (eq == std::string_view::npos) throw detail::parse_error(line_no, "malformed header line (expected key=value)");
            const std::string_view key = body.substr(0, eq);
            const std::string_view value = body.substr(eq + 1);
            if (key == "station") {
                std::int64_t s = 0;
                if (!detail::parse_int(value, s) || (s != 1 && s != 2))
                    throw detail::parse_error(line_no, "station must be 1 or 2");
                log.station = static_cast<StationId>(s);
                have_station = true;
            } else if (key == "tick_resolution") {
                if (!detail::parse_double(value, tick_resolution) || !(tick_resolution > 0.0))
                    throw detail::parse_error(line_no, "tick_resolution must be a positive number");
                have_resolution = true;
            } else if (key == "emission_spacing") {
                double sp = 0.0;
                if (!detail::parse_double(value, sp) || !(sp > 0.0))
                    throw detail::parse_error(line_no, "emission_spacing must be a positive number");
                log.emission_spacing = sp;
            } else if (key.substr(0, 8) == "setting.") {
                std::int64_t idx = 0;
                double angle = 0.0;
                if (!detail::parse_int(key.substr(8), idx) || idx < 1)
                    throw detail::parse_error(line_no, "malformed setting index");
                if (!detail::parse_double(value, angle))
                    throw detail::parse_error(line_no, "malformed setting angle");
                dict.emplace(static_cast<int>(idx), Angle(angle));
            }
            // other keys are free-form metadata
            continue;
        }

        if (!in_records) {
            if (!have_station) throw detail::parse_error(line_no, "header missing station");
            if (!have_resolution) throw detail::parse_error(line_no, "header missing tick_resolution");
            in_records = true;
        }
        // event_index,tick,setting_index,outcome
        std::array<std::string_view, 4> field;
        std::size_t start = 0;
        int nf = 0;
        for (std::size_t i = 0; i <= line.size() && nf < 4; ++i) {
            if (i == line.size() || line[i] == ',') {
                field[static_cast<std::size_t>(nf++)] = line.substr(start, i - start);
                start = i + 1;
            }
        }
        if (nf != 4 || start <= line.size())
            throw detail::parse_error(line_no, "malformed record (expected 4 comma-separated fields)");
        std::int64_t ev = 0, tick = 0, sidx = 0, outc = 0;
        if (!detail::parse_int(field[0], ev) || ev < 0) throw detail::parse_error(line_no, "malformed event_index");
        if (!detail::parse_int(field[1], tick)) throw detail::parse_error(line_no, "malformed tick");
        if (!detail::parse_int(field[2], sidx)) throw detail::parse_error(line_no, "malformed setting_index");
        if (!detail::parse_int(field[3], outc)) throw detail::parse_error(line_no, "malformed outcome");
        if (outc != 1 && outc != -1) throw detail::parse_error(line_no, "outcome must be +1 or -1");
        const auto it = dict.find(static_cast<int>(sidx));
        if (it == dict.end()) throw detail::parse_error(line_no, "unknown setting index " + std::to_string(sidx));
        if (have_prev_tick && tick < prev_tick) throw detail::parse_error(line_no, "decreasing tick");
        prev_tick = tick;
        have_prev_tick = true;

        DetectionEvent e;
        e.pair_index = static_cast<std::uint64_t>(ev);
        e.station = log.station;
        e.outcome = static_cast<int>(outc);
        e.setting_index = static_cast<int>(sidx);
        e.setting = it->second;
        e.tag = tick;
        e.absolute_time = static_cast<double>(tick) * tick_resolution;
        e.delay = e.absolute_time;  // external data: only the recorded time is known
        log.events.push_back(e);
    }
    if (!have_station || !have_resolution)
        throw detail::parse_error(line_no ? line_no : 1, "header missing station or tick_resolution");
    log.tag_resolution = tick_resolution;
    log.num_settings = dict.empty() ? 0 : dict.rbegin()->first;
    log.settings.clear();
    for (int i = 1; i <= log.num_settings; ++i) {
        const auto it = dict.find(i);
        log.settings.push_back(it != dict.end() ? it->second : Angle(0.0));
    }
    return log;
}

enum class ReportFormat { csv, json };

/// CSV report: exactly the columns
/// alpha,beta,c_pp,c_pm,c_mp,c_mm,e1,e2,e,gamma; undefined values are empty
/// cells.
inline std::string write_report_csv(const CorrelationReport& rep) {
    std::string out = "alpha,beta,c_pp,c_pm,c_mp,c_mm,e1,e2,e,gamma\n";
    for (const SettingPairEntry& en : rep.entries) {
        out += detail::format_double(en.alpha.radians()) + "," + detail::format_double(en.beta.radians()) +
               "," + std::to_string(en.c_pp) + "," + std::to_string(en.c_pm) + "," +
               std::to_string(en.c_mp) + "," + std::to_string(en.c_mm) + "," + detail::csv_cell(en.e1) +
               "," + detail::csv_cell(en.e2) + "," + detail::csv_cell(en.e) + "," +
               detail::csv_cell(en.gamma) + "\n";
    }
    return out;
}

namespace detail {

inline nlohmann::json opt_json(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline std::optional<double> opt_from_json(const nlohmann::json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

}  // namespace detail

/// JSON report: mirrors the CSV per-entry data plus a run summary block.
inline std::string write_report_json(const CorrelationReport& rep) {
    nlohmann::json j;
    j["summary"] = {{"s_max", detail::opt_json(rep.s_max)},
                    {"window", rep.window},
                    {"d", rep.delay_exponent},
                    {"tau", rep.tag_resolution},
                    {"seed", rep.seed}};
    j["m1"] = rep.m1;
    j["m2"] = rep.m2;
    j["undefined_entries"] = rep.undefined_entries;
    nlohmann::json entries = nlohmann::json::array();
    for (const SettingPairEntry& en : rep.entries) {
        entries.push_back({{"alpha", en.alpha.radians()},
                           {"beta", en.beta.radians()},
                           {"c_pp", en.c_pp},
                           {"c_pm", en.c_pm},
                           {"c_mp", en.c_mp},
                           {"c_mm", en.c_mm},
                           {"pairs", en.pairs},
                           {"e1", detail::opt_json(en.e1)},
                           {"e2", detail::opt_json(en.e2)},
                           {"e", detail::opt_json(en.e)},
                           {"gamma", detail::opt_json(en.gamma)}});
    }
    j["entries"] = std::move(entries);
    nlohmann::json m1 = nlohmann::json::array(), m2 = nlohmann::json::array();
    for (const auto& v : rep.station1_means) m1.push_back(detail::opt_json(v));
    for (const auto& v : rep.station2_means) m2.push_back(detail::opt_json(v));
    j["station1_means"] = std::move(m1);
    j["station2_means"] = std::move(m2);
    return j.dump(2) + "\n";
}

/// Inverse of write_report_json.
inline CorrelationReport read_report_json(std::string_view text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    CorrelationReport rep;
    rep.m1 = j.at("m1").get<int>();
    rep.m2 = j.at("m2").get<int>();
    rep.undefined_entries = j.at("undefined_entries").get<int>();
    const auto& sum = j.at("summary");
    rep.s_max = detail::opt_from_json(sum.at("s_max"));
    rep.window = sum.at("window").get<double>();
    rep.delay_exponent = sum.at("d").get<double>();
    rep.tag_resolution = sum.at("tau").get<double>();
    rep.seed = sum.at("seed").get<std::uint64_t>();
    for (const auto& je : j.at("entries")) {
        SettingPairEntry en;
        en.alpha = Angle(je.at("alpha").get<double>());
        en.beta = Angle(je.at("beta").get<double>());
        en.c_pp = je.at("c_pp").get<std::uint64_t>();
        en.c_pm = je.at("c_pm").get<std::uint64_t>();
        en.c_mp = je.at("c_mp").get<std::uint64_t>();
        en.c_mm = je.at("c_mm").get<std::uint64_t>();
        en.pairs = je.at("pairs").get<std::uint64_t>();
        en.e1 = detail::opt_from_json(je.at("e1"));
        en.e2 = detail::opt_from_json(je.at("e2"));
        en.e = detail::opt_from_json(je.at("e"));
        en.gamma = detail::opt_from_json(je.at("gamma"));
        rep.entries.push_back(en);
    }
    for (const auto& v : j.at("station1_means")) rep.station1_means.push_back(detail::opt_from_json(v));
    for (const auto& v : j.at("station2_means")) rep.station2_means.push_back(detail::opt_from_json(v));
    return rep;
}

}  // namespace eprsim
