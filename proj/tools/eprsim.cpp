// Batch front-end: run simulations, analyze time-tag files, sweep parameters
// and evaluate the analytical reference curves.
//
// Exit codes: 0 success, 1 usage/config error, 2 I/O or parse error,
// 3 numerical failure.

#include "eprsim/oracle.hpp"
#include "eprsim/pairing.hpp"
#include "eprsim/simulate.hpp"
#include "eprsim/sweep.hpp"
#include "eprsim/ttio.hpp"

#include <fstream>
#include <iostream>

#include "CLI11.hpp"

namespace {

using namespace eprsim;

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::ios_base::failure("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& bytes) {
    if (path == "-") {
        std::cout << bytes;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::ios_base::failure("cannot open " + path + " for writing");
    out << bytes;
}

std::vector<Angle> parse_angles(const std::string& text, int which) {
    if (text == "paper")
        return which == 1 ? std::vector<Angle>{Angle(0.0), Angle(kPi / 4.0)}
                          : std::vector<Angle>{Angle(kPi / 8.0), Angle(3.0 * kPi / 8.0)};
    std::vector<Angle> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.emplace_back(std::stod(item));
        } catch (const std::exception&) {
            throw CLI::ValidationError("--angles" + std::to_string(which),
                                       "not a comma-separated list of radians: " + text);
        }
    }
    if (out.empty())
        throw CLI::ValidationError("--angles" + std::to_string(which), "empty angle list");
    return out;
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> out;
    const std::size_t c1 = text.find(':');
    if (c1 != std::string::npos) {
        const std::size_t c2 = text.find(':', c1 + 1);
        if (c2 == std::string::npos) throw CLI::ValidationError("--grid", "expected start:stop:step");
        const double start = std::stod(text.substr(0, c1));
        const double stop = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
        const double step = std::stod(text.substr(c2 + 1));
        if (!(step > 0.0)) throw CLI::ValidationError("--grid", "step must be positive");
        for (double v = start; v < stop + 1e-12; v += step) out.push_back(v);
        return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    if (out.empty()) throw CLI::ValidationError("--grid", "empty grid");
    return out;
}

std::string fmt(double v) { return detail::format_double(v); }
std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

struct CommonOpts {
    int case_id = 1;
    std::uint64_t events = 1000000;
    double d = 4.0;
    double tau = 0.00025;
    double window = 0.00025;
    std::int64_t k = 0;
    double emit_spacing = 4.0;
    std::string angles1 = "0", angles2 = "0";
    double eta1 = kPi / 6.0, eta2 = kPi / 6.0 + kPi / 2.0;
    std::uint64_t seed = 1;
    unsigned workers = 0;
    std::string out = "-";
    std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--case", o.case_id, "experiment case: 1 (random opposite polarization) or 2 (fixed)")
        ->check(CLI::Range(1, 2));
    cmd->add_option("--events,-n", o.events, "number of emitted pairs N");
    cmd->add_option("--d", o.d, "time-delay exponent d");
    cmd->add_option("--tau", o.tau, "time-tag resolution (units of T0)");
    cmd->add_option("--window,-w", o.window, "coincidence window W (units of T0)");
    cmd->add_option("--k", o.k, "tag-window override; sets W = k*tau");
    cmd->add_option("--emit-spacing", o.emit_spacing, "emission spacing (units of T0)");
    cmd->add_option("--angles1", o.angles1, "station-1 angles: comma-separated radians or 'paper'");
    cmd->add_option("--angles2", o.angles2, "station-2 angles: comma-separated radians or 'paper'");
    cmd->add_option("--eta1", o.eta1, "Case II pre-polarizer angle, arm 1 (radians)");
    cmd->add_option("--eta2", o.eta2, "Case II pre-polarizer angle, arm 2 (radians)");
    cmd->add_option("--seed", o.seed, "base RNG seed");
    cmd->add_option("--workers", o.workers, "worker threads (0 = hardware)");
    cmd->add_option("--out,-o", o.out, "output path ('-' = stdout)");
    cmd->add_option("--format", o.format, "report format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
}

SimConfig to_config(const CommonOpts& o) {
    SimConfig cfg;
    cfg.experiment = o.case_id == 1 ? ExperimentCase::case_one : ExperimentCase::case_two;
    cfg.num_pairs = o.events;
    cfg.angles1 = parse_angles(o.angles1, 1);
    cfg.angles2 = parse_angles(o.angles2, 2);
    cfg.delay_exponent = o.d;
    cfg.tag_resolution = o.tau;
    cfg.window = o.k > 0 ? static_cast<double>(o.k) * o.tau : o.window;
    cfg.emission_spacing = o.emit_spacing;
    cfg.seed = o.seed;
    if (cfg.experiment == ExperimentCase::case_two) {
        cfg.eta1 = Angle(o.eta1);
        cfg.eta2 = Angle(o.eta2);
    }
    return validate_config(cfg);
}

std::string render_report(const CorrelationReport& rep, const std::string& format) {
    return format == "json" ? write_report_json(rep) : write_report_csv(rep);
}

int run_simulate(const CommonOpts& o, const std::string& save_logs) {
    const SimConfig cfg = to_config(o);
    if (!save_logs.empty()) {
        RunLogs logs = generate_logs(cfg, o.workers);
        spit(save_logs + ".station1.ttag", write_log(logs.log1, cfg.tag_resolution));
        spit(save_logs + ".station2.ttag", write_log(logs.log2, cfg.tag_resolution));
    }
    RunStats stats = simulate_stats(cfg, 0, o.workers);
    spit(o.out, render_report(make_report(stats, cfg), o.format));
    return 0;
}

int run_analyze(const std::string& log1_path, const std::string& log2_path,
                const std::string& procedure, double window, double bin_size, double delta,
                double resolution, std::int64_t search_radius, const std::string& out,
                const std::string& format) {
    const EventLog log1 = read_log(slurp(log1_path));
    const EventLog log2 = read_log(slurp(log2_path));
    if (log1.events.empty() || log2.events.empty())
        throw std::runtime_error("analyze: empty event log in " +
                                 (log1.events.empty() ? log1_path : log2_path));

    CoincidenceTally tally;
    std::optional<double> delta_used;
    if (procedure == "binned") {
        const double b = bin_size > 0.0 ? bin_size : 2.0 * window;
        tally = count_binned(log1, log2, b);
    } else if (procedure == "relative") {
        tally = count_relative_window(log1, log2, window, delta);
    } else if (procedure == "shifted") {
        const double res = resolution > 0.0 ? resolution : log1.tag_resolution;
        ShiftedWindowResult r = count_shifted(log1, log2, window, res, nullptr, search_radius);
        tally = std::move(r.tally);
        delta_used = r.delta;
    } else if (procedure == "index") {
        tally = count_index_window(log1, log2, tag_window(window, log1.tag_resolution));
    } else {
        throw CLI::ValidationError("--procedure", "must be binned, relative, shifted or index");
    }

    CorrelationReport rep;
    rep.m1 = tally.m1;
    rep.m2 = tally.m2;
    rep.entries = correlations(tally, log1.settings, log2.settings);
    const double n_events = static_cast<double>(log1.events.size() + log2.events.size());
    for (SettingPairEntry& en : rep.entries) {
        en.gamma = 2.0 * static_cast<double>(en.coincidences()) / n_events;
        if (!en.e) ++rep.undefined_entries;
    }
    const SettingMeans mm1 = unconditioned_means(log1);
    const SettingMeans mm2 = unconditioned_means(log2);
    rep.station1_means = mm1.mean;
    rep.station2_means = mm2.mean;
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
        }
    }
    rep.window = window;
    rep.tag_resolution = log1.tag_resolution;

    std::string body = render_report(rep, format);
    if (format == "csv") {
        body += "# coincidence_frequency=" +
                fmt(2.0 * static_cast<double>(tally.num_coincidences) / n_events) + "\n";
        if (rep.s_max) body += "# s_max=" + fmt(*rep.s_max) + "\n";
        if (delta_used) body += "# delta=" + fmt(*delta_used) + "\n";
    }
    spit(out, body);
    return 0;
}

int run_sweep(const CommonOpts& o, const std::string& axis, const std::string& grid_text,
              int theta_grid_n) {
    SweepConfig sw;
    sw.experiment = o.case_id == 1 ? ExperimentCase::case_one : ExperimentCase::case_two;
    sw.num_pairs = o.events;
    sw.delay_exponent = o.d;
    sw.tag_resolution = o.tau;
    sw.window = o.k > 0 ? static_cast<double>(o.k) * o.tau : o.window;
    sw.k_override = o.k;
    sw.emission_spacing = o.emit_spacing;
    sw.seed = o.seed;
    sw.workers = o.workers;
    if (sw.experiment == ExperimentCase::case_two) {
        sw.eta1 = Angle(o.eta1);
        sw.eta2 = Angle(o.eta2);
    }
    const std::vector<double> grid = parse_grid(grid_text);

    std::string out;
    if (axis == "theta") {
        const ThetaSweepResult res = theta_sweep(sw, grid);
        out = "theta,e,e_oracle,gamma,s,s_oracle,p1_plus,p2_plus,coincidences,pairs\n";
        for (const auto& r : res.rows) {
            std::string s_oracle;
            if (sw.experiment == ExperimentCase::case_one) {
                const double et = model_e_first_order(r.theta, sw.delay_exponent);
                const double e3t = model_e_first_order(3.0 * r.theta, sw.delay_exponent);
                s_oracle = fmt(chsh_s(et, e3t, et, et));
            }
            out += fmt(r.theta) + "," + fmt_opt(r.e) + "," + fmt(r.e_oracle) + "," +
                   fmt_opt(r.gamma) + "," + fmt_opt(r.s) + "," + s_oracle + "," + fmt(r.p1_plus) +
                   "," + fmt(r.p2_plus) + "," + std::to_string(r.coincidences) + "," +
                   std::to_string(r.pairs) + "\n";
        }
        if (res.s_max)
            out += "# s_max=" + fmt(*res.s_max) + " at theta=" + fmt(res.s_max_arg) + "\n";
    } else if (axis == "d") {
        const auto rows = d_sweep(sw, grid, theta_grid_n);
        out = "d,s_max,s_max_oracle,gamma_min\n";
        for (const auto& r : rows)
            out += fmt(r.d) + "," + fmt_opt(r.s_max_sim) + "," + fmt(r.s_max_oracle) + "," +
                   fmt_opt(r.gamma_min) + "\n";
    } else if (axis == "window") {
        const auto rows = w_sweep(sw, grid, theta_grid_n);
        out = "window,s_max,gamma_min,gamma_oracle\n";
        for (const auto& r : rows)
            out += fmt(r.window) + "," + fmt_opt(r.s_max_sim) + "," + fmt_opt(r.gamma_min) + "," +
                   fmt(r.gamma_oracle) + "\n";
    } else {
        throw CLI::ValidationError("--sweep", "axis must be theta, d or window");
    }
    spit(o.out, out);
    return 0;
}

int run_oracle(const std::string& curve, double d, const std::string& grid_text,
               const std::string& out) {
    std::string body;
    const std::vector<double> grid = parse_grid(grid_text);
    if (curve == "qt-stheta") {
        body = "theta,s\n";
        for (double t : grid) body += fmt(t) + "," + fmt(qt_s_theta(t)) + "\n";
    } else if (curve == "model-e") {
        body = "theta,e\n";
        for (double t : grid) body += fmt(t) + "," + fmt(model_e_first_order(t, d)) + "\n";
    } else if (curve == "singlet-e") {
        body = "theta,e\n";
        for (double t : grid) body += fmt(t) + "," + fmt(qt_singlet(Angle(0), Angle(t)).e) + "\n";
    } else if (curve == "gamma") {
        body = "window,gamma,first_order_valid\n";
        for (double w : grid) {
            const FirstOrderGamma g = gamma_first_order(w);
            body += fmt(w) + "," + fmt(g.value) + "," + (g.first_order_valid ? "1" : "0") + "\n";
        }
    } else if (curve == "larsson") {
        body = "gamma,bound\n";
        for (double g : grid) body += fmt(g) + "," + fmt(larsson_bound(g)) + "\n";
    } else {
        throw CLI::ValidationError("--curve",
                                   "must be qt-stheta, model-e, singlet-e, gamma or larsson");
    }
    spit(out, body);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"event-by-event EPRB experiment simulator"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string save_logs;
    CLI::App* sim = app.add_subcommand("simulate", "run the experiment and write a correlation report");
    sim->set_config("--config", "", "flat key=value config file; flags override");
    add_common(sim, opts);
    sim->add_option("--save-logs", save_logs, "also write TTAG logs with this path prefix");

    std::string log1_path, log2_path, procedure = "relative";
    double an_window = 0.00025, an_bin = 0.0, an_delta = 0.0, an_resolution = 0.0;
    std::int64_t an_radius = 100;
    std::string an_out = "-", an_format = "csv";
    CLI::App* ana = app.add_subcommand("analyze", "pair two TTAG streams and write a correlation report");
    ana->set_config("--config", "", "flat key=value config file; flags override");
    ana->add_option("--log1", log1_path, "station-1 TTAG file")->required();
    ana->add_option("--log2", log2_path, "station-2 TTAG file")->required();
    ana->add_option("--procedure", procedure, "binned, relative, shifted or index");
    ana->add_option("--window,-w", an_window, "coincidence window W");
    ana->add_option("--bin-size", an_bin, "bin size B for the binned procedure (default 2W)");
    ana->add_option("--delta", an_delta, "fixed station-2 clock shift for the relative procedure");
    ana->add_option("--resolution", an_resolution, "histogram resolution for the shifted procedure");
    ana->add_option("--search-radius", an_radius, "shift search radius in histogram bins");
    ana->add_option("--out,-o", an_out, "output path ('-' = stdout)");
    ana->add_option("--format", an_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    CommonOpts sweep_opts;
    std::string sweep_axis = "theta", sweep_grid = "0:3.14159:0.19635";
    int sweep_theta_grid = 16;
    CLI::App* swp = app.add_subcommand("sweep", "scan theta, d or the window W");
    swp->set_config("--config", "", "flat key=value config file; flags override");
    add_common(swp, sweep_opts);
    swp->add_option("--sweep", sweep_axis, "axis: theta, d or window");
    swp->add_option("--grid", sweep_grid, "grid: start:stop:step or comma list");
    swp->add_option("--theta-grid", sweep_theta_grid, "theta points per d/window grid point");

    std::string oracle_curve = "qt-stheta", oracle_grid = "0:3.14159:0.19635", oracle_out = "-";
    double oracle_d = 4.0;
    CLI::App* orc = app.add_subcommand("oracle", "evaluate analytical reference curves");
    orc->add_option("--curve", oracle_curve, "qt-stheta, model-e, singlet-e, gamma or larsson");
    orc->add_option("--d", oracle_d, "delay exponent for model-e");
    orc->add_option("--grid", oracle_grid, "grid: start:stop:step or comma list");
    orc->add_option("--out,-o", oracle_out, "output path ('-' = stdout)");

    try {
        app.parse(argc, argv);
        if (sim->parsed()) return run_simulate(opts, save_logs);
        if (ana->parsed())
            return run_analyze(log1_path, log2_path, procedure, an_window, an_bin, an_delta,
                               an_resolution, an_radius, an_out, an_format);
        if (swp->parsed()) return run_sweep(sweep_opts, sweep_axis, sweep_grid, sweep_theta_grid);
        if (orc->parsed()) return run_oracle(oracle_curve, oracle_d, oracle_grid, oracle_out);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::runtime_error& e) {
        const std::string what = e.what();
        std::cerr << "error: " << what << "\n";
        return what.find("parse error") != std::string::npos ? 2 : 3;
    }
    return 0;
}
