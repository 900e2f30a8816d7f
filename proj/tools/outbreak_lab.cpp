// outbreak_lab: command-line front end.
//
// Exit status: 0 success, 1 validation error, 2 numerical failure,
// 3 proposition-suite failure.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "outbreak/config.hpp"
#include "outbreak/csv.hpp"
#include "outbreak/experiments.hpp"
#include "outbreak/integrator.hpp"
#include "outbreak/spectral.hpp"
#include "outbreak/strategy.hpp"
#include "outbreak/svg.hpp"

using namespace outbreak;

namespace {

enum Exit { kOk = 0, kValidation = 1, kNumerical = 2, kPropsFailed = 3 };

struct Options {
    std::string config_path;
    std::string out;
    std::uint64_t seed = 1;
    std::optional<double> t_max;
    bool plot = false;
    std::string grid;
    double t_start = baseline::t_intervention;
    int figure = 0;
    std::optional<double> fig5_duration;
    std::size_t trials = 100;
};

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw config_error("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

RunConfig load_config(const Options& o) {
    RunConfig cfg;
    if (!o.config_path.empty()) cfg = parse_config(read_file(o.config_path));
    if (o.t_max) cfg.integration.t_max = *o.t_max;
    cfg.validate();
    if (aggravating(cfg.strategy))
        std::cerr << "warning: strategy has multipliers above 1 (aggravating intervention)\n";
    return cfg;
}

/// "lo:hi:step"
std::vector<double> parse_grid(const std::string& text, const std::string& fallback) {
    const std::string s = text.empty() ? fallback : text;
    double lo = 0, hi = 0, step = 0;
    char c1 = 0, c2 = 0;
    std::istringstream is(s);
    if (!(is >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || !(step > 0.0) || !(hi >= lo))
        throw config_error("grid must look like lo:hi:step with step > 0, got '" + s + "'");
    return linspace_step(lo, hi, step);
}

void stamp(Table& t, const RunConfig& cfg, const std::string& command) {
    t.metadata.insert(t.metadata.begin(), {"config_hash", config_hash(cfg)});
    t.metadata.insert(t.metadata.begin(), {"config", serialize(cfg, -1)});
    t.metadata.insert(t.metadata.begin(), {"command", command});
}

void emit(const Table& t, const std::string& path, bool plot, const std::vector<std::string>& series) {
    write_csv_file(path, t);
    std::cout << "wrote " << path << "\n";
    if (plot) {
        std::string svg_path = path;
        if (svg_path.size() > 4 && svg_path.substr(svg_path.size() - 4) == ".csv") svg_path.resize(svg_path.size() - 4);
        svg_path += ".svg";
        write_svg_file(svg_path, svg_chart(t, series, t.name));
        std::cout << "wrote " << svg_path << "\n";
    }
}

std::string threshold_text(const Threshold& th) { return th ? fmt(*th) : std::string("no threshold"); }

int cmd_simulate(const Options& o) {
    const RunConfig cfg = load_config(o);
    const Scenario sc = cfg.scenario();
    const Trajectory tr = run(sc, cfg.strategy);

    Table t = trajectory_table("trajectory", tr);
    if (!cfg.outputs.events) t.metadata.clear();
    stamp(t, cfg, "simulate");
    const std::string path = !o.out.empty() ? o.out : (!cfg.outputs.csv.empty() ? cfg.outputs.csv : "trajectory.csv");
    emit(t, path, o.plot || !cfg.outputs.plot.empty(), {"S", "E", "R"});

    std::printf("samples: %zu, final t = %.6g days, termination: %s\n", tr.samples.size(), tr.back().t,
                tr.termination == Termination::Quiescence ? "quiescence" : "t_max");
    std::printf("S0* = %s\n", threshold_text(s_star(sc.params)).c_str());
    if (tr.termination == Termination::Quiescence) std::printf("S_inf = %.10f\n", asymptotic_s(tr));
    std::printf("E max = %.6g\n", max_e(tr));
    for (const auto& ev : tr.events)
        std::printf("event %-17s t = %.4f  value = %.6g\n", std::string(to_string(ev.kind)).c_str(), ev.t, ev.value);
    try {
        const auto c = classify(cfg.strategy, sc.params, tr);
        std::printf("classification: %s, %s, nos=%d, wos=%d\n", c.is_finite ? "finite" : "permanent",
                    c.is_uniform ? "uniform" : "per-stage", c.is_nos, c.is_wos);
    } catch (const precondition_error& e) {
        std::printf("classification unavailable: %s\n", e.what());
    }
    return kOk;
}

int cmd_thresholds(const Options& o) {
    const RunConfig cfg = load_config(o);
    const ModelParams p = cfg.params();
    const Multipliers q = unit_multipliers(p.n_stages());
    std::printf("S_bar = %s\n", threshold_text(s_bar(p)).c_str());
    std::printf("S* = %s\n", threshold_text(s_star(p)).c_str());
    Table t;
    t.name = "spectrum";
    t.columns = {"S0", "lambda1", "lambda2", "lambda_rest", "cond_factor"};
    std::printf("%8s %14s %14s %14s %14s\n", "S0", "lambda1", "lambda2", "lambda_rest", "cond_factor");
    for (double s0 : linspace_step(0.0, 1.0, 0.05)) {
        const SpectralBundle sp = spectral(p, std::min(s0, 1.0), q);
        t.rows.push_back({s0, sp.lambda1, sp.lambda2, sp.lambda_rest, sp.cond_factor});
        std::printf("%8.3f %14.6g %14.6g %14.6g %14.6g\n", s0, sp.lambda1, sp.lambda2, sp.lambda_rest, sp.cond_factor);
    }
    if (const auto sb = s_bar(p)) t.add_meta("S_bar", fmt(*sb));
    if (const auto ss = s_star(p)) t.add_meta("S_star", fmt(*ss));
    stamp(t, cfg, "thresholds");
    emit(t, o.out.empty() ? "thresholds.csv" : o.out, o.plot, {"lambda1", "lambda2"});
    return kOk;
}

void print_scan(const ScanResult& r) {
    std::printf("%10s %12s %12s %12s %12s %8s\n", r.swept_param.c_str(), "S_inf", "peak_E", "peak_time", "duration", "peaks");
    for (const auto& row : r.rows)
        std::printf("%10.4g %12.6f %12.6g %12.4f %12s %8zu\n", row.param_value, row.s_inf, row.peak_e, row.peak_time,
                    row.strategy_duration ? fmt(*row.strategy_duration).c_str() : "-", row.n_peaks);
}

int cmd_scan_ti(const Options& o) {
    const RunConfig cfg = load_config(o);
    const ScanResult r = scan_ti(cfg.scenario(), cfg.strategy, parse_grid(o.grid, "2:250:2"));
    print_scan(r);
    Table t = r.to_table("scan_ti");
    stamp(t, cfg, "scan-ti");
    emit(t, o.out.empty() ? "scan_ti.csv" : o.out, o.plot, {"S_inf"});
    return kOk;
}

int cmd_scan_delta(const Options& o) {
    const RunConfig cfg = load_config(o);
    const ScanResult r = scan_delta(cfg.scenario(), o.t_start, parse_grid(o.grid, "10:150:10"));
    print_scan(r);
    Table t = r.to_table("scan_delta");
    t.add_meta("t_I", fmt(o.t_start));
    stamp(t, cfg, "scan-delta");
    emit(t, o.out.empty() ? "scan_delta.csv" : o.out, o.plot, {"S_inf"});
    return kOk;
}

int cmd_figure(const Options& o) {
    const RunConfig cfg = load_config(o);
    FigureOptions fo;
    fo.scenario = cfg.scenario();
    if (o.fig5_duration) {
        fo.fig5_duration = *o.fig5_duration;
        fo.fig5_duration_set = true;
    }
    const FigureOutput out = run_figure(o.figure, fo);
    const std::string prefix = o.out.empty() ? "figure" + std::to_string(o.figure) : o.out;
    for (Table t : out.tables) {
        stamp(t, cfg, "figure " + std::to_string(o.figure));
        const bool traj = !t.columns.empty() && t.columns[0] == "t";
        emit(t, prefix + "_" + t.name + ".csv", o.plot, traj ? std::vector<std::string>{"S", "E_norm", "Vnorm_norm"}
                                                            : std::vector<std::string>{"S_inf"});
        for (const auto& [k, v] : t.metadata)
            if (k == "t_star" || k == "S_at_t_star" || k == "Delta_t_source") std::printf("  %s: %s\n", k.c_str(), v.c_str());
    }
    return kOk;
}

int cmd_quarantine(const Options& o) {
    const RunConfig cfg = load_config(o);
    double r0 = baseline::r0, sigma = baseline::sigma, gamma = baseline::gamma, chi = baseline::chi, xi = baseline::xi;
    if (const auto* m = std::get_if<models::Seiar>(&cfg.model)) {
        r0 = m->r0, sigma = m->sigma, gamma = m->gamma, chi = m->chi, xi = m->xi;
    } else if (const auto* m = std::get_if<models::Seiaqr>(&cfg.model)) {
        r0 = m->r0, sigma = m->sigma, gamma = m->gamma, chi = m->chi, xi = m->xi;
    } else {
        throw config_error("quarantine analysis needs a seiar or seiaqr model");
    }
    const auto rows = quarantine_analysis(chi, xi, r0, sigma, gamma, parse_grid(o.grid, "0:1:0.1"));
    std::printf("%8s %14s %16s %14s\n", "zeta_I", "zeta_A_min", "S*(zeta_A=0)", "S*(at min)");
    for (const auto& r : rows) {
        std::string za;
        switch (r.threshold.kind) {
        case QuarantineThreshold::Kind::Value: za = fmt(r.threshold.zeta_a); break;
        case QuarantineThreshold::Kind::AlreadyNonOutbreak: za = "already"; break;
        case QuarantineThreshold::Kind::Infeasible: za = "infeasible"; break;
        }
        std::printf("%8.3f %14.12s %16s %14s\n", r.zeta_i, za.c_str(), threshold_text(r.s_star_without_a).c_str(),
                    threshold_text(r.s_star_at_min).c_str());
    }
    Table t = quarantine_table(rows);
    stamp(t, cfg, "quarantine");
    emit(t, o.out.empty() ? "quarantine.csv" : o.out, o.plot, {"zeta_A_min"});
    return kOk;
}

int cmd_props(const Options& o) {
    const RunConfig cfg = load_config(o);
    const PropositionReport rep = proposition_suite(o.seed, o.trials);
    std::cout << rep.to_text();
    Table t;
    t.name = "propositions";
    t.columns = {"index", "trials", "passed"};
    for (std::size_t k = 0; k < rep.results.size(); ++k) {
        t.rows.push_back({static_cast<double>(k), static_cast<double>(rep.results[k].trials),
                          static_cast<double>(rep.results[k].passed)});
        t.add_meta("check_" + std::to_string(k), rep.results[k].name);
        for (const auto& c : rep.results[k].counterexamples) t.add_meta("counterexample_" + std::to_string(k), c);
    }
    t.add_meta("seed", std::to_string(o.seed));
    stamp(t, cfg, "props");
    emit(t, o.out.empty() ? "props.csv" : o.out, false, {});
    return rep.ok() ? kOk : kPropsFailed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Controlled SEIR outbreak simulator and threshold analysis"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--config", o.config_path, "JSON run configuration (default: built-in SEIAR example)");
    app.add_option("--out", o.out, "output CSV path (prefix for figure tables)");
    app.add_option("--seed", o.seed, "random seed for the proposition suite");
    app.add_option("--t-max", o.t_max, "integration horizon in days");
    app.add_flag("--plot", o.plot, "also write an SVG chart next to each CSV");

    auto* sim = app.add_subcommand("simulate", "integrate one trajectory");
    auto* thr = app.add_subcommand("thresholds", "print S_bar, S* and the L0 spectrum over S0");
    auto* sti = app.add_subcommand("scan-ti", "sweep the strategy start time");
    sti->add_option("--grid", o.grid, "start-time grid lo:hi:step in days");
    auto* sde = app.add_subcommand("scan-delta", "sweep the regulated strategy period");
    sde->add_option("--grid", o.grid, "period grid lo:hi:step in days");
    sde->add_option("--t-start", o.t_start, "strategy start time in days");
    auto* fig = app.add_subcommand("figure", "write the data tables of one figure");
    fig->add_option("n", o.figure, "figure number 1..9")->required()->check(CLI::Range(1, 9));
    fig->add_option("--fig5-duration", o.fig5_duration, "strategy duration for figure 5 in days");
    auto* qua = app.add_subcommand("quarantine", "minimal isolation of asymptomatics per zeta_I");
    qua->add_option("--grid", o.grid, "zeta_I grid lo:hi:step");
    auto* pro = app.add_subcommand("props", "run the randomized proposition suite");
    pro->add_option("--trials", o.trials, "trials per check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }

    try {
        if (sim->parsed()) return cmd_simulate(o);
        if (thr->parsed()) return cmd_thresholds(o);
        if (sti->parsed()) return cmd_scan_ti(o);
        if (sde->parsed()) return cmd_scan_delta(o);
        if (fig->parsed()) return cmd_figure(o);
        if (qua->parsed()) return cmd_quarantine(o);
        if (pro->parsed()) return cmd_props(o);
    } catch (const numerical_error& e) {
        std::cerr << "numerical failure at t = " << e.t_reached() << ": " << e.what() << "\n";
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    }
    return kValidation;
}
