#pragma once

// Figure data, parameter scans, the randomized proposition suite and the
// quarantine analysis. Everything runs on a Scenario (model, initial state,
// integration settings); the defaults are the SEIAR COVID-19 values.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "outbreak/integrator.hpp"
#include "outbreak/model.hpp"
#include "outbreak/parallel.hpp"
#include "outbreak/spectral.hpp"
#include "outbreak/strategy.hpp"

namespace outbreak {

namespace baseline {
inline constexpr double r0 = 3.0;
inline constexpr double sigma = 0.2;
inline constexpr double gamma = 1.0 / 1.61;
inline constexpr double chi = 0.862;
inline constexpr double xi = 0.55;
inline constexpr double population = 3.0e6;
inline constexpr double t_intervention = 110.0;
} // namespace baseline

struct Scenario {
    ModelParams params;
    State init;
    IntegrationConfig cfg;
};

inline Scenario baseline_scenario() {
    return {make_seiar(baseline::r0, baseline::sigma, baseline::gamma, baseline::chi, baseline::xi),
            State::initial(2, baseline::population), IntegrationConfig{}};
}

inline Trajectory run(const Scenario& sc, const Strategy& strategy) {
    return integrate(sc.params, strategy, sc.init, sc.cfg);
}

// ---------------------------------------------------------------------------
// Tables.

/// Numeric table; NaN marks an empty cell.
struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::pair<std::string, std::string>> metadata;

    void add_meta(std::string key, std::string value) { metadata.emplace_back(std::move(key), std::move(value)); }
};

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::vector<std::string> trajectory_columns(std::size_t n) {
    std::vector<std::string> cols{"t", "S", "E"};
    for (std::size_t k = 1; k <= n; ++k) cols.push_back("I_" + std::to_string(k));
    cols.push_back("R");
    for (std::size_t k = 1; k <= n; ++k) cols.push_back("q_" + std::to_string(k));
    cols.push_back("U");
    cols.push_back("Vnorm");
    return cols;
}

/// One row per sample. With positive normalizers, E/E_max and Vnorm/V_max
/// columns are appended.
inline Table trajectory_table(std::string name, const Trajectory& tr, double e_max = 0.0, double v_max = 0.0) {
    Table t;
    t.name = std::move(name);
    const std::size_t n = tr.samples.empty() ? 0 : tr.front().state.n_stages();
    t.columns = trajectory_columns(n);
    const bool norm = e_max > 0.0 && v_max > 0.0;
    if (norm) {
        t.columns.push_back("E_norm");
        t.columns.push_back("Vnorm_norm");
    }
    t.rows.reserve(tr.samples.size());
    for (const auto& s : tr.samples) {
        std::vector<double> row{s.t, s.state.s(), s.state.e()};
        for (std::size_t k = 0; k < n; ++k) row.push_back(s.state.i(k));
        row.push_back(s.state.r());
        row.insert(row.end(), s.q.begin(), s.q.end());
        row.push_back(s.u);
        row.push_back(s.v_norm);
        if (norm) {
            row.push_back(s.state.e() / e_max);
            row.push_back(s.v_norm / v_max);
        }
        t.rows.push_back(std::move(row));
    }
    for (const auto& ev : tr.events)
        t.add_meta("event", std::string(to_string(ev.kind)) + " t=" + fmt(ev.t) + " value=" + fmt(ev.value));
    return t;
}

inline double max_e(const Trajectory& tr) {
    double m = 0.0;
    for (const auto& s : tr.samples) m = std::max(m, s.state.e());
    return m;
}

inline double max_v(const Trajectory& tr) {
    double m = 0.0;
    for (const auto& s : tr.samples) m = std::max(m, s.v_norm);
    return m;
}

// ---------------------------------------------------------------------------
// Scans.

struct ScanRow {
    double param_value = 0.0;
    double s_inf = 0.0;
    double peak_e = 0.0;
    double peak_time = 0.0;
    std::optional<double> strategy_duration; // days
    std::size_t n_peaks = 0;

    bool operator==(const ScanRow&) const = default;
};

struct ScanResult {
    std::string swept_param;
    std::string units;
    std::vector<ScanRow> rows;

    bool operator==(const ScanResult&) const = default;

    Table to_table(std::string name) const {
        Table t;
        t.name = std::move(name);
        t.columns = {swept_param, "S_inf", "peak_E", "peak_time", "duration", "n_peaks"};
        for (const auto& r : rows)
            t.rows.push_back({r.param_value, r.s_inf, r.peak_e, r.peak_time,
                              r.strategy_duration.value_or(std::numeric_limits<double>::quiet_NaN()),
                              static_cast<double>(r.n_peaks)});
        t.add_meta("swept_param", swept_param + " [" + units + "]");
        return t;
    }
};

/// Summary of one finished run.
inline ScanRow summarize(const Trajectory& tr, const Strategy& strategy, double param_value) {
    ScanRow row;
    row.param_value = param_value;
    row.s_inf = asymptotic_s(tr);
    std::size_t best = 0;
    for (std::size_t k = 1; k < tr.samples.size(); ++k)
        if (tr.samples[k].state.e() > tr.samples[best].state.e()) best = k;
    row.peak_e = tr.samples[best].state.e();
    row.peak_time = tr.samples[best].t;
    if (best > 0 && best + 1 < tr.samples.size()) row.peak_time = detect_tstar(tr);
    row.n_peaks = tr.events_of(EventKind::EPeak).size();
    if (is_regulated(strategy)) {
        if (tr.strategy_end) row.strategy_duration = *tr.strategy_end - t_start(strategy);
    } else if (!std::holds_alternative<strategies::Natural>(strategy)) {
        if (const auto end = scheduled_end(strategy)) row.strategy_duration = *end - t_start(strategy);
    }
    return row;
}

/// Moves a strategy so that it starts at t_i, keeping its internal timing.
inline Strategy with_start(const Strategy& strategy, double t_i) {
    using namespace strategies;
    return std::visit(overloaded{
        [](const Natural& s) -> Strategy { return s; },
        [&](ConstantPermanent s) -> Strategy { s.t_start = t_i; return s; },
        [&](ConstantFinite s) -> Strategy {
            s.t_end += t_i - s.t_start;
            s.t_start = t_i;
            return s;
        },
        [&](RegulatedSStar s) -> Strategy { s.t_start = t_i; return s; },
        [&](PiecewiseUniform s) -> Strategy {
            const double shift = t_i - s.breakpoints.front().first;
            for (auto& bp : s.breakpoints) bp.first += shift;
            return s;
        },
        [&](PerStagePiecewise s) -> Strategy {
            const double shift = t_i - s.breakpoints.front().first;
            for (auto& bp : s.breakpoints) bp.first += shift;
            return s;
        },
    }, strategy);
}

namespace detail {

inline void require_grid(const std::vector<double>& grid, double lo, double hi, const char* what) {
    if (grid.empty()) throw domain_error(std::string(what) + " grid is empty");
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!(grid[k] > lo && grid[k] < hi)) throw domain_error(std::string(what) + " grid value out of range");
        if (k > 0 && !(grid[k] > grid[k - 1])) throw domain_error(std::string(what) + " grid must be strictly increasing");
    }
}

} // namespace detail

/// One integration per start time; the template is shifted with with_start.
inline ScanResult scan_ti(const Scenario& sc, const Strategy& strategy_template, const std::vector<double>& t_i_grid) {
    detail::require_grid(t_i_grid, 0.0, sc.cfg.t_max, "t_I");
    validate(strategy_template, sc.params.n_stages());
    ScanResult out{"t_I", "days", {}};
    out.rows = parallel_map(t_i_grid.size(), [&](std::size_t k) {
        const Strategy s = with_start(strategy_template, t_i_grid[k]);
        return summarize(run(sc, s), s, t_i_grid[k]);
    });
    return out;
}

/// Regulated strategies started at t_i with each period of the grid.
inline ScanResult scan_delta(const Scenario& sc, double t_i, const std::vector<double>& delta_grid) {
    detail::require_grid(delta_grid, 0.0, sc.cfg.t_max, "period");
    ScanResult out{"Delta", "days", {}};
    out.rows = parallel_map(delta_grid.size(), [&](std::size_t k) {
        const Strategy s = strategies::RegulatedSStar{t_i, delta_grid[k]};
        return summarize(run(sc, s), s, delta_grid[k]);
    });
    return out;
}

/// Extends the period grid by `step` until S_inf changes by less than
/// `plateau_tol` between neighbours, or `max_points` runs were made.
inline ScanResult extend_delta_to_plateau(const Scenario& sc, double t_i, double delta_start, double step,
                                          double plateau_tol = 2e-3, std::size_t max_points = 40) {
    if (!(step > 0.0) || !(delta_start > 0.0)) throw domain_error("plateau search needs positive start and step");
    ScanResult out{"Delta", "days", {}};
    for (std::size_t k = 0; k < max_points; ++k) {
        const double d = delta_start + step * static_cast<double>(k);
        const Strategy s = strategies::RegulatedSStar{t_i, d};
        out.rows.push_back(summarize(run(sc, s), s, d));
        const auto m = out.rows.size();
        if (m >= 2 && std::abs(out.rows[m - 1].s_inf - out.rows[m - 2].s_inf) < plateau_tol) break;
    }
    return out;
}

inline std::vector<double> linspace_step(double lo, double hi, double step) {
    std::vector<double> g;
    for (std::size_t k = 0;; ++k) {
        const double v = lo + step * static_cast<double>(k);
        if (v > hi + 1e-9 * step) break;
        g.push_back(v);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Figures.

struct FigureOptions {
    Scenario scenario = baseline_scenario();
    double fig5_duration = 60.0;    // days; the source figure leaves it open
    bool fig5_duration_set = false; // true when overridden by the caller
    double regulated_period = 1.0;  // days, figures 7 and 8
};

struct FigureOutput {
    int id = 0;
    std::vector<Table> tables;
};

namespace detail {

inline Table summary_table(std::string name, std::string param, const std::vector<std::pair<double, ScanRow>>& rows) {
    Table t;
    t.name = std::move(name);
    t.columns = {std::move(param), "S_inf", "peak_E", "peak_time", "duration", "n_peaks"};
    for (const auto& [p, r] : rows)
        t.rows.push_back({p, r.s_inf, r.peak_e, r.peak_time,
                          r.strategy_duration.value_or(std::numeric_limits<double>::quiet_NaN()),
                          static_cast<double>(r.n_peaks)});
    return t;
}

inline std::string tag(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

} // namespace detail

inline FigureOutput run_figure(int id, const FigureOptions& opt = {}) {
    if (id < 1 || id > 9) throw domain_error("figure id must be in 1..9");
    const Scenario& sc = opt.scenario;
    const std::size_t n = sc.params.n_stages();
    const Threshold s0_star = s_star(sc.params);
    if (!s0_star) throw precondition_error("figures need a finite natural S*");
    const double qs = *s0_star;
    const double t_i = baseline::t_intervention;
    auto level = [&](double v) { return Multipliers(n, v); };

    FigureOutput out{id, {}};
    const Trajectory natural = run(sc, strategies::Natural{});
    const double e_max = max_e(natural), v_max = max_v(natural);

    auto add_meta = [&](Table& t) {
        t.add_meta("figure", std::to_string(id));
        t.add_meta("S0_star", fmt(qs));
        t.add_meta("E_max_natural", fmt(e_max));
        t.add_meta("Vnorm_max_natural", fmt(v_max));
    };
    auto push_traj = [&](std::string name, const Trajectory& tr, const Strategy& s) {
        Table t = trajectory_table(std::move(name), tr, e_max, v_max);
        add_meta(t);
        t.add_meta("strategy_start", fmt(t_start(s)));
        out.tables.push_back(std::move(t));
    };

    switch (id) {
    case 1: {
        Table t = trajectory_table("natural", natural, e_max, v_max);
        add_meta(t);
        const double ts = detect_tstar(natural);
        t.add_meta("t_star", fmt(ts));
        t.add_meta("S_at_t_star", fmt(state_at(natural, ts).s()));
        out.tables.push_back(std::move(t));
        break;
    }
    case 2: {
        const double s_ti = state_at(natural, t_i).s();
        const std::vector<std::pair<std::string, double>> levels{
            {"q0.85", 0.85}, {"q_sstar_over_s_ti", qs / s_ti}, {"q_sstar", qs}};
        push_traj("natural", natural, strategies::Natural{});
        Table cls;
        cls.name = "classification";
        cls.columns = {"q_I", "S_inf", "is_nos", "is_wos"};
        for (const auto& [name, q] : levels) {
            const Strategy s = strategies::ConstantPermanent{t_i, level(q)};
            const Trajectory tr = run(sc, s);
            push_traj(name, tr, s);
            out.tables.back().add_meta("q_I", fmt(q));
            const auto c = classify(s, sc.params, tr);
            cls.rows.push_back({q, asymptotic_s(tr), c.is_nos ? 1.0 : 0.0, c.is_wos ? 1.0 : 0.0});
        }
        cls.add_meta("S_at_t_I_natural", fmt(s_ti));
        add_meta(cls);
        out.tables.push_back(std::move(cls));
        break;
    }
    case 3: {
        push_traj("natural", natural, strategies::Natural{});
        const Strategy perm = strategies::ConstantPermanent{t_i, level(qs)};
        push_traj("permanent", run(sc, perm), perm);
        std::vector<std::pair<double, ScanRow>> rows;
        for (double dt : {30.0, 60.0, 90.0, 120.0}) {
            const Strategy s = strategies::ConstantFinite{t_i, t_i + dt, level(qs)};
            const Trajectory tr = run(sc, s);
            push_traj("dt" + detail::tag(dt), tr, s);
            rows.emplace_back(dt, summarize(tr, s, dt));
        }
        Table t = detail::summary_table("summary", "Delta_t", rows);
        add_meta(t);
        out.tables.push_back(std::move(t));
        break;
    }
    case 4: {
        push_traj("natural", natural, strategies::Natural{});
        const double t_f = 170.0;
        std::vector<std::pair<double, ScanRow>> rows;
        for (double start : {70.0, 85.0, 100.0, 115.0, 125.0}) {
            const Strategy s = strategies::ConstantFinite{start, t_f, level(qs)};
            const Trajectory tr = run(sc, s);
            push_traj("ti" + detail::tag(start), tr, s);
            rows.emplace_back(start, summarize(tr, s, start));
        }
        Table t = detail::summary_table("summary", "t_I", rows);
        add_meta(t);
        t.add_meta("t_F", fmt(t_f));
        out.tables.push_back(std::move(t));
        break;
    }
    case 5: {
        const Strategy tmpl = strategies::ConstantFinite{t_i, t_i + opt.fig5_duration, level(qs)};
        const ScanResult scan = scan_ti(sc, tmpl, linspace_step(2.0, 250.0, 2.0));
        Table t = scan.to_table("scan_ti");
        const double s_nat = asymptotic_s(natural);
        t.columns.push_back("S_inf_natural");
        t.columns.push_back("effect");
        for (auto& row : t.rows) {
            row.push_back(s_nat);
            row.push_back(row[1] - s_nat);
        }
        add_meta(t);
        t.add_meta("Delta_t", fmt(opt.fig5_duration));
        t.add_meta("Delta_t_source", opt.fig5_duration_set ? "override" : "default (duration not given for this figure)");
        out.tables.push_back(std::move(t));
        break;
    }
    case 6: {
        push_traj("natural", natural, strategies::Natural{});
        const Strategy perm = strategies::ConstantPermanent{t_i, level(qs)};
        push_traj("permanent", run(sc, perm), perm);
        std::vector<std::pair<double, ScanRow>> rows;
        for (double d : {1.0, 30.0}) {
            const Strategy s = strategies::RegulatedSStar{t_i, d};
            const Trajectory tr = run(sc, s);
            push_traj("delta" + detail::tag(d), tr, s);
            rows.emplace_back(d, summarize(tr, s, d));
        }
        Table t = detail::summary_table("summary", "Delta", rows);
        add_meta(t);
        out.tables.push_back(std::move(t));
        break;
    }
    case 7:
    case 8: {
        if (id == 7) {
            push_traj("natural", natural, strategies::Natural{});
            for (double start : {70.0, 90.0, 110.0, 130.0}) {
                const Strategy s = strategies::RegulatedSStar{start, opt.regulated_period};
                push_traj("ti" + detail::tag(start), run(sc, s), s);
            }
        }
        const Strategy tmpl = strategies::RegulatedSStar{t_i, opt.regulated_period};
        const ScanResult scan = scan_ti(sc, tmpl, linspace_step(40.0, 160.0, 5.0));
        Table t = scan.to_table("scan_ti");
        add_meta(t);
        t.add_meta("Delta", fmt(opt.regulated_period));
        out.tables.push_back(std::move(t));
        break;
    }
    case 9: {
        std::vector<double> grid{1.0, 5.0};
        for (double d : linspace_step(10.0, 150.0, 10.0)) grid.push_back(d);
        Table t = scan_delta(sc, t_i, grid).to_table("scan_delta");
        add_meta(t);
        out.tables.push_back(std::move(t));
        const Strategy s = strategies::RegulatedSStar{t_i, 80.0};
        push_traj("delta80", run(sc, s), s);
        break;
    }
    default:
        break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Quarantine.

struct QuarantineRow {
    double zeta_i = 0.0;
    QuarantineThreshold threshold;
    Threshold s_star_without_a; // S* with zeta_A = 0
    Threshold s_star_at_min;    // S* at the minimal zeta_A (1 when feasible)
};

inline std::vector<QuarantineRow> quarantine_analysis(double chi, double xi, double r0, double sigma, double gamma,
                                                      const std::vector<double>& zeta_i_grid) {
    std::vector<QuarantineRow> out;
    for (double zi : zeta_i_grid) {
        QuarantineRow row;
        row.zeta_i = zi;
        row.threshold = quarantine_threshold(chi, xi, r0, zi);
        row.s_star_without_a = s_star(make_seiaqr(r0, sigma, gamma, chi, xi, zi, 0.0));
        if (row.threshold.kind != QuarantineThreshold::Kind::Infeasible)
            row.s_star_at_min = s_star(make_seiaqr(r0, sigma, gamma, chi, xi, zi, row.threshold.zeta_a));
        out.push_back(row);
    }
    return out;
}

inline Table quarantine_table(const std::vector<QuarantineRow>& rows) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    Table t;
    t.name = "quarantine";
    t.columns = {"zeta_I", "zeta_A_min", "zeta_A_unclamped", "status", "S_star_zeta_A0", "S_star_at_min"};
    for (const auto& r : rows) {
        const auto& th = r.threshold;
        t.rows.push_back({r.zeta_i, th.kind == QuarantineThreshold::Kind::Infeasible ? nan : th.zeta_a, th.unclamped,
                          static_cast<double>(static_cast<int>(th.kind)), r.s_star_without_a.value_or(nan),
                          r.s_star_at_min.value_or(nan)});
    }
    t.add_meta("status", "0 = value, 1 = already non-outbreak, 2 = infeasible");
    t.add_meta("empty S_star", "no threshold (zero transmission)");
    return t;
}

// ---------------------------------------------------------------------------
// Proposition suite.

struct PropositionResult {
    std::string name;
    std::size_t trials = 0;
    std::size_t passed = 0;
    std::vector<std::string> counterexamples; // first few failures
    double max_drift = 0.0;                   // worst |sum - 1| over all samples

    bool ok() const { return passed == trials; }
    bool operator==(const PropositionResult&) const = default;
};

struct PropositionReport {
    std::uint64_t seed = 0;
    std::vector<PropositionResult> results;

    bool ok() const {
        return std::all_of(results.begin(), results.end(), [](const auto& r) { return r.ok(); });
    }
    bool operator==(const PropositionReport&) const = default;

    std::string to_text() const {
        std::ostringstream os;
        os << "seed " << seed << "\n";
        for (const auto& r : results) {
            os << (r.ok() ? "PASS " : "FAIL ") << r.name << " " << r.passed << "/" << r.trials << "\n";
            for (const auto& c : r.counterexamples) os << "  counterexample: " << c << "\n";
        }
        return os.str();
    }
};

inline constexpr std::size_t kMaxCounterexamples = 5;
inline constexpr double kEnvelopeRelSlack = 1e-9;
inline constexpr double kMonotoneTolerance = 1e-10;
inline constexpr double kCriticalValueTolerance = 1e-3;

/// Independent generator per (seed, test, trial), so results do not depend
/// on evaluation order.
inline std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t test, std::uint64_t trial) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(test), static_cast<std::uint32_t>(trial)};
    return std::mt19937_64(seq);
}

namespace detail {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// N in 1..3, distinct gammas, branching drawn on the simplex.
inline ModelParams random_params(std::mt19937_64& rng, bool equal_gamma = false) {
    const std::size_t n = 1 + static_cast<std::size_t>(uniform(rng, 0.0, 3.0));
    const double sigma = uniform(rng, 0.1, 1.0);
    const double g0 = uniform(rng, 0.1, 1.0);
    std::vector<double> w(n);
    double total = 0.0;
    for (auto& v : w) total += (v = uniform(rng, 0.05, 1.0));
    std::vector<StageSpec> stages;
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double x = k + 1 == n ? 1.0 - acc : w[k] / total;
        acc += x;
        stages.push_back({x, equal_gamma ? g0 : uniform(rng, 0.1, 1.0), uniform(rng, 0.5, 5.0)});
    }
    return ModelParams(sigma, stages);
}

inline Multipliers random_q(std::mt19937_64& rng, std::size_t n, double lo, double hi, bool uniform_q) {
    Multipliers q(n);
    const double u = uniform(rng, lo, hi);
    for (auto& v : q) v = uniform_q ? u : uniform(rng, lo, hi);
    return q;
}

struct TrialOutcome {
    std::optional<std::string> failure;
    double drift = 0.0;
};

template <class Trial>
PropositionResult run_trials(std::string name, std::size_t trials, Trial&& trial) {
    PropositionResult res;
    res.name = std::move(name);
    res.trials = trials;
    const auto outcomes = parallel_map(trials, [&](std::size_t k) -> TrialOutcome {
        try {
            return trial(k);
        } catch (const std::exception& e) {
            return {std::string("exception: ") + e.what(), 0.0};
        }
    });
    for (std::size_t k = 0; k < trials; ++k) {
        res.max_drift = std::max(res.max_drift, outcomes[k].drift);
        if (!outcomes[k].failure) {
            ++res.passed;
        } else if (res.counterexamples.size() < kMaxCounterexamples) {
            res.counterexamples.push_back("trial " + std::to_string(k) + ": " + *outcomes[k].failure);
        }
    }
    return res;
}

inline std::string describe(const ModelParams& p) {
    std::ostringstream os;
    os.precision(17);
    os << "sigma=" << p.sigma() << " stages=[";
    for (std::size_t k = 0; k < p.n_stages(); ++k)
        os << (k ? "; " : "") << "x=" << p.stage(k).x << " gamma=" << p.stage(k).gamma << " R=" << p.stage(k).r_natural;
    os << "]";
    return os.str();
}

inline std::string describe(const std::vector<double>& v) {
    std::ostringstream os;
    os.precision(17);
    os << "(";
    for (std::size_t k = 0; k < v.size(); ++k) os << (k ? ", " : "") << v[k];
    os << ")";
    return os.str();
}

} // namespace detail

/// Envelope: segments with constant q started below S_bar stay under
/// envelope_bound at every sample.
inline PropositionResult check_envelope(std::uint64_t seed, std::size_t trials = 100) {
    return detail::run_trials("envelope (non-outbreak bound on |V|)", trials, [&](std::size_t k) -> detail::TrialOutcome {
        auto rng = trial_rng(seed, 1, k);
        ModelParams params = detail::random_params(rng);
        Multipliers q = detail::random_q(rng, params.n_stages(), 0.1, 1.0, false);
        const double s0 = detail::uniform(rng, 0.05, 0.95) * std::min(1.0, *s_bar(params, q));
        const double rest = 1.0 - s0;
        std::vector<double> y(params.state_size(), 0.0);
        y[0] = s0;
        y[1] = rest * detail::uniform(rng, 0.0, 0.3);
        for (std::size_t i = 0; i < params.n_stages(); ++i)
            y[i + 2] = rest * detail::uniform(rng, 0.0, 0.3) / static_cast<double>(params.n_stages());
        double used = 0.0;
        for (std::size_t i = 0; i + 1 < y.size(); ++i) used += y[i];
        y.back() = 1.0 - used;
        const State init = State::from_vector(y);

        IntegrationConfig cfg;
        cfg.t_max = 1000.0;
        const Trajectory tr = integrate(params, strategies::ConstantPermanent{0.0, q}, init, cfg);
        const double drift = conservation_drift(tr);
        const double v0 = init.v_max_norm();
        for (const auto& smp : tr.samples) {
            const double bound = envelope_bound(params, s0, q, v0, smp.t);
            if (smp.v_norm > bound * (1.0 + kEnvelopeRelSlack))
                return {"t=" + fmt(smp.t) + " |V|=" + fmt(smp.v_norm) + " bound=" + fmt(bound) + " S0=" + fmt(s0) +
                            " q=" + detail::describe(q) + " " + detail::describe(params),
                        drift};
        }
        return {std::nullopt, drift};
    });
}

/// Asymptotic limit: natural outbreaks end below S*.
inline PropositionResult check_asymptotic_limit(std::uint64_t seed, std::size_t trials = 100) {
    return detail::run_trials("asymptotic limit (S_inf < S*)", trials, [&](std::size_t k) -> detail::TrialOutcome {
        auto rng = trial_rng(seed, 2, k);
        const ModelParams params = detail::random_params(rng);
        const State init = State::initial(params.n_stages(), 1.0, detail::uniform(rng, 1e-6, 1e-3));
        const Trajectory tr = integrate(params, strategies::Natural{}, init, IntegrationConfig{});
        const double drift = conservation_drift(tr);
        const double s_inf = asymptotic_s(tr);
        const double ss = *s_star(params);
        if (!(s_inf < ss)) return {"S_inf=" + fmt(s_inf) + " S*=" + fmt(ss) + " " + detail::describe(params), drift};
        return {std::nullopt, drift};
    });
}

/// Weak-outbreak monotonicity: U does not increase while S <= S*(t) under a
/// uniform strategy.
inline PropositionResult check_wos_monotonicity(std::uint64_t seed, std::size_t trials = 100) {
    return detail::run_trials("weak-outbreak monotonicity of U", trials, [&](std::size_t k) -> detail::TrialOutcome {
        auto rng = trial_rng(seed, 3, k);
        const ModelParams params = detail::random_params(rng);
        strategies::PiecewiseUniform s;
        double t = detail::uniform(rng, 5.0, 60.0);
        for (int b = 0; b < 3; ++b) {
            s.breakpoints.emplace_back(t, detail::uniform(rng, 0.1, 1.0));
            t += detail::uniform(rng, 10.0, 80.0);
        }
        s.breakpoints.emplace_back(t, 1.0);
        const State init = State::initial(params.n_stages(), 1.0, detail::uniform(rng, 1e-6, 1e-3));
        const Trajectory tr = integrate(params, s, init, IntegrationConfig{});
        const double drift = conservation_drift(tr);
        const auto& sm = tr.samples;
        for (std::size_t i = 0; i + 1 < sm.size(); ++i) {
            const Threshold th = s_star(params, sm[i].q);
            if (!th || sm[i].state.s() > *th) continue;
            if (sm[i + 1].u > sm[i].u + kMonotoneTolerance)
                return {"t=" + fmt(sm[i].t) + " U rises from " + fmt(sm[i].u) + " to " + fmt(sm[i + 1].u) + " " +
                            detail::describe(params),
                        drift};
        }
        return {std::nullopt, drift};
    });
}

/// Random finite strategy on the given model: start in [20, 200], duration
/// in [10, 200], level in [0.1, 1], per-stage or uniform with equal odds.
inline strategies::ConstantFinite random_finite_strategy(std::mt19937_64& rng, std::size_t n) {
    const double t0 = detail::uniform(rng, 20.0, 200.0);
    const double dt = detail::uniform(rng, 10.0, 200.0);
    const bool uniform_q = detail::uniform(rng, 0.0, 1.0) < 0.5;
    return {t0, t0 + dt, detail::random_q(rng, n, 0.1, 1.0, uniform_q)};
}

/// Finite strategies on the reference scenario end below S0*.
inline PropositionResult check_finite_strategies(std::uint64_t seed, std::size_t trials = 100,
                                                 const Scenario& sc = baseline_scenario()) {
    const double ss = *s_star(sc.params);
    return detail::run_trials("finite strategies (S_inf < S0*)", trials, [&](std::size_t k) -> detail::TrialOutcome {
        auto rng = trial_rng(seed, 4, k);
        const auto s = random_finite_strategy(rng, sc.params.n_stages());
        const Trajectory tr = run(sc, s);
        const double drift = conservation_drift(tr);
        const double s_inf = asymptotic_s(tr);
        if (!(s_inf < ss))
            return {"S_inf=" + fmt(s_inf) + " t_I=" + fmt(s.t_start) + " t_F=" + fmt(s.t_end) + " q=" + detail::describe(s.q_level),
                    drift};
        return {std::nullopt, drift};
    });
}

/// Random initial condition inside the outbreak cone of an equal-gamma model.
inline State random_cone_state(std::mt19937_64& rng, const ModelParams& params) {
    double r_ref = 0.0;
    for (const auto& st : params.stages()) r_ref = std::max(r_ref, st.r_natural);
    const auto e = relative_infectiousness(params, r_ref);
    const double ss = *s_star(params);
    const double s0 = detail::uniform(rng, std::min(ss, 1.0) + 0.3 * (1.0 - std::min(ss, 1.0)), 0.999);
    const double budget = 1.0 - s0;
    const double e0 = budget * detail::uniform(rng, 0.01, 0.3);
    double sigma_bar = 0.0;
    for (std::size_t k = 0; k < params.n_stages(); ++k) sigma_bar += params.stage(k).x * e[k];
    sigma_bar *= params.sigma();
    const double gamma = params.gamma_min();
    const double tan_e = params.sigma() / (gamma * r_ref * s0);
    const double tan_j = sigma_bar / gamma;
    const double ratio = detail::uniform(rng, tan_e, tan_j);
    // J = ratio * E, shared across transmitting stages in proportion to x_k
    const double j = ratio * e0;
    std::vector<double> y(params.state_size(), 0.0);
    y[0] = s0;
    y[1] = e0;
    double weight = 0.0;
    for (std::size_t k = 0; k < params.n_stages(); ++k) weight += params.stage(k).x * e[k];
    for (std::size_t k = 0; k < params.n_stages(); ++k) y[k + 2] = j * params.stage(k).x / weight;
    double used = 0.0;
    for (std::size_t i = 0; i + 1 < y.size(); ++i) used += y[i];
    y.back() = 1.0 - used;
    return State::from_vector(y);
}

/// Sign pattern of dE/dt, dJ/dt around t* for outbreak initial conditions.
inline PropositionResult check_sign_structure(std::uint64_t seed, std::size_t trials = 100,
                                              const Scenario& sc = baseline_scenario()) {
    return detail::run_trials("sign structure of dE/dt and dJ/dt", trials, [&](std::size_t k) -> detail::TrialOutcome {
        auto rng = trial_rng(seed, 5, k);
        const State init = random_cone_state(rng, sc.params);
        const Trajectory tr = integrate(sc.params, strategies::Natural{}, init, sc.cfg);
        const double drift = conservation_drift(tr);
        const auto rep = sign_structure_check(tr, sc.params);
        if (!rep.ok())
            return {std::to_string(rep.violations) + " violations, first " + rep.first_violation + " (t*=" +
                        fmt(rep.t_star) + ", J peak " + fmt(rep.t_j_peak) + ") init=" +
                        detail::describe(std::vector<double>(init.raw().begin(), init.raw().end())),
                    drift};
        return {std::nullopt, drift};
    });
}

/// Critical value: S(t*) = S* at the E maximum of outbreak trajectories.
inline PropositionResult check_critical_value(std::uint64_t seed, std::size_t trials = 100,
                                              const Scenario& sc = baseline_scenario()) {
    const double ss = *s_star(sc.params);
    return detail::run_trials("critical value S(t*) = S*", trials, [&](std::size_t k) -> detail::TrialOutcome {
        auto rng = trial_rng(seed, 5, k);
        const State init = random_cone_state(rng, sc.params);
        const Trajectory tr = integrate(sc.params, strategies::Natural{}, init, sc.cfg);
        const double drift = conservation_drift(tr);
        const double ts = detect_tstar(tr);
        const double s = state_at(tr, ts).s();
        if (std::abs(s - ss) > kCriticalValueTolerance)
            return {"t*=" + fmt(ts) + " S(t*)=" + fmt(s) + " S*=" + fmt(ss), drift};
        return {std::nullopt, drift};
    });
}

inline PropositionReport proposition_suite(std::uint64_t seed, std::size_t trials = 100) {
    PropositionReport rep;
    rep.seed = seed;
    rep.results.push_back(check_envelope(seed, trials));
    rep.results.push_back(check_asymptotic_limit(seed, trials));
    rep.results.push_back(check_wos_monotonicity(seed, trials));
    rep.results.push_back(check_finite_strategies(seed, trials));
    rep.results.push_back(check_critical_value(seed, trials));
    rep.results.push_back(check_sign_structure(seed, trials));
    return rep;
}

} // namespace outbreak
