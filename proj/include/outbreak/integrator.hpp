#pragma once

// Integration of the controlled model. The time axis is cut into segments at
// every point where q may jump (deterministic breakpoints and regulated
// sample times); each segment is integrated with constant q by a fresh
// Dormand-Prince run so no step straddles a discontinuity.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "outbreak/dopri5.hpp"
#include "outbreak/model.hpp"
#include "outbreak/strategy.hpp"
#include "outbreak/trajectory.hpp"

namespace outbreak {

struct IntegrationConfig {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double max_step = 1.0;         // days
    double t_max = 2.0e5;          // days
    double quiescence_eps = 1e-12; // stop when E + sum I < eps and control is over
    double output_stride = 0.25;   // days

    void validate() const {
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw domain_error("integration tolerances must be positive");
        if (!(max_step > 0.0)) throw domain_error("max_step must be positive");
        if (!(t_max > 0.0) || !std::isfinite(t_max)) throw domain_error("t_max must be positive");
        if (!(quiescence_eps > 0.0)) throw domain_error("quiescence_eps must be positive");
        if (!(output_stride > 0.0)) throw domain_error("output_stride must be positive");
    }

    bool operator==(const IntegrationConfig&) const = default;
};

inline constexpr double kConservationAbortTolerance = 1e-8;
/// A local maximum of E counts as a peak only above quiescence_eps times this.
inline constexpr double kPeakFloorFactor = 1e3;

namespace detail {

inline double u_or_nan(const ModelParams& params, const Multipliers& q, const State& st) {
    if (!s_star(params, q)) return std::numeric_limits<double>::quiet_NaN();
    return lyapunov_u(params, q, st);
}

inline double infection_load_raw(std::span<const double> y) {
    double acc = 0.0;
    for (std::size_t k = 1; k + 1 < y.size(); ++k) acc += y[k];
    return acc;
}

/// Above S*(q) a vanishing infection load still grows back.
inline bool can_regrow(const ModelParams& params, const Multipliers& q, std::span<const double> y) {
    const Threshold th = s_star(params, q);
    return th && y[0] > *th;
}

inline double sum_raw(std::span<const double> y) {
    double acc = 0.0;
    for (double v : y) acc += v;
    return acc;
}

/// Vertex of the parabola through three points; falls back to the middle
/// abscissa if they are collinear.
inline double parabola_vertex(double t0, double y0, double t1, double y1, double t2, double y2) {
    const double d0 = (y1 - y0) / (t1 - t0);
    const double d1 = (y2 - y1) / (t2 - t1);
    const double curv = (d1 - d0) / (t2 - t0);
    if (curv == 0.0) return t1;
    const double t = 0.5 * (t0 + t1) - d0 / (2.0 * curv);
    return std::clamp(t, t0, t2);
}

inline void annotate_events(const ModelParams& params, const IntegrationConfig& cfg, Trajectory& tr) {
    const auto& sm = tr.samples;
    const double floor = cfg.quiescence_eps * kPeakFloorFactor;
    for (std::size_t k = 1; k + 1 < sm.size(); ++k) {
        const double e0 = sm[k - 1].state.e(), e1 = sm[k].state.e(), e2 = sm[k + 1].state.e();
        if (e1 > e0 && e1 > e2 && e1 > floor)
            tr.events.push_back({parabola_vertex(sm[k - 1].t, e0, sm[k].t, e1, sm[k + 1].t, e2), EventKind::EPeak, e1});
    }
    auto gap = [&](const Sample& s, bool bar) {
        const Threshold th = bar ? s_bar(params, s.q) : s_star(params, s.q);
        return th ? s.state.s() - *th : -std::numeric_limits<double>::infinity();
    };
    for (bool bar : {true, false}) {
        for (std::size_t k = 0; k + 1 < sm.size(); ++k) {
            const double g0 = gap(sm[k], bar), g1 = gap(sm[k + 1], bar);
            if ((g0 > 0.0) == (g1 > 0.0)) continue;
            double t = sm[k + 1].t;
            if (std::isfinite(g0) && std::isfinite(g1) && g0 != g1)
                t = sm[k].t + (sm[k + 1].t - sm[k].t) * g0 / (g0 - g1);
            tr.events.push_back({t, bar ? EventKind::SCrossesSBar : EventKind::SCrossesSStar, sm[k + 1].state.s()});
        }
    }
    std::stable_sort(tr.events.begin(), tr.events.end(),
                     [](const Event& a, const Event& b) { return a.t < b.t; });
}

} // namespace detail

/// Integrates the model under `strategy` from `init` at t = 0.
inline Trajectory integrate(const ModelParams& params, const Strategy& strategy, const State& init,
                            const IntegrationConfig& cfg) {
    cfg.validate();
    init.validate();
    if (init.n_stages() != params.n_stages())
        throw precondition_error("initial state and model disagree on the number of stages");

    ControllerState ctrl = init_controller(strategy, params);
    const std::size_t dim = params.state_size();
    std::vector<double> y(init.raw().begin(), init.raw().end());
    std::vector<double> buf(dim);
    Trajectory tr;
    Dopri5 stepper(dim, Dopri5Options{cfg.rel_tol, cfg.abs_tol, cfg.max_step});

    const auto sched_end = scheduled_end(strategy);
    const bool natural = std::holds_alternative<strategies::Natural>(strategy);

    auto push = [&](double t, std::span<const double> raw, const Multipliers& q) {
        for (double v : raw)
            if (!(v >= -kNegativeTolerance))
                throw numerical_error("state left the simplex beyond round-off tolerance", t);
        Sample smp;
        smp.t = t;
        smp.state = State::unchecked(std::vector<double>(raw.begin(), raw.end()));
        smp.q = q;
        smp.u = detail::u_or_nan(params, q, smp.state);
        smp.v_norm = smp.state.v_norm();
        tr.samples.push_back(std::move(smp));
    };

    std::size_t next_grid = 1; // grid points are k * output_stride
    double t = 0.0;
    bool start_recorded = false;

    while (true) {
        if (is_regulated(strategy) && !ctrl.finished && t >= ctrl.next_sample_time) {
            const bool first_sample = !start_recorded;
            auto [q_new, c_new] = q_at(strategy, std::move(ctrl), t, clamp_fraction(y[0]));
            ctrl = std::move(c_new);
            if (first_sample && !ctrl.finished) {
                tr.strategy_start = t;
                tr.events.push_back({t, EventKind::StrategyStart, 0.0});
                start_recorded = true;
            }
            if (ctrl.finished) {
                tr.strategy_end = ctrl.t_end_observed;
                if (start_recorded) tr.events.push_back({t, EventKind::StrategyEnd, 0.0});
            }
        } else if (!is_regulated(strategy) && !natural) {
            const double ts = t_start(strategy);
            if (!start_recorded && t == ts) {
                tr.strategy_start = t;
                tr.events.push_back({t, EventKind::StrategyStart, 0.0});
                start_recorded = true;
            }
            if (sched_end && t == *sched_end && *sched_end > ts) {
                tr.strategy_end = t;
                tr.events.push_back({t, EventKind::StrategyEnd, 0.0});
            }
        }

        const Multipliers q = q_after(strategy, ctrl, t);
        const double t_switch = next_switch(strategy, ctrl, t);
        const bool settled = !std::isfinite(t_switch);
        const double t_next = std::min(t_switch, cfg.t_max);

        if (tr.samples.empty() || tr.samples.back().t < t) push(t, y, q);

        const double load = detail::infection_load_raw(y);
        // On the fixed-point surface nothing can move, whatever the controller does.
        if (load == 0.0 || (settled && load < cfg.quiescence_eps && !detail::can_regrow(params, q, y))) {
            tr.termination = Termination::Quiescence;
            tr.events.push_back({t, EventKind::Quiescence, 0.0});
            break;
        }
        if (t >= cfg.t_max) {
            tr.termination = Termination::TMax;
            break;
        }

        bool quiescent = false;
        auto f = [&](double, std::span<const double> yy, std::span<double> dy) { rhs_into(params, q, yy, dy); };
        auto observer = [&](const Dopri5Step& step) {
            const double drift = std::abs(detail::sum_raw(step.y_new) - 1.0);
            if (drift > kConservationAbortTolerance)
                throw numerical_error("conservation drift " + std::to_string(drift) + " exceeds tolerance", step.t_new);
            while (true) {
                const double tg = static_cast<double>(next_grid) * cfg.output_stride;
                if (tg > step.t_new || tg >= t_next) break;
                if (tg > step.t_old) {
                    step.at((tg - step.t_old) / (step.t_new - step.t_old), buf);
                    push(tg, buf, q);
                }
                ++next_grid;
            }
            if (settled && detail::infection_load_raw(step.y_new) < cfg.quiescence_eps &&
                !detail::can_regrow(params, q, step.y_new)) {
                quiescent = true;
                return false;
            }
            return true;
        };
        const double reached = stepper.integrate(f, t, t_next, y, observer);
        if (quiescent) {
            if (tr.samples.back().t < reached) push(reached, y, q);
            tr.termination = Termination::Quiescence;
            tr.events.push_back({reached, EventKind::Quiescence, 0.0});
            break;
        }
        t = t_next;
        while (static_cast<double>(next_grid) * cfg.output_stride <= t) ++next_grid;
    }

    tr.strategy_finished = is_regulated(strategy) ? ctrl.finished : sched_end && tr.back().t >= *sched_end;
    detail::annotate_events(params, cfg, tr);
    return tr;
}

// ---------------------------------------------------------------------------
// Post-processing.

class no_outbreak_error : public precondition_error {
public:
    using precondition_error::precondition_error;
};

/// Final susceptible fraction of a trajectory that reached quiescence.
inline double asymptotic_s(const Trajectory& tr) {
    if (tr.samples.empty() || tr.termination != Termination::Quiescence)
        throw precondition_error("trajectory did not reach quiescence; S_inf is not available");
    return tr.back().state.s();
}

/// Largest |S + E + sum I + R - 1| over the samples.
inline double conservation_drift(const Trajectory& tr) {
    double worst = 0.0;
    for (const auto& s : tr.samples) worst = std::max(worst, std::abs(detail::sum_raw(s.state.raw()) - 1.0));
    return worst;
}

/// Linear interpolation of the state at time t.
inline State state_at(const Trajectory& tr, double t) {
    const auto& sm = tr.samples;
    if (sm.empty()) throw precondition_error("empty trajectory");
    if (t <= sm.front().t) return sm.front().state;
    if (t >= sm.back().t) return sm.back().state;
    auto it = std::lower_bound(sm.begin(), sm.end(), t, [](const Sample& s, double v) { return s.t < v; });
    const Sample& b = *it;
    const Sample& a = *(it - 1);
    const double w = (t - a.t) / (b.t - a.t);
    std::vector<double> y(a.state.raw().size());
    for (std::size_t k = 0; k < y.size(); ++k) y[k] = (1.0 - w) * a.state.raw()[k] + w * b.state.raw()[k];
    return State::unchecked(std::move(y));
}

/// Time of the global maximum of E, refined by a parabola through the three
/// samples around the discrete maximum.
inline double detect_tstar(const Trajectory& tr) {
    const auto& sm = tr.samples;
    if (sm.size() < 3) throw no_outbreak_error("trajectory too short to contain an outbreak");
    std::size_t best = 0;
    for (std::size_t k = 1; k < sm.size(); ++k)
        if (sm[k].state.e() > sm[best].state.e()) best = k;
    if (best == 0 || best + 1 == sm.size())
        throw no_outbreak_error("E has no interior maximum: no outbreak");
    return detail::parabola_vertex(sm[best - 1].t, sm[best - 1].state.e(), sm[best].t, sm[best].state.e(),
                                   sm[best + 1].t, sm[best + 1].state.e());
}

struct SignStructureReport {
    double t_enter = 0.0;     // first sample inside the outbreak cone
    double t_star = 0.0;      // E maximum
    double t_j_peak = 0.0;    // J maximum
    double s_at_t_star = 0.0;
    double s_critical = 0.0;  // S* of the reduced system
    std::size_t intervals_checked = 0;
    std::size_t violations = 0;
    std::optional<double> first_violation_t;
    std::string first_violation;

    bool ok() const { return violations == 0; }
};

inline constexpr double kSignDeadBand = 1e-12;

/// Checks the sign pattern dE, dJ > 0 before t*, < 0 after t*, with
/// J = sum_i (R_i / R_ref) I_i, on forward differences between samples.
inline SignStructureReport sign_structure_check(const Trajectory& tr, const ModelParams& params) {
    if (!params.equal_gamma()) throw precondition_error("sign structure check requires equal infection times");
    double r_ref = 0.0;
    for (const auto& st : params.stages()) r_ref = std::max(r_ref, st.r_natural);
    if (!(r_ref > 0.0)) throw precondition_error("sign structure check needs a transmitting stage");

    const auto& sm = tr.samples;
    SignStructureReport rep;
    const Threshold s_crit = s_star(params);
    rep.s_critical = *s_crit;

    std::vector<ReducedState> red;
    red.reserve(sm.size());
    for (const auto& s : sm) red.push_back(reduce_sej(params, s.state, r_ref));
    const double tan_j = red.front().sigma_bar / red.front().gamma;

    std::optional<std::size_t> enter;
    for (std::size_t k = 0; k < sm.size(); ++k) {
        const auto& r = red[k];
        if (!(r.s > rep.s_critical) || r.e <= 0.0) continue;
        const double ratio = r.j / r.e;
        const double tan_e = params.sigma() / (r.beta * r.s);
        if (tan_e <= ratio && ratio <= tan_j) {
            enter = k;
            break;
        }
    }
    if (!enter) throw precondition_error("initial condition never enters the outbreak cone");
    rep.t_enter = sm[*enter].t;
    rep.t_star = detect_tstar(tr);
    rep.s_at_t_star = state_at(tr, rep.t_star).s();

    std::size_t jbest = 0;
    for (std::size_t k = 1; k < red.size(); ++k)
        if (red[k].j > red[jbest].j) jbest = k;
    rep.t_j_peak = sm[jbest].t;

    auto sign = [](double d) { return d > kSignDeadBand ? 1 : (d < -kSignDeadBand ? -1 : 0); };
    for (std::size_t k = *enter; k + 1 < sm.size(); ++k) {
        const double ta = sm[k].t, tb = sm[k + 1].t;
        if (ta < rep.t_star && tb > rep.t_star) continue; // interval containing t*
        const int se = sign(red[k + 1].e - red[k].e);
        const int sj = sign(red[k + 1].j - red[k].j);
        const int want = tb <= rep.t_star ? 1 : -1;
        ++rep.intervals_checked;
        const bool bad = (se != 0 && se != want) || (sj != 0 && sj != want);
        if (!bad) continue;
        if (rep.violations++ == 0) {
            rep.first_violation_t = ta;
            rep.first_violation = "on [" + std::to_string(ta) + ", " + std::to_string(tb) + "]: sign(dE)=" +
                                  std::to_string(se) + ", sign(dJ)=" + std::to_string(sj) +
                                  ", expected " + std::to_string(want);
        }
    }
    return rep;
}

} // namespace outbreak
