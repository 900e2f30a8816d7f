#pragma once

// Control strategies as time-dependent multipliers q(t) of the natural
// reproduction numbers, plus the NOS/WOS taxonomy evaluated on trajectories.
//
// Every strategy has q = 1 for t <= t_start. Deterministic strategies are
// piecewise constant between their breakpoints; the regulated strategy holds
// q = S0* / S(t_i) on (t_i, t_i + period) and stops at the first sample with
// S(t_i) <= S0*.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "outbreak/model.hpp"
#include "outbreak/trajectory.hpp"

namespace outbreak {

namespace strategies {

struct Natural {
    bool operator==(const Natural&) const = default;
};

struct ConstantPermanent {
    double t_start = 0.0;
    Multipliers q_level;
    bool operator==(const ConstantPermanent&) const = default;
};

struct ConstantFinite {
    double t_start = 0.0;
    double t_end = 0.0;
    Multipliers q_level;
    bool operator==(const ConstantFinite&) const = default;
};

/// Feedback strategy sampling S every `period` days from t_start.
struct RegulatedSStar {
    double t_start = 0.0;
    double period = 1.0;
    bool operator==(const RegulatedSStar&) const = default;
};

/// (t_k, q_k): q = q_k on (t_k, t_{k+1}], q = 1 before t_0.
struct PiecewiseUniform {
    std::vector<std::pair<double, double>> breakpoints;
    bool operator==(const PiecewiseUniform&) const = default;
};

struct PerStagePiecewise {
    std::vector<std::pair<double, Multipliers>> breakpoints;
    bool operator==(const PerStagePiecewise&) const = default;
};

} // namespace strategies

using Strategy = std::variant<strategies::Natural, strategies::ConstantPermanent,
                              strategies::ConstantFinite, strategies::RegulatedSStar,
                              strategies::PiecewiseUniform, strategies::PerStagePiecewise>;

inline constexpr double kUniformityTolerance = 1e-12;
inline constexpr double kClassificationTolerance = 1e-9;

template <class... Ts> struct overloaded : Ts... { using Ts::operator()...; };
template <class... Ts> overloaded(Ts...) -> overloaded<Ts...>;

namespace detail {

inline void require_levels(const Multipliers& q, std::size_t n) {
    if (q.size() != n)
        throw domain_error("strategy multiplier vector must have one entry per stage");
    for (double v : q)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw domain_error("strategy multipliers must be finite and non-negative");
}

inline void require_time(double t, const char* what) {
    if (!(t >= 0.0) || !std::isfinite(t))
        throw domain_error(std::string(what) + " must be a finite non-negative time");
}

inline bool all_equal(const Multipliers& q, double tol = kUniformityTolerance) {
    return std::all_of(q.begin(), q.end(), [&](double v) { return std::abs(v - q.front()) <= tol; });
}

inline bool all_one(const Multipliers& q) {
    return std::all_of(q.begin(), q.end(), [](double v) { return v == 1.0; });
}

} // namespace detail

/// Throws domain_error naming the violated invariant.
inline void validate(const Strategy& strategy, std::size_t n_stages) {
    using namespace strategies;
    std::visit(overloaded{
        [](const Natural&) {},
        [&](const ConstantPermanent& s) {
            detail::require_time(s.t_start, "t_start");
            detail::require_levels(s.q_level, n_stages);
        },
        [&](const ConstantFinite& s) {
            detail::require_time(s.t_start, "t_start");
            detail::require_time(s.t_end, "t_end");
            if (!(s.t_end > s.t_start)) throw domain_error("finite strategy needs t_end > t_start");
            detail::require_levels(s.q_level, n_stages);
        },
        [&](const RegulatedSStar& s) {
            detail::require_time(s.t_start, "t_start");
            if (!(s.period > 0.0) || !std::isfinite(s.period))
                throw domain_error("regulated strategy period must be positive");
        },
        [&](const PiecewiseUniform& s) {
            if (s.breakpoints.empty()) throw domain_error("piecewise strategy needs at least one breakpoint");
            for (std::size_t k = 0; k < s.breakpoints.size(); ++k) {
                detail::require_time(s.breakpoints[k].first, "breakpoint time");
                if (k > 0 && !(s.breakpoints[k].first > s.breakpoints[k - 1].first))
                    throw domain_error("breakpoint times must be strictly increasing");
                if (!(s.breakpoints[k].second >= 0.0) || !std::isfinite(s.breakpoints[k].second))
                    throw domain_error("strategy multipliers must be finite and non-negative");
            }
        },
        [&](const PerStagePiecewise& s) {
            if (s.breakpoints.empty()) throw domain_error("piecewise strategy needs at least one breakpoint");
            for (std::size_t k = 0; k < s.breakpoints.size(); ++k) {
                detail::require_time(s.breakpoints[k].first, "breakpoint time");
                if (k > 0 && !(s.breakpoints[k].first > s.breakpoints[k - 1].first))
                    throw domain_error("breakpoint times must be strictly increasing");
                detail::require_levels(s.breakpoints[k].second, n_stages);
            }
        },
    }, strategy);
}

inline double t_start(const Strategy& strategy) {
    using namespace strategies;
    return std::visit(overloaded{
        [](const Natural&) { return 0.0; },
        [](const ConstantPermanent& s) { return s.t_start; },
        [](const ConstantFinite& s) { return s.t_start; },
        [](const RegulatedSStar& s) { return s.t_start; },
        [](const PiecewiseUniform& s) { return s.breakpoints.front().first; },
        [](const PerStagePiecewise& s) { return s.breakpoints.front().first; },
    }, strategy);
}

inline bool is_regulated(const Strategy& strategy) {
    return std::holds_alternative<strategies::RegulatedSStar>(strategy);
}

inline bool is_uniform(const Strategy& strategy) {
    using namespace strategies;
    return std::visit(overloaded{
        [](const Natural&) { return true; },
        [](const ConstantPermanent& s) { return detail::all_equal(s.q_level); },
        [](const ConstantFinite& s) { return detail::all_equal(s.q_level); },
        [](const RegulatedSStar&) { return true; },
        [](const PiecewiseUniform&) { return true; },
        [](const PerStagePiecewise& s) {
            return std::all_of(s.breakpoints.begin(), s.breakpoints.end(),
                               [](const auto& bp) { return detail::all_equal(bp.second); });
        },
    }, strategy);
}

/// For deterministic strategies: the time after which q is identically 1,
/// empty for permanent ones. Natural yields 0. Regulated strategies only
/// know their end once run.
inline std::optional<double> scheduled_end(const Strategy& strategy) {
    using namespace strategies;
    return std::visit(overloaded{
        [](const Natural&) -> std::optional<double> { return 0.0; },
        [](const ConstantPermanent& s) -> std::optional<double> {
            if (detail::all_one(s.q_level)) return s.t_start;
            return std::nullopt;
        },
        [](const ConstantFinite& s) -> std::optional<double> { return s.t_end; },
        [](const RegulatedSStar&) -> std::optional<double> { return std::nullopt; },
        [](const PiecewiseUniform& s) -> std::optional<double> {
            std::optional<double> end;
            for (const auto& [t, q] : s.breakpoints) {
                if (q == 1.0) {
                    if (!end) end = t;
                } else {
                    end.reset();
                }
            }
            return end;
        },
        [](const PerStagePiecewise& s) -> std::optional<double> {
            std::optional<double> end;
            for (const auto& [t, q] : s.breakpoints) {
                if (detail::all_one(q)) {
                    if (!end) end = t;
                } else {
                    end.reset();
                }
            }
            return end;
        },
    }, strategy);
}

/// Deterministic switching times, ascending. Empty for Natural and regulated.
inline std::vector<double> breakpoints(const Strategy& strategy) {
    using namespace strategies;
    return std::visit(overloaded{
        [](const Natural&) { return std::vector<double>{}; },
        [](const ConstantPermanent& s) { return std::vector<double>{s.t_start}; },
        [](const ConstantFinite& s) { return std::vector<double>{s.t_start, s.t_end}; },
        [](const RegulatedSStar&) { return std::vector<double>{}; },
        [](const PiecewiseUniform& s) {
            std::vector<double> out;
            for (const auto& bp : s.breakpoints) out.push_back(bp.first);
            return out;
        },
        [](const PerStagePiecewise& s) {
            std::vector<double> out;
            for (const auto& bp : s.breakpoints) out.push_back(bp.first);
            return out;
        },
    }, strategy);
}

// ---------------------------------------------------------------------------
// Controller state for the sampled feedback loop.

struct ControllerState {
    double next_sample_time = std::numeric_limits<double>::infinity();
    Multipliers held_q;
    bool finished = false;
    std::optional<double> t_end_observed;
    double s_target = 0.0; // S0* of the uncontrolled model

    bool operator==(const ControllerState&) const = default;
};

inline ControllerState init_controller(const Strategy& strategy, const ModelParams& params) {
    validate(strategy, params.n_stages());
    ControllerState ctrl;
    ctrl.held_q = unit_multipliers(params.n_stages());
    if (const auto* reg = std::get_if<strategies::RegulatedSStar>(&strategy)) {
        const Threshold target = s_star(params);
        if (!target) throw precondition_error("regulated strategy needs a finite natural S*");
        ctrl.s_target = *target;
        ctrl.next_sample_time = reg->t_start;
    } else {
        ctrl.finished = true;
    }
    return ctrl;
}

namespace detail {

inline Multipliers deterministic_q(const Strategy& strategy, std::size_t n, double t) {
    using namespace strategies;
    return std::visit(overloaded{
        [&](const Natural&) { return unit_multipliers(n); },
        [&](const ConstantPermanent& s) { return t <= s.t_start ? unit_multipliers(n) : s.q_level; },
        [&](const ConstantFinite& s) {
            return (t > s.t_start && t < s.t_end) ? s.q_level : unit_multipliers(n);
        },
        [&](const RegulatedSStar&) -> Multipliers {
            throw precondition_error("regulated strategies need a controller state");
        },
        [&](const PiecewiseUniform& s) {
            Multipliers q = unit_multipliers(n);
            for (const auto& [tb, level] : s.breakpoints)
                if (t > tb) q.assign(n, level);
            return q;
        },
        [&](const PerStagePiecewise& s) {
            Multipliers q = unit_multipliers(n);
            for (const auto& [tb, level] : s.breakpoints)
                if (t > tb) q = level;
            return q;
        },
    }, strategy);
}

} // namespace detail

/// Active multipliers at time t. For the regulated strategy, a call at a
/// sample time must carry S(t_i); it then updates the held level for the
/// following period (the returned q is the level on (t_i, t_i + period)).
inline std::pair<Multipliers, ControllerState> q_at(const Strategy& strategy, ControllerState ctrl, double t,
                                                    std::optional<double> s_sample = std::nullopt) {
    const std::size_t n = ctrl.held_q.size();
    const auto* reg = std::get_if<strategies::RegulatedSStar>(&strategy);
    if (!reg) return {detail::deterministic_q(strategy, n, t), std::move(ctrl)};

    if (ctrl.finished) return {unit_multipliers(n), std::move(ctrl)};
    if (t < ctrl.next_sample_time) return {ctrl.held_q, std::move(ctrl)};

    const double tol = 1e-9 * std::max(1.0, std::abs(ctrl.next_sample_time));
    if (t > ctrl.next_sample_time + tol)
        throw precondition_error("regulated strategy sample time was skipped");
    if (!s_sample) throw precondition_error("regulated strategy needs S(t_i) at a sample time");

    if (*s_sample > ctrl.s_target) {
        ctrl.held_q.assign(n, ctrl.s_target / *s_sample);
        ctrl.next_sample_time += reg->period;
    } else {
        ctrl.finished = true;
        ctrl.t_end_observed = ctrl.next_sample_time;
        ctrl.held_q = unit_multipliers(n);
        ctrl.next_sample_time = std::numeric_limits<double>::infinity();
    }
    return {ctrl.held_q, std::move(ctrl)};
}

/// Multipliers in force on (t, t + dt) for small dt, without advancing a
/// regulated controller.
inline Multipliers q_after(const Strategy& strategy, const ControllerState& ctrl, double t) {
    if (is_regulated(strategy)) return ctrl.finished ? unit_multipliers(ctrl.held_q.size()) : ctrl.held_q;
    const auto bps = breakpoints(strategy);
    // smallest breakpoint strictly after t bounds the interval
    double right = std::numeric_limits<double>::infinity();
    for (double b : bps)
        if (b > t) {
            right = b;
            break;
        }
    const double probe = std::isfinite(right) ? 0.5 * (t + right) : t + 1.0;
    return detail::deterministic_q(strategy, ctrl.held_q.size(), probe);
}

/// Next time after t at which q may change, +inf if none.
inline double next_switch(const Strategy& strategy, const ControllerState& ctrl, double t) {
    if (is_regulated(strategy)) return ctrl.finished ? std::numeric_limits<double>::infinity() : ctrl.next_sample_time;
    for (double b : breakpoints(strategy))
        if (b > t) return b;
    return std::numeric_limits<double>::infinity();
}

struct ThresholdsAt {
    Threshold s_bar;
    Threshold s_star;
    Threshold s_q; // S0*/q(t), uniform strategies only
};

inline ThresholdsAt thresholds_for(const ModelParams& params, const Multipliers& q) {
    ThresholdsAt out;
    out.s_bar = s_bar(params, q);
    out.s_star = s_star(params, q);
    if (detail::all_equal(q)) {
        const Threshold base = s_star(params);
        if (base && q.front() > 0.0) out.s_q = *base / q.front();
    }
    return out;
}

/// S_bar(t), S*(t) under the multipliers active at t (no controller advance).
inline ThresholdsAt thresholds_at(const Strategy& strategy, const ControllerState& ctrl,
                                  const ModelParams& params, double t) {
    Multipliers q;
    if (is_regulated(strategy))
        q = (ctrl.finished || t <= t_start(strategy)) ? unit_multipliers(params.n_stages()) : ctrl.held_q;
    else
        q = detail::deterministic_q(strategy, params.n_stages(), t);
    return thresholds_for(params, q);
}

// ---------------------------------------------------------------------------
// Taxonomy.

struct StrategyClassification {
    bool is_finite = false;
    bool is_permanent = false;
    bool is_uniform = false;
    bool is_nos = false;
    bool is_wos = false;
    std::optional<double> observed_t_end;

    bool operator==(const StrategyClassification&) const = default;
};

inline StrategyClassification classify(const Strategy& strategy, const ModelParams& params,
                                       const Trajectory& trajectory) {
    validate(strategy, params.n_stages());
    if (trajectory.samples.empty()) throw precondition_error("cannot classify an empty trajectory");
    StrategyClassification c;
    c.is_uniform = is_uniform(strategy);

    if (is_regulated(strategy)) {
        if (!trajectory.strategy_end)
            throw precondition_error("insufficient horizon: regulated strategy still active at trajectory end");
        c.is_finite = true;
        c.observed_t_end = trajectory.strategy_end;
    } else {
        const auto end = scheduled_end(strategy);
        c.is_finite = end.has_value();
        c.observed_t_end = end;
        if (end && trajectory.back().t < *end)
            throw precondition_error("insufficient horizon: trajectory ends before the strategy does");
    }
    c.is_permanent = !c.is_finite;

    const double t_i = t_start(strategy);
    c.is_nos = true;
    c.is_wos = true;
    for (const auto& smp : trajectory.samples) {
        if (!(smp.t > t_i)) continue;
        const double s = smp.state.s();
        const Threshold sb = s_bar(params, smp.q);
        const Threshold ss = s_star(params, smp.q);
        if (sb && s > *sb + kClassificationTolerance) c.is_nos = false;
        if (ss && s > *ss + kClassificationTolerance) c.is_wos = false;
    }
    return c;
}

} // namespace outbreak
