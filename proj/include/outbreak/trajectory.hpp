#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "outbreak/model.hpp"

namespace outbreak {

enum class EventKind { EPeak, SCrossesSBar, SCrossesSStar, StrategyStart, StrategyEnd, Quiescence };

inline std::string_view to_string(EventKind k) {
    switch (k) {
    case EventKind::EPeak: return "E-peak";
    case EventKind::SCrossesSBar: return "S-crosses-S_bar";
    case EventKind::SCrossesSStar: return "S-crosses-S_star";
    case EventKind::StrategyStart: return "strategy-start";
    case EventKind::StrategyEnd: return "strategy-end";
    case EventKind::Quiescence: return "quiescence";
    }
    return "unknown";
}

struct Event {
    double t = 0.0;
    EventKind kind = EventKind::EPeak;
    double value = 0.0; // E at a peak, S at a crossing, 0 otherwise

    bool operator==(const Event&) const = default;
};

/// One output point. `q` is the multiplier vector in force on the interval
/// that starts at `t` (right limit at control switches).
struct Sample {
    double t = 0.0;
    State state;
    Multipliers q;
    double u = 0.0;      // Lyapunov function; NaN when transmission is fully suppressed
    double v_norm = 0.0; // sqrt(E^2 + sum I_i^2)

    bool operator==(const Sample&) const = default;
};

enum class Termination { Quiescence, TMax };

struct Trajectory {
    std::vector<Sample> samples;
    std::vector<Event> events;
    Termination termination = Termination::TMax;
    bool strategy_finished = false;       // no control change can occur after the last sample
    std::optional<double> strategy_start; // first time q leaves 1
    std::optional<double> strategy_end;   // time q returned to 1 for good

    const Sample& front() const { return samples.front(); }
    const Sample& back() const { return samples.back(); }

    std::vector<Event> events_of(EventKind k) const {
        std::vector<Event> out;
        for (const auto& e : events)
            if (e.kind == k) out.push_back(e);
        return out;
    }

    bool operator==(const Trajectory&) const = default;
};

} // namespace outbreak
