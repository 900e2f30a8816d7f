#pragma once

// Run configuration as versioned JSON. Unknown keys are rejected so typos do
// not silently fall back to defaults.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <initializer_list>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "outbreak/errors.hpp"
#include "outbreak/experiments.hpp"
#include "outbreak/integrator.hpp"
#include "outbreak/model.hpp"
#include "outbreak/strategy.hpp"

namespace outbreak {

inline constexpr int kSchemaVersion = 1;

namespace models {

struct SeirN {
    double sigma = 0.0;
    std::vector<StageSpec> stages;
    bool operator==(const SeirN&) const = default;
};

struct Seiar {
    double r0 = 0.0, sigma = 0.0, gamma = 0.0, chi = 0.0, xi = 0.0;
    bool operator==(const Seiar&) const = default;
};

struct Seiaqr {
    double r0 = 0.0, sigma = 0.0, gamma = 0.0, chi = 0.0, xi = 0.0, zeta_i = 0.0, zeta_a = 0.0;
    bool operator==(const Seiaqr&) const = default;
};

} // namespace models

using ModelSpec = std::variant<models::SeirN, models::Seiar, models::Seiaqr>;

inline ModelParams build_model(const ModelSpec& spec) {
    return std::visit(overloaded{
        [](const models::SeirN& m) { return ModelParams(m.sigma, m.stages); },
        [](const models::Seiar& m) { return make_seiar(m.r0, m.sigma, m.gamma, m.chi, m.xi); },
        [](const models::Seiaqr& m) {
            return make_seiaqr(m.r0, m.sigma, m.gamma, m.chi, m.xi, m.zeta_i, m.zeta_a);
        },
    }, spec);
}

struct InitSpec {
    double population = baseline::population;
    double exposed = 1.0;
    bool operator==(const InitSpec&) const = default;
};

struct OutputSpec {
    std::string csv;  // empty: no file
    std::string plot; // SVG path, empty: none
    bool events = true;
    bool operator==(const OutputSpec&) const = default;
};

struct RunConfig {
    int schema_version = kSchemaVersion;
    ModelSpec model = models::Seiar{baseline::r0, baseline::sigma, baseline::gamma, baseline::chi, baseline::xi};
    Strategy strategy = strategies::Natural{};
    InitSpec init;
    IntegrationConfig integration;
    OutputSpec outputs;

    bool operator==(const RunConfig&) const = default;

    ModelParams params() const { return build_model(model); }
    State initial_state() const { return State::initial(params().n_stages(), init.population, init.exposed); }
    Scenario scenario() const { return {params(), initial_state(), integration}; }

    /// Runs every module validator; throws domain_error on the first failure.
    void validate() const {
        if (schema_version != kSchemaVersion) throw config_error("unsupported schema_version " + std::to_string(schema_version));
        const ModelParams p = params();
        outbreak::validate(strategy, p.n_stages());
        initial_state();
        integration.validate();
    }
};

/// True if any multiplier of the strategy exceeds 1.
inline bool aggravating(const Strategy& strategy) {
    using namespace strategies;
    auto any_above = [](const Multipliers& q) {
        return std::any_of(q.begin(), q.end(), [](double v) { return v > 1.0; });
    };
    return std::visit(overloaded{
        [](const Natural&) { return false; },
        [&](const ConstantPermanent& s) { return any_above(s.q_level); },
        [&](const ConstantFinite& s) { return any_above(s.q_level); },
        [](const RegulatedSStar&) { return false; },
        [](const PiecewiseUniform& s) {
            return std::any_of(s.breakpoints.begin(), s.breakpoints.end(), [](const auto& b) { return b.second > 1.0; });
        },
        [&](const PerStagePiecewise& s) {
            return std::any_of(s.breakpoints.begin(), s.breakpoints.end(), [&](const auto& b) { return any_above(b.second); });
        },
    }, strategy);
}

// ---------------------------------------------------------------------------
// JSON mapping.

using json = nlohmann::json;

namespace detail {

inline void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw config_error(where + ": expected an object");
}

inline void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    require_object(j, where);
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key())) throw config_error(where + ": unknown key '" + it.key() + "'");
}

inline const json& need(const json& j, const std::string& where, const char* key) {
    if (!j.contains(key)) throw config_error(where + ": missing key '" + key + "'");
    return j.at(key);
}

inline double num(const json& j, const std::string& where, const char* key) {
    const json& v = need(j, where, key);
    if (!v.is_number()) throw config_error(where + "." + key + ": expected a number");
    return v.get<double>();
}

inline double num_or(const json& j, const std::string& where, const char* key, double fallback) {
    return j.contains(key) ? num(j, where, key) : fallback;
}

inline std::string str(const json& j, const std::string& where, const char* key) {
    const json& v = need(j, where, key);
    if (!v.is_string()) throw config_error(where + "." + key + ": expected a string");
    return v.get<std::string>();
}

/// A multiplier vector, or a single number applied to every stage.
inline Multipliers multipliers(const json& v, const std::string& where, std::size_t n) {
    if (v.is_number()) return Multipliers(n, v.get<double>());
    if (!v.is_array()) throw config_error(where + ": expected a number or an array of numbers");
    Multipliers q;
    for (const auto& e : v) {
        if (!e.is_number()) throw config_error(where + ": expected numbers");
        q.push_back(e.get<double>());
    }
    if (q.size() != n) throw config_error(where + ": expected " + std::to_string(n) + " multipliers");
    return q;
}

inline ModelSpec parse_model(const json& j) {
    const std::string w = "model";
    require_object(j, w);
    const std::string kind = str(j, w, "kind");
    if (kind == "seir-n") {
        check_keys(j, w, {"kind", "sigma", "stages"});
        models::SeirN m;
        m.sigma = num(j, w, "sigma");
        const json& st = need(j, w, "stages");
        if (!st.is_array()) throw config_error("model.stages: expected an array");
        for (std::size_t k = 0; k < st.size(); ++k) {
            const std::string ws = "model.stages[" + std::to_string(k) + "]";
            check_keys(st[k], ws, {"x", "gamma", "r_natural"});
            m.stages.push_back({num(st[k], ws, "x"), num(st[k], ws, "gamma"), num(st[k], ws, "r_natural")});
        }
        return m;
    }
    if (kind == "seiar") {
        check_keys(j, w, {"kind", "r0", "sigma", "gamma", "chi", "xi"});
        return models::Seiar{num(j, w, "r0"), num(j, w, "sigma"), num(j, w, "gamma"), num(j, w, "chi"), num(j, w, "xi")};
    }
    if (kind == "seiaqr") {
        check_keys(j, w, {"kind", "r0", "sigma", "gamma", "chi", "xi", "zeta_i", "zeta_a"});
        return models::Seiaqr{num(j, w, "r0"),  num(j, w, "sigma"),  num(j, w, "gamma"), num(j, w, "chi"),
                              num(j, w, "xi"), num(j, w, "zeta_i"), num(j, w, "zeta_a")};
    }
    throw config_error("model.kind: unknown model '" + kind + "'");
}

inline Strategy parse_strategy(const json& j, std::size_t n) {
    const std::string w = "strategy";
    require_object(j, w);
    const std::string kind = str(j, w, "kind");
    if (kind == "natural") {
        check_keys(j, w, {"kind"});
        return strategies::Natural{};
    }
    if (kind == "constant-permanent") {
        check_keys(j, w, {"kind", "t_start", "q"});
        return strategies::ConstantPermanent{num(j, w, "t_start"), multipliers(need(j, w, "q"), "strategy.q", n)};
    }
    if (kind == "constant-finite") {
        check_keys(j, w, {"kind", "t_start", "t_end", "q"});
        return strategies::ConstantFinite{num(j, w, "t_start"), num(j, w, "t_end"),
                                          multipliers(need(j, w, "q"), "strategy.q", n)};
    }
    if (kind == "regulated-s-star") {
        check_keys(j, w, {"kind", "t_start", "period"});
        return strategies::RegulatedSStar{num(j, w, "t_start"), num(j, w, "period")};
    }
    if (kind == "piecewise-uniform") {
        check_keys(j, w, {"kind", "breakpoints"});
        const json& bps = need(j, w, "breakpoints");
        if (!bps.is_array()) throw config_error("strategy.breakpoints: expected an array");
        strategies::PiecewiseUniform s;
        for (std::size_t k = 0; k < bps.size(); ++k) {
            const std::string wb = "strategy.breakpoints[" + std::to_string(k) + "]";
            check_keys(bps[k], wb, {"t", "q"});
            s.breakpoints.emplace_back(num(bps[k], wb, "t"), num(bps[k], wb, "q"));
        }
        return s;
    }
    if (kind == "per-stage-piecewise") {
        check_keys(j, w, {"kind", "breakpoints"});
        const json& bps = need(j, w, "breakpoints");
        if (!bps.is_array()) throw config_error("strategy.breakpoints: expected an array");
        strategies::PerStagePiecewise s;
        for (std::size_t k = 0; k < bps.size(); ++k) {
            const std::string wb = "strategy.breakpoints[" + std::to_string(k) + "]";
            check_keys(bps[k], wb, {"t", "q"});
            s.breakpoints.emplace_back(num(bps[k], wb, "t"), multipliers(need(bps[k], wb, "q"), wb + ".q", n));
        }
        return s;
    }
    throw config_error("strategy.kind: unknown strategy '" + kind + "'");
}

} // namespace detail

/// Parses and validates a configuration. Syntax errors report line and
/// column; invalid values raise domain_error naming the violated invariant.
inline RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw config_error(std::string("config parse error: ") + e.what());
    }
    detail::check_keys(j, "config", {"schema_version", "model", "strategy", "init", "integration", "outputs"});

    RunConfig cfg;
    const json& ver = detail::need(j, "config", "schema_version");
    if (!ver.is_number_integer()) throw config_error("schema_version: expected an integer");
    cfg.schema_version = ver.get<int>();
    if (cfg.schema_version != kSchemaVersion)
        throw config_error("unsupported schema_version " + std::to_string(cfg.schema_version));

    cfg.model = detail::parse_model(detail::need(j, "config", "model"));
    const ModelParams params = build_model(cfg.model);
    if (j.contains("strategy")) cfg.strategy = detail::parse_strategy(j.at("strategy"), params.n_stages());

    if (j.contains("init")) {
        const json& ji = j.at("init");
        detail::check_keys(ji, "init", {"population", "exposed"});
        cfg.init.population = detail::num_or(ji, "init", "population", cfg.init.population);
        cfg.init.exposed = detail::num_or(ji, "init", "exposed", cfg.init.exposed);
    }
    if (j.contains("integration")) {
        const json& jg = j.at("integration");
        const std::string w = "integration";
        detail::check_keys(jg, w, {"rel_tol", "abs_tol", "max_step", "t_max", "quiescence_eps", "output_stride"});
        auto& ic = cfg.integration;
        ic.rel_tol = detail::num_or(jg, w, "rel_tol", ic.rel_tol);
        ic.abs_tol = detail::num_or(jg, w, "abs_tol", ic.abs_tol);
        ic.max_step = detail::num_or(jg, w, "max_step", ic.max_step);
        ic.t_max = detail::num_or(jg, w, "t_max", ic.t_max);
        ic.quiescence_eps = detail::num_or(jg, w, "quiescence_eps", ic.quiescence_eps);
        ic.output_stride = detail::num_or(jg, w, "output_stride", ic.output_stride);
    }
    if (j.contains("outputs")) {
        const json& jo = j.at("outputs");
        detail::check_keys(jo, "outputs", {"csv", "plot", "events"});
        if (jo.contains("csv")) cfg.outputs.csv = detail::str(jo, "outputs", "csv");
        if (jo.contains("plot")) cfg.outputs.plot = detail::str(jo, "outputs", "plot");
        if (jo.contains("events")) {
            if (!jo.at("events").is_boolean()) throw config_error("outputs.events: expected a boolean");
            cfg.outputs.events = jo.at("events").get<bool>();
        }
    }
    cfg.validate();
    return cfg;
}

inline json to_json(const ModelSpec& spec) {
    return std::visit(overloaded{
        [](const models::SeirN& m) {
            json stages = json::array();
            for (const auto& s : m.stages) stages.push_back({{"x", s.x}, {"gamma", s.gamma}, {"r_natural", s.r_natural}});
            return json{{"kind", "seir-n"}, {"sigma", m.sigma}, {"stages", stages}};
        },
        [](const models::Seiar& m) {
            return json{{"kind", "seiar"}, {"r0", m.r0}, {"sigma", m.sigma}, {"gamma", m.gamma}, {"chi", m.chi}, {"xi", m.xi}};
        },
        [](const models::Seiaqr& m) {
            return json{{"kind", "seiaqr"}, {"r0", m.r0},   {"sigma", m.sigma},   {"gamma", m.gamma},
                        {"chi", m.chi},     {"xi", m.xi},   {"zeta_i", m.zeta_i}, {"zeta_a", m.zeta_a}};
        },
    }, spec);
}

inline json to_json(const Strategy& strategy) {
    using namespace strategies;
    return std::visit(overloaded{
        [](const Natural&) { return json{{"kind", "natural"}}; },
        [](const ConstantPermanent& s) { return json{{"kind", "constant-permanent"}, {"t_start", s.t_start}, {"q", s.q_level}}; },
        [](const ConstantFinite& s) {
            return json{{"kind", "constant-finite"}, {"t_start", s.t_start}, {"t_end", s.t_end}, {"q", s.q_level}};
        },
        [](const RegulatedSStar& s) { return json{{"kind", "regulated-s-star"}, {"t_start", s.t_start}, {"period", s.period}}; },
        [](const PiecewiseUniform& s) {
            json bps = json::array();
            for (const auto& [t, q] : s.breakpoints) bps.push_back({{"t", t}, {"q", q}});
            return json{{"kind", "piecewise-uniform"}, {"breakpoints", bps}};
        },
        [](const PerStagePiecewise& s) {
            json bps = json::array();
            for (const auto& [t, q] : s.breakpoints) bps.push_back({{"t", t}, {"q", q}});
            return json{{"kind", "per-stage-piecewise"}, {"breakpoints", bps}};
        },
    }, strategy);
}

inline json to_json(const RunConfig& cfg) {
    const auto& ic = cfg.integration;
    return json{
        {"schema_version", cfg.schema_version},
        {"model", to_json(cfg.model)},
        {"strategy", to_json(cfg.strategy)},
        {"init", {{"population", cfg.init.population}, {"exposed", cfg.init.exposed}}},
        {"integration",
         {{"rel_tol", ic.rel_tol}, {"abs_tol", ic.abs_tol}, {"max_step", ic.max_step}, {"t_max", ic.t_max},
          {"quiescence_eps", ic.quiescence_eps}, {"output_stride", ic.output_stride}}},
        {"outputs", {{"csv", cfg.outputs.csv}, {"plot", cfg.outputs.plot}, {"events", cfg.outputs.events}}},
    };
}

inline std::string serialize(const RunConfig& cfg, int indent = 2) { return to_json(cfg).dump(indent); }

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string config_hash(const RunConfig& cfg) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(serialize(cfg, -1))));
    return std::string("fnv1a64:") + buf;
}

} // namespace outbreak
