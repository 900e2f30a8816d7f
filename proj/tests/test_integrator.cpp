#include <catch_amalgamated.hpp>

#include <cmath>

#include "outbreak/experiments.hpp"
#include "outbreak/integrator.hpp"

using namespace outbreak;
using Catch::Matchers::WithinAbs;

namespace {

const Scenario& reference() {
    static const Scenario sc = baseline_scenario();
    return sc;
}

const Trajectory& natural_run() {
    static const Trajectory tr = run(reference(), strategies::Natural{});
    return tr;
}

} // namespace

TEST_CASE("fixed point is quiescent at once", "[integrator]") {
    const Scenario& sc = reference();
    const State init(0.7, 0.0, {0.0, 0.0}, 0.3);
    const Trajectory tr = integrate(sc.params, strategies::Natural{}, init, sc.cfg);
    REQUIRE(tr.termination == Termination::Quiescence);
    CHECK(tr.samples.size() == 1);
    CHECK(tr.back().t == 0.0);
    CHECK(asymptotic_s(tr) == 0.7);
}

TEST_CASE("natural run peaks near 130 days", "[integrator]") {
    const Trajectory& tr = natural_run();
    const double s0_star = *s_star(reference().params);
    REQUIRE(tr.termination == Termination::Quiescence);
    const double ts = detect_tstar(tr);
    CHECK(ts >= 125.0);
    CHECK(ts <= 135.0);
    const auto peaks = tr.events_of(EventKind::EPeak);
    REQUIRE(peaks.size() == 1);
    CHECK_THAT(peaks[0].t, WithinAbs(ts, 0.25));
    CHECK(asymptotic_s(tr) < s0_star);
    CHECK(tr.events_of(EventKind::SCrossesSStar).size() == 1);
}

TEST_CASE("S at the E peak equals S0*", "[integrator]") {
    const Trajectory& tr = natural_run();
    const double s0_star = *s_star(reference().params);
    const double s = state_at(tr, detect_tstar(tr)).s();
    INFO("S(t*) = " << s << ", S0* = " << s0_star);
    CHECK(std::abs(s - s0_star) <= 1e-3);
}

TEST_CASE("sign structure of the natural run", "[integrator]") {
    const SignStructureReport rep = sign_structure_check(natural_run(), reference().params);
    INFO("violations " << rep.violations << ", first " << rep.first_violation << ", t* " << rep.t_star << ", J peak "
                       << rep.t_j_peak);
    CHECK(rep.intervals_checked > 0);
    CHECK(rep.violations == 0);
}

TEST_CASE("sign structure needs equal infection times", "[integrator]") {
    const ModelParams p(0.3, {StageSpec{0.5, 0.5, 2.0}, StageSpec{0.5, 1.0, 2.0}});
    const Trajectory tr = integrate(p, strategies::Natural{}, State::initial(2, 1e4), IntegrationConfig{});
    CHECK_THROWS_AS(sign_structure_check(tr, p), precondition_error);
}

TEST_CASE("self-convergence under tighter tolerances", "[integrator]") {
    const Scenario& sc = reference();
    const double base = asymptotic_s(natural_run());
    for (double f : {0.5, 0.25}) {
        Scenario tight = sc;
        tight.cfg.rel_tol *= f;
        tight.cfg.abs_tol *= f;
        CHECK_THAT(asymptotic_s(run(tight, strategies::Natural{})), WithinAbs(base, 1e-8));
    }
}

TEST_CASE("conservation and monotone S", "[integrator]") {
    const Scenario& sc = reference();
    for (const Strategy& s : {Strategy{strategies::Natural{}}, Strategy{strategies::RegulatedSStar{110.0, 30.0}},
                              Strategy{strategies::ConstantFinite{80.0, 200.0, Multipliers{0.4, 0.9}}}}) {
        const Trajectory tr = run(sc, s);
        CHECK(conservation_drift(tr) <= 1e-9);
        for (std::size_t k = 1; k < tr.samples.size(); ++k) {
            CHECK(tr.samples[k].t > tr.samples[k - 1].t);
            CHECK(tr.samples[k].state.s() <= tr.samples[k - 1].state.s());
        }
    }
}

TEST_CASE("output grid and switch points", "[integrator]") {
    const Scenario& sc = reference();
    const Strategy s = strategies::ConstantFinite{110.1, 170.3, Multipliers(2, 0.5)};
    const Trajectory tr = run(sc, s);
    bool start = false, end = false;
    for (const auto& smp : tr.samples) {
        if (smp.t == 110.1) start = true;
        if (smp.t == 170.3) end = true;
    }
    CHECK(start);
    CHECK(end);
    CHECK(tr.strategy_start == 110.1);
    CHECK(tr.strategy_end == 170.3);
    CHECK(tr.strategy_finished);
    CHECK(tr.samples[4].t == 1.0);
}

TEST_CASE("runs are deterministic", "[integrator]") {
    const Scenario& sc = reference();
    const Strategy s = strategies::RegulatedSStar{100.0, 10.0};
    CHECK(run(sc, s) == run(sc, s));
}

TEST_CASE("asymptotic_s requires quiescence", "[integrator]") {
    Scenario sc = reference();
    sc.cfg.t_max = 100.0;
    const Trajectory tr = run(sc, strategies::Natural{});
    CHECK(tr.termination == Termination::TMax);
    CHECK(tr.back().t == 100.0);
    CHECK_THROWS_AS(asymptotic_s(tr), precondition_error);
}

TEST_CASE("no outbreak below the threshold", "[integrator]") {
    const Scenario& sc = reference();
    const State init(0.4, 1e-4, {0.0, 0.0}, 0.6 - 1e-4);
    const Trajectory tr = integrate(sc.params, strategies::Natural{}, init, sc.cfg);
    CHECK_THROWS_AS(detect_tstar(tr), no_outbreak_error);
    CHECK(tr.events_of(EventKind::EPeak).empty());
}

TEST_CASE("U does not increase below S*", "[integrator]") {
    const Trajectory& tr = natural_run();
    const double s0_star = *s_star(reference().params);
    for (std::size_t k = 0; k + 1 < tr.samples.size(); ++k)
        if (tr.samples[k].state.s() <= s0_star) CHECK(tr.samples[k + 1].u <= tr.samples[k].u + 1e-15);
}

TEST_CASE("second outbreak after a finite strategy", "[integrator]") {
    const Scenario& sc = reference();
    const double ss = *s_star(sc.params);
    const Strategy s = strategies::ConstantFinite{110.0, 140.0, Multipliers(2, ss)};
    const Trajectory tr = run(sc, s);
    REQUIRE(tr.termination == Termination::Quiescence);
    CHECK(tr.events_of(EventKind::EPeak).size() >= 2);
    CHECK(asymptotic_s(tr) < ss);
}

TEST_CASE("invalid configuration", "[integrator]") {
    const Scenario& sc = reference();
    IntegrationConfig bad;
    bad.rel_tol = 0.0;
    CHECK_THROWS_AS(integrate(sc.params, strategies::Natural{}, sc.init, bad), domain_error);
    CHECK_THROWS_AS(integrate(sc.params, strategies::Natural{}, State::initial(3, 100.0), sc.cfg), precondition_error);
}
