#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "outbreak/experiments.hpp"
#include "outbreak/model.hpp"

using namespace outbreak;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using Catch::Matchers::ContainsSubstring;

namespace {

ModelParams baseline_params() { return make_seiar(baseline::r0, baseline::sigma, baseline::gamma, baseline::chi, baseline::xi); }

/// Random admissible state: components drawn then normalised.
State random_state(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> y(n + 3);
    double total = 0.0;
    for (auto& v : y) total += (v = u(rng));
    for (auto& v : y) v /= total;
    double head = 0.0;
    for (std::size_t k = 0; k + 1 < y.size(); ++k) head += y[k];
    y.back() = 1.0 - head;
    return State::from_vector(y);
}

/// Direct transcription of the N-stage SEIR equations.
std::vector<double> oracle_rhs(const ModelParams& p, const std::vector<double>& y, const std::vector<double>& q) {
    const std::size_t n = p.n_stages();
    std::vector<double> dy(n + 3, 0.0);
    double lambda = 0.0;
    for (std::size_t k = 0; k < n; ++k) lambda += q[k] * p.stage(k).gamma * p.stage(k).r_natural * y[k + 2];
    dy[0] = -lambda * y[0];
    dy[1] = lambda * y[0] - p.sigma() * y[1];
    for (std::size_t k = 0; k < n; ++k) {
        dy[k + 2] = p.stage(k).x * p.sigma() * y[1] - p.stage(k).gamma * y[k + 2];
        dy[n + 2] += p.stage(k).gamma * y[k + 2];
    }
    return dy;
}

} // namespace

TEST_CASE("make_seiar builds the two-stage model", "[model]") {
    const ModelParams p = baseline_params();
    REQUIRE(p.n_stages() == 2);
    CHECK_THAT(p.stage(0).x, WithinAbs(0.138, 1e-15));
    CHECK_THAT(p.stage(1).x, WithinAbs(0.862, 1e-15));
    CHECK(p.stage(0).r_natural == 3.0);
    CHECK_THAT(p.stage(1).r_natural, WithinAbs(1.65, 1e-15));
    CHECK(p.equal_gamma());

    const ModelParams single = make_seiar(2.5, 0.3, 0.4, 0.0, 0.7);
    CHECK(single.stage(0).x == 1.0);
    CHECK(single.stage(1).x == 0.0);

    const ModelParams twin = make_seiar(2.0, 0.25, 0.5, 0.5, 1.0);
    CHECK(twin.stage(0).r_natural == 2.0);
    CHECK(twin.stage(1).r_natural == 2.0);
    CHECK(twin.stage(0).x == 0.5);
    CHECK(twin.stage(1).x == 0.5);
}

TEST_CASE("make_seiar rejects out-of-range inputs", "[model]") {
    CHECK_THROWS_WITH(make_seiar(3.0, 0.2, 0.6, 1.2, 0.55), ContainsSubstring("probability out of range"));
    CHECK_THROWS_AS(make_seiar(3.0, 0.2, 0.6, -0.1, 0.55), domain_error);
    CHECK_THROWS_AS(make_seiar(0.0, 0.2, 0.6, 0.5, 0.55), domain_error);
    CHECK_THROWS_AS(make_seiar(3.0, -0.2, 0.6, 0.5, 0.55), domain_error);
    CHECK_THROWS_AS(make_seiar(3.0, 0.2, 0.6, 0.5, -1.0), domain_error);
}

TEST_CASE("make_seiaqr branching", "[model]") {
    const ModelParams none = make_seiaqr(baseline::r0, baseline::sigma, baseline::gamma, baseline::chi, baseline::xi, 0.0, 0.0);
    REQUIRE(none.n_stages() == 3);
    CHECK(none.stage(2).x == 0.0);
    const ModelParams base = baseline_params();
    std::mt19937_64 rng(11);
    for (int k = 0; k < 20; ++k) {
        const State st2 = random_state(rng, 2);
        const auto raw = st2.raw();
        const State st3 = State::from_vector({raw[0], raw[1], raw[2], raw[3], 0.0, raw[4]});
        const auto d2 = rhs(base, st2, unit_multipliers(2));
        const auto d3 = rhs(none, st3, unit_multipliers(3));
        CHECK(d3[4] == 0.0);
        for (std::size_t i : {0u, 1u, 2u, 3u}) CHECK_THAT(d3[i], WithinAbs(d2[i], 1e-15));
        CHECK_THAT(d3[5], WithinAbs(d2[4], 1e-15));
    }

    const ModelParams iso = make_seiaqr(baseline::r0, baseline::sigma, baseline::gamma, baseline::chi, baseline::xi, 1.0, 0.0);
    CHECK(iso.stage(0).x == 0.0);
    CHECK_THAT(iso.stage(1).x, WithinAbs(0.862, 1e-15));
    CHECK_THAT(iso.stage(2).x, WithinAbs(0.138, 1e-15));
    CHECK(iso.stage(2).r_natural == 0.0);

    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        const ModelParams p = make_seiaqr(0.5 + 4 * u(rng), 0.2, 0.5, u(rng), u(rng), u(rng), u(rng));
        double sum = 0.0;
        for (const auto& st : p.stages()) sum += st.x;
        CHECK(std::abs(sum - 1.0) <= 1e-15);
    }
}

TEST_CASE("rhs matches a hand evaluation", "[model]") {
    const ModelParams p = baseline_params();
    const double e0 = 1.0 / baseline::population;
    const State st = State::initial(2, baseline::population);
    const auto d = rhs(p, st, unit_multipliers(2));
    CHECK(d[0] == 0.0);
    CHECK_THAT(d[1], WithinRel(-baseline::sigma * e0, 1e-15));
    CHECK_THAT(d[2], WithinRel((1.0 - baseline::chi) * baseline::sigma * e0, 1e-15));
    CHECK_THAT(d[3], WithinRel(baseline::chi * baseline::sigma * e0, 1e-15));
    CHECK(d[4] == 0.0);
}

TEST_CASE("rhs agrees with a direct transcription and conserves mass", "[model]") {
    for (std::uint64_t k = 0; k < 200; ++k) {
        auto rng = trial_rng(3, 100, k);
        const ModelParams p = detail::random_params(rng);
        const Multipliers q = detail::random_q(rng, p.n_stages(), 0.0, 1.5, false);
        const State st = random_state(rng, p.n_stages());
        const std::vector<double> y(st.raw().begin(), st.raw().end());
        const auto d = rhs(p, st, q);
        const auto o = oracle_rhs(p, y, q);
        double sum = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            CHECK_THAT(d[i], WithinAbs(o[i], 1e-14));
            sum += d[i];
        }
        CHECK(std::abs(sum) <= 1e-14);
        CHECK(d[0] <= 0.0);
    }
}

TEST_CASE("fixed-point surface has zero derivative", "[model]") {
    const ModelParams p = baseline_params();
    const State st(0.4, 0.0, {0.0, 0.0}, 0.6);
    for (double v : rhs(p, st, unit_multipliers(2))) CHECK(v == 0.0);
    CHECK(lyapunov_u(p, unit_multipliers(2), st) == 0.0);
}

TEST_CASE("threshold examples", "[model]") {
    const ModelParams p = baseline_params();
    const double oracle = 1.0 / (baseline::r0 * ((1.0 - baseline::chi) + baseline::chi * baseline::xi));
    CHECK_THAT(*s_star(p), WithinAbs(0.5445, 1e-4));
    CHECK_THAT(*s_star(p), WithinRel(oracle, 1e-15));
    CHECK_THAT(*s_bar(p), WithinRel(*s_star(p), 1e-14));

    const ModelParams unit(0.3, {StageSpec{1.0, 0.7, 1.0}});
    CHECK_THAT(*s_bar(unit), WithinRel(1.0, 1e-15));

    const ModelParams mixed(0.3, {StageSpec{0.5, 0.5, 2.0}, StageSpec{0.5, 1.0, 2.0}});
    CHECK_THAT(*s_bar(mixed), WithinRel(1.0 / 3.0, 1e-15));

    const ModelParams iso = make_seiaqr(baseline::r0, baseline::sigma, baseline::gamma, baseline::chi, baseline::xi, 1.0, 0.0);
    CHECK_THAT(*s_star(iso), WithinAbs(0.7031, 1e-3));

    CHECK_FALSE(s_star(p, Multipliers{0.0, 0.0}).has_value());
    CHECK_FALSE(s_bar(p, Multipliers{0.0, 0.0}).has_value());
    CHECK_THROWS_AS(s_star(p, Multipliers{1.0}), precondition_error);
    CHECK_THROWS_AS(s_star(p, Multipliers{1.0, -0.5}), domain_error);
}

TEST_CASE("s_bar never exceeds s_star", "[model]") {
    for (std::uint64_t k = 0; k < 500; ++k) {
        auto rng = trial_rng(4, 100, k);
        const bool equal = k % 4 == 0;
        const ModelParams p = detail::random_params(rng, equal);
        const Multipliers q = detail::random_q(rng, p.n_stages(), 0.05, 1.0, false);
        const double sb = *s_bar(p, q), ss = *s_star(p, q);
        if (p.equal_gamma()) {
            CHECK_THAT(sb, WithinRel(ss, 1e-12));
        } else {
            CHECK(sb < ss);
        }
    }
}

TEST_CASE("lyapunov_u weights infected stages", "[model]") {
    const ModelParams p = baseline_params();
    const State st(0.5, 0.1, {0.05, 0.02}, 0.33);
    const Multipliers q{0.8, 0.6};
    const double denom = 0.138 * 0.8 * 3.0 + 0.862 * 0.6 * 1.65;
    const double expect = 0.1 + (0.8 * 3.0 * 0.05 + 0.6 * 1.65 * 0.02) / denom;
    CHECK_THAT(lyapunov_u(p, q, st), WithinRel(expect, 1e-14));
    CHECK_THROWS_AS(lyapunov_u(p, Multipliers{0.0, 0.0}, st), precondition_error);
}

TEST_CASE("reduce_sej for SEIAR", "[model]") {
    const ModelParams p = baseline_params();
    const State st(0.6, 0.05, {0.03, 0.07}, 0.25);
    const ReducedState red = reduce_sej(p, st, baseline::r0);
    CHECK_THAT(red.j, WithinAbs(0.03 + baseline::xi * 0.07, 1e-15));
    CHECK_THAT(red.beta, WithinRel(baseline::gamma * baseline::r0, 1e-15));

    const State clean(0.6, 0.4, {0.0, 0.0}, 0.0);
    CHECK(reduce_sej(p, clean, baseline::r0).j == 0.0);

    std::mt19937_64 rng(5);
    for (int k = 0; k < 100; ++k) {
        const State s = random_state(rng, 2);
        const auto full = rhs(p, s, unit_multipliers(2));
        const ReducedState r = reduce_sej(p, s, baseline::r0);
        const auto red_d = reduced_rhs(r, p.sigma());
        CHECK_THAT(full[0], WithinAbs(-r.beta * r.j * r.s, 1e-14));
        CHECK_THAT(full[0], WithinAbs(red_d[0], 1e-14));
        CHECK_THAT(full[1], WithinAbs(red_d[1], 1e-14));
        const double dj = full[2] + baseline::xi * full[3];
        CHECK_THAT(dj, WithinAbs(red_d[2], 1e-14));
    }

    const ModelParams uneven(0.3, {StageSpec{0.5, 0.5, 2.0}, StageSpec{0.5, 1.0, 2.0}});
    CHECK_THROWS_AS(reduce_sej(uneven, st, 2.0), precondition_error);
}

TEST_CASE("quarantine threshold examples", "[model]") {
    const auto t = quarantine_threshold(baseline::chi, baseline::xi, baseline::r0, 1.0);
    CHECK(t.kind == QuarantineThreshold::Kind::Value);
    CHECK_THAT(t.zeta_a, WithinAbs(0.2969134503, 1e-9));
    const double oracle = 1.0 - 1.0 / (baseline::chi * baseline::xi * baseline::r0);
    CHECK_THAT(t.zeta_a, WithinAbs(oracle, 1e-15));

    const auto boundary = quarantine_threshold(0.5, 0.5, 4.0, 1.0);
    CHECK_THAT(boundary.zeta_a, WithinAbs(0.0, 1e-15));

    CHECK_THAT(quarantine_threshold(0.5, 1.0, 4.0, 1.0).zeta_a, WithinAbs(0.5, 1e-15));

    const auto low = quarantine_threshold(0.5, 0.1, 1.5, 0.9);
    CHECK(low.kind == QuarantineThreshold::Kind::AlreadyNonOutbreak);
    CHECK(low.zeta_a == 0.0);

    const auto high = quarantine_threshold(0.2, 0.5, 10.0, 0.0);
    CHECK(high.kind == QuarantineThreshold::Kind::Infeasible);
    CHECK(high.unclamped > 1.0);

    CHECK_THROWS_WITH(quarantine_threshold(1.2, 0.5, 3.0, 1.0), ContainsSubstring("probability out of range"));
    CHECK_THROWS_WITH(quarantine_threshold(0.5, 0.5, 3.0, -0.1), ContainsSubstring("probability out of range"));
    CHECK_THROWS_AS(quarantine_threshold(0.5, 0.0, 3.0, 1.0), precondition_error);
}

TEST_CASE("quarantine threshold makes S* reach one", "[model]") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        const double chi = 0.05 + 0.9 * u(rng), xi = 0.1 + u(rng), r0 = 1.0 + 4.0 * u(rng), zi = u(rng);
        const auto t = quarantine_threshold(chi, xi, r0, zi);
        if (t.kind != QuarantineThreshold::Kind::Value) continue;
        const ModelParams p = make_seiaqr(r0, 0.2, 0.5, chi, xi, zi, t.zeta_a);
        CHECK_THAT(*s_star(p), WithinRel(1.0, 1e-9));
    }
}

TEST_CASE("State validation and clamping", "[model]") {
    CHECK_THROWS_AS(State(0.5, 0.1, {0.1, 0.1}, 0.1), invariant_error);
    CHECK_THROWS_AS(State(0.5, -0.1, {0.2, 0.2}, 0.2), invariant_error);
    const State st = State::unchecked({1.0 + 1e-13, -1e-13, 0.0, 0.0, 0.0});
    CHECK(st.e() == 0.0);
    CHECK_THROWS_AS(State::initial(2, 0.0), domain_error);
    const State init = State::initial(2, 3e6);
    CHECK(init.e() == 1.0 / 3e6);
    CHECK(init.s() == 1.0 - 1.0 / 3e6);
}
