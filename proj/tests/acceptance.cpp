// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "outbreak/experiments.hpp"
#include "outbreak/integrator.hpp"
#include "outbreak/model.hpp"
#include "outbreak/spectral.hpp"
#include "outbreak/strategy.hpp"

using namespace outbreak;

namespace {

struct Verdict {
    bool ok = false;
    std::string detail;
};

int failures = 0;
double worst_drift = 0.0;

void note_drift(const Trajectory& tr) { worst_drift = std::max(worst_drift, conservation_drift(tr)); }
void note_drift(const PropositionResult& r) { worst_drift = std::max(worst_drift, r.max_drift); }

void criterion(int id, const char* name, double limit_s, const std::function<Verdict()>& body) {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        v = body();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char timing[96];
    std::snprintf(timing, sizeof timing, "runtime %.4g s (limit %.4g s)", secs, limit_s);
    if (secs > limit_s) {
        v.ok = false;
        v.detail += "; runtime limit exceeded";
    }
    if (!v.ok) ++failures;
    std::printf("[%s] %2d %s: %s; %s\n", v.ok ? "PASS" : "FAIL", id, name, v.detail.c_str(), timing);
    std::fflush(stdout);
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

double time_micro(const std::function<void()>& f) {
    f();
    const auto t0 = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

int main() {
    const Scenario sc = baseline_scenario();
    const double s0_star = *s_star(sc.params);

    {
        double s = 0.0;
        const double secs = time_micro([&] {
            s = *s_star(make_seiar(baseline::r0, baseline::sigma, baseline::gamma, baseline::chi, baseline::xi));
        });
        criterion(1, "threshold S0*", 1e-3, [&] {
            return Verdict{std::abs(s - 0.5445) <= 1e-4 && secs < 1e-3,
                           "S0* = " + num(s) + " (target 0.5445 +- 1e-4), single call " + num(secs) + " s"};
        });
    }

    {
        double z = 0.0, ss = 0.0;
        const double secs = time_micro([&] {
            z = quarantine_threshold(baseline::chi, baseline::xi, baseline::r0, 1.0).zeta_a;
            ss = *s_star(make_seiaqr(baseline::r0, baseline::sigma, baseline::gamma, baseline::chi, baseline::xi, 1.0, 0.0));
        });
        criterion(2, "quarantine thresholds", 1e-3, [&] {
            const bool ok = std::abs(z - 0.2969134503) <= 1e-9 && std::abs(ss - 0.7031) <= 1e-3 && secs < 1e-3;
            return Verdict{ok, "zeta_A_min(zeta_I=1) = " + num(z) + " (target 0.2969134503 +- 1e-9), S*(1,0) = " +
                                   num(ss) + " (target 0.7031 +- 1e-3)"};
        });
    }

    criterion(3, "natural-run critical time", 1.0, [&] {
        const Trajectory tr = run(sc, strategies::Natural{});
        note_drift(tr);
        const double ts = detect_tstar(tr);
        const double s = state_at(tr, ts).s();
        const bool ok = ts >= 125.0 && ts <= 135.0 && std::abs(s - s0_star) <= 2e-3;
        return Verdict{ok, "t* = " + num(ts) + " (target [125,135]), |S(t*) - S0*| = " + num(std::abs(s - s0_star)) +
                               " (limit 2e-3)"};
    });

    criterion(4, "finite strategies end below S0*", 120.0, [&] {
        const PropositionResult r = check_finite_strategies(1, 100, sc);
        note_drift(r);
        std::string d = std::to_string(r.passed) + "/" + std::to_string(r.trials) + " trials";
        if (!r.counterexamples.empty()) d += ", first: " + r.counterexamples.front();
        return Verdict{r.ok(), d};
    });

    criterion(5, "non-outbreak envelope", 120.0, [&] {
        const PropositionResult r = check_envelope(1, 100);
        note_drift(r);
        std::string d = std::to_string(r.passed) + "/" + std::to_string(r.trials) + " trials";
        if (!r.counterexamples.empty()) d += ", first: " + r.counterexamples.front();
        return Verdict{r.ok(), d};
    });

    criterion(6, "weak-outbreak monotonicity", 5.0, [&] {
        const double t_i = baseline::t_intervention;
        const Trajectory tr = run(sc, strategies::RegulatedSStar{t_i, 1.0});
        note_drift(tr);
        if (!tr.strategy_end) return Verdict{false, "strategy did not finish"};
        const double t_f = *tr.strategy_end;
        const auto& sm = tr.samples;
        double worst_rise = 0.0;
        for (std::size_t k = 0; k + 1 < sm.size(); ++k)
            if (sm[k].t > t_i && std::isfinite(sm[k].u) && std::isfinite(sm[k + 1].u))
                worst_rise = std::max(worst_rise, sm[k + 1].u - sm[k].u);
        const double e_f = state_at(tr, t_f).e();
        double worst_excess = -INFINITY;
        for (const auto& s : sm)
            if (s.t >= t_f) worst_excess = std::max(worst_excess, s.state.e() - e_f);
        const bool ok = worst_rise <= 1e-10 && worst_excess <= 1e-12;
        return Verdict{ok, "t_F = " + num(t_f) + ", max U rise " + num(worst_rise) + " (limit 1e-10), max E - E(t_F) " +
                               num(worst_excess) + " (limit 1e-12)"};
    });

    criterion(7, "scan shape for finite strategies", 300.0, [&] {
        const double dt = 60.0;
        const Strategy tmpl = strategies::ConstantFinite{baseline::t_intervention, baseline::t_intervention + dt,
                                                         Multipliers(sc.params.n_stages(), s0_star)};
        const ScanResult scan = scan_ti(sc, tmpl, linspace_step(2.0, 250.0, 2.0));
        const double s_nat = asymptotic_s(run(sc, strategies::Natural{}));
        std::size_t best = 0;
        double lo = INFINITY, hi = -INFINITY;
        for (std::size_t k = 0; k < scan.rows.size(); ++k) {
            if (scan.rows[k].s_inf > scan.rows[best].s_inf) best = k;
            if (scan.rows[k].s_inf - s_nat > 0.005) {
                lo = std::min(lo, scan.rows[k].param_value);
                hi = std::max(hi, scan.rows[k].param_value);
            }
        }
        const double arg = scan.rows[best].param_value;
        const bool ok = std::abs(arg - 120.0) <= 5.0 && lo >= 85.0 && hi <= 155.0;
        return Verdict{ok, "Delta_t = 60 d, argmax t_I = " + num(arg) + " (target 120 +- 5), effect > 0.005 on [" +
                               num(lo) + ", " + num(hi) + "] (must lie in [85, 155])"};
    });

    criterion(8, "duration scaling", 120.0, [&] {
        const Strategy early = strategies::RegulatedSStar{40.0, 1.0};
        const Trajectory a = run(sc, early);
        note_drift(a);
        const Strategy d80 = strategies::RegulatedSStar{baseline::t_intervention, 80.0};
        const Trajectory b = run(sc, d80);
        note_drift(b);
        const auto ra = summarize(a, early, 40.0);
        const auto rb = summarize(b, d80, 80.0);
        const double dur_a = ra.strategy_duration.value_or(INFINITY);
        const double dur_b = rb.strategy_duration.value_or(INFINITY);
        const double attack = 1.0 - rb.s_inf;
        const bool ok = ra.strategy_duration && dur_a > 10000.0 && std::abs(dur_b - 365.0) <= 30.0 &&
                        std::abs(attack - 0.49) <= 0.01;
        return Verdict{ok, "t_I=40 duration " + num(dur_a) + " d (limit > 10000), Delta=80 duration " + num(dur_b) +
                               " d (target 365 +- 30), 1 - S_inf " + num(attack) + " (target 0.49 +- 0.01)"};
    });

    criterion(9, "spectral consistency", 10.0, [&] {
        double worst_l1 = 0.0, worst_diag = 0.0;
        for (std::size_t k = 0; k < 1000; ++k) {
            auto rng = trial_rng(1, 9, k);
            const ModelParams p = detail::random_params(rng);
            const Multipliers q = detail::random_q(rng, p.n_stages(), 0.1, 1.0, false);
            const double sb = *s_bar(p, q);
            if (sb <= 1.0) worst_l1 = std::max(worst_l1, std::abs(spectral(p, sb, q).lambda1));
            const double s0 = detail::uniform(rng, 0.0, 1.0);
            const SpectralBundle sp = spectral(p, s0, q);
            const Eigen::MatrixXd l0 = assemble_l0(p, s0, q);
            const Eigen::MatrixXd res = l0 * sp.eigenvectors - sp.eigenvectors * sp.eigenvalues().asDiagonal();
            worst_diag = std::max(worst_diag, res.cwiseAbs().maxCoeff());
        }
        return Verdict{worst_l1 <= 1e-12 && worst_diag <= 1e-10,
                       "max |lambda1(S_bar)| = " + num(worst_l1) + " (limit 1e-12), max |L0 T0 - T0 D0| = " +
                           num(worst_diag) + " (limit 1e-10), 1000 parameter sets"};
    });

    criterion(10, "sign structure", 120.0, [&] {
        const PropositionResult r = check_sign_structure(1, 100, sc);
        note_drift(r);
        std::string d = std::to_string(r.passed) + "/" + std::to_string(r.trials) + " trials without violations";
        if (!r.counterexamples.empty()) d += ", first: " + r.counterexamples.front();
        return Verdict{r.ok(), d};
    });

    criterion(11, "conservation and determinism", 120.0, [&] {
        const bool same_traj = run(sc, strategies::RegulatedSStar{baseline::t_intervention, 30.0}) ==
                               run(sc, strategies::RegulatedSStar{baseline::t_intervention, 30.0});
        const bool same_props = check_finite_strategies(7, 20, sc) == check_finite_strategies(7, 20, sc) &&
                                check_sign_structure(7, 20, sc) == check_sign_structure(7, 20, sc);
        const bool ok = worst_drift <= 1e-9 && same_traj && same_props;
        return Verdict{ok, "max |sum - 1| over criteria 3-10 = " + num(worst_drift) + " (limit 1e-9), repeat runs " +
                               (same_traj && same_props ? "identical" : "differ")};
    });

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
