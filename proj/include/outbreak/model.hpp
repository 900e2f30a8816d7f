#pragma once

// N-stage SEIR model: parameter sets, state vectors, the right-hand side and
// the analytic outbreak thresholds.
//
// State layout used throughout (including the integrator's raw buffers):
//
//     y = [S, E, I_1, ..., I_N, R]
//
// All compartments are fractions of a closed population.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "outbreak/errors.hpp"

namespace outbreak {

/// Per-stage multipliers of the natural reproduction numbers.
using Multipliers = std::vector<double>;

/// A susceptible-fraction threshold. Empty when every effective transmission
/// term vanishes, i.e. the epidemic is fully suppressed and no finite
/// threshold exists.
using Threshold = std::optional<double>;

inline constexpr double kBranchingTolerance = 1e-12;
inline constexpr double kNegativeTolerance = 1e-12;
inline constexpr double kSimplexTolerance = 1e-10;
inline constexpr double kEqualGammaTolerance = 1e-12;

struct StageSpec {
    double x = 1.0;         // probability an exposed individual enters this stage
    double gamma = 1.0;     // 1/day
    double r_natural = 0.0; // natural basic reproduction number

    double beta() const { return gamma * r_natural; }

    bool operator==(const StageSpec&) const = default;
};

class ModelParams {
public:
    ModelParams(double sigma, std::vector<StageSpec> stages)
        : sigma_(sigma), stages_(std::move(stages)) {
        if (!(sigma_ > 0.0) || !std::isfinite(sigma_))
            throw domain_error("sigma must be a positive finite rate");
        if (stages_.empty())
            throw domain_error("model needs at least one infectious stage");
        double total = 0.0;
        for (const auto& st : stages_) {
            if (!(st.x >= 0.0 && st.x <= 1.0))
                throw domain_error("probability out of range: stage branching x must lie in [0,1]");
            if (!(st.gamma > 0.0) || !std::isfinite(st.gamma))
                throw domain_error("stage gamma must be a positive finite rate");
            if (!(st.r_natural >= 0.0) || !std::isfinite(st.r_natural))
                throw domain_error("stage reproduction number must be non-negative");
            total += st.x;
        }
        if (std::abs(total - 1.0) > kBranchingTolerance)
            throw domain_error("stage branching probabilities must sum to 1");
    }

    double sigma() const { return sigma_; }
    std::span<const StageSpec> stages() const { return stages_; }
    const StageSpec& stage(std::size_t k) const { return stages_.at(k); }
    std::size_t n_stages() const { return stages_.size(); }
    std::size_t state_size() const { return stages_.size() + 3; }

    double gamma_min() const {
        double g = stages_.front().gamma;
        for (const auto& st : stages_) g = std::min(g, st.gamma);
        return g;
    }

    bool equal_gamma(double rel_tol = kEqualGammaTolerance) const {
        const double g0 = stages_.front().gamma;
        return std::all_of(stages_.begin(), stages_.end(), [&](const StageSpec& st) {
            return std::abs(st.gamma - g0) <= rel_tol * std::max(std::abs(g0), std::abs(st.gamma));
        });
    }

    bool operator==(const ModelParams&) const = default;

private:
    double sigma_;
    std::vector<StageSpec> stages_;
};

inline Multipliers unit_multipliers(std::size_t n) { return Multipliers(n, 1.0); }

inline void check_multipliers(const ModelParams& params, std::span<const double> q) {
    if (q.size() != params.n_stages())
        throw precondition_error("multiplier vector size does not match the number of stages");
    for (double v : q)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw domain_error("multipliers must be finite and non-negative");
}

/// Reads a compartment value, mapping round-off negatives to zero.
inline double clamp_fraction(double v) {
    if (v >= 0.0) return v;
    if (v >= -kNegativeTolerance) return 0.0;
    throw invariant_error("compartment fraction is negative beyond round-off tolerance");
}

class State {
public:
    State() = default;

    State(double s, double e, const std::vector<double>& infected, double r) {
        y_.reserve(infected.size() + 3);
        y_.push_back(s);
        y_.push_back(e);
        y_.insert(y_.end(), infected.begin(), infected.end());
        y_.push_back(r);
        validate();
    }

    static State from_vector(std::vector<double> y) {
        State st = unchecked(std::move(y));
        st.validate();
        return st;
    }

    /// No validation; used for derivatives' storage and integrator buffers.
    static State unchecked(std::vector<double> y) {
        if (y.size() < 4) throw precondition_error("state vector needs at least 4 components");
        State st;
        st.y_ = std::move(y);
        return st;
    }

    /// E(0) = exposed/population, S(0) = 1 - E(0), everything else empty.
    static State initial(std::size_t n_stages, double population, double exposed = 1.0) {
        if (!(population > 0.0) || !(exposed >= 0.0) || exposed > population)
            throw domain_error("initial condition needs population > 0 and 0 <= exposed <= population");
        std::vector<double> y(n_stages + 3, 0.0);
        y[1] = exposed / population;
        y[0] = 1.0 - y[1];
        return from_vector(std::move(y));
    }

    std::size_t n_stages() const { return y_.size() - 3; }

    double s() const { return clamp_fraction(y_[0]); }
    double e() const { return clamp_fraction(y_[1]); }
    double i(std::size_t k) const { return clamp_fraction(y_.at(k + 2)); }
    double r() const { return clamp_fraction(y_.back()); }

    std::span<const double> raw() const { return y_; }
    std::span<const double> infected_raw() const {
        return std::span<const double>(y_).subspan(2, n_stages());
    }

    double total() const { return std::accumulate(y_.begin(), y_.end(), 0.0); }

    /// E + sum_i I_i.
    double infection_load() const {
        double acc = e();
        for (std::size_t k = 0; k < n_stages(); ++k) acc += i(k);
        return acc;
    }

    /// Euclidean norm of V = [E, I_1..I_N].
    double v_norm() const {
        double acc = e() * e();
        for (std::size_t k = 0; k < n_stages(); ++k) acc += i(k) * i(k);
        return std::sqrt(acc);
    }

    double v_max_norm() const {
        double m = e();
        for (std::size_t k = 0; k < n_stages(); ++k) m = std::max(m, i(k));
        return m;
    }

    void validate() const {
        for (double v : y_) {
            if (!std::isfinite(v)) throw invariant_error("state contains a non-finite component");
            clamp_fraction(v);
        }
        if (std::abs(total() - 1.0) > kSimplexTolerance)
            throw invariant_error("state components must sum to 1");
    }

    bool operator==(const State&) const = default;

private:
    std::vector<double> y_;
};

// ---------------------------------------------------------------------------
// Constructors for the COVID-19 specialisations.

namespace detail {
inline void require_probability(double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0))
        throw domain_error(std::string("probability out of range: ") + name + " must lie in [0,1]");
}
inline void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
        throw domain_error(std::string(name) + " must be positive");
}
} // namespace detail

/// Two stages (symptomatic I, asymptomatic A) sharing one infection time.
inline ModelParams make_seiar(double r0, double sigma, double gamma, double chi, double xi) {
    detail::require_positive(r0, "r0");
    detail::require_positive(sigma, "sigma");
    detail::require_positive(gamma, "gamma");
    detail::require_probability(chi, "chi");
    if (!(xi >= 0.0) || !std::isfinite(xi)) throw domain_error("xi must be non-negative");
    return ModelParams(sigma, {StageSpec{1.0 - chi, gamma, r0}, StageSpec{chi, gamma, xi * r0}});
}

/// SEIAR plus an isolated stage Q with zero transmission. Stage order (I, A, Q).
inline ModelParams make_seiaqr(double r0, double sigma, double gamma, double chi, double xi,
                               double zeta_i, double zeta_a) {
    detail::require_probability(zeta_i, "zeta_i");
    detail::require_probability(zeta_a, "zeta_a");
    const ModelParams base = make_seiar(r0, sigma, gamma, chi, xi);
    const double x_i = (1.0 - zeta_i) * (1.0 - chi);
    const double x_a = (1.0 - zeta_a) * chi;
    // Q takes the remainder so the branching sums to one without drift.
    const double x_q = std::max(0.0, 1.0 - x_i - x_a);
    return ModelParams(sigma, {StageSpec{x_i, gamma, r0}, StageSpec{x_a, gamma, xi * r0},
                               StageSpec{x_q, gamma, 0.0}});
}

// ---------------------------------------------------------------------------
// Dynamics.

/// Writes dy/dt for the raw state y under multipliers q. No allocation; the
/// integrator calls this in its inner loop.
inline void rhs_into(const ModelParams& params, std::span<const double> q,
                     std::span<const double> y, std::span<double> dy) {
    const std::size_t n = params.n_stages();
    const double sigma = params.sigma();
    const double s = y[0];
    const double e = y[1];
    double force = 0.0;
    for (std::size_t k = 0; k < n; ++k) force += params.stage(k).beta() * q[k] * y[k + 2];
    const double infection = force * s;
    double recovery = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto& st = params.stage(k);
        const double out = st.gamma * y[k + 2];
        dy[k + 2] = st.x * sigma * e - out;
        recovery += out;
    }
    dy[0] = -infection;
    dy[1] = infection - sigma * e;
    dy[n + 2] = recovery;
}

/// Time derivative in the state layout [S, E, I_1..I_N, R].
inline std::vector<double> rhs(const ModelParams& params, const State& state,
                               std::span<const double> q) {
    check_multipliers(params, q);
    if (state.n_stages() != params.n_stages())
        throw precondition_error("state and model disagree on the number of stages");
    std::vector<double> y(state.raw().begin(), state.raw().end());
    for (double& v : y) v = clamp_fraction(v);
    std::vector<double> dy(y.size());
    rhs_into(params, q, y, dy);
    return dy;
}

inline std::vector<double> effective_betas(const ModelParams& params, std::span<const double> q) {
    check_multipliers(params, q);
    std::vector<double> b(params.n_stages());
    for (std::size_t k = 0; k < b.size(); ++k) b[k] = params.stage(k).beta() * q[k];
    return b;
}

// ---------------------------------------------------------------------------
// Thresholds.

/// Non-outbreak threshold: gamma_min / sum_i x_i q_i beta_i.
inline Threshold s_bar(const ModelParams& params, std::span<const double> q) {
    check_multipliers(params, q);
    double acc = 0.0;
    for (std::size_t k = 0; k < params.n_stages(); ++k)
        acc += params.stage(k).x * q[k] * params.stage(k).beta();
    if (acc <= 0.0) return std::nullopt;
    return params.gamma_min() / acc;
}

/// Weak-outbreak threshold: 1 / sum_i x_i q_i R_i.
inline Threshold s_star(const ModelParams& params, std::span<const double> q) {
    check_multipliers(params, q);
    double acc = 0.0;
    for (std::size_t k = 0; k < params.n_stages(); ++k)
        acc += params.stage(k).x * q[k] * params.stage(k).r_natural;
    if (acc <= 0.0) return std::nullopt;
    return 1.0 / acc;
}

inline Threshold s_bar(const ModelParams& params) { return s_bar(params, unit_multipliers(params.n_stages())); }
inline Threshold s_star(const ModelParams& params) { return s_star(params, unit_multipliers(params.n_stages())); }

/// U = E + sum_i (q_i R_i / sum_j x_j q_j R_j) I_i.
inline double lyapunov_u(const ModelParams& params, std::span<const double> q, const State& state) {
    check_multipliers(params, q);
    double denom = 0.0;
    for (std::size_t k = 0; k < params.n_stages(); ++k)
        denom += params.stage(k).x * q[k] * params.stage(k).r_natural;
    if (denom <= 0.0)
        throw precondition_error("U is undefined when every effective transmission vanishes");
    double u = state.e();
    for (std::size_t k = 0; k < params.n_stages(); ++k)
        u += q[k] * params.stage(k).r_natural / denom * state.i(k);
    return u;
}

/// L(S): linearisation of (E, I_1..I_N) with per-stage gammas.
inline Eigen::MatrixXd assemble_l(const ModelParams& params, double s, std::span<const double> q) {
    const auto b = effective_betas(params, q);
    const auto n = static_cast<Eigen::Index>(params.n_stages());
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n + 1, n + 1);
    l(0, 0) = -params.sigma();
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto& st = params.stage(static_cast<std::size_t>(k));
        l(0, k + 1) = b[static_cast<std::size_t>(k)] * s;
        l(k + 1, 0) = st.x * params.sigma();
        l(k + 1, k + 1) = -st.gamma;
    }
    return l;
}

/// L_0: as L(S_0) but with every gamma replaced by gamma_min. The betas keep
/// their per-stage values.
inline Eigen::MatrixXd assemble_l0(const ModelParams& params, double s0, std::span<const double> q) {
    Eigen::MatrixXd l = assemble_l(params, s0, q);
    const double g = params.gamma_min();
    for (Eigen::Index k = 1; k < l.rows(); ++k) l(k, k) = -g;
    return l;
}

// ---------------------------------------------------------------------------
// Equal-gamma reduction to (S, E, J).

struct ReducedState {
    double s = 0.0;
    double e = 0.0;
    double j = 0.0;          // sum_i e_i I_i with e_i = R_i / r_ref
    double sigma_bar = 0.0;  // sigma * sum_i x_i e_i
    double beta = 0.0;       // gamma * r_ref
    double gamma = 0.0;
};

/// Relative infectiousness e_i = R_i / r_ref.
inline std::vector<double> relative_infectiousness(const ModelParams& params, double r_ref) {
    if (!(r_ref > 0.0)) throw precondition_error("reference reproduction number must be positive");
    std::vector<double> w(params.n_stages());
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = params.stage(k).r_natural / r_ref;
    return w;
}

inline ReducedState reduce_sej(const ModelParams& params, const State& state, double r_ref) {
    if (!params.equal_gamma())
        throw precondition_error("the (S,E,J) reduction requires equal infection times");
    const auto w = relative_infectiousness(params, r_ref);
    ReducedState red;
    red.gamma = params.stage(0).gamma;
    red.beta = red.gamma * r_ref;
    red.s = state.s();
    red.e = state.e();
    double xe = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        red.j += w[k] * state.i(k);
        xe += params.stage(k).x * w[k];
    }
    red.sigma_bar = params.sigma() * xe;
    return red;
}

/// Right-hand side of the reduced system: (dS, dE, dJ). Needs the original
/// sigma because dE loses sigma * E while dJ gains sigma_bar * E.
inline std::array<double, 3> reduced_rhs(const ReducedState& r, double sigma) {
    const double inf = r.beta * r.j * r.s;
    return {-inf, inf - sigma * r.e, r.sigma_bar * r.e - r.gamma * r.j};
}

// ---------------------------------------------------------------------------
// Isolation thresholds for the SEIAQR model.

struct QuarantineThreshold {
    enum class Kind {
        Value,              // zeta_a holds the minimal isolation probability
        AlreadyNonOutbreak, // no asymptomatic isolation needed
        Infeasible          // even zeta_a = 1 leaves S* < 1
    };
    Kind kind = Kind::Value;
    double zeta_a = 0.0;
    double unclamped = 0.0;

    bool operator==(const QuarantineThreshold&) const = default;
};

/// Minimal asymptomatic isolation probability making S* >= 1 for a given
/// symptomatic isolation probability.
inline QuarantineThreshold quarantine_threshold(double chi, double xi, double r0, double zeta_i) {
    detail::require_probability(chi, "chi");
    detail::require_probability(zeta_i, "zeta_i");
    detail::require_positive(r0, "r0");
    if (!(chi * xi * r0 > 0.0))
        throw precondition_error("quarantine threshold needs chi * xi * r0 > 0");
    const double residual = 1.0 / r0 - (1.0 - chi) * (1.0 - zeta_i);
    const double z = 1.0 - residual / (chi * xi);
    QuarantineThreshold out;
    out.unclamped = z;
    constexpr double eps = 1e-12;
    if (z < -eps) {
        out.kind = QuarantineThreshold::Kind::AlreadyNonOutbreak;
        out.zeta_a = 0.0;
    } else if (z > 1.0 + eps) {
        out.kind = QuarantineThreshold::Kind::Infeasible;
        out.zeta_a = 1.0;
    } else {
        out.zeta_a = std::clamp(z, 0.0, 1.0);
    }
    return out;
}

} // namespace outbreak
