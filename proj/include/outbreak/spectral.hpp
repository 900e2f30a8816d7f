#pragma once

// Closed-form spectrum of L_0 and the exponential envelope on |V(t)|.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

#include <Eigen/Dense>

#include "outbreak/model.hpp"

namespace outbreak {

struct SpectralBundle {
    double lambda1 = 0.0;     // largest eigenvalue, changes sign at S_bar
    double lambda2 = 0.0;
    double lambda_rest = 0.0; // -gamma_min, multiplicity N-1
    double cond_factor = 0.0; // |T0^-1| * |T0| in the element max-norm; +inf if defective
    std::size_t n_plus_1 = 0;
    bool diagonalizable = true;
    Eigen::MatrixXd eigenvectors; // T0, columns ordered (lambda1, lambda2, rest...)

    Eigen::VectorXd eigenvalues() const {
        Eigen::VectorXd d = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_plus_1), lambda_rest);
        d(0) = lambda1;
        d(1) = lambda2;
        return d;
    }
};

/// Element max-norm |M| = max |M_ij|.
inline double max_norm(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

namespace detail {

inline void normalize_column(Eigen::MatrixXd& t, Eigen::Index c) {
    const double m = t.col(c).cwiseAbs().maxCoeff();
    if (m > 0.0) t.col(c) /= m;
}

} // namespace detail

/// Eigenvalues of L_0(S_0) in closed form plus an analytic eigenvector
/// matrix T0 with L_0 T0 = T0 D0 and unit max-norm columns.
inline SpectralBundle spectral(const ModelParams& params, double s0, std::span<const double> q) {
    if (!(s0 >= 0.0 && s0 <= 1.0)) throw precondition_error("s0 must lie in [0,1]");
    const auto beta = effective_betas(params, q);
    const std::size_t n = params.n_stages();
    const double sigma = params.sigma();
    const double gamma = params.gamma_min();

    double b = 0.0;
    for (std::size_t k = 0; k < n; ++k) b += params.stage(k).x * beta[k];

    SpectralBundle out;
    out.n_plus_1 = n + 1;
    const double disc = 4.0 * sigma * b * s0 + (gamma - sigma) * (gamma - sigma);
    const double root = std::sqrt(disc);
    // lambda1 * lambda2 = sigma*gamma - sigma*b*s0; this form avoids the
    // cancellation of -(sigma+gamma)/2 + root/2 near the threshold.
    out.lambda2 = -0.5 * ((sigma + gamma) + root);
    out.lambda1 = 2.0 * sigma * (b * s0 - gamma) / ((sigma + gamma) + root);
    out.lambda_rest = -gamma;

    const auto dim = static_cast<Eigen::Index>(n + 1);
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(dim, dim);

    bool first_row_empty = true;
    for (std::size_t k = 0; k < n; ++k)
        if (beta[k] * s0 != 0.0) first_row_empty = false;

    if (first_row_empty) {
        // L_0 is lower triangular: -sigma with eigenvector (gamma - sigma, x sigma),
        // -gamma with the whole {v_1 = 0} subspace.
        const Eigen::Index c_sigma = sigma <= gamma ? 0 : 1;
        t(0, c_sigma) = gamma - sigma;
        for (std::size_t k = 0; k < n; ++k)
            t(static_cast<Eigen::Index>(k + 1), c_sigma) = params.stage(k).x * sigma;
        Eigen::Index row = 1;
        for (Eigen::Index c = 0; c < dim; ++c)
            if (c != c_sigma) t(row++, c) = 1.0;
    } else {
        // lambda in {lambda1, lambda2}: v = (lambda + gamma, x_1 sigma, ..., x_N sigma).
        const double lams[2] = {out.lambda1, out.lambda2};
        for (Eigen::Index c = 0; c < 2; ++c) {
            t(0, c) = lams[c] + gamma;
            for (std::size_t k = 0; k < n; ++k)
                t(static_cast<Eigen::Index>(k + 1), c) = params.stage(k).x * sigma;
        }
        // -gamma: basis of {v_1 = 0, sum_i beta_i v_{i+1} = 0}, pivoting on the
        // largest beta so that zero betas do not collapse the basis.
        std::size_t pivot = 0;
        for (std::size_t k = 1; k < n; ++k)
            if (beta[k] > beta[pivot]) pivot = k;
        Eigen::Index col = 2;
        for (std::size_t k = 0; k < n; ++k) {
            if (k == pivot) continue;
            t(static_cast<Eigen::Index>(pivot + 1), col) = beta[k];
            t(static_cast<Eigen::Index>(k + 1), col) = -beta[pivot];
            ++col;
        }
    }
    for (Eigen::Index c = 0; c < dim; ++c) detail::normalize_column(t, c);
    out.eigenvectors = t;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(t);
    if (!lu.isInvertible()) {
        out.diagonalizable = false;
        out.cond_factor = std::numeric_limits<double>::infinity();
    } else {
        out.cond_factor = max_norm(lu.inverse()) * max_norm(t);
    }
    return out;
}

inline SpectralBundle spectral(const ModelParams& params, double s0) {
    return spectral(params, s0, unit_multipliers(params.n_stages()));
}

/// (N+1) |T0^-1| |T0| |V(t0)| exp(lambda1 (t - t0)).
inline double envelope_bound(const ModelParams& params, double s0, std::span<const double> q,
                             double v0_max_norm, double dt) {
    if (!(dt >= 0.0)) throw precondition_error("envelope_bound needs dt >= 0");
    const SpectralBundle sp = spectral(params, s0, q);
    return static_cast<double>(sp.n_plus_1) * sp.cond_factor * v0_max_norm * std::exp(sp.lambda1 * dt);
}

} // namespace outbreak
