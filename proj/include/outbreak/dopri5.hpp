#pragma once

// Dormand-Prince 5(4) with Hairer's step-size control and the 4th-order
// continuous extension for dense output.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "outbreak/errors.hpp"

namespace outbreak {

struct Dopri5Options {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double max_step = 1.0;
};

/// Accepted step handed to the observer. `at(theta, out)` evaluates the
/// dense interpolant at t_old + theta * h.
class Dopri5Step {
public:
    double t_old = 0.0;
    double t_new = 0.0;
    std::span<const double> y_new;

    void at(double theta, std::span<double> out) const {
        const double one_m = 1.0 - theta;
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = r1_[i] + theta * (r2_[i] + one_m * (r3_[i] + theta * (r4_[i] + one_m * r5_[i])));
    }

private:
    friend class Dopri5;
    std::span<const double> r1_, r2_, r3_, r4_, r5_;
};

class Dopri5 {
public:
    Dopri5(std::size_t dim, Dopri5Options opts)
        : opts_(opts), k1_(dim), k2_(dim), k3_(dim), k4_(dim), k5_(dim), k6_(dim), k7_(dim),
          ytmp_(dim), ynew_(dim), r1_(dim), r2_(dim), r3_(dim), r4_(dim), r5_(dim) {}

    std::size_t accepted() const { return n_accepted_; }
    std::size_t rejected() const { return n_rejected_; }
    double last_step() const { return h_; }

    /// Advances y from t0 to t1 (t1 > t0) with rhs f(t, y, dy). The
    /// observer is called after every accepted step and may return false to
    /// stop early; the return value is the time reached.
    template <class F, class Observer>
    double integrate(F&& f, double t0, double t1, std::vector<double>& y, Observer&& observer) {
        const std::size_t n = y.size();
        double t = t0;
        f(t, std::span<const double>(y), std::span<double>(k1_));
        double h = h_ > 0.0 ? std::min(h_, t1 - t0) : initial_step(f, t, y, t1 - t0);
        h = std::min(h, opts_.max_step);
        double facold = 1e-4;
        bool reject = false;

        while (t < t1) {
            const double h_prop = h;
            bool last = false;
            if (t + 1.01 * h >= t1) {
                h = t1 - t;
                last = true;
            }
            if (h < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)))
                throw numerical_error("step size underflow", t);

            stage(y, h, t, f);

            double err = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double sk = opts_.abs_tol + opts_.rel_tol * std::max(std::abs(y[i]), std::abs(ynew_[i]));
                const double ei = h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] + e7 * k7_[i]);
                err += (ei / sk) * (ei / sk);
            }
            err = std::sqrt(err / static_cast<double>(n));

            const double fac11 = std::pow(err, 0.2 - beta * 0.75);
            double fac = fac11 / std::pow(facold, beta);
            fac = std::clamp(fac / safe, 1.0 / facmax, 1.0 / facmin);
            double hnew = h / fac;

            if (err <= 1.0) {
                facold = std::max(err, 1e-4);
                ++n_accepted_;
                for (std::size_t i = 0; i < n; ++i) {
                    const double dy = ynew_[i] - y[i];
                    const double bspl = h * k1_[i] - dy;
                    r1_[i] = y[i];
                    r2_[i] = dy;
                    r3_[i] = bspl;
                    r4_[i] = dy - h * k7_[i] - bspl;
                    r5_[i] = h * (d1 * k1_[i] + d3 * k3_[i] + d4 * k4_[i] + d5 * k5_[i] + d6 * k6_[i] + d7 * k7_[i]);
                }
                const double t_old = t;
                t = last ? t1 : t + h;
                k1_.swap(k7_);
                y.swap(ynew_);

                Dopri5Step step;
                step.t_old = t_old;
                step.t_new = t;
                step.y_new = y;
                step.r1_ = r1_;
                step.r2_ = r2_;
                step.r3_ = r3_;
                step.r4_ = r4_;
                step.r5_ = r5_;

                hnew = std::min(hnew, opts_.max_step);
                if (reject) hnew = std::min(hnew, h);
                reject = false;
                // a clipped final step says little about the natural step size
                h_ = last ? std::min(std::max(hnew, h_prop), opts_.max_step) : hnew;
                if (!observer(step)) return t;
                h = hnew;
            } else {
                hnew = h / std::min(1.0 / facmin, fac11 / safe);
                reject = true;
                ++n_rejected_;
                h = hnew;
            }
        }
        return t;
    }

private:
    static constexpr double a21 = 0.2, a31 = 3.0 / 40.0, a32 = 9.0 / 40.0, a41 = 44.0 / 45.0,
                            a42 = -56.0 / 15.0, a43 = 32.0 / 9.0, a51 = 19372.0 / 6561.0,
                            a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0,
                            a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                            a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0, a71 = 35.0 / 384.0,
                            a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                            a76 = 11.0 / 84.0;
    static constexpr double c2 = 0.2, c3 = 0.3, c4 = 0.8, c5 = 8.0 / 9.0;
    static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                            e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
    static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                            d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                            d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
    static constexpr double safe = 0.9, facmin = 0.2, facmax = 10.0, beta = 0.04;

    template <class F>
    void stage(const std::vector<double>& y, double h, double t, F& f) {
        const std::size_t n = y.size();
        for (std::size_t i = 0; i < n; ++i) ytmp_[i] = y[i] + h * a21 * k1_[i];
        f(t + c2 * h, std::span<const double>(ytmp_), std::span<double>(k2_));
        for (std::size_t i = 0; i < n; ++i) ytmp_[i] = y[i] + h * (a31 * k1_[i] + a32 * k2_[i]);
        f(t + c3 * h, std::span<const double>(ytmp_), std::span<double>(k3_));
        for (std::size_t i = 0; i < n; ++i) ytmp_[i] = y[i] + h * (a41 * k1_[i] + a42 * k2_[i] + a43 * k3_[i]);
        f(t + c4 * h, std::span<const double>(ytmp_), std::span<double>(k4_));
        for (std::size_t i = 0; i < n; ++i)
            ytmp_[i] = y[i] + h * (a51 * k1_[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i]);
        f(t + c5 * h, std::span<const double>(ytmp_), std::span<double>(k5_));
        for (std::size_t i = 0; i < n; ++i)
            ytmp_[i] = y[i] + h * (a61 * k1_[i] + a62 * k2_[i] + a63 * k3_[i] + a64 * k4_[i] + a65 * k5_[i]);
        f(t + h, std::span<const double>(ytmp_), std::span<double>(k6_));
        for (std::size_t i = 0; i < n; ++i)
            ynew_[i] = y[i] + h * (a71 * k1_[i] + a73 * k3_[i] + a74 * k4_[i] + a75 * k5_[i] + a76 * k6_[i]);
        f(t + h, std::span<const double>(ynew_), std::span<double>(k7_));
    }

    template <class F>
    double initial_step(F& f, double t, const std::vector<double>& y, double span) {
        const std::size_t n = y.size();
        double dnf = 0.0, dny = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double sk = opts_.abs_tol + opts_.rel_tol * std::abs(y[i]);
            dnf += (k1_[i] / sk) * (k1_[i] / sk);
            dny += (y[i] / sk) * (y[i] / sk);
        }
        double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
        h = std::min({h, opts_.max_step, span});
        for (std::size_t i = 0; i < n; ++i) ytmp_[i] = y[i] + h * k1_[i];
        f(t + h, std::span<const double>(ytmp_), std::span<double>(k2_));
        double der2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double sk = opts_.abs_tol + opts_.rel_tol * std::abs(y[i]);
            der2 += ((k2_[i] - k1_[i]) / sk) * ((k2_[i] - k1_[i]) / sk);
        }
        der2 = std::sqrt(der2) / h;
        const double der12 = std::max(der2, std::sqrt(dnf));
        const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
        return std::min({100.0 * h, h1, opts_.max_step, span});
    }

    Dopri5Options opts_;
    std::vector<double> k1_, k2_, k3_, k4_, k5_, k6_, k7_, ytmp_, ynew_;
    std::vector<double> r1_, r2_, r3_, r4_, r5_;
    double h_ = 0.0;
    std::size_t n_accepted_ = 0;
    std::size_t n_rejected_ = 0;
};

} // namespace outbreak
