#pragma once

#include "operators.hpp"
#include "pattern.hpp"
#include "profile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace tubepat {

// Tabulated nonlinearity f(u): monotone-cubic (Fritsch-Carlson) Hermite
// interpolation between knots, extended linearly and C^1 outside the table
// range.  Slopes above `stiff_threshold` mark the synthesis as stiff (the
// analytic f' diverges at the pattern range endpoints when p >= 2).
class Nonlinearity {
public:
    static constexpr double stiff_threshold = 1e6;

    // Slopes computed from the table by the Fritsch-Carlson rule.
    Nonlinearity(std::vector<double> u, std::vector<double> f)
        : u_(std::move(u)), f_(std::move(f)) {
        validate();
        d_ = fritsch_carlson(u_, f_);
        finish();
    }

    // Explicit slopes (synthesis knows them analytically).
    Nonlinearity(std::vector<double> u, std::vector<double> f, std::vector<double> d)
        : u_(std::move(u)), f_(std::move(f)), d_(std::move(d)) {
        validate();
        if (d_.size() != u_.size())
            throw std::invalid_argument("Nonlinearity: slope count mismatch");
        finish();
    }

    double eval(double x) const {
        if (x <= u_.front()) return f_.front() + d_.front() * (x - u_.front());
        if (x >= u_.back()) return f_.back() + d_.back() * (x - u_.back());
        int k = segment(x);
        double h = u_[k + 1] - u_[k], t = (x - u_[k]) / h;
        double h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
        double h10 = t * (1.0 - t) * (1.0 - t);
        double h01 = t * t * (3.0 - 2.0 * t);
        double h11 = t * t * (t - 1.0);
        return h00 * f_[k] + h * h10 * d_[k] + h01 * f_[k + 1] + h * h11 * d_[k + 1];
    }

    double eval_prime(double x) const {
        if (x <= u_.front()) return d_.front();
        if (x >= u_.back()) return d_.back();
        int k = segment(x);
        double h = u_[k + 1] - u_[k], t = (x - u_[k]) / h;
        double g00 = 6.0 * t * (t - 1.0);
        double g10 = (1.0 - t) * (1.0 - 3.0 * t);
        double g11 = t * (3.0 * t - 2.0);
        return g00 * (f_[k] - f_[k + 1]) / h + g10 * d_[k] + g11 * d_[k + 1];
    }

    Eigen::VectorXd eval(const Eigen::VectorXd& x) const {
        Eigen::VectorXd out(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = eval(x[i]);
        return out;
    }
    Eigen::VectorXd eval_prime(const Eigen::VectorXd& x) const {
        Eigen::VectorXd out(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = eval_prime(x[i]);
        return out;
    }

    const std::vector<double>& knots() const { return u_; }
    const std::vector<double>& values() const { return f_; }
    const std::vector<double>& slopes() const { return d_; }
    double range_min() const { return u_.front(); }
    double range_max() const { return u_.back(); }
    bool stiff() const { return stiff_; }
    double max_abs_slope() const { return max_abs_slope_; }
    // Lipschitz bound of f over the table (used for time-step control).
    double lipschitz() const { return max_abs_slope_; }
    double max_slope() const { return max_slope_; }

private:
    void validate() const {
        if (u_.size() < 2 || u_.size() != f_.size())
            throw std::invalid_argument("Nonlinearity: need matching u/f tables, >= 2 knots");
        for (size_t k = 1; k < u_.size(); ++k)
            if (!(u_[k] > u_[k - 1]))
                throw std::invalid_argument("Nonlinearity: knots must be strictly increasing");
    }

    void finish() {
        // f' is quadratic on each segment, so its extrema sit either at the
        // knots or at the interior vertex of that quadratic.
        max_abs_slope_ = 0.0;
        max_slope_ = -std::numeric_limits<double>::infinity();
        auto take = [&](double v) {
            max_abs_slope_ = std::max(max_abs_slope_, std::abs(v));
            max_slope_ = std::max(max_slope_, v);
        };
        for (double v : d_) take(v);
        for (size_t k = 0; k + 1 < u_.size(); ++k) {
            double h = u_[k + 1] - u_[k];
            double a = (f_[k] - f_[k + 1]) / h;
            double A = 6.0 * a + 3.0 * d_[k] + 3.0 * d_[k + 1];
            double B = -6.0 * a - 4.0 * d_[k] - 2.0 * d_[k + 1];
            if (A != 0.0) {
                double t = -B / (2.0 * A);
                if (t > 0.0 && t < 1.0) take((A * t + B) * t + d_[k]);
            }
        }
        stiff_ = max_abs_slope_ > stiff_threshold;
    }

    int segment(double x) const {
        auto it = std::upper_bound(u_.begin(), u_.end(), x);
        int k = static_cast<int>(it - u_.begin()) - 1;
        return std::clamp(k, 0, static_cast<int>(u_.size()) - 2);
    }

    static std::vector<double> fritsch_carlson(const std::vector<double>& x,
                                               const std::vector<double>& y) {
        int n = static_cast<int>(x.size());
        std::vector<double> h(n - 1), del(n - 1), d(n);
        for (int k = 0; k < n - 1; ++k) {
            h[k] = x[k + 1] - x[k];
            del[k] = (y[k + 1] - y[k]) / h[k];
        }
        if (n == 2) {
            d[0] = d[1] = del[0];
            return d;
        }
        for (int k = 1; k < n - 1; ++k) {
            if (del[k - 1] * del[k] <= 0.0) {
                d[k] = 0.0;
            } else {
                double w1 = 2.0 * h[k] + h[k - 1];
                double w2 = h[k] + 2.0 * h[k - 1];
                d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
            }
        }
        auto end_slope = [](double h0, double h1, double d0, double d1) {
            double d_ = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
            if (d_ * d0 <= 0.0) return 0.0;
            if (d0 * d1 <= 0.0 && std::abs(d_) > 3.0 * std::abs(d0)) return 3.0 * d0;
            return d_;
        };
        d[0] = end_slope(h[0], h[1], del[0], del[1]);
        d[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
        return d;
    }

    std::vector<double> u_, f_, d_;
    bool stiff_ = false;
    double max_abs_slope_ = 0.0;
    double max_slope_ = 0.0;
};

namespace detail {

// f(U(s)) from the synthesis identity on the straight tube: the value that
// makes U(s) a stationary solution of u_t = Lap u + f(u) on D.
inline double synth_value(const ProfileCurve& P, const PatternProfile& U, double s) {
    double v = P.psi(s), v1 = P.dpsi(s), v2 = P.d2psi(s);
    double w1 = U.du(s), w2 = U.d2u(s);
    double q = 1.0 + v1 * v1;
    return -(v1 * w1 + v * w2) / (v * q) + v1 * v2 * w1 / (q * q);
}

// d/ds of the above, analytic (needs third derivatives of both curves).
inline double synth_value_ds(const ProfileCurve& P, const PatternProfile& U, double s) {
    double v = P.psi(s), v1 = P.dpsi(s), v2 = P.d2psi(s), v3 = P.d3psi(s);
    double w1 = U.du(s), w2 = U.d2u(s), w3 = U.d3u(s);
    double q = 1.0 + v1 * v1;
    double N1 = v1 * w1 + v * w2, D1 = v * q;
    double N1p = v2 * w1 + 2.0 * v1 * w2 + v * w3;
    double D1p = v1 * q + 2.0 * v * v1 * v2;
    double t1 = -(N1p * D1 - N1 * D1p) / (D1 * D1);
    double N2 = v1 * v2 * w1, D2 = q * q;
    double N2p = v2 * v2 * w1 + v1 * v3 * w1 + v1 * v2 * w2;
    double D2p = 4.0 * v1 * v2 * q;
    double t2 = (N2p * D2 - N2 * D2p) / (D2 * D2);
    return t1 + t2;
}

} // namespace detail

// Continuous synthesis: tabulate f and f' = (d/ds f(U(s))) / U'(s) at
// midpoint samples of [0, l].  Midpoints avoid the range endpoints, where
// f' blows up like -p(p+1)/s^2 for the sin^p pattern family.
inline Nonlinearity synthesize_f(const ProfileCurve& profile, const PatternProfile& pattern,
                                 int knots = 513) {
    if (knots < 2) throw std::invalid_argument("synthesize_f: knots >= 2 required");
    double l = pattern.l;
    std::vector<double> u(knots), f(knots), d(knots);
    for (int k = 0; k < knots; ++k) {
        double s = (k + 0.5) * l / knots;
        u[k] = pattern.u(s);
        f[k] = detail::synth_value(profile, pattern, s);
        d[k] = detail::synth_value_ds(profile, pattern, s) / pattern.du(s);
    }
    return Nonlinearity(std::move(u), std::move(f), std::move(d));
}

// Discrete-exact synthesis: f is defined so that the sampled pattern is an
// exact equilibrium of the assembled operator, f(U_i) = -(M^{-1} L U)_i.
// Slopes come from the Fritsch-Carlson rule on the resulting table.
inline Nonlinearity synthesize_f(const DiscreteOperator& op, const PatternProfile& pattern) {
    if (op.grid.s_topology != STopology::NeumannInterval)
        throw std::invalid_argument("synthesize_f: discrete synthesis runs on the straight "
                                    "tube (Neumann interval)");
    const Grid2D& g = op.grid;
    ScalarField U(g);
    for (int i = 0; i < g.ns; ++i) {
        double v = pattern.u(g.s(i));
        for (int j = 0; j < g.ntheta; ++j) U(i, j) = v;
    }
    ScalarField lap = apply(op, U);
    std::vector<double> u(g.ns), f(g.ns);
    for (int i = 0; i < g.ns; ++i) {
        u[i] = U(i, 0);
        f[i] = -lap(i, 0);
    }
    return Nonlinearity(std::move(u), std::move(f));
}

// Sample the pattern (constant in theta) onto a straight-tube grid.
inline ScalarField sample_pattern(const PatternProfile& pattern, const Grid2D& grid) {
    ScalarField U(grid);
    for (int i = 0; i < grid.ns; ++i) {
        double v = pattern.u(grid.s(i));
        for (int j = 0; j < grid.ntheta; ++j) U(i, j) = v;
    }
    return U;
}

} // namespace tubepat
