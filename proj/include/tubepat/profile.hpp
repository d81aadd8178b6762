#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace tubepat {

// Generatrix profile s -> Psi(s) of a tube of revolution, s in [0, length()].
// Implementations must provide derivatives through third order.
class ProfileCurve {
public:
    virtual ~ProfileCurve() = default;

    virtual double length() const = 0;
    virtual double psi(double s) const = 0;
    virtual double dpsi(double s) const = 0;
    virtual double d2psi(double s) const = 0;
    virtual double d3psi(double s) const = 0;

    // Coarse scan for max_s Psi(s); profiles here are smooth and gently
    // varying, 4096 samples is plenty.
    double max_psi() const {
        double l = length(), m = 0.0;
        for (int k = 0; k <= 4096; ++k) m = std::max(m, psi(k * l / 4096.0));
        return m;
    }
    double min_psi() const {
        double l = length(), m = psi(0.0);
        for (int k = 0; k <= 4096; ++k) m = std::min(m, psi(k * l / 4096.0));
        return m;
    }
};

// Psi(s) = a + A cos(2 pi s / l).  Requires a > A >= 0 so that Psi > 0.
class CosineProfile final : public ProfileCurve {
public:
    CosineProfile(double a, double A, double l) : a_(a), A_(A), l_(l), w_(2.0 * M_PI / l) {
        if (l <= 0.0) throw std::invalid_argument("CosineProfile: l must be positive");
        if (A < 0.0) throw std::invalid_argument("CosineProfile: A must be nonnegative");
        if (a <= A) throw std::invalid_argument("CosineProfile: need a > A for positivity");
    }

    double length() const override { return l_; }
    double psi(double s) const override { return a_ + A_ * std::cos(w_ * s); }
    double dpsi(double s) const override { return -A_ * w_ * std::sin(w_ * s); }
    double d2psi(double s) const override { return -A_ * w_ * w_ * std::cos(w_ * s); }
    double d3psi(double s) const override { return A_ * w_ * w_ * w_ * std::sin(w_ * s); }

    double a() const { return a_; }
    double amplitude() const { return A_; }

private:
    double a_, A_, l_, w_;
};

// Clamped cubic spline through uniformly spaced samples.  Used as the
// fallback representation for profiles given by tabulated data or by an
// arclength generatrix.
class SplineProfile final : public ProfileCurve {
public:
    // values[k] = Psi(k * l / (values.size()-1)); d0 / dl are the prescribed
    // end slopes.
    SplineProfile(std::vector<double> values, double l, double d0 = 0.0, double dl = 0.0)
        : y_(std::move(values)), l_(l) {
        int n = static_cast<int>(y_.size());
        if (n < 4) throw std::invalid_argument("SplineProfile: need at least 4 samples");
        if (l <= 0.0) throw std::invalid_argument("SplineProfile: l must be positive");
        for (double v : y_)
            if (!(v > 0.0)) throw std::invalid_argument("SplineProfile: Psi must be positive");
        h_ = l_ / (n - 1);
        solve_moments(d0, dl);
    }

    double length() const override { return l_; }

    double psi(double s) const override {
        auto [k, t] = locate(s);
        double h = h_;
        double A = (1.0 - t), B = t;
        return A * y_[k] + B * y_[k + 1] +
               ((A * A * A - A) * m_[k] + (B * B * B - B) * m_[k + 1]) * h * h / 6.0;
    }
    double dpsi(double s) const override {
        auto [k, t] = locate(s);
        double h = h_;
        double A = (1.0 - t), B = t;
        return (y_[k + 1] - y_[k]) / h +
               ((3.0 * B * B - 1.0) * m_[k + 1] - (3.0 * A * A - 1.0) * m_[k]) * h / 6.0;
    }
    double d2psi(double s) const override {
        auto [k, t] = locate(s);
        return (1.0 - t) * m_[k] + t * m_[k + 1];
    }
    double d3psi(double s) const override {
        auto [k, t] = locate(s);
        (void)t;
        return (m_[k + 1] - m_[k]) / h_;
    }

private:
    std::pair<int, double> locate(double s) const {
        int n = static_cast<int>(y_.size());
        double x = std::clamp(s, 0.0, l_);
        int k = std::min(static_cast<int>(x / h_), n - 2);
        return {k, (x - k * h_) / h_};
    }

    // Clamped-end tridiagonal system for the spline moments m_k = Psi''(s_k).
    void solve_moments(double d0, double dl) {
        int n = static_cast<int>(y_.size());
        m_.assign(n, 0.0);
        std::vector<double> diag(n, 4.0), rhs(n), sub(n, 1.0), sup(n, 1.0);
        diag[0] = diag[n - 1] = 2.0;
        rhs[0] = 6.0 / h_ * ((y_[1] - y_[0]) / h_ - d0);
        rhs[n - 1] = 6.0 / h_ * (dl - (y_[n - 1] - y_[n - 2]) / h_);
        for (int k = 1; k < n - 1; ++k)
            rhs[k] = 6.0 / (h_ * h_) * (y_[k + 1] - 2.0 * y_[k] + y_[k - 1]);
        // Thomas algorithm.
        for (int k = 1; k < n; ++k) {
            double w = sub[k] / diag[k - 1];
            diag[k] -= w * sup[k - 1];
            rhs[k] -= w * rhs[k - 1];
        }
        m_[n - 1] = rhs[n - 1] / diag[n - 1];
        for (int k = n - 2; k >= 0; --k) m_[k] = (rhs[k] - sup[k] * m_[k + 1]) / diag[k];
    }

    std::vector<double> y_;
    std::vector<double> m_;
    double l_, h_;
};

// A generatrix given in its own arclength parameter r in [0, L]:
// r -> (chi(r), psi(r)) with (psi')^2 + (chi')^2 = 1.
struct ArcProfile {
    double L = 0.0;
    std::function<double(double)> psi, dpsi, chi, dchi;
};

// Convert an arclength generatrix to the axis parametrization s = chi(r)
// used everywhere else, sampling onto a clamped spline.  Requires chi
// strictly increasing (the axis coordinate must be monotone) and the
// arclength identity to hold.
inline SplineProfile reparametrize_arc(const ArcProfile& arc, int samples = 257) {
    if (samples < 4) throw std::invalid_argument("reparametrize_arc: samples >= 4 required");
    if (!(arc.L > 0.0)) throw std::invalid_argument("reparametrize_arc: L must be positive");
    const int check = 512;
    for (int k = 0; k <= check; ++k) {
        double r = k * arc.L / check;
        if (!(arc.dchi(r) > 0.0))
            throw std::invalid_argument("reparametrize_arc: chi'(r) <= 0, axis coordinate "
                                        "not monotone");
        double e = arc.dpsi(r) * arc.dpsi(r) + arc.dchi(r) * arc.dchi(r) - 1.0;
        if (std::abs(e) > 1e-8)
            throw std::invalid_argument("reparametrize_arc: (psi')^2 + (chi')^2 != 1, "
                                        "parameter is not arclength");
        if (!(arc.psi(r) > 0.0))
            throw std::invalid_argument("reparametrize_arc: psi must be positive");
    }
    double s0 = arc.chi(0.0);
    double l = arc.chi(arc.L) - s0;
    std::vector<double> vals(samples);
    for (int k = 0; k < samples; ++k) {
        double s = s0 + k * l / (samples - 1);
        // Invert chi by bisection, then polish with Newton.
        double lo = 0.0, hi = arc.L;
        for (int it = 0; it < 60; ++it) {
            double mid = 0.5 * (lo + hi);
            (arc.chi(mid) < s ? lo : hi) = mid;
        }
        double r = 0.5 * (lo + hi);
        for (int it = 0; it < 4; ++it) r -= (arc.chi(r) - s) / arc.dchi(r);
        r = std::clamp(r, 0.0, arc.L);
        vals[k] = arc.psi(r);
    }
    double slope0 = arc.dpsi(0.0) / arc.dchi(0.0);
    double slopel = arc.dpsi(arc.L) / arc.dchi(arc.L);
    return SplineProfile(std::move(vals), l, slope0, slopel);
}

// Stability margin of the waist criterion at a point:
//   m(s) = Psi''(s) Psi(s) - Psi'(s)^2 (1 + Psi'(s)^2).
// A positive margin at some interior s0 is what makes the synthesized
// pattern stable.
inline double stability_margin(const ProfileCurve& p, double s) {
    double v = p.psi(s), d = p.dpsi(s), dd = p.d2psi(s);
    return dd * v - d * d * (1.0 + d * d);
}

struct MarginPoint {
    double s0 = 0.0;
    double margin = 0.0;
};

// Locate the interior point with the largest stability margin.
inline MarginPoint find_best_s0(const ProfileCurve& p, int scan = 1024) {
    double l = p.length();
    MarginPoint best{0.0, -std::numeric_limits<double>::infinity()};
    for (int k = 1; k < scan; ++k) {
        double s = k * l / scan;
        double m = stability_margin(p, s);
        if (m > best.margin) best = {s, m};
    }
    // Golden-section polish around the scan winner.
    double a = best.s0 - l / scan, b = best.s0 + l / scan;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - gr * (b - a), d = a + gr * (b - a);
    for (int it = 0; it < 80; ++it) {
        if (stability_margin(p, c) > stability_margin(p, d)) {
            b = d;
        } else {
            a = c;
        }
        c = b - gr * (b - a);
        d = a + gr * (b - a);
    }
    best.s0 = 0.5 * (a + b);
    best.margin = stability_margin(p, best.s0);
    return best;
}

struct AdmissibilityReport {
    bool positive = false;      // Psi > 0 on [0, l]
    bool flat_ends = false;     // Psi'(0) = Psi'(l) = 0 (needed for gluing)
    bool stable_waist = false;  // positive stability margin somewhere
    double psi_min = 0.0;
    double s0 = 0.0;
    double margin = 0.0;
    bool pass() const { return positive && flat_ends && stable_waist; }
};

inline AdmissibilityReport check_admissibility(const ProfileCurve& p) {
    AdmissibilityReport r;
    r.psi_min = p.min_psi();
    r.positive = r.psi_min > 0.0;
    double scale = std::max(1.0, p.max_psi() / p.length());
    r.flat_ends = std::abs(p.dpsi(0.0)) < 1e-8 * scale &&
                  std::abs(p.dpsi(p.length())) < 1e-8 * scale;
    auto best = find_best_s0(p);
    r.s0 = best.s0;
    r.margin = best.margin;
    r.stable_waist = best.margin > 0.0;
    return r;
}

} // namespace tubepat
