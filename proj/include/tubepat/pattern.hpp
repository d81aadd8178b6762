#pragma once

#include <cmath>
#include <stdexcept>

namespace tubepat {

// One-dimensional base pattern U(s) on [0, l], strictly increasing with
// U'(s) = beta * sin(pi s / l)^p, p in {2, 3}.  Both ends are critical
// points of infinite order p, which is what lets copies be glued evenly.
struct PatternProfile {
    double l = 1.0;
    double beta = 1.0;
    int p = 2;

    PatternProfile() = default;
    PatternProfile(double l_, double beta_, int p_) : l(l_), beta(beta_), p(p_) {
        if (l <= 0.0) throw std::invalid_argument("PatternProfile: l must be positive");
        if (beta <= 0.0) throw std::invalid_argument("PatternProfile: beta must be positive");
        if (p != 2 && p != 3)
            throw std::invalid_argument("PatternProfile: p must be 2 or 3");
    }

    double u(double s) const {
        double w = M_PI / l;
        if (p == 2) return beta * (0.5 * s - l * std::sin(2.0 * w * s) / (4.0 * M_PI));
        double c = std::cos(w * s);
        return beta * (l / M_PI) * (2.0 / 3.0 - c + c * c * c / 3.0);
    }
    double du(double s) const {
        double sn = std::sin(M_PI * s / l);
        return beta * (p == 2 ? sn * sn : sn * sn * sn);
    }
    double d2u(double s) const {
        double w = M_PI / l, sn = std::sin(w * s), cs = std::cos(w * s);
        return beta * w * (p == 2 ? 2.0 * sn * cs : 3.0 * sn * sn * cs);
    }
    double d3u(double s) const {
        double w = M_PI / l, sn = std::sin(w * s), cs = std::cos(w * s);
        if (p == 2) return beta * w * w * 2.0 * (cs * cs - sn * sn);
        return beta * w * w * 3.0 * sn * (2.0 * cs * cs - sn * sn);
    }

    double range_min() const { return 0.0; }
    double range_max() const { return u(l); }
};

inline PatternProfile make_pattern_profile(double l, double beta, int p) {
    return PatternProfile(l, beta, p);
}

} // namespace tubepat
