#pragma once

#include "grid.hpp"
#include "profile.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace tubepat {

using Vec3 = Eigen::Vector3d;

namespace detail {

// (1 - cos(k s)) / k and sin(k s) / k with series fallbacks; both are the
// k -> 0 limits of the circular-axis embedding.
inline double versine_over_k(double k, double s) {
    double x = k * s;
    if (std::abs(x) < 1e-4) {
        double x2 = x * x;
        return k * s * s * 0.5 * (1.0 - x2 / 12.0 + x2 * x2 / 360.0);
    }
    return (1.0 - std::cos(x)) / k;
}

inline double sinc_times_s(double k, double s) {
    double x = k * s;
    if (std::abs(x) < 1e-4) {
        double x2 = x * x;
        return s * (1.0 - x2 / 6.0 + x2 * x2 / 120.0);
    }
    return std::sin(x) / k;
}

} // namespace detail

// Metric coefficient Phi(s, theta) = sqrt(Psi'^2 + (k Psi cos(theta) - 1)^2)
// of the tube around a circular axis of curvature k (k = 0 for the straight
// tube).  The metric is g = diag(Phi^2, Psi^2) in the (s, theta) chart.
inline double metric_phi(double psi, double dpsi, double kappa, double theta) {
    double w = kappa * psi * std::cos(theta) - 1.0;
    return std::sqrt(dpsi * dpsi + w * w);
}

// Embedding of the (possibly bent) tube into R^3.  The axis is the circle
// of curvature kappa through the origin with initial tangent e3; kappa = 0
// gives the straight tube along e3.
inline Vec3 embed_tube(double psi, double kappa, double s, double theta) {
    double c = std::cos(kappa * s), sn = std::sin(kappa * s);
    double rc = psi * std::cos(theta);
    return Vec3(detail::versine_over_k(kappa, s) + rc * c,
                psi * std::sin(theta),
                detail::sinc_times_s(kappa, s) - rc * sn);
}

// A single tube piece of axis curvature kappa over one profile period.
class BentTube {
public:
    BentTube(std::shared_ptr<const ProfileCurve> profile, double kappa)
        : profile_(std::move(profile)), kappa_(kappa) {
        if (!profile_) throw std::invalid_argument("BentTube: null profile");
        if (std::abs(kappa_) * profile_->max_psi() >= 1.0)
            throw std::invalid_argument("BentTube: self-intersecting tube, "
                                        "|kappa| * max Psi >= 1");
    }

    const ProfileCurve& profile() const { return *profile_; }
    double kappa() const { return kappa_; }
    double length() const { return profile_->length(); }

    double psi(double s) const { return profile_->psi(s); }
    double dpsi(double s) const { return profile_->dpsi(s); }
    double phi(double s, double theta) const {
        return metric_phi(profile_->psi(s), profile_->dpsi(s), kappa_, theta);
    }
    Vec3 embed(double s, double theta) const {
        return embed_tube(profile_->psi(s), kappa_, s, theta);
    }

private:
    std::shared_ptr<const ProfileCurve> profile_;
    double kappa_;
};

// 2n copies of the profile period glued end to end around a full circle:
// kappa = pi / (n l), total axis length 2 n l, Psi extended evenly and
// 2l-periodically.  The resulting surface is a closed genus-1 surface.
class GluedSurface {
public:
    GluedSurface(std::shared_ptr<const ProfileCurve> profile, int n,
                 double kappa_bound = std::numeric_limits<double>::infinity())
        : profile_(std::move(profile)), n_(n) {
        if (!profile_) throw std::invalid_argument("GluedSurface: null profile");
        if (n_ < 2) throw std::invalid_argument("GluedSurface: n >= 2 required");
        double l = profile_->length();
        kappa_ = M_PI / (n_ * l);
        period_ = 2.0 * n_ * l;
        if (kappa_ > kappa_bound)
            throw std::invalid_argument("GluedSurface: curvature exceeds continuation bound");
        if (kappa_ * profile_->max_psi() >= 1.0)
            throw std::invalid_argument("GluedSurface: self-intersecting tube, "
                                        "kappa * max Psi >= 1");
    }

    const ProfileCurve& profile() const { return *profile_; }
    int n() const { return n_; }
    double kappa() const { return kappa_; }
    double period() const { return period_; }

    // Fold a global coordinate into the fundamental piece [0, l]; sign is
    // the derivative of the fold map (flips on the reflected copies).
    struct Folded {
        double s_local;
        double sign;
    };
    Folded fold(double s) const {
        double l = profile_->length();
        double t = std::fmod(s, 2.0 * l);
        if (t < 0.0) t += 2.0 * l;
        if (t <= l) return {t, 1.0};
        return {2.0 * l - t, -1.0};
    }

    double psi(double s) const { return profile_->psi(fold(s).s_local); }
    double dpsi(double s) const {
        auto f = fold(s);
        return f.sign * profile_->dpsi(f.s_local);
    }
    double phi(double s, double theta) const {
        return metric_phi(psi(s), dpsi(s), kappa_, theta);
    }
    Vec3 embed(double s, double theta) const {
        return embed_tube(psi(s), kappa_, s, theta);
    }

private:
    std::shared_ptr<const ProfileCurve> profile_;
    int n_;
    double kappa_ = 0.0;
    double period_ = 0.0;
};

inline GluedSurface glue(std::shared_ptr<const ProfileCurve> profile, int n,
                         double kappa_bound = std::numeric_limits<double>::infinity()) {
    return GluedSurface(std::move(profile), n, kappa_bound);
}

} // namespace tubepat
