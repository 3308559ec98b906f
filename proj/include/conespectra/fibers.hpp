#pragma once

// Problem parameters, fiber-index arithmetic and the exact coordinate
// transforms between the meridian frame (r,z), the rotated frame (s,t)
// and the theta-independent reference frame.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

#include "conespectra/errors.hpp"

namespace conespectra {

inline constexpr double pi = std::numbers::pi;

/// A cone in R^d with aperture theta and an attractive delta-coupling
/// of strength alpha on its lateral surface.
struct ConeConfig {
    int d = 3;          ///< ambient dimension, d >= 3
    double theta = pi / 4; ///< half-opening angle, in (0, pi/2)
    double alpha = 2.0; ///< coupling strength, > 0

    void validate() const {
        if (d < 3)
            throw invalid_parameter("ConeConfig: dimension d must satisfy d >= 3, got " + std::to_string(d));
        if (!(theta > 0.0) || !(theta < pi / 2))
            throw invalid_parameter("ConeConfig: aperture theta must lie in (0, pi/2)");
        if (!(alpha > 0.0))
            throw invalid_parameter("ConeConfig: coupling alpha must be positive");
    }
};

inline void check_fiber_index(int d, int l) {
    if (d < 3)
        throw invalid_parameter("fiber index: d must satisfy d >= 3, got " + std::to_string(d));
    if (l < 0)
        throw invalid_parameter("fiber index: l must be nonnegative, got " + std::to_string(l));
}

/// Eigenvalue of the Laplace-Beltrami operator on S^{d-2} for degree l.
inline double angular_eigenvalue(int d, int l) {
    check_fiber_index(d, l);
    return static_cast<double>(l) * (l + d - 3);
}

namespace detail {

// Binomial coefficient with the convention C(n,k) = 0 whenever n < k
// (including negative n).
inline std::int64_t binomial_or_zero(int n, int k) {
    if (n < k || k < 0) return 0;
    std::int64_t acc = 1;
    for (int i = 1; i <= k; ++i)
        acc = acc * (n - k + i) / i;
    return acc;
}

} // namespace detail

/// Dimension of the space of spherical harmonics of degree l on S^{d-2}.
inline std::int64_t multiplicity(int d, int l) {
    check_fiber_index(d, l);
    return detail::binomial_or_zero(d + l - 2, d - 2) - detail::binomial_or_zero(d + l - 4, d - 2);
}

/// Flat-metric potential coefficient l(l+d-3) + (d-2)(d-4)/4.
/// The pair (3,0) is rejected: the flat transform does not apply there.
inline double gamma_coefficient(int d, int l) {
    check_fiber_index(d, l);
    if (d == 3 && l == 0)
        throw excluded_fiber("gamma_coefficient: (d,l) = (3,0) is excluded; use the weighted meridian form");
    return angular_eigenvalue(d, l) + 0.25 * (d - 2) * (d - 4);
}

/// Bottom of the essential spectrum, -alpha^2/4.
inline double threshold(double alpha) {
    if (!(alpha > 0.0))
        throw invalid_parameter("threshold: alpha must be positive");
    return -0.25 * alpha * alpha;
}

/// Slope of the eigenvalue counting function N vs |ln E|: cot(theta)/(4 pi).
inline double predicted_slope(double theta) {
    if (!(theta > 0.0) || !(theta < pi / 2))
        throw invalid_parameter("predicted_slope: theta must lie in (0, pi/2)");
    return (std::cos(theta) / std::sin(theta)) / (4.0 * pi);
}

/// Everything a single fiber needs: angular eigenvalue, flat-metric
/// coefficient, multiplicity and the essential-spectrum threshold.
struct FiberCoefficients {
    int l = 0;
    double angular_ev = 0.0;
    double gamma = 0.0; ///< stored even for (3,0), where it equals -1/4
    std::int64_t mult = 1;
    double thresh = 0.0;
};

inline FiberCoefficients make_fiber(const ConeConfig& cfg, int l) {
    cfg.validate();
    check_fiber_index(cfg.d, l);
    FiberCoefficients fc;
    fc.l = l;
    fc.angular_ev = angular_eigenvalue(cfg.d, l);
    fc.gamma = fc.angular_ev + 0.25 * (cfg.d - 2) * (cfg.d - 4);
    fc.mult = multiplicity(cfg.d, l);
    fc.thresh = threshold(cfg.alpha);
    return fc;
}

struct Point2 {
    double a = 0.0;
    double b = 0.0;
};

/// Meridian (r,z) -> rotated (s,t):  s = z cos t + r sin t,  t = -z sin t + r cos t.
/// The meridian ray {z = r cot(theta), r > 0} lands on {t = 0, s > 0}.
inline Point2 to_rotated(Point2 rz, double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    return {rz.b * c + rz.a * s, -rz.b * s + rz.a * c};
}

/// Rotated (s,t) -> meridian (r,z); inverse of to_rotated.
inline Point2 to_meridian(Point2 st, double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    return {st.a * s + st.b * c, st.a * c - st.b * s};
}

/// Rotated (s,t) -> reference (s tan(theta), t), mapping the inclined
/// half-plane Omega_theta onto the fixed domain Omega_{pi/4}.
inline Point2 to_reference(Point2 st, double theta) {
    if (!(theta > 0.0) || !(theta < pi / 2))
        throw invalid_parameter("to_reference: theta must lie in (0, pi/2)");
    return {st.a * std::tan(theta), st.b};
}

/// Distance-to-axis r expressed in rotated coordinates.
inline double radial_weight_coordinate(double s, double t, double theta) {
    return s * std::sin(theta) + t * std::cos(theta);
}

} // namespace conespectra
