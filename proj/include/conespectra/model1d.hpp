#pragma once

// One-dimensional model operators: interval operators with a point
// delta-interaction, inverse-square operators on a half-line, and the
// tensor-product lower bound that links them to the 2D counting problem.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "conespectra/errors.hpp"
#include "conespectra/fibers.hpp"

namespace conespectra {

enum class Bc { dirichlet, neumann };

/// -d^2/dx^2 on (-L, L) with a delta of strength alpha at the origin.
struct IntervalDeltaProblem {
    double alpha = 2.0;
    double L = 5.0;
    Bc bc = Bc::neumann;

    void validate() const {
        if (!(alpha > 0.0)) throw invalid_parameter("IntervalDeltaProblem: alpha must be positive");
        if (!(L > 0.0)) throw invalid_parameter("IntervalDeltaProblem: L must be positive");
    }
};

/// Root of the secular equation, parametrized by the decay rate kappa.
struct SecularSolution {
    bool exists = false;
    double kappa = 0.0;
    double energy = 0.0; ///< -kappa^2 when exists
    double residual = 0.0;
};

namespace detail {

// 2 kappa coth(kappa L), continued by its limit 2/L at kappa = 0.
inline double secular_dirichlet_lhs(double kappa, double L) {
    const double x = kappa * L;
    if (x < 1e-8) return 2.0 / L * (1.0 + x * x / 3.0);
    return 2.0 * kappa / std::tanh(x);
}

inline double secular_neumann_lhs(double kappa, double L) {
    return 2.0 * kappa * std::tanh(kappa * L);
}

inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
    double flo = f(lo);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if (hi - lo <= 1e-15 * (1.0 + hi)) break;
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

/// Ground state of the interval delta operator from its secular equation
/// (dirichlet: 2k coth(kL) = alpha, neumann: 2k tanh(kL) = alpha).
/// For dirichlet with alpha L <= 2 no negative bound state exists and an
/// empty solution is returned.
inline SecularSolution delta_interval_ground(const IntervalDeltaProblem& p) {
    p.validate();
    SecularSolution sol;
    if (p.bc == Bc::dirichlet) {
        // LHS increases from 2/L; a root below zero energy needs alpha > 2/L.
        if (p.alpha * p.L <= 2.0) return sol;
        const double kappa = detail::bisect(
            [&](double k) { return detail::secular_dirichlet_lhs(k, p.L) - p.alpha; },
            0.0, 0.5 * p.alpha);
        sol.exists = true;
        sol.kappa = kappa;
        sol.residual = detail::secular_dirichlet_lhs(kappa, p.L) - p.alpha;
    } else {
        double hi = p.alpha;
        while (detail::secular_neumann_lhs(hi, p.L) <= p.alpha) hi *= 2.0;
        const double kappa = detail::bisect(
            [&](double k) { return detail::secular_neumann_lhs(k, p.L) - p.alpha; },
            0.0, hi);
        sol.exists = true;
        sol.kappa = kappa;
        sol.residual = detail::secular_neumann_lhs(kappa, p.L) - p.alpha;
    }
    sol.energy = -sol.kappa * sol.kappa;
    return sol;
}

/// Bound-state energy of the delta interaction on the infinite 1D lattice
/// with spacing h: the ansatz u_j = rho^|j| gives 1/rho - rho = alpha h and
/// energy (2 - sqrt(alpha^2 h^2 + 4)) / h^2. This is the exact essential
/// channel edge of the discretized half-plane problem; it approaches
/// -alpha^2/4 from above as h -> 0, and counting shallow levels against
/// -alpha^2/4 directly would lose every state within the O(h^2) gap.
inline double discrete_transverse_edge(double alpha, double h) {
    if (!(alpha > 0.0) || !(h > 0.0))
        throw invalid_parameter("discrete_transverse_edge: alpha and h must be positive");
    const double x = alpha * h;
    // stable form of (2 - sqrt(x^2 + 4)) / h^2
    return -(x * x) / (h * h * (2.0 + std::sqrt(x * x + 4.0)));
}

// ---------------------------------------------------------------------------
// Symmetric tridiagonal eigenvalues by Sturm bisection.

namespace tridiag {

/// Number of eigenvalues of the symmetric tridiagonal matrix (diag, off)
/// strictly below x, by counting negative pivots of the LDL^T recurrence.
inline int count_below(const std::vector<double>& diag, const std::vector<double>& off, double x) {
    const std::size_t n = diag.size();
    int count = 0;
    double q = 1.0;
    const double tiny = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
    for (std::size_t i = 0; i < n; ++i) {
        const double e2 = (i == 0) ? 0.0 : off[i - 1] * off[i - 1];
        q = (diag[i] - x) - e2 / q;
        if (q == 0.0) q = -tiny;
        if (q < 0.0) ++count;
    }
    return count;
}

/// k-th smallest eigenvalue (k is 1-based) by bisection on the Sturm count.
inline double eigenvalue(const std::vector<double>& diag, const std::vector<double>& off, int k) {
    // Gershgorin bounds.
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    const std::size_t n = diag.size();
    for (std::size_t i = 0; i < n; ++i) {
        double r = 0.0;
        if (i > 0) r += std::abs(off[i - 1]);
        if (i + 1 < n) r += std::abs(off[i]);
        lo = std::min(lo, diag[i] - r);
        hi = std::max(hi, diag[i] + r);
    }
    const double scale = std::max(std::abs(lo), std::abs(hi));
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (count_below(diag, off, mid) >= k)
            hi = mid;
        else
            lo = mid;
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * scale) break;
    }
    return 0.5 * (lo + hi);
}

} // namespace tridiag

namespace detail {

// Assembles the symmetrized tridiagonal matrix M^{-1/2} A M^{-1/2} for the
// interval delta form on a uniform grid with the center node at x = 0.
inline void interval_delta_tridiag(const IntervalDeltaProblem& p, int n,
                                   std::vector<double>& diag, std::vector<double>& off) {
    if (n < 100) throw invalid_parameter("interval delta grid: need n >= 100");
    if (n % 2 != 0) ++n; // keep a node exactly at the origin
    const double h = 2.0 * p.L / n;
    const int center = n / 2;

    // Form values on nodes 0..n; Dirichlet removes the end nodes.
    const int lo = (p.bc == Bc::dirichlet) ? 1 : 0;
    const int hi = (p.bc == Bc::dirichlet) ? n - 1 : n;
    const int m = hi - lo + 1;
    std::vector<double> a(m, 2.0 / h), mass(m, h);
    if (p.bc == Bc::neumann) {
        a.front() = 1.0 / h;
        a.back() = 1.0 / h;
        mass.front() = 0.5 * h;
        mass.back() = 0.5 * h;
    }
    a[center - lo] -= p.alpha;

    diag.resize(m);
    off.assign(m - 1, 0.0);
    for (int i = 0; i < m; ++i) diag[i] = a[i] / mass[i];
    for (int i = 0; i + 1 < m; ++i) off[i] = (-1.0 / h) / std::sqrt(mass[i] * mass[i + 1]);
}

} // namespace detail

/// Lowest k eigenvalues of the interval delta operator by symmetric finite
/// differences on an n-point grid (the jump condition enters as a -alpha/h
/// diagonal contribution at the center node).
inline std::vector<double> delta_interval_spectrum(const IntervalDeltaProblem& p, int k, int n) {
    p.validate();
    if (k < 1) throw invalid_parameter("delta_interval_spectrum: k must be >= 1");
    std::vector<double> diag, off;
    detail::interval_delta_tridiag(p, n, diag, off);
    std::vector<double> evs(static_cast<std::size_t>(k));
    for (int j = 1; j <= k; ++j)
        evs[static_cast<std::size_t>(j - 1)] = tridiag::eigenvalue(diag, off, j);
    return evs;
}

// ---------------------------------------------------------------------------
// Inverse-square operators on (1, +infinity): Pruefer oscillation counting.

/// -d^2/dx^2 - c/x^2 on (1, +infinity) with Dirichlet or Neumann at x = 1.
struct InverseSquareProblem {
    double c = 1.0;
    Bc bc = Bc::dirichlet;
    double x_max = 0.0; ///< 0 means choose automatically from the depth

    void validate() const {
        if (!(c > 0.0)) throw invalid_parameter("InverseSquareProblem: c must be positive");
    }
};

namespace detail {

// Integrates the Pruefer phase in the variable y = ln x; the phase gains
// pi at every zero of the solution, so floor(phi_end / pi) counts the
// eigenvalues below -E on the truncated interval.
inline double pruefer_phase(double c, double E, double phi0, double x_max) {
    const double y_end = std::log(x_max);
    auto rhs = [&](double y, double phi) {
        const double x = std::exp(y);
        const double sp = std::sin(phi), cp = std::cos(phi);
        return x * (cp * cp + (c / (x * x) - E) * sp * sp);
    };
    auto rk4 = [&](double y, double phi, double h) {
        const double k1 = rhs(y, phi);
        const double k2 = rhs(y + 0.5 * h, phi + 0.5 * h * k1);
        const double k3 = rhs(y + 0.5 * h, phi + 0.5 * h * k2);
        const double k4 = rhs(y + h, phi + h * k3);
        return phi + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    };

    double y = 0.0, phi = phi0;
    double h = 1e-3;
    const double tol = 1e-11;
    while (y < y_end) {
        h = std::min(h, y_end - y);
        const double full = rk4(y, phi, h);
        const double half = rk4(y + 0.5 * h, rk4(y, phi, 0.5 * h), 0.5 * h);
        const double err = std::abs(full - half) / 15.0;
        if (err > tol && h > 1e-10) {
            h *= 0.5;
            continue;
        }
        phi = half + (half - full) / 15.0;
        y += h;
        if (err < 0.1 * tol) h = std::min(2.0 * h, 0.05);
    }
    return phi;
}

} // namespace detail

/// Number of eigenvalues of -d^2/dx^2 - c/x^2 below -E, by shooting the
/// Pruefer phase from x = 1 and counting its multiples of pi. The
/// truncation radius is doubled until the count stabilizes.
inline int inverse_square_count(const InverseSquareProblem& p, double E) {
    p.validate();
    if (!(E > 0.0)) throw invalid_parameter("inverse_square_count: depth E must be positive");
    if (E >= p.c) return 0; // the potential never drops below -c on (1, infinity)

    const double phi0 = (p.bc == Bc::dirichlet) ? 0.0 : 0.5 * pi;
    double x_max = std::max(p.x_max, 4.0 * std::sqrt(p.c) / std::sqrt(E));
    x_max = std::max(x_max, 8.0);

    int count = static_cast<int>(std::floor(detail::pruefer_phase(p.c, E, phi0, x_max) / pi));
    for (int attempt = 0; attempt < 4; ++attempt) {
        const int doubled = static_cast<int>(std::floor(detail::pruefer_phase(p.c, E, phi0, 2.0 * x_max) / pi));
        if (doubled == count) return count;
        x_max *= 2.0;
        count = doubled;
    }
    throw numerical_failure("inverse_square_count: count did not stabilize under x_max doubling");
}

// ---------------------------------------------------------------------------
// Tensor-product lower bound for the 2D counting function.

struct TensorBound {
    int count = 0;
    bool r_too_small = false; ///< shift fell above the threshold; bound is trivially 0
    double interval_ground = 0.0; ///< E1 of the transverse Dirichlet interval problem
    double scaled_depth = 0.0;    ///< depth after the unitary rescaling to (1, infinity)
};

/// Certified lower bound for N_{-alpha^2/4 - E} of the axisymmetric fiber:
/// solves the transverse Dirichlet interval problem on (-R tan(theta), R tan(theta)),
/// shifts the depth, rescales to the unit half-line and counts inverse-square
/// Dirichlet eigenvalues there.
inline TensorBound tensor_lower_bound_count(const ConeConfig& cfg, double R, double E) {
    cfg.validate();
    if (!(R >= 0.0)) throw invalid_parameter("tensor_lower_bound_count: R must be nonnegative");
    if (!(E > 0.0)) throw invalid_parameter("tensor_lower_bound_count: E must be positive");

    TensorBound tb;
    const double half_width = R * std::tan(cfg.theta);
    if (!(half_width > 0.0)) {
        tb.r_too_small = true;
        return tb;
    }
    IntervalDeltaProblem transverse{cfg.alpha, half_width, Bc::dirichlet};
    const SecularSolution e1 = delta_interval_ground(transverse);
    if (!e1.exists) {
        tb.r_too_small = true;
        return tb;
    }
    tb.interval_ground = e1.energy;

    const double shift = 0.25 * cfg.alpha * cfg.alpha + E + e1.energy;
    if (!(shift > 0.0)) {
        tb.r_too_small = true;
        return tb;
    }
    const double stretch = 2.0 * R + 1.0 / std::sin(cfg.theta);
    tb.scaled_depth = shift * stretch * stretch;

    const double c = 1.0 / (4.0 * std::sin(cfg.theta) * std::sin(cfg.theta));
    if (tb.scaled_depth >= c) return tb; // zero count: depth below the potential minimum
    tb.count = inverse_square_count({c, Bc::dirichlet, 0.0}, tb.scaled_depth);
    return tb;
}

} // namespace conespectra
