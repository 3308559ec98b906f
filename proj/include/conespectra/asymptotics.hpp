#pragma once

// Paper-level experiments: counting-function sweeps with depth-dependent
// truncation, log-slope regression, eigenvalue monotonicity in the aperture,
// higher-fiber positivity and the lower/upper bracketing cross-checks.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "conespectra/discretize.hpp"
#include "conespectra/eigensolve.hpp"
#include "conespectra/errors.hpp"
#include "conespectra/fibers.hpp"
#include "conespectra/model1d.hpp"

namespace conespectra {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 1.0;
};

/// Ordinary least squares y = slope x + intercept.
inline LinearFit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw invalid_parameter("linear_fit: need at least two matched samples");
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
        syy += ys[i] * ys[i];
    }
    const double vx = sxx - sx * sx / n;
    if (!(vx > 0.0)) throw numerical_failure("linear_fit: degenerate x spread");
    LinearFit f;
    f.slope = (sxy - sx * sy / n) / vx;
    f.intercept = (sy - f.slope * sx) / n;
    const double vy = syy - sy * sy / n;
    const double ss_res = vy - f.slope * f.slope * vx;
    f.r_squared = (vy > 0.0) ? std::max(0.0, 1.0 - ss_res / vy) : 1.0;
    return f;
}

struct CountingSample {
    double E = 0.0;
    int N = 0;
    int N_lower = -1; ///< tensor-product certified floor, -1 when skipped
    int N_upper = -1; ///< decomposition upper bound, filled by bracketing runs
    double extent_s = 0.0;
    double h = 0.0;
    double wall_ms = 0.0;
};

struct CountingCurve {
    std::vector<CountingSample> samples; ///< E strictly decreasing
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double predicted = 0.0; ///< cot(theta)/(4 pi)
};

/// Least squares of N against |ln E|; requires at least 4 samples spanning
/// two decades of depth.
inline LinearFit fit_log_slope(const std::vector<std::pair<double, int>>& samples) {
    if (samples.size() < 4) throw invalid_parameter("fit_log_slope: need at least 4 samples");
    std::vector<double> xs, ys;
    xs.reserve(samples.size());
    ys.reserve(samples.size());
    double xmin = 1e300, xmax = -1e300;
    for (const auto& [E, N] : samples) {
        if (!(E > 0.0)) throw invalid_parameter("fit_log_slope: depths must be positive");
        const double x = std::abs(std::log(E));
        xs.push_back(x);
        ys.push_back(static_cast<double>(N));
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
    }
    if (xmax - xmin < std::log(100.0))
        throw invalid_parameter("fit_log_slope: samples must span at least two decades in E");
    return linear_fit(xs, ys);
}

struct StepSlopeResult {
    bool measurable = false; ///< at least two count steps inside the window
    int steps = 0;
    double slope = 0.0;
    double r_squared = 0.0;
};

/// Slope of an integer counting staircase N(x) over [x_lo, x_hi], where x
/// is already the regression abscissa (here |ln E|). Ordinary least squares
/// through samples at arbitrary positions inherits an O((period/range)^2)
/// bias from the quantization, so the fit goes through the step midpoints
/// (x_i, N_i - 1/2) instead, with each x_i located by scan plus bisection;
/// the midpoints of an exact staircase lie on the underlying line, so the
/// slope is recovered up to O(eps) and r_squared measures how equispaced
/// the steps are. A window holding fewer than two steps carries no slope
/// information and is reported as not measurable.
inline StepSlopeResult staircase_log_slope(const std::function<int(double)>& count_at, double x_lo,
                                           double x_hi, double scan_dx = 0.2, double eps = 1e-4) {
    if (!(x_hi > x_lo) || !(scan_dx > 0.0) || !(eps > 0.0))
        throw invalid_parameter("staircase_log_slope: bad window or steps");
    std::vector<double> steps;
    int prev = count_at(x_lo);
    for (double x = x_lo + scan_dx; x <= x_hi + 1e-12; x += scan_dx) {
        const double xr = std::min(x, x_hi);
        const int cur = count_at(xr);
        int target = prev;
        while (target < cur) { // one bisection per unit jump
            double lo = x - scan_dx, hi = xr;
            for (int it = 0; it < 30; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (count_at(mid) > target)
                    hi = mid;
                else
                    lo = mid;
            }
            steps.push_back(0.5 * (lo + hi));
            ++target;
        }
        prev = cur;
    }
    StepSlopeResult res;
    res.steps = static_cast<int>(steps.size());
    if (steps.size() < 2) return res;
    std::vector<double> xs, ys;
    for (double x : steps) {
        xs.push_back(x);
        ys.push_back(count_at(x + eps) - 0.5);
    }
    const LinearFit fit = linear_fit(xs, ys);
    res.measurable = true;
    res.slope = fit.slope;
    res.r_squared = fit.r_squared;
    return res;
}

struct SweepPolicy {
    double M_sweep = 0.0;          ///< truncation multiplier; 0 picks 8/alpha
    std::vector<double> E_list;    ///< depths, will be sorted decreasing
    double h = 0.0;                ///< grid spacing; 0 picks min(0.1/alpha, 0.02 M)
    int l = 0;                     ///< fiber index (the sweep requires 0)
    int jobs = 1;
    bool check_lower_bound = true;
};

namespace detail {

inline double default_spacing(const ConeConfig& cfg, double m_sweep) {
    return std::min(0.1 / cfg.alpha, 0.02 * m_sweep);
}

} // namespace detail

/// One counting sample: truncate at extent_s = max(20/alpha, M |ln E|),
/// assemble the axisymmetric fiber pencil and count below edge - E, where
/// edge is the exact discrete transverse channel edge for the mesh spacing
/// (see discrete_transverse_edge; using -alpha^2/4 verbatim would require
/// h so small that the O(h^2) edge gap drops below the smallest depth).
/// The transverse extent is capped: bound states hug the ray with decay
/// rate about alpha/2, so a fixed multiple of 1/alpha suffices.
inline CountingSample counting_sample(const ConeConfig& cfg, double E, double m_sweep, double h,
                                      bool with_lower_bound) {
    const auto t0 = std::chrono::steady_clock::now();
    CountingSample smp;
    smp.E = E;
    const double extent_s = std::max(20.0 / cfg.alpha, m_sweep * std::abs(std::log(E)));
    const double extent_t = std::min(0.5 * extent_s * std::tan(cfg.theta), 24.0 / cfg.alpha);
    smp.extent_s = extent_s;
    smp.h = h;

    TruncatedDomain dom{CoordKind::rotated_st, extent_s, extent_t, AxisBc::natural};
    const StructuredMesh mesh = build_mesh(dom, h, cfg.theta);
    const SymmetricPencil pencil = assemble_fiber_pencil(cfg, 0, mesh);
    smp.N = count_below(pencil, discrete_transverse_edge(cfg.alpha, mesh.ht) - E).count;

    if (with_lower_bound) {
        // half-strip of the tensor bound sized to fit inside the truncation
        const double R = extent_t / std::tan(cfg.theta);
        smp.N_lower = tensor_lower_bound_count(cfg, R, E).count;
    }
    smp.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return smp;
}

inline CountingCurve counting_sweep(const ConeConfig& cfg, const SweepPolicy& pol) {
    cfg.validate();
    if (cfg.d != 3 || pol.l != 0)
        throw invalid_parameter("counting_sweep: only the axisymmetric fiber of d = 3 carries discrete spectrum");
    if (pol.E_list.empty()) throw invalid_parameter("counting_sweep: empty depth list");

    std::vector<double> depths = pol.E_list;
    std::sort(depths.begin(), depths.end(), std::greater<double>());
    const double m_sweep = (pol.M_sweep > 0.0) ? pol.M_sweep : 8.0 / cfg.alpha;
    const double h = (pol.h > 0.0) ? pol.h : detail::default_spacing(cfg, m_sweep);

    CountingCurve curve;
    curve.samples.resize(depths.size());
    const int jobs = std::max(1, pol.jobs);
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    std::atomic<bool> failed{false};
    std::string failure;
    std::mutex fail_mutex;
    auto work = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= depths.size() || failed.load()) break;
            try {
                curve.samples[i] = counting_sample(cfg, depths[i], m_sweep, h, pol.check_lower_bound);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lk(fail_mutex);
                failed = true;
                failure = e.what();
            }
        }
    };
    if (jobs == 1) {
        work();
    } else {
        for (int t = 0; t < jobs; ++t) workers.emplace_back(work);
        for (auto& w : workers) w.join();
    }
    if (failed) throw numerical_failure("counting_sweep: " + failure);

    for (std::size_t i = 0; i + 1 < curve.samples.size(); ++i)
        if (curve.samples[i + 1].N < curve.samples[i].N)
            throw numerical_failure("counting_sweep: count decreased as E decreased; h_rule too coarse");
    for (const auto& s : curve.samples)
        if (s.N_lower >= 0 && s.N < s.N_lower)
            throw invariant_violation("counting_sweep: sample count " + std::to_string(s.N) +
                                      " fell below the certified tensor bound " + std::to_string(s.N_lower));

    std::vector<std::pair<double, int>> pts;
    for (const auto& s : curve.samples) pts.emplace_back(s.E, s.N);
    const LinearFit fit = fit_log_slope(pts);
    curve.slope = fit.slope;
    curve.intercept = fit.intercept;
    curve.r_squared = fit.r_squared;
    curve.predicted = predicted_slope(cfg.theta);
    return curve;
}

// ---------------------------------------------------------------------------
// Monotonicity of eigenvalues in the aperture, on a fixed reference mesh.

struct MonotonicityRow {
    double theta = 0.0;
    std::vector<std::optional<double>> energies; ///< absent when above threshold
};

struct MonotonicityTable {
    std::vector<MonotonicityRow> rows;
    bool ok = true;
};

namespace detail {

/// Walks the shift downward until the inertia count at sigma is zero,
/// so shift-invert Lanczos cannot miss eigenvalues below it.
inline double shift_below_spectrum(const SymmetricPencil& p, double start) {
    double sigma = start;
    for (int it = 0; it < 60; ++it) {
        if (count_below(p, sigma).count == 0) return sigma;
        sigma = (sigma < 0.0) ? 2.0 * sigma : sigma - std::max(1.0, std::abs(sigma));
    }
    throw numerical_failure("shift_below_spectrum: no spectrum-free shift found");
}

} // namespace detail

inline MonotonicityTable monotonicity_sweep(double alpha, const std::vector<double>& theta_list, int k,
                                            const StructuredMesh& refmesh) {
    if (theta_list.size() < 2) throw invalid_parameter("monotonicity_sweep: need at least two angles");
    for (std::size_t i = 0; i + 1 < theta_list.size(); ++i)
        if (!(theta_list[i] <= theta_list[i + 1]))
            throw invalid_parameter("monotonicity_sweep: theta_list must be sorted increasing");

    ConeConfig cfg{3, pi / 4, alpha};
    cfg.validate();
    const ReferencePencil rp = assemble_reference_pencil(cfg, refmesh);
    const double thresh = threshold(alpha);

    MonotonicityTable table;
    for (double theta : theta_list) {
        if (!(theta > 0.0) || !(theta < pi / 2))
            throw invalid_parameter("monotonicity_sweep: theta out of (0, pi/2)");
        SymmetricPencil pencil;
        pencil.A = rp.form_matrix(theta, alpha);
        pencil.M = rp.M;
        pencil.n = rp.n;
        pencil.meta = "reference theta=" + std::to_string(theta);
        const double sigma = detail::shift_below_spectrum(pencil, 4.0 * thresh);
        const SpectralResult sr = lowest_eigenpairs(pencil, k, sigma);
        MonotonicityRow row;
        row.theta = theta;
        for (double ev : sr.eigenvalues)
            row.energies.push_back(ev < thresh ? std::optional<double>(ev) : std::nullopt);
        table.rows.push_back(std::move(row));
    }

    // discrete min-max makes this exact on a fixed mesh: tan^2 is increasing
    // and A_s is positive semidefinite
    for (std::size_t i = 0; i + 1 < table.rows.size(); ++i)
        for (int j = 0; j < k; ++j) {
            const auto& lo = table.rows[i].energies[static_cast<std::size_t>(j)];
            const auto& hi = table.rows[i + 1].energies[static_cast<std::size_t>(j)];
            if (lo && hi && !(*lo <= *hi + 1e-12 * std::abs(*lo))) table.ok = false;
        }
    return table;
}

// ---------------------------------------------------------------------------
// Higher-fiber positivity / emptiness for d >= 4.

struct PositivityEntry {
    int d = 0, l = 0;
    int count_below_threshold = 0;
};

struct PositivityReport {
    std::vector<PositivityEntry> entries;
    bool ok = true;
};

/// Checks inf of each discretized fiber against -alpha^2/4 with zero
/// tolerance: any eigenvalue below threshold is an assembly bug, because
/// the discrete flat form obeys the same line-wise bound as the continuum.
inline PositivityReport positivity_check(const ConeConfig& cfg, int l_max, const StructuredMesh& mesh) {
    cfg.validate();
    PositivityReport rep;
    const double thresh = threshold(cfg.alpha);
    for (int l = 0; l <= l_max; ++l) {
        if (cfg.d == 3 && l == 0) continue; // excluded pair, handled by the weighted form
        const SymmetricPencil pencil = assemble_flat_pencil(cfg, l, mesh);
        PositivityEntry e;
        e.d = cfg.d;
        e.l = l;
        e.count_below_threshold = count_below(pencil, thresh).count;
        if (e.count_below_threshold != 0) rep.ok = false;
        rep.entries.push_back(e);
    }
    if (!rep.ok)
        throw invariant_violation("positivity_check: an eigenvalue fell below -alpha^2/4; assembly bug");
    return rep;
}

// ---------------------------------------------------------------------------
// Sandwich check at one depth: tensor lower bound <= full count <= Neumann
// decomposition upper-bound sum.

struct BracketReport {
    double E = 0.0;
    int lower = 0;
    int middle = 0;
    int upper = 0;
    std::vector<int> piece_counts; ///< cells 0..m, then the tip-adjacent cell
    bool ok = false;
};

inline BracketReport bracketing_check(const ConeConfig& cfg, double E, double K, double R, double h = 0.1) {
    cfg.validate();
    if (cfg.d != 3) throw invalid_parameter("bracketing_check: the decomposition is for d = 3");
    if (!(E > 0.0) || !(K > 0.0) || !(R > 0.0))
        throw invalid_parameter("bracketing_check: E, K, R must be positive");
    if (!(1.0 / (16.0 * K * K) < 0.25 * cfg.alpha * cfg.alpha))
        throw invalid_parameter("bracketing_check: need 1/(16 K^2) < alpha^2/4 so the outer cell is empty");

    const double sinth = std::sin(cfg.theta), costh = std::cos(cfg.theta), tanth = std::tan(cfg.theta);
    // one common counting level for every piece, pinned to the discrete
    // channel edge of the target spacing so all pieces are comparable
    const double mu = discrete_transverse_edge(cfg.alpha, h) - E;

    BracketReport rep;
    rep.E = E;
    rep.lower = tensor_lower_bound_count(cfg, R, E).count;

    // decomposition geometry
    const int m = std::max(1, static_cast<int>(std::floor(std::sqrt(R))));
    const double r0_base = 2.0 * K / sinth;
    const double r_first = 3.0 * r0_base; // innermost cell boundary on the ray
    std::vector<double> rk(static_cast<std::size_t>(m) + 1);
    for (int k = 0; k <= m; ++k) rk[static_cast<std::size_t>(k)] = r_first + k * R / m;
    const double s_far = rk.back() + 2.0 / (sinth * std::sqrt(E)); // beyond the classical turning point
    const double d_max = 0.5 * rk.back() * tanth;

    // full-domain count on a truncation containing every cell
    {
        const double extent_s = s_far + 2.0;
        const double extent_t = std::max(R * tanth, d_max) + 2.0;
        TruncatedDomain dom{CoordKind::rotated_st, extent_s, extent_t, AxisBc::natural};
        const StructuredMesh mesh = build_mesh(dom, h, cfg.theta);
        const SymmetricPencil pencil = assemble_fiber_pencil(cfg, 0, mesh);
        rep.middle = count_below(pencil, mu).count;
    }

    // cells 0..m with natural boundaries
    int upper = 0;
    for (int k = 0; k <= m; ++k) {
        const double a = rk[static_cast<std::size_t>(k)];
        const double b = (k < m) ? rk[static_cast<std::size_t>(k) + 1] : s_far;
        const double d_k = 0.5 * rk[static_cast<std::size_t>(k)] * tanth;
        NeumannBox box{a, b, -d_k, d_k, a, b, 0.0};
        const SymmetricPencil pencil = assemble_neumann_box_pencil(cfg.alpha, cfg.theta, box, h);
        const int c = count_below(pencil, mu).count;
        rep.piece_counts.push_back(c);
        upper += c;
    }
    // tip-adjacent compact cell, cut along r = 2K
    {
        NeumannBox box{0.9 * K / sinth, 6.0 * K / sinth, -K / costh, K / costh,
                       2.0 * K / sinth, 6.0 * K / sinth, 2.0 * K};
        const SymmetricPencil pencil = assemble_neumann_box_pencil(cfg.alpha, cfg.theta, box, h);
        const int c = count_below(pencil, mu).count;
        rep.piece_counts.push_back(c);
        upper += c;
    }
    // the remaining unbounded cell contributes nothing: its form is bounded
    // below by -1/(16 K^2) > -alpha^2/4
    rep.upper = upper;
    rep.ok = (rep.lower <= rep.middle) && (rep.middle <= rep.upper);
    return rep;
}

} // namespace conespectra
