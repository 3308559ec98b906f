#pragma once

// Sparse symmetric generalized eigenvalue machinery: exact eigenvalue
// counting by matrix inertia (Sylvester's law) and lowest-eigenpair
// extraction by shift-invert Lanczos with full reorthogonalization.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "conespectra/discretize.hpp"
#include "conespectra/errors.hpp"

namespace conespectra {

struct InertiaCount {
    double mu = 0.0;
    int count = 0;
    bool factorization_ok = false;
    bool perturbed = false; ///< mu was nudged off a pencil eigenvalue
};

struct SpectralResult {
    std::vector<double> eigenvalues;     ///< sorted nondecreasing
    std::vector<double> residual_norms;  ///< ||A x - lambda M x|| / ||x||_M
    double shift_used = 0.0;
    bool converged = false;
    std::string mesh_meta;
};

namespace detail {

inline Eigen::SparseMatrix<double> shifted_matrix(const SymmetricPencil& p, double mu) {
    Eigen::SparseMatrix<double> S = p.A;
    for (int i = 0; i < p.n; ++i) S.coeffRef(i, i) -= mu * p.M[i];
    return S;
}

inline double pencil_scale(const SymmetricPencil& p) {
    double amax = 0.0;
    for (int k = 0; k < p.A.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(p.A, k); it; ++it)
            amax = std::max(amax, std::abs(it.value()));
    const double mmin = p.M.minCoeff();
    return amax / std::max(mmin, 1e-300);
}

} // namespace detail

/// Counts pencil eigenvalues strictly below mu through the inertia of
/// A - mu M. The count is exact by Sylvester's law of inertia; on a
/// factorization breakdown mu is perturbed by +-1e-10 |mu| and retried.
inline InertiaCount count_below(const SymmetricPencil& p, double mu) {
    InertiaCount ic;
    ic.mu = mu;
    const double scale = std::max(std::abs(mu), 1e-12 * detail::pencil_scale(p));
    const double nudges[] = {0.0, 1e-10 * scale, -1e-10 * scale, 1e-8 * scale, -1e-8 * scale};
    for (double nudge : nudges) {
        Eigen::SparseMatrix<double> S = detail::shifted_matrix(p, mu + nudge);
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(S);
        if (ldlt.info() != Eigen::Success) continue;
        const Eigen::VectorXd& d = ldlt.vectorD();
        bool clean = true;
        int neg = 0;
        for (int i = 0; i < d.size(); ++i) {
            if (!std::isfinite(d[i]) || d[i] == 0.0) {
                clean = false;
                break;
            }
            if (d[i] < 0.0) ++neg;
        }
        if (!clean) continue;
        ic.count = neg;
        ic.factorization_ok = true;
        ic.perturbed = (nudge != 0.0);
        return ic;
    }
    throw numerical_failure("count_below: LDLT factorization failed after perturbation retries at mu=" +
                            std::to_string(mu));
}

/// k lowest eigenpairs by shift-invert Lanczos around sigma, run in the
/// M-inner product with full reorthogonalization. The result is cross
/// validated against the inertia count between lambda_1 and lambda_k so
/// missed eigenvalues are a hard failure, not a silent one.
inline SpectralResult lowest_eigenpairs(const SymmetricPencil& p, int k, double sigma,
                                        int max_steps = 0, double res_tol = 1e-8) {
    if (k < 1) throw invalid_parameter("lowest_eigenpairs: k must be >= 1");
    if (k >= p.n) throw invalid_parameter("lowest_eigenpairs: k must be below the pencil dimension");

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    double shift = sigma;
    for (int attempt = 0;; ++attempt) {
        ldlt.compute(detail::shifted_matrix(p, shift));
        if (ldlt.info() == Eigen::Success && ldlt.vectorD().allFinite()) break;
        if (attempt >= 3) throw numerical_failure("lowest_eigenpairs: shifted factorization failed");
        shift = sigma - (1e-8 + attempt * 1e-6) * (1.0 + std::abs(sigma));
    }

    const int n = p.n;
    int m = (max_steps > 0) ? max_steps : std::min(n, std::max(3 * k + 40, 80));
    m = std::min(m, n);

    // deterministic start vector
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = 1.0 + 0.001 * std::sin(static_cast<double>(i));

    std::vector<Eigen::VectorXd> basis;
    basis.reserve(static_cast<std::size_t>(m));
    std::vector<double> alpha_c, beta_c;

    auto m_dot = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        return a.cwiseProduct(p.M.cwiseProduct(b)).sum();
    };

    v /= std::sqrt(m_dot(v, v));
    basis.push_back(v);
    int steps = 0;
    for (int j = 0; j < m; ++j) {
        Eigen::VectorXd w = ldlt.solve(p.M.cwiseProduct(basis.back()).eval());
        const double a = m_dot(w, basis.back());
        alpha_c.push_back(a);
        w -= a * basis.back();
        if (basis.size() > 1) w -= beta_c.back() * basis[basis.size() - 2];
        // full reorthogonalization, twice
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : basis) w -= m_dot(w, q) * q;
        const double b = std::sqrt(std::max(m_dot(w, w), 0.0));
        ++steps;
        if (b < 1e-13 || j == m - 1) break;
        beta_c.push_back(b);
        basis.push_back(w / b);
    }

    // eigen-decomposition of the Lanczos tridiagonal
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(steps, steps);
    for (int i = 0; i < steps; ++i) {
        T(i, i) = alpha_c[static_cast<std::size_t>(i)];
        if (i + 1 < steps) T(i, i + 1) = T(i + 1, i) = beta_c[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    if (es.info() != Eigen::Success) throw numerical_failure("lowest_eigenpairs: tridiagonal solve failed");

    // largest nu correspond to eigenvalues nearest above sigma
    std::vector<int> order(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return es.eigenvalues()[a] > es.eigenvalues()[b]; });

    SpectralResult res;
    res.shift_used = shift;
    res.mesh_meta = p.meta;
    const double a_scale = detail::pencil_scale(p);
    int got = 0;
    for (int idx : order) {
        if (got == k) break;
        const double nu = es.eigenvalues()[idx];
        if (!(nu > 0.0)) break; // only eigenvalues above the shift are wanted
        const double lambda = shift + 1.0 / nu;
        Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < steps; ++i) x += es.eigenvectors()(i, idx) * basis[static_cast<std::size_t>(i)];
        const double xnorm = std::sqrt(m_dot(x, x));
        const double rnorm = (p.A * x - lambda * p.M.cwiseProduct(x)).norm() / xnorm;
        res.eigenvalues.push_back(lambda);
        res.residual_norms.push_back(rnorm);
        ++got;
    }
    if (got < k)
        throw numerical_failure("lowest_eigenpairs: Lanczos produced only " + std::to_string(got) +
                                " of " + std::to_string(k) + " pairs; move the shift or raise max_steps");

    std::vector<std::size_t> perm(res.eigenvalues.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::sort(perm.begin(), perm.end(),
              [&](std::size_t a, std::size_t b) { return res.eigenvalues[a] < res.eigenvalues[b]; });
    std::vector<double> ev(perm.size()), rn(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        ev[i] = res.eigenvalues[perm[i]];
        rn[i] = res.residual_norms[perm[i]];
    }
    res.eigenvalues = ev;
    res.residual_norms = rn;

    res.converged = true;
    for (double r : res.residual_norms)
        if (!(r <= res_tol * std::max(1.0, a_scale))) res.converged = false;

    // inertia cross-check: exactly k eigenvalues between lambda_1 and lambda_k
    const double spectral_scale = std::max({std::abs(res.eigenvalues.front()),
                                            std::abs(res.eigenvalues.back()), 1e-6});
    const double eps = 1e-9 * spectral_scale;
    const int below_hi = count_below(p, res.eigenvalues.back() + eps).count;
    const int below_lo = count_below(p, res.eigenvalues.front() - eps).count;
    if (below_hi - below_lo != k)
        throw numerical_failure("lowest_eigenpairs: inertia cross-check found " +
                                std::to_string(below_hi - below_lo) + " eigenvalues where " +
                                std::to_string(k) + " were computed (missed eigenvalue)");
    return res;
}

} // namespace conespectra
