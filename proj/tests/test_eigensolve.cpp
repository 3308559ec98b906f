#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "conespectra/eigensolve.hpp"

using namespace conespectra;

namespace {

// random sparse symmetric pencil: banded A with random entries, random
// positive lumped mass
SymmetricPencil random_pencil(int n, std::uint32_t seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> val(-1.0, 1.0), mval(0.2, 3.0);
    std::vector<Eigen::Triplet<double>> trip;
    for (int i = 0; i < n; ++i) {
        trip.emplace_back(i, i, 2.0 * val(rng));
        for (int off = 1; off <= 3; ++off) {
            if (i + off >= n) continue;
            const double v = val(rng);
            trip.emplace_back(i, i + off, v);
            trip.emplace_back(i + off, i, v);
        }
    }
    SymmetricPencil p;
    p.n = n;
    p.A.resize(n, n);
    p.A.setFromTriplets(trip.begin(), trip.end());
    p.M.resize(n);
    for (int i = 0; i < n; ++i) p.M[i] = mval(rng);
    return p;
}

std::vector<double> dense_eigenvalues(const SymmetricPencil& p) {
    Eigen::MatrixXd A = Eigen::MatrixXd(p.A);
    Eigen::MatrixXd M = p.M.asDiagonal();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(A, M);
    std::vector<double> evs(es.eigenvalues().data(), es.eigenvalues().data() + p.n);
    return evs;
}

// 1D Dirichlet Laplacian on (0, pi): its FD eigenvalues have a closed form
SymmetricPencil laplacian_pencil_1d(int n) {
    const double h = pi / (n + 1);
    std::vector<Eigen::Triplet<double>> trip;
    for (int i = 0; i < n; ++i) {
        trip.emplace_back(i, i, 2.0 / h);
        if (i + 1 < n) {
            trip.emplace_back(i, i + 1, -1.0 / h);
            trip.emplace_back(i + 1, i, -1.0 / h);
        }
    }
    SymmetricPencil p;
    p.n = n;
    p.A.resize(n, n);
    p.A.setFromTriplets(trip.begin(), trip.end());
    p.M = Eigen::VectorXd::Constant(n, h);
    return p;
}

} // namespace

TEST_CASE("inertia counting matches dense diagonalization") {
    for (std::uint32_t seed : {11u, 12u, 13u, 14u, 15u}) {
        const SymmetricPencil p = random_pencil(80, seed);
        const auto evs = dense_eigenvalues(p);
        for (double mu : {-2.0, -0.5, 0.0, 0.3, 1.5}) {
            int expected = 0;
            for (double ev : evs)
                if (ev < mu) ++expected;
            const InertiaCount ic = count_below(p, mu);
            CHECK(ic.factorization_ok);
            CHECK(ic.count == expected);
        }
    }
}

TEST_CASE("shift invariance of counting") {
    const SymmetricPencil p = random_pencil(120, 77u);
    std::mt19937 rng(99u);
    std::uniform_real_distribution<double> shift(-1.0, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
        const double c = shift(rng);
        const double mu = shift(rng);
        SymmetricPencil q = p;
        for (int i = 0; i < p.n; ++i) q.A.coeffRef(i, i) -= c * p.M[i];
        CHECK(count_below(q, mu).count == count_below(p, mu + c).count);
    }
}

TEST_CASE("lowest eigenpairs on the 1D Dirichlet Laplacian") {
    const int n = 2000;
    const double h = pi / (n + 1);
    const SymmetricPencil p = laplacian_pencil_1d(n);
    const SpectralResult sr = lowest_eigenpairs(p, 5, -1.0);
    REQUIRE(sr.eigenvalues.size() == 5);
    CHECK(sr.converged);
    for (int j = 1; j <= 5; ++j) {
        const double exact = 4.0 / (h * h) * std::pow(std::sin(0.5 * j * h), 2);
        CHECK(sr.eigenvalues[static_cast<std::size_t>(j - 1)] ==
              doctest::Approx(exact).epsilon(1e-10));
        // the discrete values approximate j^2 to O(h^2)
        CHECK(sr.eigenvalues[static_cast<std::size_t>(j - 1)] ==
              doctest::Approx(static_cast<double>(j) * j).epsilon(1e-5));
    }
}

TEST_CASE("lowest eigenpairs against dense reference on a random pencil") {
    const SymmetricPencil p = random_pencil(150, 4242u);
    const auto evs = dense_eigenvalues(p);
    const double sigma = evs.front() - 0.5;
    const SpectralResult sr = lowest_eigenpairs(p, 4, sigma);
    REQUIRE(sr.eigenvalues.size() == 4);
    for (std::size_t j = 0; j < 4; ++j)
        CHECK(sr.eigenvalues[j] == doctest::Approx(evs[j]).epsilon(1e-9));
}

TEST_CASE("determinism") {
    const SymmetricPencil p = random_pencil(100, 31u);
    const SpectralResult a = lowest_eigenpairs(p, 3, -3.0);
    const SpectralResult b = lowest_eigenpairs(p, 3, -3.0);
    for (std::size_t j = 0; j < 3; ++j) CHECK(a.eigenvalues[j] == b.eigenvalues[j]);
    CHECK(count_below(p, 0.25).count == count_below(p, 0.25).count);
}

TEST_CASE("validation") {
    const SymmetricPencil p = random_pencil(50, 5u);
    CHECK_THROWS_AS(lowest_eigenpairs(p, 0, 0.0), invalid_parameter);
    CHECK_THROWS_AS(lowest_eigenpairs(p, 50, 0.0), invalid_parameter);
}
