#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "conespectra/fibers.hpp"

using namespace conespectra;

namespace {

// brute-force count of monomials of exact degree n in v variables
long monomials_of_degree(int n, int v) {
    if (n < 0) return 0;
    if (v == 1) return 1;
    long total = 0;
    for (int first = 0; first <= n; ++first) total += monomials_of_degree(n - first, v - 1);
    return total;
}

// dimension of spherical harmonics of degree <= L on S^{d-2}: harmonic
// polynomials in d-1 variables of degree L and L-1
long harmonic_dim_up_to(int d, int L) {
    return monomials_of_degree(L, d - 1) + monomials_of_degree(L - 1, d - 1);
}

} // namespace

TEST_CASE("angular eigenvalue formula") {
    CHECK(angular_eigenvalue(3, 0) == 0.0);
    CHECK(angular_eigenvalue(3, 2) == 4.0);
    CHECK(angular_eigenvalue(5, 1) == 3.0);
    CHECK_THROWS_AS(angular_eigenvalue(2, 0), invalid_parameter);
    CHECK_THROWS_AS(angular_eigenvalue(3, -1), invalid_parameter);
    for (int d = 3; d <= 7; ++d)
        for (int l = 0; l < 10; ++l)
            CHECK(angular_eigenvalue(d, l) <= angular_eigenvalue(d, l + 1));
}

TEST_CASE("multiplicities match spherical harmonic dimensions") {
    CHECK(multiplicity(3, 0) == 1);
    CHECK(multiplicity(3, 5) == 2);
    CHECK(multiplicity(4, 1) == 3);
    for (int d = 3; d <= 8; ++d) CHECK(multiplicity(d, 0) == 1);

    for (int d = 3; d <= 6; ++d)
        for (int L = 0; L <= 6; ++L) {
            long sum = 0;
            for (int l = 0; l <= L; ++l) sum += multiplicity(d, l);
            CHECK(sum == harmonic_dim_up_to(d, L));
        }
}

TEST_CASE("gamma coefficient") {
    CHECK(gamma_coefficient(4, 0) == 0.0);
    CHECK(gamma_coefficient(3, 1) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(gamma_coefficient(5, 0) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK_THROWS_AS(gamma_coefficient(3, 0), excluded_fiber);

    for (int d = 3; d <= 7; ++d) {
        double prev = -1.0;
        for (int l = 0; l < 12; ++l) {
            if (d == 3 && l == 0) continue;
            const double g = gamma_coefficient(d, l);
            CHECK(g >= 0.0);
            CHECK(g > prev);
            prev = g;
        }
    }
    // the excluded pair is still representable through the coefficient bundle
    const FiberCoefficients fc = make_fiber(ConeConfig{3, pi / 4, 2.0}, 0);
    CHECK(fc.gamma == doctest::Approx(-0.25).epsilon(1e-15));
}

TEST_CASE("threshold") {
    CHECK(threshold(2.0) == -1.0);
    CHECK(threshold(1.0) == -0.25);
    CHECK(threshold(4.0) == -4.0);
    CHECK_THROWS_AS(threshold(0.0), invalid_parameter);
    CHECK_THROWS_AS(threshold(-1.0), invalid_parameter);
}

TEST_CASE("predicted slope and its 1D consistency identity") {
    CHECK(predicted_slope(pi / 4) == doctest::Approx(1.0 / (4.0 * pi)).epsilon(1e-14));
    CHECK(predicted_slope(pi / 6) == doctest::Approx(std::sqrt(3.0) / (4.0 * pi)).epsilon(1e-13));
    CHECK(predicted_slope(pi / 2 - 1e-9) < 1e-8);
    CHECK_THROWS_AS(predicted_slope(0.0), invalid_parameter);
    CHECK_THROWS_AS(predicted_slope(pi / 2), invalid_parameter);

    for (int i = 1; i <= 100; ++i) {
        const double theta = i * (pi / 2) / 101.0;
        const double c = 1.0 / (4.0 * std::sin(theta) * std::sin(theta));
        const double alt = std::sqrt(c - 0.25) / (2.0 * pi);
        CHECK(std::abs(predicted_slope(theta) - alt) <= 1e-14 * (1.0 + alt));
    }
}

TEST_CASE("rotation maps") {
    const double theta = 0.7;
    const Point2 on_ray = to_rotated({std::sin(theta), std::cos(theta)}, theta);
    CHECK(on_ray.a == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(on_ray.b) < 1e-15);

    const Point2 origin = to_rotated({0.0, 0.0}, theta);
    CHECK(origin.a == 0.0);
    CHECK(origin.b == 0.0);

    const Point2 back = to_meridian(to_rotated({0.3, -1.7}, theta), theta);
    CHECK(back.a == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(back.b == doctest::Approx(-1.7).epsilon(1e-14));

    std::mt19937 rng(20240817);
    std::uniform_real_distribution<double> coord(-50.0, 50.0), ang(0.05, pi / 2 - 0.05);
    for (int i = 0; i < 10000; ++i) {
        const Point2 p{std::abs(coord(rng)), coord(rng)};
        const double th = ang(rng);
        const Point2 q = to_rotated(p, th);
        const Point2 r = to_meridian(q, th);
        CHECK(std::abs(r.a - p.a) <= 1e-13 * (1.0 + std::abs(p.a)));
        CHECK(std::abs(r.b - p.b) <= 1e-13 * (1.0 + std::abs(p.b)));
        CHECK(std::hypot(q.a, q.b) == doctest::Approx(std::hypot(p.a, p.b)).epsilon(1e-13));
    }
}

TEST_CASE("reference map") {
    const Point2 id = to_reference({0.4, -0.9}, pi / 4);
    CHECK(id.a == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(id.b == doctest::Approx(-0.9).epsilon(1e-15));

    const Point2 p = to_reference({1.0, 0.0}, pi / 6);
    CHECK(p.a == doctest::Approx(std::tan(pi / 6)).epsilon(1e-15));
    CHECK(p.b == 0.0);

    // the boundary of Omega_theta lands on the boundary of Omega_{pi/4}
    const double theta = 0.9;
    for (int i = -20; i <= 20; ++i) {
        const double t = 0.35 * i;
        const double s = -t * std::cos(theta) / std::sin(theta);
        const Point2 q = to_reference({s, t}, theta);
        CHECK(std::abs(q.a + q.b) <= 1e-12 * (1.0 + std::abs(q.a)));
    }
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS((ConeConfig{2, pi / 4, 2.0}.validate()), invalid_parameter);
    CHECK_THROWS_AS((ConeConfig{3, 0.0, 2.0}.validate()), invalid_parameter);
    CHECK_THROWS_AS((ConeConfig{3, pi / 2, 2.0}.validate()), invalid_parameter);
    CHECK_THROWS_AS((ConeConfig{3, pi / 4, 0.0}.validate()), invalid_parameter);
    CHECK_NOTHROW((ConeConfig{4, 0.3, 1.5}.validate()));
}
