#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "conespectra/discretize.hpp"
#include "conespectra/eigensolve.hpp"
#include "conespectra/model1d.hpp"

using namespace conespectra;

TEST_CASE("build_mesh geometry") {
    TruncatedDomain dom{CoordKind::rotated_st, 12.0, 6.0, AxisBc::natural};
    const StructuredMesh m = build_mesh(dom, 0.1, pi / 4);
    CHECK(m.t(m.j_ray) == 0.0);
    CHECK(m.s(0) == 0.0);
    CHECK(m.s(m.ns) == doctest::Approx(12.0).epsilon(1e-14));
    CHECK(m.t(0) == doctest::Approx(-6.0).epsilon(1e-14));
    CHECK(m.t(m.nt) == doctest::Approx(6.0).epsilon(1e-14));
    CHECK(m.ns * m.hs == doctest::Approx(12.0).epsilon(1e-14));

    CHECK_THROWS_AS(build_mesh(dom, 0.5, pi / 4), invalid_parameter); // too coarse across t
    CHECK_THROWS_AS(build_mesh(dom, -0.1, pi / 4), invalid_parameter);
    CHECK_THROWS_AS(build_mesh(dom, 0.1, 0.0), invalid_parameter);

    const double f = masked_fraction(m);
    CHECK(f > 0.0);
    CHECK(f < 0.5);
}

TEST_CASE("fiber pencil: structure and spectral window") {
    // pi/6 binds about 5e-3 below threshold, deep enough to survive both the
    // lattice channel-edge offset and this truncation; wider apertures bind
    // orders of magnitude shallower and would show nothing here
    const ConeConfig cfg{3, pi / 6, 2.0};
    TruncatedDomain dom{CoordKind::rotated_st, 24.0, 12.0, AxisBc::natural};
    const StructuredMesh mesh = build_mesh(dom, 0.1, cfg.theta);
    const SymmetricPencil p = assemble_fiber_pencil(cfg, 0, mesh);

    REQUIRE(p.n > 0);
    CHECK(p.M.minCoeff() > 0.0);
    Eigen::SparseMatrix<double> asym = Eigen::SparseMatrix<double>(p.A.transpose()) - p.A;
    CHECK(asym.coeffs().cwiseAbs().maxCoeff() == 0.0);

    // ground state of the quarter-aperture cone sits between the V-shaped
    // interaction bound -alpha^2/(4 sin^2 theta) and the lattice channel
    // edge; at this aperture the binding is far shallower than the O(h^2)
    // edge offset, so the continuum threshold -alpha^2/4 would miss it
    const double vmin = -cfg.alpha * cfg.alpha / (4.0 * std::sin(cfg.theta) * std::sin(cfg.theta));
    CHECK(count_below(p, vmin - 0.3).count == 0);
    CHECK(count_below(p, discrete_transverse_edge(cfg.alpha, mesh.ht)).count >= 1);

    // higher fibers need the Dirichlet axis
    CHECK_THROWS_AS(assemble_fiber_pencil(cfg, 1, mesh), invalid_parameter);
    TruncatedDomain domd = dom;
    domd.bc_axis = AxisBc::dirichlet;
    const StructuredMesh meshd = build_mesh(domd, 0.1, cfg.theta);
    const SymmetricPencil p1 = assemble_fiber_pencil(cfg, 1, meshd);
    // l=1 carries nothing below the channel edge
    CHECK(count_below(p1, discrete_transverse_edge(cfg.alpha, meshd.ht)).count == 0);
}

TEST_CASE("discrete transverse edge bounds the half-plane assembly") {
    // without the tip (pure half-plane strip, Dirichlet axis far away) the
    // lowest eigenvalue cannot cross the lattice channel edge
    const ConeConfig cfg{3, pi / 4, 2.0};
    const double edge = discrete_transverse_edge(cfg.alpha, 0.1);
    CHECK(edge > threshold(cfg.alpha));
    CHECK(edge == doctest::Approx(threshold(cfg.alpha)).epsilon(5e-3));
}

TEST_CASE("reference pencil is a global multiple of the rotated one at pi/4") {
    const ConeConfig cfg{3, pi / 4, 2.0};
    TruncatedDomain rot{CoordKind::rotated_st, 12.0, 6.0, AxisBc::natural};
    TruncatedDomain ref{CoordKind::reference, 12.0, 6.0, AxisBc::natural};
    const StructuredMesh mrot = build_mesh(rot, 0.1, pi / 4);
    const StructuredMesh mref = build_mesh(ref, 0.1, pi / 4);
    REQUIRE(mrot.ns == mref.ns);
    REQUIRE(mrot.nt == mref.nt);

    const SymmetricPencil prot = assemble_fiber_pencil(cfg, 0, mrot);
    const ReferencePencil rp = assemble_reference_pencil(cfg, mref);
    REQUIRE(prot.n == rp.n);

    // weights differ by the constant sqrt(2): (s+t) versus (s+t)/sqrt(2)
    const double rt2 = std::sqrt(2.0);
    Eigen::SparseMatrix<double> diff = rp.form_matrix(pi / 4, cfg.alpha) - rt2 * prot.A;
    double amax = 0.0;
    for (int k = 0; k < rp.A_s.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(rp.A_s, k); it; ++it)
            amax = std::max(amax, std::abs(it.value()));
    CHECK(diff.coeffs().cwiseAbs().maxCoeff() <= 1e-12 * amax);
    CHECK((rp.M - rt2 * prot.M).cwiseAbs().maxCoeff() <= 1e-12 * rp.M.maxCoeff());
}

TEST_CASE("flat pencil preconditions") {
    const ConeConfig cfg{3, pi / 4, 2.0};
    TruncatedDomain dom{CoordKind::rotated_st, 10.0, 5.0, AxisBc::dirichlet};
    const StructuredMesh mesh = build_mesh(dom, 0.1, cfg.theta);

    CHECK_THROWS_AS(assemble_flat_pencil(cfg, 0, mesh, FlatVariant::prop_gamma), excluded_fiber);
    CHECK_NOTHROW(assemble_flat_pencil(cfg, 0, mesh, FlatVariant::tip_excluded));
    CHECK_NOTHROW(assemble_flat_pencil(cfg, 1, mesh));

    TruncatedDomain nat = dom;
    nat.bc_axis = AxisBc::natural;
    const StructuredMesh mnat = build_mesh(nat, 0.1, cfg.theta);
    CHECK_THROWS_AS(assemble_flat_pencil(cfg, 1, mnat), invalid_parameter);
}

TEST_CASE("neumann box assembly") {
    NeumannBox far_box{10.0, 20.0, -3.0, 3.0, 0.0, 0.0, 0.0}; // no trace
    const SymmetricPencil p = assemble_neumann_box_pencil(2.0, pi / 4, far_box, 0.1);
    REQUIRE(p.n > 0);
    CHECK(p.M.minCoeff() > 0.0);

    // stiffness annihilates constants: A*1 must reduce to the potential diagonal
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(p.n);
    Eigen::VectorXd residual = p.A * ones;
    // the potential is >= -1/(4 r_min^2); r_min = (10 - 3)/sqrt(2)
    const double rmin = (10.0 - 3.0) / std::sqrt(2.0);
    for (int i = 0; i < p.n; ++i) {
        CHECK(residual[i] <= 1e-12);             // potential only, all entries negative
        CHECK(residual[i] >= -0.25 / (rmin * rmin) * p.M[i] * (1.0 + 1e-12));
    }
    // hence no spectrum below the potential floor
    CHECK(count_below(p, -0.25 / (rmin * rmin) - 1e-9).count == 0);

    CHECK_THROWS_AS(assemble_neumann_box_pencil(2.0, pi / 4, NeumannBox{1, 1, 0, 1, 0, 0, 0}, 0.1),
                    invalid_parameter);
}

TEST_CASE("pencil dump format") {
    const ConeConfig cfg{3, pi / 4, 2.0};
    TruncatedDomain dom{CoordKind::rotated_st, 6.0, 3.0, AxisBc::natural};
    const StructuredMesh mesh = build_mesh(dom, 0.15, cfg.theta);
    const SymmetricPencil p = assemble_fiber_pencil(cfg, 0, mesh);

    const std::string path = "dump_pencil_test.txt";
    dump_pencil(p, path);
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string line;
    std::getline(in, line);
    CHECK(line == "# matrix A n=" + std::to_string(p.n));
    int mass_lines = 0;
    bool in_mass = false;
    while (std::getline(in, line)) {
        if (line == "# matrix M (diagonal)") {
            in_mass = true;
            continue;
        }
        if (in_mass && !line.empty()) ++mass_lines;
    }
    CHECK(mass_lines == p.n);
    std::remove(path.c_str());
}
