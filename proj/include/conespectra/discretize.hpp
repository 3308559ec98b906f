#pragma once

// Ray-aligned structured meshes of truncated rotated/reference domains and
// assembly of sparse symmetric pencils (A, M) for the fiber quadratic forms.
//
// All assemblies work in the rotated frame (s,t), where the interaction ray
// is the grid line {t = 0, s > 0} and the distance to the symmetry axis is
// r = s sin(theta) + t cos(theta).

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "conespectra/errors.hpp"
#include "conespectra/fibers.hpp"

namespace conespectra {

enum class CoordKind { meridian_rz, rotated_st, reference };
enum class AxisBc { natural, dirichlet };

struct TruncatedDomain {
    CoordKind coords = CoordKind::rotated_st;
    double extent_s = 20.0; ///< along-ray truncation length
    double extent_t = 10.0; ///< transverse truncation half-width
    AxisBc bc_axis = AxisBc::natural;

    void validate() const {
        if (!(extent_s > 0.0) || !(extent_t > 0.0))
            throw invalid_parameter("TruncatedDomain: extents must be positive");
    }
};

/// Uniform tensor grid on (0, extent_s) x (-extent_t, extent_t) with the
/// ray {t = 0} exactly on a grid line. Spacings are adjusted from the
/// target so the extents divide evenly.
struct StructuredMesh {
    CoordKind coords = CoordKind::rotated_st;
    AxisBc bc_axis = AxisBc::natural;
    double theta = pi / 4;
    double hs = 0.0, ht = 0.0;
    int ns = 0, nt = 0; ///< interval counts along s and t
    int j_ray = 0;      ///< t-index of the ray line

    double s(int i) const { return i * hs; }
    double t(int j) const { return (j - j_ray) * ht; }

    /// Axis distance at node (i,j); the reference frame uses the fixed
    /// pi/4 geometry and the weight (s + t) instead.
    double axis_r(int i, int j) const {
        if (coords == CoordKind::reference) return s(i) + t(j);
        return s(i) * std::sin(theta) + t(j) * std::cos(theta);
    }

    int n_nodes() const { return (ns + 1) * (nt + 1); }
    int node(int i, int j) const { return j * (ns + 1) + i; }
    bool on_outer_boundary(int i, int j) const {
        return i == 0 || i == ns || j == 0 || j == nt;
    }
};

inline StructuredMesh build_mesh(const TruncatedDomain& dom, double h, double theta) {
    dom.validate();
    if (!(h > 0.0)) throw invalid_parameter("build_mesh: target spacing must be positive");
    if (dom.extent_t / h < 16.0)
        throw invalid_parameter("build_mesh: fewer than 16 nodes across extent_t; refine h");
    if (!(theta > 0.0) || !(theta < pi / 2))
        throw invalid_parameter("build_mesh: theta must lie in (0, pi/2)");

    StructuredMesh m;
    m.coords = dom.coords;
    m.bc_axis = dom.bc_axis;
    m.theta = theta;
    m.ns = std::max(2, static_cast<int>(std::lround(dom.extent_s / h)));
    m.hs = dom.extent_s / m.ns;
    const int half = std::max(16, static_cast<int>(std::lround(dom.extent_t / h)));
    m.nt = 2 * half;
    m.j_ray = half;
    m.ht = dom.extent_t / half;
    return m;
}

/// Discrete image of a quadratic form: sparse symmetric A and diagonal
/// lumped mass M > 0, so the generalized problem is A x = lambda M x.
struct SymmetricPencil {
    Eigen::SparseMatrix<double> A;
    Eigen::VectorXd M; ///< diagonal of the mass matrix
    int n = 0;
    std::string meta;
};

namespace detail {

enum class NodeClass { dof, zero, voided };

// Classifies nodes for the Dirichlet-truncated assemblies: outer rectangle
// boundary is always a zero (Dirichlet) ghost, the axis side r <= 0 is a
// zero ghost for a Dirichlet axis and voided for a natural axis.
inline NodeClass classify(const StructuredMesh& m, int i, int j) {
    const double r = m.axis_r(i, j);
    if (r <= 0.0) return (m.bc_axis == AxisBc::dirichlet) ? NodeClass::zero : NodeClass::voided;
    if (m.on_outer_boundary(i, j)) return NodeClass::zero;
    return NodeClass::dof;
}

struct DofMap {
    std::vector<int> index; ///< node -> dof, -1 when not a dof
    std::vector<NodeClass> cls;
    int n = 0;
};

inline DofMap build_dofs(const StructuredMesh& m) {
    DofMap d;
    d.index.assign(m.n_nodes(), -1);
    d.cls.resize(m.n_nodes());
    for (int j = 0; j <= m.nt; ++j)
        for (int i = 0; i <= m.ns; ++i) {
            const int nd = m.node(i, j);
            d.cls[nd] = classify(m, i, j);
            if (d.cls[nd] == NodeClass::dof) d.index[nd] = d.n++;
        }
    return d;
}

// Adds the edge contribution coef * (u_a - u_b)^2 to the triplet list,
// where either endpoint may be a zero ghost (value pinned to 0).
inline void add_edge(std::vector<Eigen::Triplet<double>>& trip, int dof_a, int dof_b, double coef) {
    if (dof_a >= 0) trip.emplace_back(dof_a, dof_a, coef);
    if (dof_b >= 0) trip.emplace_back(dof_b, dof_b, coef);
    if (dof_a >= 0 && dof_b >= 0) {
        trip.emplace_back(dof_a, dof_b, -coef);
        trip.emplace_back(dof_b, dof_a, -coef);
    }
}

inline double int_pow(double x, int p) {
    double acc = 1.0;
    for (int q = 0; q < p; ++q) acc *= x;
    return acc;
}

} // namespace detail

/// Fraction of rectangle nodes masked away by the half-plane cut r <= 0.
inline double masked_fraction(const StructuredMesh& m) {
    int masked = 0;
    for (int j = 0; j <= m.nt; ++j)
        for (int i = 0; i <= m.ns; ++i)
            if (m.axis_r(i, j) <= 0.0) ++masked;
    return static_cast<double>(masked) / m.n_nodes();
}

/// Weighted fiber form in rotated coordinates: 5-point stiffness with the
/// weight r^{d-2} at edge midpoints, angular potential l(l+d-3) r^{d-4},
/// delta trace -alpha (s sin(theta))^{d-2} h_s on ray nodes, lumped mass
/// r^{d-2} h_s h_t. A natural axis is only admissible for l = 0.
inline SymmetricPencil assemble_fiber_pencil(const ConeConfig& cfg, int l, const StructuredMesh& mesh) {
    cfg.validate();
    check_fiber_index(cfg.d, l);
    if (l >= 1 && mesh.bc_axis == AxisBc::natural)
        throw invalid_parameter("assemble_fiber_pencil: l >= 1 requires a Dirichlet axis");

    const detail::DofMap dofs = detail::build_dofs(mesh);
    const double sinth = std::sin(mesh.theta), costh = std::cos(mesh.theta);
    const double ang = angular_eigenvalue(cfg.d, l);
    const int pw = cfg.d - 2;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(dofs.n) * 6);
    Eigen::VectorXd mass = Eigen::VectorXd::Zero(dofs.n);

    auto edge = [&](int ia, int ja, int ib, int jb, double coef_over_w) {
        const int na = mesh.node(ia, ja), nb = mesh.node(ib, jb);
        if (dofs.cls[na] == detail::NodeClass::voided || dofs.cls[nb] == detail::NodeClass::voided)
            return;
        if (dofs.index[na] < 0 && dofs.index[nb] < 0) return;
        const double rm = 0.5 * (mesh.axis_r(ia, ja) + mesh.axis_r(ib, jb));
        if (!(rm > 0.0)) return;
        detail::add_edge(trip, dofs.index[na], dofs.index[nb], coef_over_w * detail::int_pow(rm, pw));
    };

    for (int j = 0; j <= mesh.nt; ++j)
        for (int i = 0; i <= mesh.ns; ++i) {
            if (i < mesh.ns) edge(i, j, i + 1, j, mesh.ht / mesh.hs);
            if (j < mesh.nt) edge(i, j, i, j + 1, mesh.hs / mesh.ht);
            const int dof = dofs.index[mesh.node(i, j)];
            if (dof < 0) continue;
            const double r = mesh.axis_r(i, j);
            const double w = detail::int_pow(r, pw);
            mass[dof] = w * mesh.hs * mesh.ht;
            if (ang != 0.0)
                trip.emplace_back(dof, dof, ang * w / (r * r) * mesh.hs * mesh.ht);
        }

    // delta trace along the ray grid line
    for (int i = 1; i < mesh.ns; ++i) {
        const int dof = dofs.index[mesh.node(i, mesh.j_ray)];
        if (dof < 0) continue;
        trip.emplace_back(dof, dof, -cfg.alpha * detail::int_pow(mesh.s(i) * sinth, pw) * mesh.hs);
    }
    (void)costh;

    SymmetricPencil p;
    p.n = dofs.n;
    p.A.resize(dofs.n, dofs.n);
    p.A.setFromTriplets(trip.begin(), trip.end());
    p.M = mass;
    p.meta = "fiber d=" + std::to_string(cfg.d) + " l=" + std::to_string(l);
    return p;
}

enum class FlatVariant {
    prop_gamma,   ///< potential gamma(d,l)/r^2, excludes (3,0)
    tip_excluded, ///< potential -1/(4 r^2), for domains away from the tip
};

/// Flat-metric form: unweighted 5-point stiffness, potential diagonal,
/// delta trace -alpha h_s on ray nodes, identity-scaled mass. The axis is
/// always Dirichlet here (the flat transform forces u = 0 at r = 0).
inline SymmetricPencil assemble_flat_pencil(const ConeConfig& cfg, int l, const StructuredMesh& mesh,
                                            FlatVariant variant = FlatVariant::prop_gamma) {
    cfg.validate();
    check_fiber_index(cfg.d, l);
    double potential_coef = 0.0;
    if (variant == FlatVariant::prop_gamma)
        potential_coef = gamma_coefficient(cfg.d, l); // throws excluded_fiber on (3,0)
    else
        potential_coef = -0.25;
    if (mesh.bc_axis != AxisBc::dirichlet)
        throw invalid_parameter("assemble_flat_pencil: the flat form requires a Dirichlet axis");

    const detail::DofMap dofs = detail::build_dofs(mesh);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(dofs.n) * 6);
    Eigen::VectorXd mass = Eigen::VectorXd::Zero(dofs.n);

    auto edge = [&](int ia, int ja, int ib, int jb, double coef) {
        const int na = mesh.node(ia, ja), nb = mesh.node(ib, jb);
        if (dofs.index[na] < 0 && dofs.index[nb] < 0) return;
        detail::add_edge(trip, dofs.index[na], dofs.index[nb], coef);
    };

    for (int j = 0; j <= mesh.nt; ++j)
        for (int i = 0; i <= mesh.ns; ++i) {
            if (i < mesh.ns) edge(i, j, i + 1, j, mesh.ht / mesh.hs);
            if (j < mesh.nt) edge(i, j, i, j + 1, mesh.hs / mesh.ht);
            const int dof = dofs.index[mesh.node(i, j)];
            if (dof < 0) continue;
            const double r = mesh.axis_r(i, j);
            mass[dof] = mesh.hs * mesh.ht;
            if (potential_coef != 0.0)
                trip.emplace_back(dof, dof, potential_coef / (r * r) * mesh.hs * mesh.ht);
        }

    for (int i = 1; i < mesh.ns; ++i) {
        const int dof = dofs.index[mesh.node(i, mesh.j_ray)];
        if (dof < 0) continue;
        trip.emplace_back(dof, dof, -cfg.alpha * mesh.hs);
    }

    SymmetricPencil p;
    p.n = dofs.n;
    p.A.resize(dofs.n, dofs.n);
    p.A.setFromTriplets(trip.begin(), trip.end());
    p.M = mass;
    p.meta = "flat d=" + std::to_string(cfg.d) + " l=" + std::to_string(l);
    return p;
}

/// theta-independent pieces of the reference-domain form on Omega_{pi/4}:
/// the theta-dependent form matrix is A(theta) = tan^2(theta) A_s + A_t - alpha C
/// with lumped mass M of weight (s + t).
struct ReferencePencil {
    Eigen::SparseMatrix<double> A_s, A_t, C;
    Eigen::VectorXd M;
    int n = 0;

    Eigen::SparseMatrix<double> form_matrix(double theta, double alpha) const {
        const double tn = std::tan(theta);
        Eigen::SparseMatrix<double> A = (tn * tn) * A_s + A_t;
        A -= alpha * C;
        return A;
    }
};

inline ReferencePencil assemble_reference_pencil(const ConeConfig& cfg, const StructuredMesh& mesh) {
    cfg.validate();
    if (mesh.coords != CoordKind::reference)
        throw invalid_parameter("assemble_reference_pencil: mesh must use reference coordinates");

    const detail::DofMap dofs = detail::build_dofs(mesh);
    std::vector<Eigen::Triplet<double>> ts, tt, tc;
    Eigen::VectorXd mass = Eigen::VectorXd::Zero(dofs.n);

    auto edge = [&](std::vector<Eigen::Triplet<double>>& trip, int ia, int ja, int ib, int jb, double coef_over_w) {
        const int na = mesh.node(ia, ja), nb = mesh.node(ib, jb);
        if (dofs.cls[na] == detail::NodeClass::voided || dofs.cls[nb] == detail::NodeClass::voided)
            return;
        if (dofs.index[na] < 0 && dofs.index[nb] < 0) return;
        const double wm = 0.5 * (mesh.axis_r(ia, ja) + mesh.axis_r(ib, jb));
        if (!(wm > 0.0)) return;
        detail::add_edge(trip, dofs.index[na], dofs.index[nb], coef_over_w * wm);
    };

    for (int j = 0; j <= mesh.nt; ++j)
        for (int i = 0; i <= mesh.ns; ++i) {
            if (i < mesh.ns) edge(ts, i, j, i + 1, j, mesh.ht / mesh.hs);
            if (j < mesh.nt) edge(tt, i, j, i, j + 1, mesh.hs / mesh.ht);
            const int dof = dofs.index[mesh.node(i, j)];
            if (dof < 0) continue;
            mass[dof] = mesh.axis_r(i, j) * mesh.hs * mesh.ht;
        }

    for (int i = 1; i < mesh.ns; ++i) {
        const int dof = dofs.index[mesh.node(i, mesh.j_ray)];
        if (dof < 0) continue;
        tc.emplace_back(dof, dof, mesh.s(i) * mesh.hs);
    }

    ReferencePencil rp;
    rp.n = dofs.n;
    rp.A_s.resize(dofs.n, dofs.n);
    rp.A_t.resize(dofs.n, dofs.n);
    rp.C.resize(dofs.n, dofs.n);
    rp.A_s.setFromTriplets(ts.begin(), ts.end());
    rp.A_t.setFromTriplets(tt.begin(), tt.end());
    rp.C.setFromTriplets(tc.begin(), tc.end());
    rp.M = mass;
    return rp;
}

/// One cell of the Neumann decomposition: the flat form with potential
/// -1/(4 r^2) on the box (s0,s1) x (t0,t1), natural boundary everywhere,
/// nodes with r <= r_floor removed, and the delta trace restricted to
/// s in (trace_lo, trace_hi) on the ray line (skipped when the box does
/// not contain t = 0).
struct NeumannBox {
    double s0 = 0, s1 = 1, t0 = -1, t1 = 1;
    double trace_lo = 0, trace_hi = 0; ///< empty trace when hi <= lo
    double r_floor = 0.0;              ///< domain cut r > r_floor
};

inline SymmetricPencil assemble_neumann_box_pencil(double alpha, double theta, const NeumannBox& box, double h) {
    if (!(alpha > 0.0) || !(theta > 0.0) || !(theta < pi / 2))
        throw invalid_parameter("assemble_neumann_box_pencil: bad alpha or theta");
    if (!(box.s1 > box.s0) || !(box.t1 > box.t0) || !(h > 0.0))
        throw invalid_parameter("assemble_neumann_box_pencil: degenerate box or spacing");

    const int ni = std::max(4, static_cast<int>(std::lround((box.s1 - box.s0) / h)));
    const double hs = (box.s1 - box.s0) / ni;
    // keep t = 0 on a grid line when the box straddles it
    int nj, j_ray = -1;
    double ht;
    if (box.t0 < 0.0 && box.t1 > 0.0) {
        const int below = std::max(2, static_cast<int>(std::lround(-box.t0 / h)));
        const int above = std::max(2, static_cast<int>(std::lround(box.t1 / h)));
        ht = std::max(-box.t0 / below, box.t1 / above);
        nj = static_cast<int>(std::lround((-box.t0) / ht)) + static_cast<int>(std::lround(box.t1 / ht));
        j_ray = static_cast<int>(std::lround((-box.t0) / ht));
    } else {
        nj = std::max(4, static_cast<int>(std::lround((box.t1 - box.t0) / h)));
        ht = (box.t1 - box.t0) / nj;
    }

    const double sinth = std::sin(theta), costh = std::cos(theta);
    auto s_of = [&](int i) { return box.s0 + i * hs; };
    auto t_of = [&](int j) { return box.t0 + j * ht; };
    auto r_of = [&](int i, int j) { return s_of(i) * sinth + t_of(j) * costh; };

    std::vector<int> dof(static_cast<std::size_t>((ni + 1) * (nj + 1)), -1);
    auto node = [&](int i, int j) { return j * (ni + 1) + i; };
    int n = 0;
    for (int j = 0; j <= nj; ++j)
        for (int i = 0; i <= ni; ++i)
            if (r_of(i, j) > box.r_floor) dof[static_cast<std::size_t>(node(i, j))] = n++;

    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd mass = Eigen::VectorXd::Zero(n);
    for (int j = 0; j <= nj; ++j)
        for (int i = 0; i <= ni; ++i) {
            const int a = dof[static_cast<std::size_t>(node(i, j))];
            if (a < 0) continue;
            if (i < ni) {
                const int b = dof[static_cast<std::size_t>(node(i + 1, j))];
                if (b >= 0) detail::add_edge(trip, a, b, ht / hs * ((j == 0 || j == nj) ? 0.5 : 1.0));
            }
            if (j < nj) {
                const int b = dof[static_cast<std::size_t>(node(i, j + 1))];
                if (b >= 0) detail::add_edge(trip, a, b, hs / ht * ((i == 0 || i == ni) ? 0.5 : 1.0));
            }
            const double frac = ((i == 0 || i == ni) ? 0.5 : 1.0) * ((j == 0 || j == nj) ? 0.5 : 1.0);
            const double r = r_of(i, j);
            mass[a] = hs * ht * frac;
            trip.emplace_back(a, a, -0.25 / (r * r) * hs * ht * frac);
        }

    if (j_ray >= 0 && box.trace_hi > box.trace_lo) {
        for (int i = 0; i <= ni; ++i) {
            const double s = s_of(i);
            if (s < box.trace_lo - 0.5 * hs || s > box.trace_hi + 0.5 * hs) continue;
            const int a = dof[static_cast<std::size_t>(node(i, j_ray))];
            if (a < 0) continue;
            const double frac = (i == 0 || i == ni) ? 0.5 : 1.0;
            trip.emplace_back(a, a, -alpha * hs * frac);
        }
    }

    SymmetricPencil p;
    p.n = n;
    p.A.resize(n, n);
    p.A.setFromTriplets(trip.begin(), trip.end());
    p.M = mass;
    p.meta = "neumann box";
    return p;
}

/// Plain-text sparse triplet dump (row, col, value; 17 significant digits),
/// matrix A first, then the diagonal mass.
inline void dump_pencil(const SymmetricPencil& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw numerical_failure("dump_pencil: cannot open " + path);
    char buf[96];
    out << "# matrix A n=" << p.n << "\n";
    for (int k = 0; k < p.A.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(p.A, k); it; ++it) {
            std::snprintf(buf, sizeof buf, "%ld %ld %.17g\n", static_cast<long>(it.row()),
                          static_cast<long>(it.col()), it.value());
            out << buf;
        }
    out << "# matrix M (diagonal)\n";
    for (int i = 0; i < p.n; ++i) {
        std::snprintf(buf, sizeof buf, "%d %d %.17g\n", i, i, p.M[i]);
        out << buf;
    }
}

} // namespace conespectra
