#pragma once

#include "tcfem/core.hpp"
#include "tcfem/materials.hpp"
#include "tcfem/mesh.hpp"
#include "tcfem/quadrature.hpp"

#include <atomic>
#include <cmath>
#include <memory>
#include <vector>

namespace tcfem
{

using ScalarField   = std::function<double(const Vec2&, double)>;
using VectorField   = std::function<Vec2(const Vec2&, double)>;
using TractionField = std::function<Vec2(const Vec2& x, double t, const Vec2& normal)>;

namespace detail
{
inline std::atomic<unsigned>&
thread_setting()
{
    static std::atomic<unsigned> n{1};
    return n;
}
} // namespace detail

/// Threads used by element loops. Results are identical for any value.
inline void
set_assembly_threads(unsigned n)
{
    detail::thread_setting() = std::max(1u, n);
}

inline unsigned
assembly_threads()
{
    return detail::thread_setting();
}

class ScalarSpace
{
    std::shared_ptr<const Mesh> m_mesh;

  public:
    explicit ScalarSpace(std::shared_ptr<const Mesh> mesh)
      : m_mesh(std::move(mesh))
    {
        if (!m_mesh)
            throw std::invalid_argument("ScalarSpace: null mesh");
    }

    const Mesh&
    mesh() const
    {
        return *m_mesh;
    }
    const std::shared_ptr<const Mesh>&
    mesh_ptr() const
    {
        return m_mesh;
    }
    std::size_t
    ndof() const
    {
        return m_mesh->num_nodes();
    }
    std::ptrdiff_t
    dof(std::size_t node) const
    {
        return std::ptrdiff_t(node);
    }
};

/// P1 vector space with the normal component eliminated at contact nodes.
class VectorSpace
{
    std::shared_ptr<const Mesh>                m_mesh;
    std::vector<std::array<std::ptrdiff_t, 2>> m_dof;
    std::vector<int>                           m_constrained; // -1 or component index
    std::size_t                                m_ndof = 0;
    Vec2                                       m_normal = Vec2::Zero();
    bool                                       m_has_contact = false;

  public:
    static constexpr std::ptrdiff_t constrained = -1;

    explicit VectorSpace(std::shared_ptr<const Mesh> mesh)
      : m_mesh(std::move(mesh))
    {
        if (!m_mesh)
            throw std::invalid_argument("VectorSpace: null mesh");
        const Mesh& m = *m_mesh;
        for (const auto& e : m.boundary_edges())
        {
            if (e.tag != BoundaryTag::contact)
                continue;
            if (!m_has_contact)
            {
                m_normal      = e.normal;
                m_has_contact = true;
            }
            else if ((e.normal - m_normal).norm() > 1e-12)
                throw mesh_error("contact edges must share one constant outward normal");
        }
        int comp = -1;
        if (m_has_contact)
        {
            if (std::abs(m_normal.y()) <= 1e-12)
                comp = 0;
            else if (std::abs(m_normal.x()) <= 1e-12)
                comp = 1;
            else
                throw mesh_error("contact normal must be axis-aligned");
        }
        m_constrained.assign(m.num_nodes(), -1);
        for (auto n : m.contact_nodes())
            m_constrained[n] = comp;
        m_dof.resize(m.num_nodes());
        for (std::size_t n = 0; n < m.num_nodes(); ++n)
            for (int c = 0; c < 2; ++c)
                m_dof[n][c] = (m_constrained[n] == c) ? constrained : std::ptrdiff_t(m_ndof++);
    }

    const Mesh&
    mesh() const
    {
        return *m_mesh;
    }
    const std::shared_ptr<const Mesh>&
    mesh_ptr() const
    {
        return m_mesh;
    }
    std::size_t
    ndof() const
    {
        return m_ndof;
    }
    std::ptrdiff_t
    dof(std::size_t node, int comp) const
    {
        return m_dof[node][comp];
    }
    /// Constrained component of a node, or -1.
    int
    constrained_component(std::size_t node) const
    {
        return m_constrained[node];
    }
    bool
    has_contact() const
    {
        return m_has_contact;
    }
    const Vec2&
    contact_normal() const
    {
        return m_normal;
    }
    std::size_t
    num_contact_nodes() const
    {
        return std::size_t(std::count_if(m_constrained.begin(), m_constrained.end(), [](int c) { return c >= 0; }));
    }
};

struct SparseOperator
{
    SpMat matrix;
    bool  symmetric = false;
    /// Set when the operator was requested on an empty boundary part.
    bool empty_warning = false;
};

/// P1 geometry of one triangle: area and constant barycentric gradients.
struct ElementGeometry
{
    double              area = 0.0;
    std::array<Vec2, 3> grad;
    std::array<Vec2, 3> vertex;

    Vec2
    at(const Eigen::Vector3d& bary) const
    {
        return bary(0) * vertex[0] + bary(1) * vertex[1] + bary(2) * vertex[2];
    }
    Vec2
    centroid() const
    {
        return (vertex[0] + vertex[1] + vertex[2]) / 3.0;
    }
};

inline ElementGeometry
element_geometry(const Mesh& m, std::size_t t)
{
    ElementGeometry g;
    const auto&     v = m.triangles()[t].v;
    for (int k = 0; k < 3; ++k)
        g.vertex[k] = m.point(v[k]);
    const double det = (g.vertex[1] - g.vertex[0]).x() * (g.vertex[2] - g.vertex[0]).y() -
                       (g.vertex[2] - g.vertex[0]).x() * (g.vertex[1] - g.vertex[0]).y();
    if (!(std::abs(det) > 0.0) || !std::isfinite(det))
        throw mesh_error("invalid mesh: degenerate triangle " + std::to_string(t));
    g.area = 0.5 * std::abs(det);
    for (int k = 0; k < 3; ++k)
    {
        const Vec2& b = g.vertex[(k + 1) % 3];
        const Vec2& c = g.vertex[(k + 2) % 3];
        g.grad[k]     = Vec2(b.y() - c.y(), c.x() - b.x()) / det;
    }
    return g;
}

/// Strain-displacement matrix (3 x 6) acting on local dofs ordered
/// (node0.x, node0.y, node1.x, ...).
inline Eigen::Matrix<double, 3, 6>
strain_matrix(const ElementGeometry& g)
{
    Eigen::Matrix<double, 3, 6> b = Eigen::Matrix<double, 3, 6>::Zero();
    for (int a = 0; a < 3; ++a)
    {
        b(0, 2 * a)     = g.grad[a].x();
        b(1, 2 * a + 1) = g.grad[a].y();
        b(2, 2 * a)     = g.grad[a].y();
        b(2, 2 * a + 1) = g.grad[a].x();
    }
    return b;
}

namespace detail
{

using Triplets = std::vector<Eigen::Triplet<double>>;

/// Element loop producing triplets; chunks are concatenated in element order
/// so the assembled matrix is bit-identical for any thread count.
template<class Fn>
SpMat
assemble_triplets(std::size_t nelem, std::size_t rows, std::size_t cols, Fn&& local)
{
    const unsigned        threads = assembly_threads();
    std::vector<Triplets> chunks(threads);
    const std::size_t     chunk = (nelem + threads - 1) / std::max(1u, threads);
    parallel_for(nelem, threads, [&](std::size_t b, std::size_t e) {
        auto& out = chunks[chunk ? b / chunk : 0];
        for (std::size_t i = b; i < e; ++i)
            local(i, out);
    });
    Triplets all;
    for (auto& c : chunks)
        all.insert(all.end(), c.begin(), c.end());
    SpMat m{Eigen::Index(rows), Eigen::Index(cols)};
    m.setFromTriplets(all.begin(), all.end());
    return m;
}

/// Element loop producing dense local vectors scattered sequentially.
template<int N, class Fn, class Scatter>
void
assemble_vector(std::size_t nelem, Fn&& local, Scatter&& scatter)
{
    std::vector<Eigen::Matrix<double, N, 1>> buf(nelem);
    parallel_for(nelem, assembly_threads(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i)
            buf[i] = local(i);
    });
    for (std::size_t i = 0; i < nelem; ++i)
        scatter(i, buf[i]);
}

inline std::array<std::ptrdiff_t, 6>
vector_dofs(const VectorSpace& e, std::size_t t)
{
    std::array<std::ptrdiff_t, 6> d{};
    const auto&                   v = e.mesh().triangles()[t].v;
    for (int a = 0; a < 3; ++a)
        for (int c = 0; c < 2; ++c)
            d[2 * a + c] = e.dof(v[a], c);
    return d;
}

inline void
check_symmetric(const SpMat& m, const char* what)
{
    const SpMat  diff = m - SpMat(m.transpose());
    double       dmax = 0.0, mmax = 0.0;
    for (int k = 0; k < diff.outerSize(); ++k)
        for (SpMat::InnerIterator it(diff, k); it; ++it)
            dmax = std::max(dmax, std::abs(it.value()));
    for (int k = 0; k < m.outerSize(); ++k)
        for (SpMat::InnerIterator it(m, k); it; ++it)
            mmax = std::max(mmax, std::abs(it.value()));
    if (dmax > 1e-14 * mmax)
        throw std::logic_error(std::string(what) + ": assembled operator is not symmetric");
}

template<int N>
void
scatter_matrix(Triplets& out, const std::array<std::ptrdiff_t, N>& dofs, const Eigen::Matrix<double, N, N>& k)
{
    for (int i = 0; i < N; ++i)
    {
        if (dofs[i] < 0)
            continue;
        for (int j = 0; j < N; ++j)
            if (dofs[j] >= 0)
                out.emplace_back(dofs[i], dofs[j], k(i, j));
    }
}

inline std::array<std::ptrdiff_t, 3>
scalar_dofs(const Mesh& m, std::size_t t)
{
    const auto& v = m.triangles()[t].v;
    return {std::ptrdiff_t(v[0]), std::ptrdiff_t(v[1]), std::ptrdiff_t(v[2])};
}

inline Eigen::Matrix3d
p1_mass(double area)
{
    Eigen::Matrix3d m;
    m << 2, 1, 1, 1, 2, 1, 1, 1, 2;
    return m * (area / 12.0);
}

} // namespace detail

inline SparseOperator
assemble_mass_scalar(const ScalarSpace& s)
{
    const Mesh& m = s.mesh();
    SpMat mat = detail::assemble_triplets(m.num_triangles(), s.ndof(), s.ndof(), [&](std::size_t t, auto& out) {
        const auto g = element_geometry(m, t);
        detail::scatter_matrix<3>(out, detail::scalar_dofs(m, t), detail::p1_mass(g.area));
    });
    detail::check_symmetric(mat, "scalar mass");
    return {std::move(mat), true, false};
}

inline SparseOperator
assemble_mass_vector(const VectorSpace& e)
{
    const Mesh& m = e.mesh();
    SpMat mat = detail::assemble_triplets(m.num_triangles(), e.ndof(), e.ndof(), [&](std::size_t t, auto& out) {
        const auto                  g  = element_geometry(m, t);
        const Eigen::Matrix3d       ms = detail::p1_mass(g.area);
        Eigen::Matrix<double, 6, 6> k  = Eigen::Matrix<double, 6, 6>::Zero();
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                for (int c = 0; c < 2; ++c)
                    k(2 * a + c, 2 * b + c) = ms(a, b);
        detail::scatter_matrix<6>(out, detail::vector_dofs(e, t), k);
    });
    detail::check_symmetric(mat, "vector mass");
    return {std::move(mat), true, false};
}

/// Stiffness for the bilinear form (D eps(u), eps(v)) with a constant Voigt
/// matrix D.
inline SparseOperator
assemble_strain_energy(const VectorSpace& e, const VoigtTangent& d)
{
    const Mesh& m = e.mesh();
    SpMat mat = detail::assemble_triplets(m.num_triangles(), e.ndof(), e.ndof(), [&](std::size_t t, auto& out) {
        const auto                        g = element_geometry(m, t);
        const Eigen::Matrix<double, 3, 6> b = strain_matrix(g);
        const Eigen::Matrix<double, 6, 6> k = g.area * b.transpose() * d * b;
        detail::scatter_matrix<6>(out, detail::vector_dofs(e, t), k);
    });
    const bool sym = (d - d.transpose()).cwiseAbs().maxCoeff() == 0.0;
    if (sym)
    {
        // element matrices are symmetric only up to rounding of the triple product
        mat = 0.5 * (mat + SpMat(mat.transpose()));
        detail::check_symmetric(mat, "strain energy");
    }
    return {std::move(mat), sym, false};
}

inline SparseOperator
assemble_elasticity(const VectorSpace& e, const ElasticTensor& b)
{
    return assemble_strain_energy(e, b.voigt());
}

/// Voigt matrix of the identity fourth-order tensor: D e . e = eps : eps.
inline VoigtTangent
identity_voigt()
{
    return Eigen::Vector3d(1.0, 1.0, 0.5).asDiagonal();
}

/// Gram matrix of the E inner product (u,v)_H + (eps(u), eps(v))_Q.
inline SparseOperator
assemble_e_gram(const VectorSpace& e)
{
    SparseOperator m = assemble_mass_vector(e);
    SparseOperator k = assemble_strain_energy(e, identity_voigt());
    return {m.matrix + k.matrix, true, false};
}

/// Componentwise gradient Gram matrix sum_i (grad u_i, grad v_i).
inline SparseOperator
assemble_vector_laplacian(const VectorSpace& e)
{
    const Mesh& m = e.mesh();
    SpMat mat = detail::assemble_triplets(m.num_triangles(), e.ndof(), e.ndof(), [&](std::size_t t, auto& out) {
        const auto                  g = element_geometry(m, t);
        Eigen::Matrix<double, 6, 6> k = Eigen::Matrix<double, 6, 6>::Zero();
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                for (int c = 0; c < 2; ++c)
                    k(2 * a + c, 2 * b + c) = g.area * g.grad[a].dot(g.grad[b]);
        detail::scatter_matrix<6>(out, detail::vector_dofs(e, t), k);
    });
    return {std::move(mat), true, false};
}

inline Mat2
strain(const VectorSpace& e, const Vector& v, std::size_t t)
{
    if (std::size_t(v.size()) != e.ndof())
        throw std::invalid_argument("strain: coefficient vector does not match the space");
    const auto                  g    = element_geometry(e.mesh(), t);
    const auto                  dofs = detail::vector_dofs(e, t);
    Eigen::Matrix<double, 6, 1> loc;
    for (int i = 0; i < 6; ++i)
        loc(i) = dofs[i] >= 0 ? v(dofs[i]) : 0.0;
    return from_voigt_strain(strain_matrix(g) * loc);
}

struct CouplingOperators
{
    SparseOperator c1; ///< vector rows, scalar columns
    SparseOperator c3; ///< scalar rows, vector columns; exactly -c1^T
};

inline CouplingOperators
assemble_coupling(const VectorSpace& e, const ScalarSpace& s, const ExpansionTensor& c)
{
    const Mesh& m = e.mesh();
    if (&m != &s.mesh())
        throw std::invalid_argument("assemble_coupling: spaces live on different meshes");
    detail::Triplets t1, t3;
    for (std::size_t t = 0; t < m.num_triangles(); ++t)
    {
        const auto g    = element_geometry(m, t);
        const auto vd   = detail::vector_dofs(e, t);
        const auto sd   = detail::scalar_dofs(m, t);
        for (int b = 0; b < 3; ++b)
        {
            const Vec2 cg = c.matrix() * g.grad[b]; // c_ij d_j lambda_b
            for (int i = 0; i < 2; ++i)
            {
                const auto row = vd[2 * b + i];
                if (row < 0)
                    continue;
                for (int a = 0; a < 3; ++a)
                {
                    const double val = g.area / 3.0 * cg(i);
                    t1.emplace_back(row, sd[a], val);
                    t3.emplace_back(sd[a], row, -val);
                }
            }
        }
    }
    SpMat c1(Eigen::Index(e.ndof()), Eigen::Index(s.ndof()));
    SpMat c3(Eigen::Index(s.ndof()), Eigen::Index(e.ndof()));
    c1.setFromTriplets(t1.begin(), t1.end());
    c3.setFromTriplets(t3.begin(), t3.end());
    return {{std::move(c1), false, false}, {std::move(c3), false, false}};
}

/// Standard P1 stiffness (grad theta, grad eta).
inline SparseOperator
assemble_stiffness_scalar(const ScalarSpace& s)
{
    const Mesh& m = s.mesh();
    SpMat mat = detail::assemble_triplets(m.num_triangles(), s.ndof(), s.ndof(), [&](std::size_t t, auto& out) {
        const auto      g = element_geometry(m, t);
        Eigen::Matrix3d k;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                k(a, b) = g.area * g.grad[a].dot(g.grad[b]);
        detail::scatter_matrix<3>(out, detail::scalar_dofs(m, t), k);
    });
    detail::check_symmetric(mat, "scalar stiffness");
    return {std::move(mat), true, false};
}

inline Vec2
element_gradient(const ElementGeometry& g, const Mesh& m, std::size_t t, const Vector& theta)
{
    const auto& v = m.triangles()[t].v;
    return theta(v[0]) * g.grad[0] + theta(v[1]) * g.grad[1] + theta(v[2]) * g.grad[2];
}

/// Matrix of a conductivity law linearized at zero gradient; for a linear
/// law this is the exact diffusion operator.
inline SparseOperator
assemble_diffusion(const ScalarSpace& s, const ConductivityLaw& k, double time)
{
    const Mesh& m = s.mesh();
    SpMat mat = detail::assemble_triplets(m.num_triangles(), s.ndof(), s.ndof(), [&](std::size_t t, auto& out) {
        const auto      g  = element_geometry(m, t);
        const Mat2      kt = k.tangent(time, g.centroid(), Vec2::Zero());
        Eigen::Matrix3d loc;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                loc(a, b) = g.area * g.grad[a].dot(kt * g.grad[b]);
        detail::scatter_matrix<3>(out, detail::scalar_dofs(m, t), loc);
    });
    return {std::move(mat), false, false};
}

/// Residual <C2(t, theta), eta_i> with the law evaluated at the elementwise
/// constant gradient.
inline Vector
apply_diffusion(const ScalarSpace& s, const ConductivityLaw& k, double time, const Vector& theta)
{
    const Mesh& m = s.mesh();
    if (std::size_t(theta.size()) != s.ndof())
        throw std::invalid_argument("apply_diffusion: size mismatch");
    Vector r = Vector::Zero(Eigen::Index(s.ndof()));
    detail::assemble_vector<3>(
        m.num_triangles(),
        [&](std::size_t t) {
            const auto g = element_geometry(m, t);
            const Vec2 q = k.flux(time, g.centroid(), element_gradient(g, m, t, theta));
            if (!q.allFinite())
                throw material_error("conductivity law returned a non-finite flux");
            Eigen::Vector3d loc;
            for (int a = 0; a < 3; ++a)
                loc(a) = g.area * q.dot(g.grad[a]);
            return loc;
        },
        [&](std::size_t t, const Eigen::Vector3d& loc) {
            const auto& v = m.triangles()[t].v;
            for (int a = 0; a < 3; ++a)
                r(v[a]) += loc(a);
        });
    return r;
}

inline SparseOperator
diffusion_jacobian(const ScalarSpace& s, const ConductivityLaw& k, double time, const Vector& theta)
{
    const Mesh& m = s.mesh();
    SpMat mat = detail::assemble_triplets(m.num_triangles(), s.ndof(), s.ndof(), [&](std::size_t t, auto& out) {
        const auto      g  = element_geometry(m, t);
        const Mat2      kt = k.tangent(time, g.centroid(), element_gradient(g, m, t, theta));
        Eigen::Matrix3d loc;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                loc(a, b) = g.area * g.grad[a].dot(kt * g.grad[b]);
        detail::scatter_matrix<3>(out, detail::scalar_dofs(m, t), loc);
    });
    return {std::move(mat), false, false};
}

inline Eigen::Matrix<double, 6, 1>
local_vector_values(const VectorSpace& e, std::size_t t, const Vector& w)
{
    const auto                  dofs = detail::vector_dofs(e, t);
    Eigen::Matrix<double, 6, 1> loc;
    for (int i = 0; i < 6; ++i)
        loc(i) = dofs[i] >= 0 ? w(dofs[i]) : 0.0;
    return loc;
}

/// Residual <A(t, w), v_i> evaluated at the constant element strain.
inline Vector
apply_viscosity(const VectorSpace& e, const ViscosityLaw& a, double time, const Vector& w)
{
    const Mesh& m = e.mesh();
    if (std::size_t(w.size()) != e.ndof())
        throw std::invalid_argument("apply_viscosity: size mismatch");
    Vector r = Vector::Zero(Eigen::Index(e.ndof()));
    detail::assemble_vector<6>(
        m.num_triangles(),
        [&](std::size_t t) {
            const auto  g = element_geometry(m, t);
            const auto  b = strain_matrix(g);
            const Voigt s = a.stress(time, g.centroid(), b * local_vector_values(e, t, w));
            if (!s.allFinite())
                throw material_error("viscosity law returned a non-finite stress");
            return Eigen::Matrix<double, 6, 1>(g.area * b.transpose() * s);
        },
        [&](std::size_t t, const Eigen::Matrix<double, 6, 1>& loc) {
            const auto dofs = detail::vector_dofs(e, t);
            for (int i = 0; i < 6; ++i)
                if (dofs[i] >= 0)
                    r(dofs[i]) += loc(i);
        });
    return r;
}

inline SparseOperator
viscosity_jacobian(const VectorSpace& e, const ViscosityLaw& a, double time, const Vector& w)
{
    const Mesh& m = e.mesh();
    SpMat mat = detail::assemble_triplets(m.num_triangles(), e.ndof(), e.ndof(), [&](std::size_t t, auto& out) {
        const auto                        g = element_geometry(m, t);
        const auto                        b = strain_matrix(g);
        const VoigtTangent                d = a.tangent(time, g.centroid(), b * local_vector_values(e, t, w));
        const Eigen::Matrix<double, 6, 6> k = g.area * b.transpose() * d * b;
        detail::scatter_matrix<6>(out, detail::vector_dofs(e, t), k);
    });
    return {std::move(mat), false, false};
}

// ---------------------------------------------------------------------------
// Boundary terms

inline bool
has_tag(const Mesh& m, BoundaryTag tag)
{
    return std::any_of(m.boundary_edges().begin(), m.boundary_edges().end(),
                       [tag](const BoundaryEdge& e) { return e.tag == tag; });
}

/// 1D P1 mass on the edges with the given tag (all edges if tag is empty).
inline SparseOperator
assemble_boundary_mass(const ScalarSpace& s, std::optional<BoundaryTag> tag)
{
    const Mesh&      m = s.mesh();
    detail::Triplets trip;
    bool             any = false;
    for (const auto& e : m.boundary_edges())
    {
        if (tag && e.tag != *tag)
            continue;
        any             = true;
        const double len = m.edge_length(e);
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                trip.emplace_back(e.v[a], e.v[b], len / 6.0 * (a == b ? 2.0 : 1.0));
    }
    SpMat mat(Eigen::Index(s.ndof()), Eigen::Index(s.ndof()));
    mat.setFromTriplets(trip.begin(), trip.end());
    return {std::move(mat), true, !any};
}

inline SparseOperator
assemble_boundary_mass(const VectorSpace& sp, std::optional<BoundaryTag> tag)
{
    const Mesh&      m = sp.mesh();
    detail::Triplets trip;
    bool             any = false;
    for (const auto& e : m.boundary_edges())
    {
        if (tag && e.tag != *tag)
            continue;
        any             = true;
        const double len = m.edge_length(e);
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                for (int c = 0; c < 2; ++c)
                {
                    const auto i = sp.dof(e.v[a], c), j = sp.dof(e.v[b], c);
                    if (i >= 0 && j >= 0)
                        trip.emplace_back(i, j, len / 6.0 * (a == b ? 2.0 : 1.0));
                }
    }
    SpMat mat(Eigen::Index(sp.ndof()), Eigen::Index(sp.ndof()));
    mat.setFromTriplets(trip.begin(), trip.end());
    return {std::move(mat), true, !any};
}

/// Nodal values (N x 2) of a vector dof vector, constrained components zero.
inline Eigen::MatrixX2d
to_nodal(const VectorSpace& e, const Vector& v)
{
    if (std::size_t(v.size()) != e.ndof())
        throw std::invalid_argument("to_nodal: size mismatch");
    Eigen::MatrixX2d out = Eigen::MatrixX2d::Zero(Eigen::Index(e.mesh().num_nodes()), 2);
    for (std::size_t n = 0; n < e.mesh().num_nodes(); ++n)
        for (int c = 0; c < 2; ++c)
            if (const auto d = e.dof(n, c); d >= 0)
                out(Eigen::Index(n), c) = v(d);
    return out;
}

inline Vector
from_nodal(const VectorSpace& e, const Eigen::MatrixX2d& nodal)
{
    Vector v(Eigen::Index(e.ndof()));
    for (std::size_t n = 0; n < e.mesh().num_nodes(); ++n)
        for (int c = 0; c < 2; ++c)
            if (const auto d = e.dof(n, c); d >= 0)
                v(d) = nodal(Eigen::Index(n), c);
    return v;
}

struct FrictionTerms
{
    Vector residual; ///< int_{Gamma_C} xi(w_tau) . v_tau
    SpMat  jacobian;
};

/// Regularized friction boundary term and its derivative, 3-point Gauss per
/// contact edge.
inline FrictionTerms
assemble_friction(const VectorSpace& e, const FrictionPotential& p, const Vector& w, bool with_jacobian = true)
{
    const Mesh&      m      = e.mesh();
    const Vec2       nu     = e.contact_normal();
    const Mat2       proj   = Mat2::Identity() - nu * nu.transpose();
    const auto&      rule   = edge_rule_3();
    FrictionTerms    out{Vector::Zero(Eigen::Index(e.ndof())), SpMat(Eigen::Index(e.ndof()), Eigen::Index(e.ndof()))};
    detail::Triplets trip;
    for (const auto& edge : m.boundary_edges())
    {
        if (edge.tag != BoundaryTag::contact)
            continue;
        const double                  len = m.edge_length(edge);
        std::array<std::ptrdiff_t, 4> dofs{};
        Eigen::Matrix<double, 4, 1>   loc_w;
        for (int a = 0; a < 2; ++a)
            for (int c = 0; c < 2; ++c)
            {
                dofs[2 * a + c]  = e.dof(edge.v[a], c);
                loc_w(2 * a + c) = dofs[2 * a + c] >= 0 ? w(dofs[2 * a + c]) : 0.0;
            }
        Eigen::Matrix<double, 4, 1> r = Eigen::Matrix<double, 4, 1>::Zero();
        Eigen::Matrix4d             k = Eigen::Matrix4d::Zero();
        for (std::size_t q = 0; q < rule.points.size(); ++q)
        {
            const double                s = rule.points[q];
            const double                phi[2] = {1.0 - s, s};
            Eigen::Matrix<double, 2, 4> n = Eigen::Matrix<double, 2, 4>::Zero();
            for (int a = 0; a < 2; ++a)
                n.block<2, 2>(0, 2 * a) = phi[a] * proj;
            const Vec2   wt  = n * loc_w;
            const double wq  = rule.weights[q] * len;
            r += wq * n.transpose() * friction_traction(p, wt);
            if (with_jacobian)
                k += wq * n.transpose() * friction_traction_derivative(p, wt) * n;
        }
        for (int i = 0; i < 4; ++i)
        {
            if (dofs[i] < 0)
                continue;
            out.residual(dofs[i]) += r(i);
            if (with_jacobian)
                for (int j = 0; j < 4; ++j)
                    if (dofs[j] >= 0)
                        trip.emplace_back(dofs[i], dofs[j], k(i, j));
        }
    }
    if (with_jacobian)
        out.jacobian.setFromTriplets(trip.begin(), trip.end());
    return out;
}

struct HeatSourceTerms
{
    Vector residual; ///< int_{Gamma_C} h(|w_tau|) eta
    SpMat  jacobian; ///< d residual / d w (scalar rows, vector columns)
};

inline HeatSourceTerms
assemble_frictional_heat(const VectorSpace& e, const ScalarSpace& s, const FrictionalHeat& h, const Vector& w,
                         bool with_jacobian = true)
{
    const Mesh&      m    = e.mesh();
    const Vec2       nu   = e.contact_normal();
    const Mat2       proj = Mat2::Identity() - nu * nu.transpose();
    const auto&      rule = edge_rule_3();
    HeatSourceTerms  out{Vector::Zero(Eigen::Index(s.ndof())), SpMat(Eigen::Index(s.ndof()), Eigen::Index(e.ndof()))};
    detail::Triplets trip;
    for (const auto& edge : m.boundary_edges())
    {
        if (edge.tag != BoundaryTag::contact)
            continue;
        const double                  len = m.edge_length(edge);
        std::array<std::ptrdiff_t, 4> dofs{};
        Eigen::Matrix<double, 4, 1>   loc_w;
        for (int a = 0; a < 2; ++a)
            for (int c = 0; c < 2; ++c)
            {
                dofs[2 * a + c]  = e.dof(edge.v[a], c);
                loc_w(2 * a + c) = dofs[2 * a + c] >= 0 ? w(dofs[2 * a + c]) : 0.0;
            }
        Eigen::Vector2d             r = Eigen::Vector2d::Zero();
        Eigen::Matrix<double, 2, 4> k = Eigen::Matrix<double, 2, 4>::Zero();
        for (std::size_t q = 0; q < rule.points.size(); ++q)
        {
            const double                sq     = rule.points[q];
            const Eigen::Vector2d       phi(1.0 - sq, sq);
            Eigen::Matrix<double, 2, 4> n = Eigen::Matrix<double, 2, 4>::Zero();
            for (int a = 0; a < 2; ++a)
                n.block<2, 2>(0, 2 * a) = phi(a) * proj;
            const Vec2   wt  = n * loc_w;
            const double mag = wt.norm();
            const double wq  = rule.weights[q] * len;
            r += wq * h(mag) * phi;
            if (with_jacobian && mag > 0.0)
                k += wq * h.derivative(mag) * phi * (wt / mag).transpose() * n;
        }
        for (int a = 0; a < 2; ++a)
        {
            out.residual(Eigen::Index(edge.v[a])) += r(a);
            if (with_jacobian)
                for (int j = 0; j < 4; ++j)
                    if (dofs[j] >= 0)
                        trip.emplace_back(edge.v[a], dofs[j], k(a, j));
        }
    }
    if (with_jacobian)
        out.jacobian.setFromTriplets(trip.begin(), trip.end());
    return out;
}

struct ExchangeTerms
{
    Vector residual; ///< int_Gamma r(theta) eta
    SpMat  jacobian;
};

/// Heat exchange over the whole boundary, 3-point Gauss per edge.
inline ExchangeTerms
assemble_heat_exchange(const ScalarSpace& s, const HeatExchange& r, const Vector& theta, bool with_jacobian = true)
{
    const Mesh&      m    = s.mesh();
    const auto&      rule = edge_rule_3();
    ExchangeTerms    out{Vector::Zero(Eigen::Index(s.ndof())), SpMat(Eigen::Index(s.ndof()), Eigen::Index(s.ndof()))};
    detail::Triplets trip;
    for (const auto& edge : m.boundary_edges())
    {
        const double    len = m.edge_length(edge);
        const double    t0 = theta(Eigen::Index(edge.v[0])), t1 = theta(Eigen::Index(edge.v[1]));
        Eigen::Vector2d res = Eigen::Vector2d::Zero();
        Eigen::Matrix2d k   = Eigen::Matrix2d::Zero();
        for (std::size_t q = 0; q < rule.points.size(); ++q)
        {
            const double          sq = rule.points[q];
            const Eigen::Vector2d phi(1.0 - sq, sq);
            const double          th = phi(0) * t0 + phi(1) * t1;
            const double          wq = rule.weights[q] * len;
            res += wq * r(th) * phi;
            if (with_jacobian)
                k += wq * r.derivative(th) * phi * phi.transpose();
        }
        for (int a = 0; a < 2; ++a)
        {
            out.residual(Eigen::Index(edge.v[a])) += res(a);
            if (with_jacobian)
                for (int b = 0; b < 2; ++b)
                    trip.emplace_back(edge.v[a], edge.v[b], k(a, b));
        }
    }
    if (with_jacobian)
        out.jacobian.setFromTriplets(trip.begin(), trip.end());
    return out;
}

// ---------------------------------------------------------------------------
// Data terms

/// <f0, v>_H (3-point interior rule) + <f2, v>_{L2(Gamma_N)} (2-point Gauss).
inline Vector
assemble_load(const VectorSpace& e, const VectorField& f0, const TractionField& f2, double time)
{
    const Mesh& m = e.mesh();
    Vector      f = Vector::Zero(Eigen::Index(e.ndof()));
    if (f0)
    {
        const auto& rule = triangle_rule_3();
        for (std::size_t t = 0; t < m.num_triangles(); ++t)
        {
            const auto g    = element_geometry(m, t);
            const auto dofs = detail::vector_dofs(e, t);
            for (std::size_t q = 0; q < rule.points.size(); ++q)
            {
                const Vec2 val = f0(g.at(rule.points[q]), time);
                for (int a = 0; a < 3; ++a)
                    for (int c = 0; c < 2; ++c)
                        if (dofs[2 * a + c] >= 0)
                            f(dofs[2 * a + c]) += g.area * rule.weights[q] * val(c) * rule.points[q](a);
            }
        }
    }
    if (f2)
    {
        const auto& rule = edge_rule_2();
        for (const auto& edge : m.boundary_edges())
        {
            if (edge.tag != BoundaryTag::neumann)
                continue;
            const double len = m.edge_length(edge);
            const Vec2   p0 = m.point(edge.v[0]), p1 = m.point(edge.v[1]);
            for (std::size_t q = 0; q < rule.points.size(); ++q)
            {
                const double s   = rule.points[q];
                const Vec2   val = f2((1.0 - s) * p0 + s * p1, time, edge.normal);
                const double phi[2] = {1.0 - s, s};
                for (int a = 0; a < 2; ++a)
                    for (int c = 0; c < 2; ++c)
                        if (const auto d = e.dof(edge.v[a], c); d >= 0)
                            f(d) += len * rule.weights[q] * val(c) * phi[a];
            }
        }
    }
    return f;
}

/// <g, eta>_{L2} with the 3-point interior rule.
inline Vector
assemble_heat_source(const ScalarSpace& s, const ScalarField& g, double time)
{
    const Mesh& m = s.mesh();
    Vector      out = Vector::Zero(Eigen::Index(s.ndof()));
    if (!g)
        return out;
    const auto& rule = triangle_rule_3();
    for (std::size_t t = 0; t < m.num_triangles(); ++t)
    {
        const auto  geo = element_geometry(m, t);
        const auto& v   = m.triangles()[t].v;
        for (std::size_t q = 0; q < rule.points.size(); ++q)
        {
            const double val = g(geo.at(rule.points[q]), time);
            for (int a = 0; a < 3; ++a)
                out(Eigen::Index(v[a])) += geo.area * rule.weights[q] * val * rule.points[q](a);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Interpolation and prolongation

inline Vector
interpolate(const ScalarSpace& s, const std::function<double(const Vec2&)>& field)
{
    Vector v(Eigen::Index(s.ndof()));
    for (std::size_t n = 0; n < s.mesh().num_nodes(); ++n)
        v(Eigen::Index(n)) = field(s.mesh().point(n));
    return v;
}

/// Nodal interpolant; constrained (normal) components are dropped.
inline Vector
interpolate(const VectorSpace& e, const std::function<Vec2(const Vec2&)>& field)
{
    Eigen::MatrixX2d nodal(Eigen::Index(e.mesh().num_nodes()), 2);
    for (std::size_t n = 0; n < e.mesh().num_nodes(); ++n)
        nodal.row(Eigen::Index(n)) = field(e.mesh().point(n)).transpose();
    return from_nodal(e, nodal);
}

namespace detail
{

/// Chain of meshes from `fine` up to and including `coarse`.
inline std::vector<const Mesh*>
refinement_chain(const Mesh& coarse, const Mesh& fine)
{
    std::vector<const Mesh*> chain{&fine};
    while (chain.back() != &coarse)
    {
        const auto& p = chain.back()->parent();
        if (!p)
            throw std::invalid_argument("prolongate: fine mesh is not a nested refinement of the coarse mesh");
        chain.push_back(p.get());
    }
    return chain;
}

template<class Nodal>
Nodal
prolongate_nodal(const Mesh& coarse, const Mesh& fine, Nodal values)
{
    const auto chain = refinement_chain(coarse, fine);
    for (std::size_t i = chain.size() - 1; i > 0; --i)
    {
        const Mesh& child = *chain[i - 1];
        Nodal       next(Eigen::Index(child.num_nodes()), values.cols());
        for (std::size_t n = 0; n < child.num_nodes(); ++n)
        {
            const auto [a, b] = child.node_parents()[n];
            next.row(Eigen::Index(n)) =
                a == b ? values.row(Eigen::Index(a)).eval()
                       : (0.5 * (values.row(Eigen::Index(a)) + values.row(Eigen::Index(b)))).eval();
        }
        values = std::move(next);
    }
    return values;
}

} // namespace detail

/// Exact prolongation of a P1 function to a nested refinement (any depth).
inline Vector
prolongate(const ScalarSpace& coarse, const Vector& v, const ScalarSpace& fine)
{
    if (std::size_t(v.size()) != coarse.ndof())
        throw std::invalid_argument("prolongate: coefficient vector does not match the coarse space");
    Eigen::MatrixXd nodal = v;
    return detail::prolongate_nodal(coarse.mesh(), fine.mesh(), nodal).col(0);
}

inline Vector
prolongate(const VectorSpace& coarse, const Vector& v, const VectorSpace& fine)
{
    Eigen::MatrixXd nodal = to_nodal(coarse, v);
    return from_nodal(fine, detail::prolongate_nodal(coarse.mesh(), fine.mesh(), nodal));
}

// ---------------------------------------------------------------------------
// Norms

struct FunctionNorms
{
    double H         = 0.0; ///< L2 norm
    double E         = 0.0; ///< E norm (vectors); equals V for scalars
    double V         = 0.0; ///< full H1 norm
    double L2_GammaC = 0.0;
};

inline double
quadratic_form(const SpMat& m, const Vector& v)
{
    return v.dot(m * v);
}

/// Gram matrices for repeated norm evaluation on one mesh.
class NormContext
{
    SpMat m_mass_s, m_stiff_s, m_bmass_s;
    SpMat m_mass_v, m_egram, m_lap_v, m_bmass_v;

  public:
    NormContext(const ScalarSpace& s, const VectorSpace& e)
      : m_mass_s(assemble_mass_scalar(s).matrix)
      , m_stiff_s(assemble_stiffness_scalar(s).matrix)
      , m_bmass_s(assemble_boundary_mass(s, BoundaryTag::contact).matrix)
      , m_mass_v(assemble_mass_vector(e).matrix)
      , m_egram(assemble_e_gram(e).matrix)
      , m_lap_v(assemble_vector_laplacian(e).matrix)
      , m_bmass_v(assemble_boundary_mass(e, BoundaryTag::contact).matrix)
    {
    }

    double
    l2_scalar(const Vector& v) const
    {
        return std::sqrt(std::max(0.0, quadratic_form(m_mass_s, v)));
    }
    double
    h1_scalar(const Vector& v) const
    {
        return std::sqrt(std::max(0.0, quadratic_form(m_mass_s, v) + quadratic_form(m_stiff_s, v)));
    }
    double
    l2_vector(const Vector& v) const
    {
        return std::sqrt(std::max(0.0, quadratic_form(m_mass_v, v)));
    }
    double
    e_vector(const Vector& v) const
    {
        return std::sqrt(std::max(0.0, quadratic_form(m_egram, v)));
    }

    FunctionNorms
    scalar(const Vector& v) const
    {
        FunctionNorms n;
        n.H = l2_scalar(v);
        n.V = n.E = h1_scalar(v);
        n.L2_GammaC = std::sqrt(std::max(0.0, quadratic_form(m_bmass_s, v)));
        return n;
    }

    FunctionNorms
    vector(const Vector& v) const
    {
        FunctionNorms n;
        n.H         = l2_vector(v);
        n.E         = e_vector(v);
        n.V         = std::sqrt(std::max(0.0, quadratic_form(m_mass_v, v) + quadratic_form(m_lap_v, v)));
        n.L2_GammaC = std::sqrt(std::max(0.0, quadratic_form(m_bmass_v, v)));
        return n;
    }

    const SpMat&
    scalar_mass() const
    {
        return m_mass_s;
    }
    const SpMat&
    vector_mass() const
    {
        return m_mass_v;
    }
    const SpMat&
    e_gram() const
    {
        return m_egram;
    }
    const SpMat&
    scalar_stiffness() const
    {
        return m_stiff_s;
    }
};

inline FunctionNorms
norms(const ScalarSpace& s, const Vector& v)
{
    if (std::size_t(v.size()) != s.ndof())
        throw std::invalid_argument("norms: size mismatch");
    FunctionNorms n;
    const double  l2 = quadratic_form(assemble_mass_scalar(s).matrix, v);
    const double  k  = quadratic_form(assemble_stiffness_scalar(s).matrix, v);
    n.H              = std::sqrt(std::max(0.0, l2));
    n.V = n.E   = std::sqrt(std::max(0.0, l2 + k));
    n.L2_GammaC = std::sqrt(std::max(0.0, quadratic_form(assemble_boundary_mass(s, BoundaryTag::contact).matrix, v)));
    return n;
}

inline FunctionNorms
norms(const VectorSpace& e, const Vector& v)
{
    if (std::size_t(v.size()) != e.ndof())
        throw std::invalid_argument("norms: size mismatch");
    FunctionNorms n;
    const double  l2 = quadratic_form(assemble_mass_vector(e).matrix, v);
    n.H              = std::sqrt(std::max(0.0, l2));
    n.E = std::sqrt(std::max(0.0, l2 + quadratic_form(assemble_strain_energy(e, identity_voigt()).matrix, v)));
    n.V = std::sqrt(std::max(0.0, l2 + quadratic_form(assemble_vector_laplacian(e).matrix, v)));
    n.L2_GammaC = std::sqrt(std::max(0.0, quadratic_form(assemble_boundary_mass(e, BoundaryTag::contact).matrix, v)));
    return n;
}

/// Integral over the mesh domain with the high-order triangle rule.
inline double
integrate(const Mesh& m, const std::function<double(std::size_t, const ElementGeometry&, const Eigen::Vector3d&,
                                                    const Vec2&)>& f)
{
    const auto& rule = triangle_rule_high();
    double      sum  = 0.0;
    for (std::size_t t = 0; t < m.num_triangles(); ++t)
    {
        const auto g = element_geometry(m, t);
        double     s = 0.0;
        for (std::size_t q = 0; q < rule.points.size(); ++q)
            s += rule.weights[q] * f(t, g, rule.points[q], g.at(rule.points[q]));
        sum += g.area * s;
    }
    return sum;
}

/// ||v - v_h||_{L2} for a scalar field.
inline double
l2_error(const ScalarSpace& s, const Vector& vh, const std::function<double(const Vec2&)>& exact)
{
    const Mesh& m = s.mesh();
    return std::sqrt(integrate(m, [&](std::size_t t, const ElementGeometry&, const Eigen::Vector3d& b, const Vec2& x) {
        const auto& v  = m.triangles()[t].v;
        const double d = exact(x) - (b(0) * vh(v[0]) + b(1) * vh(v[1]) + b(2) * vh(v[2]));
        return d * d;
    }));
}

/// |v - v_h|_{H1} for a scalar field with known gradient.
inline double
h1_seminorm_error(const ScalarSpace& s, const Vector& vh, const std::function<Vec2(const Vec2&)>& exact_grad)
{
    const Mesh& m = s.mesh();
    return std::sqrt(integrate(m, [&](std::size_t t, const ElementGeometry& g, const Eigen::Vector3d&, const Vec2& x) {
        return (exact_grad(x) - element_gradient(g, m, t, vh)).squaredNorm();
    }));
}

} // namespace tcfem
