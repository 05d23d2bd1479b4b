#pragma once

#include "tcfem/fem.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>
#include <optional>
#include <sstream>

namespace tcfem
{

class TimeGrid
{
    double      m_T = 1.0;
    std::size_t m_N = 1;

  public:
    TimeGrid(double final_time, std::size_t steps)
      : m_T(final_time)
      , m_N(steps)
    {
        if (!(final_time > 0.0) || steps == 0)
            throw std::invalid_argument("time grid needs T > 0 and N >= 1");
    }

    double
    final_time() const
    {
        return m_T;
    }
    std::size_t
    steps() const
    {
        return m_N;
    }
    double
    k() const
    {
        return m_T / double(m_N);
    }
    double
    t(std::size_t n) const
    {
        return double(n) * k();
    }
};

struct SchemeState
{
    std::size_t n = 0;
    Vector      w;     ///< velocity, E^h dofs
    Vector      theta; ///< temperature, V^h dofs
    Vector      u;     ///< accumulated displacement, E^h dofs
};

struct SolverConfig
{
    double      newton_tol      = 1e-10;
    std::size_t newton_max_iter = 50;
    double      backtrack       = 0.5;
    double      min_damping     = 1e-4;
    /// Damping below which a full step is taken instead, at most
    /// watchdog_steps times per solve.
    double      watchdog_threshold = 1e-2;
    std::size_t watchdog_steps     = 5;
    std::size_t fp_max_sweeps   = 200;
    double      fp_tol          = 1e-10;
    double      fp_relaxation   = 0.7;
    bool        enable_fallback = true;

    void
    validate() const
    {
        if (!(newton_tol > 0.0) || !(fp_tol > 0.0) || !(min_damping > 0.0) || !(backtrack > 0.0 && backtrack < 1.0) ||
            !(fp_relaxation > 0.0 && fp_relaxation <= 1.0) || newton_max_iter == 0)
            throw std::invalid_argument("invalid solver configuration");
    }
};

struct StepReport
{
    std::size_t iterations        = 0; ///< Newton updates, including those inside fallback sweeps
    double      residual          = 0.0;
    double      relative_residual = 0.0;
    double      damping           = 1.0; ///< smallest damping factor accepted
    bool        fallback          = false;
    std::size_t fallback_sweeps   = 0;
    bool        converged         = false;
};

class step_failure : public std::runtime_error
{
    std::size_t m_step;
    StepReport  m_report;

  public:
    step_failure(std::size_t step, const StepReport& rep, const std::string& what)
      : std::runtime_error(what)
      , m_step(step)
      , m_report(rep)
    {
    }
    std::size_t
    step() const
    {
        return m_step;
    }
    const StepReport&
    report() const
    {
        return m_report;
    }
};

/// Volume force, Neumann traction and heat source.
struct ProblemData
{
    VectorField   f0;
    TractionField f2;
    ScalarField   g;
};

struct InitialVectorField
{
    std::function<Vec2(const Vec2&)> value;
    /// grad(i, j) = d u_i / d x_j; only needed for the E projection.
    std::function<Mat2(const Vec2&)> gradient;
};

using InitialScalarField = std::function<double(const Vec2&)>;

struct InitialData
{
    InitialVectorField u0;
    InitialVectorField u1;
    InitialScalarField theta0;
};

/// Spaces and state-independent operators on one mesh.
class Discretization
{
    std::shared_ptr<const Mesh> m_mesh;
    ScalarSpace                 m_scalar;
    VectorSpace                 m_vector;
    NormContext                 m_norms;
    SpMat                       m_mass_e, m_mass_v, m_elastic, m_c1, m_c3;
    std::optional<SpMat>        m_visc_lin, m_diff_lin;

  public:
    Discretization(std::shared_ptr<const Mesh> mesh, const MaterialSet& mat)
      : m_mesh(std::move(mesh))
      , m_scalar(m_mesh)
      , m_vector(m_mesh)
      , m_norms(m_scalar, m_vector)
      , m_mass_e(m_norms.vector_mass())
      , m_mass_v(m_norms.scalar_mass())
      , m_elastic(assemble_elasticity(m_vector, mat.elastic).matrix)
    {
        auto c = assemble_coupling(m_vector, m_scalar, mat.expansion);
        m_c1   = std::move(c.c1.matrix);
        m_c3   = std::move(c.c3.matrix);
        if (mat.viscosity.is_linear())
            m_visc_lin = viscosity_jacobian(m_vector, mat.viscosity, 0.0, Vector::Zero(Eigen::Index(m_vector.ndof())))
                             .matrix;
        if (mat.conductivity.is_linear())
            m_diff_lin = assemble_diffusion(m_scalar, mat.conductivity, 0.0).matrix;
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
    const ScalarSpace&
    scalar() const
    {
        return m_scalar;
    }
    const VectorSpace&
    vector() const
    {
        return m_vector;
    }
    const NormContext&
    norms() const
    {
        return m_norms;
    }
    const SpMat&
    mass_e() const
    {
        return m_mass_e;
    }
    const SpMat&
    mass_v() const
    {
        return m_mass_v;
    }
    const SpMat&
    elasticity() const
    {
        return m_elastic;
    }
    const SpMat&
    c1() const
    {
        return m_c1;
    }
    const SpMat&
    c3() const
    {
        return m_c3;
    }
    const std::optional<SpMat>&
    linear_viscosity() const
    {
        return m_visc_lin;
    }
    const std::optional<SpMat>&
    linear_diffusion() const
    {
        return m_diff_lin;
    }
    std::size_t
    nw() const
    {
        return m_vector.ndof();
    }
    std::size_t
    ntheta() const
    {
        return m_scalar.ndof();
    }
};

struct InitialProjection
{
    Vector u0h, u1h, theta0h;
};

/// Gram-system projections of the initial data: E-orthogonal for u0,
/// H-orthogonal for u1, L2-orthogonal for theta0. Right-hand sides use the
/// 7-point rule, so orthogonality holds for the quadrature inner product.
inline InitialProjection
project_initial_data(const Discretization& d, const InitialData& init)
{
    const Mesh& m    = d.mesh();
    const auto& rule = triangle_rule_7();
    const auto& E    = d.vector();
    Vector      rhs_u0 = Vector::Zero(Eigen::Index(d.nw()));
    Vector      rhs_u1 = Vector::Zero(Eigen::Index(d.nw()));
    Vector      rhs_th = Vector::Zero(Eigen::Index(d.ntheta()));
    const auto  did    = identity_voigt();
    for (std::size_t t = 0; t < m.num_triangles(); ++t)
    {
        const auto g    = element_geometry(m, t);
        const auto bmat = strain_matrix(g);
        const auto dofs = detail::vector_dofs(E, t);
        const auto& v   = m.triangles()[t].v;
        for (std::size_t q = 0; q < rule.points.size(); ++q)
        {
            const auto&  bary = rule.points[q];
            const Vec2   x    = g.at(bary);
            const double wq   = g.area * rule.weights[q];
            const Vec2   u0   = init.u0.value ? init.u0.value(x) : Vec2::Zero();
            const Vec2   u1   = init.u1.value ? init.u1.value(x) : Vec2::Zero();
            Voigt        e0   = Voigt::Zero();
            if (init.u0.value)
            {
                if (!init.u0.gradient)
                    throw std::invalid_argument("project_initial_data: u0 needs a gradient for the E projection");
                const Mat2 gr = init.u0.gradient(x);
                e0            = to_voigt_strain(0.5 * (gr + gr.transpose()));
            }
            const Eigen::Matrix<double, 6, 1> strain_part = bmat.transpose() * (did * e0);
            for (int a = 0; a < 3; ++a)
            {
                for (int c = 0; c < 2; ++c)
                {
                    const auto dof = dofs[2 * a + c];
                    if (dof < 0)
                        continue;
                    rhs_u0(dof) += wq * (u0(c) * bary(a) + strain_part(2 * a + c));
                    rhs_u1(dof) += wq * u1(c) * bary(a);
                }
                if (init.theta0)
                    rhs_th(Eigen::Index(v[a])) += wq * init.theta0(x) * bary(a);
            }
        }
    }
    auto solve = [](const SpMat& gram, const Vector& rhs) {
        Eigen::SimplicialLDLT<SpMat> ldlt(gram);
        if (ldlt.info() != Eigen::Success)
            throw std::logic_error("project_initial_data: Gram matrix is not SPD");
        return Vector(ldlt.solve(rhs));
    };
    return {solve(d.norms().e_gram(), rhs_u0), solve(d.mass_e(), rhs_u1), solve(d.mass_v(), rhs_th)};
}

inline SchemeState
initial_state(const InitialProjection& p)
{
    return {0, p.u1h, p.theta0h, p.u0h};
}

namespace detail
{

/// Stacks a 2x2 block operator into one sparse matrix.
inline SpMat
stack_blocks(const SpMat& a, const SpMat& b, const SpMat& c, const SpMat& d)
{
    const Eigen::Index n1 = a.rows(), n2 = d.rows();
    Triplets           t;
    t.reserve(std::size_t(a.nonZeros() + b.nonZeros() + c.nonZeros() + d.nonZeros()));
    auto put = [&](const SpMat& m, Eigen::Index r0, Eigen::Index c0) {
        for (int k = 0; k < m.outerSize(); ++k)
            for (SpMat::InnerIterator it(m, k); it; ++it)
                t.emplace_back(it.row() + r0, it.col() + c0, it.value());
    };
    put(a, 0, 0);
    put(b, 0, n1);
    put(c, n1, 0);
    put(d, n1, n1);
    SpMat out(n1 + n2, n1 + n2);
    out.setFromTriplets(t.begin(), t.end());
    return out;
}

} // namespace detail

/// Sparse LU that re-runs the symbolic analysis only when the pattern changes.
class StepLinearSolver
{
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> m_lu;
    Eigen::Index                                       m_nnz  = -1;
    Eigen::Index                                       m_rows = -1;

  public:
    bool
    solve(const SpMat& a, const Vector& b, Vector& x)
    {
        if (a.nonZeros() != m_nnz || a.rows() != m_rows)
        {
            m_lu.analyzePattern(a);
            m_nnz  = a.nonZeros();
            m_rows = a.rows();
        }
        m_lu.factorize(a);
        if (m_lu.info() != Eigen::Success)
        {
            m_nnz = -1;
            return false;
        }
        x = m_lu.solve(b);
        return m_lu.info() == Eigen::Success && x.allFinite();
    }
};

struct NewtonResult
{
    Vector     x;
    StepReport report;
};

/// Optional correction of a Newton direction before the line search.
using StepLimiter = std::function<void(const Vector& x, Vector& dx)>;

/// Damped Newton with backtracking on the residual norm. Stops at
/// |R| <= tol * scale; reports failure (converged == false) on stagnation,
/// a singular jacobian or the iteration limit.
template<class ResidualFn, class JacobianFn>
NewtonResult
solve_coupled_newton(ResidualFn&& residual, JacobianFn&& jacobian, Vector x, double scale, const SolverConfig& cfg,
                     StepLinearSolver& lin, const StepLimiter& limit = {})
{
    NewtonResult out;
    std::size_t  nonmonotone = 0;
    Vector       r   = residual(x);
    double       nr  = r.norm();
    const double tol = cfg.newton_tol * scale;
    for (;;)
    {
        if (nr <= tol)
        {
            out.report.converged = true;
            break;
        }
        if (out.report.iterations >= cfg.newton_max_iter || !std::isfinite(nr))
            break;
        const SpMat j = jacobian(x);
        Vector      dx;
        if (!lin.solve(j, -r, dx))
            break;
        if (limit)
            limit(x, dx);
        ++out.report.iterations;
        double alpha = 1.0;
        Vector xt, rt, x_full, r_full;
        double nt = 0.0, n_full = 0.0;
        for (;;)
        {
            xt = x + alpha * dx;
            rt = residual(xt);
            nt = rt.norm();
            if (alpha == 1.0)
            {
                x_full = xt;
                r_full = rt;
                n_full = nt;
            }
            if (nt <= (1.0 - 1e-4 * alpha) * nr || alpha <= cfg.min_damping)
                break;
            alpha = std::max(alpha * cfg.backtrack, cfg.min_damping);
        }
        // Watchdog: the residual norm has spurious local minima where
        // quadrature points cross the kinks of the regularized law. When
        // backtracking collapses there, take the full semismooth step a
        // limited number of times.
        if (alpha < cfg.watchdog_threshold && nonmonotone < cfg.watchdog_steps && std::isfinite(n_full))
        {
            ++nonmonotone;
            alpha = 1.0;
            xt    = std::move(x_full);
            rt    = std::move(r_full);
            nt    = n_full;
        }
        else if (!(nt < nr) && nt > tol)
            break; // stagnation
        out.report.damping = std::min(out.report.damping, alpha);
        x                  = std::move(xt);
        r                  = std::move(rt);
        nr                 = nt;
    }
    out.report.residual          = nr;
    out.report.relative_residual = scale > 0.0 ? nr / scale : 0.0;
    out.x                        = std::move(x);
    return out;
}

/// Coupled residual and jacobian of one time step for the unknowns
/// x = [w_n; theta_n].
class StepSystem
{
    const Discretization& m_d;
    const MaterialSet&    m_mat;
    double                m_k, m_t;
    Vector                m_w_prev, m_theta_prev;
    Vector                m_rhs_w, m_rhs_theta; ///< state-independent parts
    std::vector<Eigen::Index> m_tangential; ///< tangential velocity dofs on the contact boundary

  public:
    StepSystem(const Discretization& d, const MaterialSet& mat, const ProblemData& data, const SchemeState& prev,
               double k, double t)
      : m_d(d)
      , m_mat(mat)
      , m_k(k)
      , m_t(t)
      , m_w_prev(prev.w)
      , m_theta_prev(prev.theta)
    {
        const Vector f = assemble_load(d.vector(), data.f0, data.f2, t);
        const Vector g = assemble_heat_source(d.scalar(), data.g, t);
        m_rhs_w        = d.mass_e() * prev.w / k - d.elasticity() * prev.u + f;
        m_rhs_theta    = d.mass_v() * prev.theta / k + g;
        const auto& E  = d.vector();
        if (mat.friction_enabled && E.has_contact())
            for (std::size_t n = 0; n < d.mesh().num_nodes(); ++n)
                if (const int c = E.constrained_component(n); c >= 0)
                    m_tangential.push_back(E.dof(n, 1 - c));
    }

    /// The regularized friction traction jumps across w_tau = 0 within a
    /// band of width rho. A full Newton step that flips the sign of a
    /// slipping tangential velocity is cut back to land on zero, where the
    /// stick linearization takes over; otherwise iterates cycle between the
    /// two slip branches.
    void
    limit_step(const Vector& x, Vector& dx) const
    {
        const double rho = m_mat.friction.rho_reg();
        for (const auto i : m_tangential)
        {
            const double w = x(i), wn = w + dx(i);
            if (std::abs(w) > rho && w * wn < 0.0)
                dx(i) = -w;
        }
    }

    std::size_t
    nw() const
    {
        return m_d.nw();
    }
    std::size_t
    size() const
    {
        return m_d.nw() + m_d.ntheta();
    }

    Vector
    initial_guess() const
    {
        Vector x{Eigen::Index(size())};
        x << m_w_prev, m_theta_prev;
        return x;
    }

    /// Size of the known data in the residual; the relative tolerance refers
    /// to it.
    double
    data_scale() const
    {
        return std::sqrt(m_rhs_w.squaredNorm() + m_rhs_theta.squaredNorm());
    }

    Vector
    residual_w(const Vector& w, const Vector& theta) const
    {
        Vector r = m_d.mass_e() * w / m_k + m_d.elasticity() * (m_k * w) + m_d.c1() * theta - m_rhs_w;
        if (m_d.linear_viscosity())
            r += *m_d.linear_viscosity() * w;
        else
            r += apply_viscosity(m_d.vector(), m_mat.viscosity, m_t, w);
        if (m_mat.friction_enabled && m_d.vector().has_contact())
            r -= assemble_friction(m_d.vector(), m_mat.friction, w, false).residual;
        return r;
    }

    Vector
    residual_theta(const Vector& w, const Vector& theta) const
    {
        Vector r = m_d.mass_v() * theta / m_k + m_d.c3() * w - m_rhs_theta;
        if (m_d.linear_diffusion())
            r += *m_d.linear_diffusion() * theta;
        else
            r += apply_diffusion(m_d.scalar(), m_mat.conductivity, m_t, theta);
        r -= assemble_heat_exchange(m_d.scalar(), m_mat.heat_exchange, theta, false).residual;
        if (m_mat.friction_enabled && m_d.vector().has_contact())
            r -= assemble_frictional_heat(m_d.vector(), m_d.scalar(), m_mat.frictional_heat, w, false).residual;
        return r;
    }

    Vector
    residual(const Vector& x) const
    {
        const auto n = Eigen::Index(nw());
        const auto w = x.head(n), th = x.tail(x.size() - n);
        Vector     r(x.size());
        r << residual_w(w, th), residual_theta(w, th);
        return r;
    }

    SpMat
    jacobian_ww(const Vector& w) const
    {
        SpMat j = m_d.mass_e() / m_k + m_k * m_d.elasticity();
        j += m_d.linear_viscosity() ? *m_d.linear_viscosity()
                                    : viscosity_jacobian(m_d.vector(), m_mat.viscosity, m_t, w).matrix;
        if (m_mat.friction_enabled && m_d.vector().has_contact())
            j -= assemble_friction(m_d.vector(), m_mat.friction, w).jacobian;
        return j;
    }

    SpMat
    jacobian_thth(const Vector& theta) const
    {
        SpMat j = m_d.mass_v() / m_k;
        j += m_d.linear_diffusion() ? *m_d.linear_diffusion()
                                    : diffusion_jacobian(m_d.scalar(), m_mat.conductivity, m_t, theta).matrix;
        j -= assemble_heat_exchange(m_d.scalar(), m_mat.heat_exchange, theta).jacobian;
        return j;
    }

    SpMat
    jacobian_thw(const Vector& w) const
    {
        SpMat j = m_d.c3();
        if (m_mat.friction_enabled && m_d.vector().has_contact())
            j -= assemble_frictional_heat(m_d.vector(), m_d.scalar(), m_mat.frictional_heat, w).jacobian;
        return j;
    }

    SpMat
    jacobian(const Vector& x) const
    {
        const auto n = Eigen::Index(nw());
        const Vector w = x.head(n), th = x.tail(x.size() - n);
        return detail::stack_blocks(jacobian_ww(w), m_d.c1(), jacobian_thw(w), jacobian_thth(th));
    }
};

/// One step of the fully discrete scheme: monolithic damped Newton, then a
/// relaxed Gauss-Seidel fixed point (mechanics with frozen temperature, heat
/// with frozen velocity) if Newton fails.
inline std::pair<SchemeState, StepReport>
step(const Discretization& d, const MaterialSet& mat, const ProblemData& data, const SchemeState& prev, double k,
     double t_n, const SolverConfig& cfg, StepLinearSolver& lin)
{
    cfg.validate();
    const StepSystem sys(d, mat, data, prev, k, t_n);
    const Vector     x0    = sys.initial_guess();
    const double     scale = sys.data_scale() + sys.residual(x0).norm();

    StepReport rep;
    Vector     x = x0;
    if (scale == 0.0)
    {
        rep.converged = true;
    }
    else
    {
        auto res = solve_coupled_newton([&](const Vector& v) { return sys.residual(v); },
                                        [&](const Vector& v) { return sys.jacobian(v); }, x0, scale, cfg, lin,
                                        [&](const Vector& v, Vector& dv) { sys.limit_step(v, dv); });
        rep = res.report;
        x   = std::move(res.x);
        if (!rep.converged && cfg.enable_fallback)
        {
            rep.fallback = true;
            Vector           w = prev.w, th = prev.theta;
            StepLinearSolver lin_w, lin_t;
            double           nr = 0.0;
            for (std::size_t sweep = 0; sweep < cfg.fp_max_sweeps; ++sweep)
            {
                rep.fallback_sweeps = sweep + 1;
                auto mech = solve_coupled_newton([&](const Vector& v) { return sys.residual_w(v, th); },
                                                 [&](const Vector& v) { return sys.jacobian_ww(v); }, w, scale,
                                                 cfg, lin_w,
                                                 [&](const Vector& v, Vector& dv) { sys.limit_step(v, dv); });
                rep.iterations += mech.report.iterations;
                const Vector w_new = cfg.fp_relaxation * mech.x + (1.0 - cfg.fp_relaxation) * w;
                auto heat = solve_coupled_newton([&](const Vector& v) { return sys.residual_theta(w_new, v); },
                                                 [&](const Vector& v) { return sys.jacobian_thth(v); }, th, scale,
                                                 cfg, lin_t);
                rep.iterations += heat.report.iterations;
                const Vector th_new = cfg.fp_relaxation * heat.x + (1.0 - cfg.fp_relaxation) * th;
                const double incr   = std::sqrt((w_new - w).squaredNorm() + (th_new - th).squaredNorm());
                w                   = w_new;
                th                  = th_new;
                x << w, th;
                nr = sys.residual(x).norm();
                if (nr <= cfg.newton_tol * scale)
                {
                    rep.converged = true;
                    break;
                }
                if (incr <= cfg.fp_tol * std::max(1.0, x.norm()))
                    break;
            }
            rep.residual          = nr;
            rep.relative_residual = nr / scale;
        }
    }
    if (!rep.converged)
    {
        std::ostringstream os;
        os << "step " << prev.n + 1 << " failed: residual " << rep.residual << " (relative " << rep.relative_residual
           << ") after " << rep.iterations << " iterations" << (rep.fallback ? " including fallback" : "");
        throw step_failure(prev.n + 1, rep, os.str());
    }
    const auto  n = Eigen::Index(d.nw());
    SchemeState next;
    next.n     = prev.n + 1;
    next.w     = x.head(n);
    next.theta = x.tail(x.size() - n);
    next.u     = prev.u + k * next.w;
    return {std::move(next), rep};
}

inline std::pair<SchemeState, StepReport>
step(const Discretization& d, const MaterialSet& mat, const ProblemData& data, const SchemeState& prev, double k,
     double t_n, const SolverConfig& cfg)
{
    StepLinearSolver lin;
    return step(d, mat, data, prev, k, t_n, cfg, lin);
}

struct Trajectory
{
    std::vector<SchemeState> states; ///< states 0..N when stored
    std::vector<StepReport>  reports;
};

using StepObserver = std::function<void(const SchemeState&, const StepReport&)>;

/// Full time loop from the projected initial data. The observer sees every
/// state including n = 0 (with an empty report).
inline Trajectory
run_simulation(const Discretization& d, const MaterialSet& mat, const ProblemData& data,
               const InitialProjection& init, const TimeGrid& grid, const SolverConfig& cfg,
               const StepObserver& observer = {}, bool store_states = true)
{
    Trajectory       traj;
    SchemeState      state = initial_state(init);
    StepLinearSolver lin;
    if (observer)
        observer(state, StepReport{0, 0.0, 0.0, 1.0, false, 0, true});
    if (store_states)
        traj.states.push_back(state);
    for (std::size_t n = 1; n <= grid.steps(); ++n)
    {
        auto [next, rep] = step(d, mat, data, state, grid.k(), grid.t(n), cfg, lin);
        state            = std::move(next);
        if (observer)
            observer(state, rep);
        traj.reports.push_back(rep);
        if (store_states)
            traj.states.push_back(state);
    }
    if (!store_states)
        traj.states.push_back(std::move(state));
    return traj;
}

/// 1/2 |w|_H^2 + 1/2 <B u, u> + 1/2 |theta|_{L2}^2.
inline double
discrete_energy(const Discretization& d, const SchemeState& s)
{
    return 0.5 * (quadratic_form(d.mass_e(), s.w) + quadratic_form(d.elasticity(), s.u) +
                  quadratic_form(d.mass_v(), s.theta));
}

} // namespace tcfem
