#include "tcfem/tcfem.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

using namespace tcfem;

namespace
{

RunSpec
load(const std::string& name)
{
    return parse_config_file(std::string(TCFEM_CONFIG_DIR) + "/" + name);
}

struct Case
{
    std::shared_ptr<const Mesh> mesh;
    Problem                     prob;
    std::unique_ptr<Discretization> d;

    explicit Case(const RunSpec& spec, std::size_t refinements = 0)
      : mesh(refine_times(build_mesh(spec.mesh), refinements))
      , prob(build_problem(spec, *mesh))
      , d(std::make_unique<Discretization>(mesh, prob.materials))
    {
    }
};

Vector
random_vector(Eigen::Index n, std::mt19937_64& rng, double scale)
{
    std::uniform_real_distribution<double> u(-scale, scale);
    Vector                                 v{n};
    for (Eigen::Index i = 0; i < n; ++i)
        v(i) = u(rng);
    return v;
}

} // namespace

TEST(Step, ZeroDataNeedsNoIteration)
{
    Case      s(load("zero.cfg"));
    const auto init = project_initial_data(*s.d, s.prob.initial);
    EXPECT_EQ(init.u0h.norm(), 0.0);
    const auto traj =
        run_simulation(*s.d, s.prob.materials, s.prob.data, init, TimeGrid(0.1, 5), s.prob.solver);
    ASSERT_EQ(traj.states.size(), 6u);
    for (const auto& r : traj.reports)
    {
        EXPECT_LE(r.iterations, 1u);
        EXPECT_TRUE(r.converged);
    }
    for (const auto& st : traj.states)
        EXPECT_EQ(st.w.norm() + st.theta.norm() + st.u.norm(), 0.0);
}

TEST(Step, ManufacturedStationaryStateIsKept)
{
    const auto spec = load("manufactured.cfg");
    Case      s(spec);
    const Box  box   = bounding_box(*s.mesh);
    const auto ustar = interpolate(s.d->vector(), builtin::manufactured_displacement(0.01, box).value);
    for (std::size_t N : {10u, 40u})
    {
        const auto init = project_initial_data(*s.d, s.prob.initial);
        EXPECT_LE(s.d->norms().e_vector(init.u0h - ustar), 1e-12);
        const auto traj = run_simulation(*s.d, s.prob.materials, s.prob.data, init, TimeGrid(0.5, N), s.prob.solver);
        double     worst = 0.0;
        for (const auto& st : traj.states)
            worst = std::max(worst, s.d->norms().e_vector(st.u - ustar));
        EXPECT_LE(worst, 1e-8) << "N = " << N;
    }
}

// One heat step with the mechanics switched off against a dense solve of
// independently assembled P1 matrices on a 3 x 3 node grid.
TEST(Step, HeatStepMatchesDenseOracle)
{
    auto mesh = std::make_shared<const Mesh>(generate_rect_mesh(1.0, 1.0, 2, 2, ContactSide::bottom));
    ASSERT_EQ(mesh->num_nodes(), 9u);
    MaterialSet mat;
    mat.expansion        = ExpansionTensor::isotropic(0.0);
    mat.friction_enabled = false;
    mat.heat_exchange    = HeatExchange::linear(0.0, 0.0);
    mat.conductivity     = ConductivityLaw::linear_isotropic(1.5);
    const Discretization d(mesh, mat);
    ProblemData          data;
    data.g = [](const Vec2&, double) { return 2.0; };
    SchemeState prev;
    prev.w     = Vector::Zero(Eigen::Index(d.nw()));
    prev.u     = prev.w;
    prev.theta = Vector(9);
    for (int i = 0; i < 9; ++i)
        prev.theta(i) = std::cos(0.7 * i);
    const double k = 0.05;

    Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(9, 9), stiff = Eigen::MatrixXd::Zero(9, 9);
    Eigen::VectorXd load = Eigen::VectorXd::Zero(9);
    for (const auto& tri : mesh->triangles())
    {
        Eigen::Matrix3d xy;
        for (int a = 0; a < 3; ++a)
            xy.row(a) << 1.0, mesh->point(tri.v[a]).x(), mesh->point(tri.v[a]).y();
        const double          area  = 0.5 * std::abs(xy.determinant());
        const Eigen::Matrix3d coeff = xy.inverse(); // column a: (c0, cx, cy) of lambda_a
        for (int a = 0; a < 3; ++a)
        {
            load(Eigen::Index(tri.v[a])) += 2.0 * area / 3.0;
            for (int b = 0; b < 3; ++b)
            {
                mass(Eigen::Index(tri.v[a]), Eigen::Index(tri.v[b])) += area * (a == b ? 2.0 : 1.0) / 12.0;
                stiff(Eigen::Index(tri.v[a]), Eigen::Index(tri.v[b])) +=
                    1.5 * area * coeff.block<2, 1>(1, a).dot(coeff.block<2, 1>(1, b));
            }
        }
    }
    const Eigen::VectorXd expected = (mass / k + stiff).lu().solve(mass * prev.theta / k + load);

    SolverConfig cfg;
    cfg.newton_tol = 1e-14;
    const auto [next, rep] = step(d, mat, data, prev, k, k, cfg);
    EXPECT_LE((next.theta - expected).norm(), 1e-12 * expected.norm());
    EXPECT_EQ(next.w.norm(), 0.0);
}

TEST(Step, LinearProblemConvergesInOneIteration)
{
    Case      s(load("dissipation.cfg"));
    const auto init = project_initial_data(*s.d, s.prob.initial);
    const auto traj = run_simulation(*s.d, s.prob.materials, s.prob.data, init, TimeGrid(1.0, 10), s.prob.solver);
    for (const auto& r : traj.reports)
    {
        EXPECT_EQ(r.iterations, 1u);
        EXPECT_FALSE(r.fallback);
    }
}

TEST(Step, JacobianMatchesFiniteDifferences)
{
    Case           s(load("bench.cfg"));
    std::mt19937_64 rng(3);
    SchemeState     prev;
    prev.w     = random_vector(Eigen::Index(s.d->nw()), rng, 0.5);
    prev.u     = random_vector(Eigen::Index(s.d->nw()), rng, 0.1);
    prev.theta = random_vector(Eigen::Index(s.d->ntheta()), rng, 1.0);
    const StepSystem sys(*s.d, s.prob.materials, s.prob.data, prev, 0.01, 0.1);
    const Vector     x = random_vector(Eigen::Index(sys.size()), rng, 0.5);
    const Eigen::MatrixXd j = Eigen::MatrixXd(sys.jacobian(x));
    Eigen::MatrixXd       fd(j.rows(), j.cols());
    const double          h = 1e-7;
    for (Eigen::Index c = 0; c < x.size(); ++c)
    {
        Vector xp = x, xm = x;
        xp(c) += h;
        xm(c) -= h;
        fd.col(c) = (sys.residual(xp) - sys.residual(xm)) / (2 * h);
    }
    EXPECT_LE((j - fd).norm(), 1e-5 * fd.norm());
}

TEST(Step, SingleStepRunEqualsStep)
{
    Case      s(load("bench.cfg"));
    const auto init = project_initial_data(*s.d, s.prob.initial);
    const auto traj = run_simulation(*s.d, s.prob.materials, s.prob.data, init, TimeGrid(0.05, 1), s.prob.solver);
    const auto [one, rep] = step(*s.d, s.prob.materials, s.prob.data, initial_state(init), 0.05, 0.05, s.prob.solver);
    ASSERT_EQ(traj.states.size(), 2u);
    EXPECT_EQ(traj.states[1].w, one.w);
    EXPECT_EQ(traj.states[1].theta, one.theta);
    EXPECT_EQ(traj.states[1].u, one.u);
    EXPECT_EQ(traj.reports[0].iterations, rep.iterations);
}

TEST(Step, DisplacementAccumulatesVelocities)
{
    Case      s(load("bench.cfg"));
    const auto init = project_initial_data(*s.d, s.prob.initial);
    const TimeGrid grid(0.2, 20);
    const auto traj = run_simulation(*s.d, s.prob.materials, s.prob.data, init, grid, s.prob.solver);
    Vector     sum  = Vector::Zero(Eigen::Index(s.d->nw()));
    for (std::size_t n = 1; n <= grid.steps(); ++n)
    {
        sum += traj.states[n].w;
        EXPECT_LE((traj.states[n].u - (init.u0h + grid.k() * sum)).norm(), 1e-13 * std::max(1.0, sum.norm()));
    }
    EXPECT_GT(traj.states.back().u.norm(), 0.0);
}

TEST(Step, EnergyDoesNotIncreaseWithoutSources)
{
    Case      s(load("dissipation.cfg"));
    const auto init = project_initial_data(*s.d, s.prob.initial);
    std::vector<double> e;
    run_simulation(*s.d, s.prob.materials, s.prob.data, init, TimeGrid(1.0, 100), s.prob.solver,
                   [&](const SchemeState& st, const StepReport&) { e.push_back(discrete_energy(*s.d, st)); }, false);
    ASSERT_EQ(e.size(), 101u);
    ASSERT_GT(e[0], 0.0);
    for (std::size_t n = 1; n < e.size(); ++n)
        EXPECT_LE(e[n] - e[n - 1], 1e-10 * e[0]) << "step " << n;
    EXPECT_LT(e.back(), e[0]);
}

TEST(Projection, PolynomialDataAndOrthogonality)
{
    auto mesh = std::make_shared<const Mesh>(generate_rect_mesh(1.0, 1.0, 4, 4, ContactSide::bottom));
    const Discretization d(mesh, MaterialSet::benchmark());
    InitialData          init;
    // affine field with zero normal component on the contact side: lies in the space
    init.u0.value    = [](const Vec2& x) { return Vec2(0.2 + x.x() - 0.5 * x.y(), 0.3 * x.y()); };
    init.u0.gradient = [](const Vec2&) {
        Mat2 g;
        g << 1.0, -0.5, 0.0, 0.3;
        return g;
    };
    init.u1.value = [](const Vec2& x) { return Vec2(x.x() * x.y(), 0.0); };
    init.theta0   = [](const Vec2& x) { return x.x() * x.x(); };
    const auto p  = project_initial_data(d, init);
    EXPECT_LE((p.u0h - interpolate(d.vector(), init.u0.value)).cwiseAbs().maxCoeff(), 1e-13);

    // L2 orthogonality of the temperature projection against every basis function,
    // with the right-hand side integrated independently
    const Vector mth = d.mass_v() * p.theta0h;
    for (std::size_t i = 0; i < mesh->num_nodes(); ++i)
    {
        const double rhs = integrate(*mesh, [&](std::size_t t, const ElementGeometry&, const Eigen::Vector3d& b,
                                                const Vec2& x) {
            const auto& v = mesh->triangles()[t].v;
            for (int a = 0; a < 3; ++a)
                if (v[a] == i)
                    return init.theta0(x) * b(a);
            return 0.0;
        });
        EXPECT_NEAR(mth(Eigen::Index(i)), rhs, 1e-14);
    }
    EXPECT_THROW(project_initial_data(d, InitialData{{init.u0.value, nullptr}, {}, {}}), std::invalid_argument);
}

TEST(Projection, StableInTheirNorms)
{
    auto mesh = std::make_shared<const Mesh>(generate_rect_mesh(1.0, 1.0, 8, 8, ContactSide::bottom));
    const Discretization d(mesh, MaterialSet::benchmark());
    const Box            box{Vec2(0, 0), Vec2(1, 1)};
    InitialData          init{builtin::sine_bump(1.0, box), builtin::sine_bump(1.0, box), builtin::cosine(1.0, box)};
    const auto           p  = project_initial_data(d, init);
    const double         pi = std::numbers::pi;
    // |u|_H^2 = 1/4, |eps(u)|^2 = pi^2/4 + 2 (pi^2/16), |theta|^2 = 1/2
    const double u_h = 0.5;
    const double u_e = std::sqrt(0.25 + pi * pi / 4.0 + pi * pi / 8.0);
    EXPECT_LE(d.norms().e_vector(p.u0h), u_e + 1e-10);
    EXPECT_LE(d.norms().l2_vector(p.u1h), u_h + 1e-10);
    EXPECT_LE(d.norms().l2_scalar(p.theta0h), std::sqrt(0.5) + 1e-10);
}

TEST(Step, ThreadCountDoesNotChangeResults)
{
    Case      s(load("bench.cfg"), 1);
    const auto init = project_initial_data(*s.d, s.prob.initial);
    auto       run  = [&](unsigned threads) {
        set_assembly_threads(threads);
        auto t = run_simulation(*s.d, s.prob.materials, s.prob.data, init, TimeGrid(0.1, 10), s.prob.solver);
        set_assembly_threads(1);
        return t.states.back();
    };
    const auto a = run(1), b = run(4);
    EXPECT_EQ(a.w, b.w);
    EXPECT_EQ(a.theta, b.theta);
}

TEST(Step, NonmonotoneFrictionWithoutSmallness)
{
    const auto spec = load("bench.cfg");
    for (double a : {1.0, 2.0, 5.0, 10.0})
    {
        auto sp                  = spec;
        sp.materials.friction_a  = a;
        Case           s(sp, 1);
        const auto      init = project_initial_data(*s.d, s.prob.initial);
        const std::size_t N  = coupled_steps(0.5, 0.02, s.mesh->h());
        std::size_t     worst = 0;
        run_simulation(*s.d, s.prob.materials, s.prob.data, init, TimeGrid(0.5, N), s.prob.solver,
                       [&](const SchemeState&, const StepReport& r) { worst = std::max(worst, r.iterations); }, false);
        EXPECT_LE(worst, 50u) << "a = " << a;
    }
}

TEST(Step, BenchmarkNewtonIsFast)
{
    auto spec              = load("bench.cfg");
    spec.solver.newton_tol = 1e-9;
    Case      s(spec, 1);
    const auto init = project_initial_data(*s.d, s.prob.initial);
    const auto traj = run_simulation(*s.d, s.prob.materials, s.prob.data, init, TimeGrid(0.5, 71), s.prob.solver);
    for (const auto& r : traj.reports)
    {
        EXPECT_LE(r.iterations, 25u);
        EXPECT_FALSE(r.fallback);
    }
}

TEST(Step, FailureCarriesStepAndReport)
{
    Case        s(load("bench.cfg"));
    SolverConfig cfg;
    cfg.newton_max_iter = 1;
    cfg.newton_tol      = 1e-300;
    cfg.enable_fallback = false;
    const auto init     = project_initial_data(*s.d, s.prob.initial);
    try
    {
        run_simulation(*s.d, s.prob.materials, s.prob.data, init, TimeGrid(0.5, 10), cfg);
        FAIL() << "expected a step failure";
    }
    catch (const step_failure& e)
    {
        EXPECT_EQ(e.step(), 1u);
        EXPECT_FALSE(e.report().converged);
    }
    cfg.backtrack = 1.5;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}
