// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include "tcfem/tcfem.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <numbers>
#include <random>

using namespace tcfem;

namespace
{

const double pi = std::numbers::pi;

struct Verdict
{
    bool        pass = false;
    std::string detail;
};

RunSpec
load(const std::string& name)
{
    return parse_config_file(std::string(TCFEM_CONFIG_DIR) + "/" + name);
}

std::shared_ptr<const Mesh>
unit_square(std::size_t n)
{
    return std::make_shared<const Mesh>(generate_rect_mesh(1.0, 1.0, n, n, ContactSide::bottom));
}

std::string
fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

Vector
random_vector(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0)
{
    std::uniform_real_distribution<double> u(-scale, scale);
    Vector                                 v{n};
    for (Eigen::Index i = 0; i < n; ++i)
        v(i) = u(rng);
    return v;
}

Verdict
adjointness()
{
    const auto        mesh = refine_times(unit_square(2), 3);
    const VectorSpace e(mesh);
    const ScalarSpace s(mesh);
    Mat2              general;
    general << 0.7, -0.3, -0.3, 1.1;
    std::mt19937_64 rng(2024);
    double          worst = 0.0;
    for (const auto& c : {ExpansionTensor::isotropic(0.5), ExpansionTensor(general)})
    {
        const auto ops = assemble_coupling(e, s, c);
        for (int i = 0; i < 100; ++i)
        {
            const Vector w   = random_vector(Eigen::Index(e.ndof()), rng);
            const Vector eta = random_vector(Eigen::Index(s.ndof()), rng);
            const double sum = w.dot(ops.c1.matrix * eta) + eta.dot(ops.c3.matrix * w);
            worst            = std::max(worst, std::abs(sum) / (w.norm() * eta.norm()));
        }
    }
    return {worst <= 1e-13, fmt("max |<C1 eta,w> + <C3 w,eta>| / (|w||eta|) = %.3e (tol 1e-13)", worst)};
}

Verdict
interpolation_rates()
{
    const auto exact = [](const Vec2& x) { return std::sin(pi * x.x()) * std::sin(pi * x.y()); };
    const auto grad  = [](const Vec2& x) {
        return Vec2(pi * std::cos(pi * x.x()) * std::sin(pi * x.y()), pi * std::sin(pi * x.x()) * std::cos(pi * x.y()));
    };
    auto                mesh = unit_square(4);
    std::vector<double> l2, h1;
    for (int level = 0; level < 4; ++level)
    {
        const ScalarSpace s(mesh);
        const Vector      v = interpolate(s, exact);
        l2.push_back(l2_error(s, v, exact));
        h1.push_back(h1_seminorm_error(s, v, grad));
        mesh = refine_uniform(mesh);
    }
    bool        ok = true;
    std::string rates;
    for (std::size_t l = 0; l + 1 < l2.size(); ++l)
    {
        const double rl = std::log2(l2[l] / l2[l + 1]), rh = std::log2(h1[l] / h1[l + 1]);
        ok              = ok && rl >= 1.8 && rl <= 2.2 && rh >= 0.8 && rh <= 1.2;
        rates += fmt(" %.3f/%.3f", rl, rh);
    }
    return {ok, "L2/H1 rates" + rates + " (ranges [1.8,2.2] / [0.8,1.2])"};
}

std::string
rate_list(const EOCReport& eoc, std::size_t q)
{
    std::string s;
    for (const auto& r : eoc.rates)
        s += fmt(" %.3f", r[q]);
    return s;
}

Verdict
scheme_convergence()
{
    StudyOptions opt;
    opt.log        = &std::cerr;
    const auto res = convergence_study(load("bench.cfg"), 3, opt);
    write_error_csv(std::cerr, res.table, res.eoc);
    return {res.eoc.pass, "rates errU" + rate_list(res.eoc, 0) + ", errW" + rate_list(res.eoc, 1) + ", errTheta" +
                              rate_list(res.eoc, 2) + fmt("; min over last two pairs %.3f (>= 0.8)", res.eoc.min_rate)};
}

Verdict
time_rate()
{
    StudyOptions opt;
    opt.log        = &std::cerr;
    // finest measured mesh of the three-level study
    const auto res = time_study(load("bench.cfg"), 2, {25, 50, 100, 200}, 400, opt);
    write_error_csv(std::cerr, res.table, res.eoc);
    bool ok = !res.eoc.rates.empty();
    for (const auto& r : res.eoc.rates)
        ok = ok && r[1] >= 0.7 && r[1] <= 1.3;
    return {ok, "errW rates" + rate_list(res.eoc, 1) + " (range [0.7,1.3])"};
}

Verdict
energy_dissipation()
{
    const auto           spec = load("dissipation.cfg");
    const auto           mesh = build_mesh(spec.mesh);
    const auto           prob = build_problem(spec, *mesh);
    const Discretization d(mesh, prob.materials);
    std::vector<double>  e;
    run_simulation(d, prob.materials, prob.data, project_initial_data(d, prob.initial),
                   TimeGrid(spec.time.final_time, spec.time.steps), prob.solver,
                   [&](const SchemeState& s, const StepReport&) { e.push_back(discrete_energy(d, s)); }, false);
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 1; n < e.size(); ++n)
        worst = std::max(worst, e[n] - e[n - 1]);
    return {e[0] > 0.0 && worst <= 1e-10 * e[0],
            fmt("E_0 = %.6e, max E_n - E_{n-1} = %.3e (tol 1e-10 E_0), E_N = %.6e", e[0], worst, e.back())};
}

Verdict
projection_stability()
{
    const auto           mesh = unit_square(8);
    const Discretization d(mesh, MaterialSet::benchmark());
    const Box            box{Vec2(0.0, 0.0), Vec2(1.0, 1.0)};
    const InitialData    init{builtin::sine_bump(1.0, box), builtin::sine_bump(1.0, box), builtin::cosine(1.0, box)};
    const auto           p = project_initial_data(d, init);
    // continuous norms with the high-order rule
    auto cont = [&](const std::function<double(const Vec2&)>& f) {
        return std::sqrt(integrate(*mesh, [&](std::size_t, const ElementGeometry&, const Eigen::Vector3d&,
                                              const Vec2& x) { return f(x); }));
    };
    const double u0_e = cont([&](const Vec2& x) {
        const Mat2 g = init.u0.gradient(x);
        const Mat2 e = 0.5 * (g + g.transpose());
        return init.u0.value(x).squaredNorm() + (e.array() * e.array()).sum();
    });
    const double u1_h = cont([&](const Vec2& x) { return init.u1.value(x).squaredNorm(); });
    const double th_l = cont([&](const Vec2& x) { return std::pow(init.theta0(x), 2); });
    const double a = d.norms().e_vector(p.u0h), b = d.norms().l2_vector(p.u1h), c = d.norms().l2_scalar(p.theta0h);
    return {a <= u0_e + 1e-10 && b <= u1_h + 1e-10 && c <= th_l + 1e-10,
            fmt("|u0h|_E %.9f <= %.9f, |u1h|_H %.9f <= %.9f", a, u0_e, b, u1_h) +
                fmt(", |theta0h| %.9f <= %.9f", c, th_l)};
}

Verdict
robustness()
{
    const auto  base = load("bench.cfg");
    bool        ok   = true;
    std::string detail;
    for (double a : {1.0, 2.0, 5.0, 10.0})
    {
        auto spec                 = base;
        spec.materials.friction_a = a;
        const auto level0         = build_mesh(spec.mesh);
        const auto mesh           = refine_times(level0, 2);
        const auto prob           = build_problem(spec, *mesh);
        const Discretization d(mesh, prob.materials);
        // k of the finest measured level, unchanged across a
        const TimeGrid grid(spec.time.final_time, coupled_steps(spec.time.final_time, spec.time.coupling, level0->h()) * 4);
        std::size_t    worst = 0, fallbacks = 0;
        try
        {
            run_simulation(d, prob.materials, prob.data, project_initial_data(d, prob.initial), grid, prob.solver,
                           [&](const SchemeState& s, const StepReport& r) {
                               if (s.n == 0)
                                   return;
                               worst = std::max(worst, r.iterations);
                               fallbacks += r.fallback;
                           },
                           false);
            ok = ok && worst <= 50;
            detail += fmt(" a=%g: max %g iterations, %g fallbacks;", a, double(worst), double(fallbacks));
        }
        catch (const step_failure& e)
        {
            ok = false;
            detail += fmt(" a=%g: failed at step %g;", a, double(e.step()));
        }
    }
    return {ok, detail.substr(1) + " (limit 50)"};
}

Verdict
manufactured()
{
    const auto           spec  = load("manufactured.cfg");
    const auto           mesh  = build_mesh(spec.mesh);
    const auto           prob  = build_problem(spec, *mesh);
    const Discretization d(mesh, prob.materials);
    const double         e     = spec.data.displacement0.param(0);
    const Vector         ustar = interpolate(d.vector(), builtin::manufactured_displacement(e, bounding_box(*mesh)).value);
    double               worst[2] = {0.0, 0.0};
    int                  i        = 0;
    for (std::size_t N : {10u, 40u})
    {
        run_simulation(d, prob.materials, prob.data, project_initial_data(d, prob.initial),
                       TimeGrid(spec.time.final_time, N), prob.solver,
                       [&](const SchemeState& s, const StepReport&) {
                           worst[i] = std::max(worst[i], d.norms().e_vector(s.u - ustar));
                       },
                       false);
        ++i;
    }
    return {worst[0] <= 1e-8 && worst[1] <= 1e-8,
            fmt("max |u_n - u*|_E = %.3e (N=10), %.3e (N=40) (tol 1e-8)", worst[0], worst[1])};
}

double
heat_oracle()
{
    auto mesh = unit_square(2); // 9 nodes
    MaterialSet mat;
    mat.expansion        = ExpansionTensor::isotropic(0.0);
    mat.friction_enabled = false;
    mat.heat_exchange    = HeatExchange::linear(0.5, 0.2);
    mat.conductivity     = ConductivityLaw::linear_isotropic(1.5);
    const Discretization d(mesh, mat);
    ProblemData          data;
    data.g = [](const Vec2&, double) { return 2.0; };
    SchemeState prev;
    prev.w = prev.u = Vector::Zero(Eigen::Index(d.nw()));
    prev.theta      = Vector(9);
    for (int i = 0; i < 9; ++i)
        prev.theta(i) = std::cos(0.7 * i);
    const double k = 0.05;

    // dense P1 matrices from the vertex coordinates
    Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(9, 9), stiff = mass, bmass = mass;
    Eigen::VectorXd load = Eigen::VectorXd::Zero(9);
    for (const auto& tri : mesh->triangles())
    {
        Eigen::Matrix3d xy;
        for (int a = 0; a < 3; ++a)
            xy.row(a) << 1.0, mesh->point(tri.v[a]).x(), mesh->point(tri.v[a]).y();
        const double          area  = 0.5 * std::abs(xy.determinant());
        const Eigen::Matrix3d coeff = xy.inverse();
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
    for (const auto& e : mesh->boundary_edges())
    {
        const double len = (mesh->point(e.v[1]) - mesh->point(e.v[0])).norm();
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                bmass(Eigen::Index(e.v[a]), Eigen::Index(e.v[b])) += len * (a == b ? 2.0 : 1.0) / 6.0;
    }
    // exchange 0.5 (0.2 - theta) on the whole boundary
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(9);
    const Eigen::VectorXd expected =
        (mass / k + stiff + 0.5 * bmass).lu().solve(mass * prev.theta / k + load + 0.5 * 0.2 * bmass * one);
    SolverConfig cfg;
    cfg.newton_tol = 1e-15;
    const auto next = step(d, mat, data, prev, k, k, cfg).first;
    return (next.theta - expected).norm() / expected.norm();
}

Eigen::MatrixXd
fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x, double h)
{
    const Vector    f0 = f(x);
    Eigen::MatrixXd j(f0.size(), x.size());
    for (Eigen::Index c = 0; c < x.size(); ++c)
    {
        Vector xp = x, xm = x;
        xp(c) += h;
        xm(c) -= h;
        j.col(c) = (f(xp) - f(xm)) / (2 * h);
    }
    return j;
}

Verdict
oracles()
{
    const double heat = heat_oracle();

    const auto        spec = load("bench.cfg");
    const auto        mesh = build_mesh(spec.mesh);
    const auto        mat  = build_materials(spec.materials);
    const VectorSpace e(mesh);
    std::mt19937_64   rng(7);
    double            fric = 0.0, visc = 0.0;
    const VoigtTangent d0 = detail::isotropic_tangent(1.0, 1.0);
    const auto nonlinear  = ViscosityLaw::custom(
        [d0](double, const Vec2&, const Voigt& v) -> Voigt { return (1.0 + v.squaredNorm()) * (d0 * v); },
        [d0](double, const Vec2&, const Voigt& v) -> VoigtTangent {
            return (1.0 + v.squaredNorm()) * d0 + 2.0 * (d0 * v) * v.transpose();
        },
        2.0, 100.0);
    auto rel = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).norm() / b.norm(); };
    for (int i = 0; i < 5; ++i)
    {
        const Vector w = random_vector(Eigen::Index(e.ndof()), rng, 0.5);
        fric = std::max(fric, rel(Eigen::MatrixXd(assemble_friction(e, mat.friction, w).jacobian),
                                  fd_jacobian([&](const Vector& x) { return assemble_friction(e, mat.friction, x, false).residual; },
                                              w, 1e-7)));
        for (const auto* law : {&mat.viscosity, &nonlinear})
            visc = std::max(visc, rel(Eigen::MatrixXd(viscosity_jacobian(e, *law, 0.0, w).matrix),
                                      fd_jacobian([&](const Vector& x) { return apply_viscosity(e, *law, 0.0, x); }, w,
                                                  1e-6)));
    }
    return {heat <= 1e-12 && fric <= 1e-5 && visc <= 1e-5,
            fmt("heat step vs dense solve %.3e (tol 1e-12); friction jacobian vs FD %.3e, viscosity %.3e (tol 1e-5)",
                heat, fric, visc)};
}

} // namespace

int
main()
{
    const std::pair<const char*, Verdict (*)()> criteria[] = {
        {"adjointness of the thermal coupling", adjointness},
        {"interpolation rates", interpolation_rates},
        {"scheme convergence O(h+k)", scheme_convergence},
        {"time-rate isolation", time_rate},
        {"energy dissipation", energy_dissipation},
        {"projection stability", projection_stability},
        {"robustness in the friction amplitude", robustness},
        {"manufactured stationary solution", manufactured},
        {"oracle equivalence", oracles},
    };
    int failures = 0;
    int id       = 0;
    for (const auto& [name, run] : criteria)
    {
        ++id;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict    v;
        try
        {
            v = run();
        }
        catch (const std::exception& e)
        {
            v = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += !v.pass;
        std::printf("criterion %d %s: %s: %s [%.1f s]\n", id, v.pass ? "PASS" : "FAIL", name, v.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
