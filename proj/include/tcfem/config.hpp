#pragma once

#include "tcfem/stepper.hpp"

#include <fstream>
#include <map>
#include <numbers>
#include <set>

namespace tcfem
{

/// A named built-in field with numeric parameters, e.g. `gravity 1.0`.
struct FieldSpec
{
    std::string         name = "zero";
    std::vector<double> params;

    double
    param(std::size_t i) const
    {
        return params.at(i);
    }
};

struct MeshSpec
{
    double          lx = 2.0, ly = 1.0;
    std::size_t     nx = 8, ny = 4;
    ContactSide     contact_side = ContactSide::bottom;
    DiagonalPattern diagonal     = DiagonalPattern::right;
    std::string     file;
    std::size_t     refinements = 0;
};

struct MaterialSpec
{
    double lambda_e = 4.0, mu_e = 4.0;
    double lambda_v = 1.0, mu_v = 1.0;
    double expansion     = 0.5;
    double conductivity  = 1.0;
    double exchange      = 0.5;
    double reference_temperature = 0.0;
    bool   friction       = true;
    double friction_a     = 2.0, friction_b = 1.0, friction_alpha = 10.0;
    double rho_reg        = 1e-6;
    double heat_coefficient = 1.0, slip_cap = 10.0;
};

struct DataSpec
{
    FieldSpec volume_force, traction, heat_source, displacement0, velocity0, temperature0;
};

struct TimeSpec
{
    double      final_time = 0.5;
    std::size_t steps      = 50;
    double      coupling   = 0.02; ///< k = coupling * h in convergence studies
};

struct OutputSpec
{
    std::string dir            = ".";
    std::string prefix         = "tcfem";
    std::size_t snapshot_every = 0;
};

struct RunSpec
{
    MeshSpec     mesh;
    MaterialSpec materials;
    DataSpec     data;
    TimeSpec     time;
    SolverConfig solver;
    OutputSpec   output;
};

namespace detail
{

inline std::string
trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline std::vector<std::string>
split_ws(const std::string& s)
{
    std::istringstream       is(s);
    std::vector<std::string> out;
    for (std::string t; is >> t;)
        out.push_back(t);
    return out;
}

inline bool
parse_switch(const std::string& v, std::size_t line)
{
    if (v == "on" || v == "true" || v == "1")
        return true;
    if (v == "off" || v == "false" || v == "0")
        return false;
    throw parse_error(line, "expected on/off, got '" + v + "'");
}

inline FieldSpec
parse_field(const std::string& v, std::size_t line, const std::map<std::string, std::size_t>& allowed)
{
    const auto tok = split_ws(v);
    if (tok.empty())
        throw parse_error(line, "empty field specification");
    const auto it = allowed.find(tok[0]);
    if (it == allowed.end())
        throw parse_error(line, "unknown built-in field '" + tok[0] + "'");
    if (tok.size() - 1 != it->second)
        throw parse_error(line, "'" + tok[0] + "' takes " + std::to_string(it->second) + " parameter(s)");
    FieldSpec f;
    f.name = tok[0];
    for (std::size_t i = 1; i < tok.size(); ++i)
        f.params.push_back(parse_real(tok[i], line));
    return f;
}

} // namespace detail

/// Strict `key = value` configuration with sections [mesh] [materials]
/// [data] [time] [solver] [output]. Unknown sections and keys are errors.
inline RunSpec
parse_config(std::istream& is)
{
    RunSpec     spec;
    std::string section;
    std::string raw;
    std::size_t line = 0;

    using Setter = std::function<void(const std::string&, std::size_t)>;
    auto real    = [](double& dst) -> Setter {
        return [&dst](const std::string& v, std::size_t l) { dst = detail::parse_real(v, l); };
    };
    auto count = [](std::size_t& dst) -> Setter {
        return [&dst](const std::string& v, std::size_t l) { dst = detail::parse_index(v, l); };
    };
    auto flag = [](bool& dst) -> Setter {
        return [&dst](const std::string& v, std::size_t l) { dst = detail::parse_switch(v, l); };
    };
    auto text = [](std::string& dst) -> Setter { return [&dst](const std::string& v, std::size_t) { dst = v; }; };
    auto field = [](FieldSpec& dst, std::map<std::string, std::size_t> allowed) -> Setter {
        return [&dst, allowed](const std::string& v, std::size_t l) { dst = detail::parse_field(v, l, allowed); };
    };

    auto& m = spec.mesh;
    auto& a = spec.materials;
    auto& d = spec.data;
    auto& s = spec.solver;

    std::map<std::string, std::map<std::string, Setter>> keys;
    keys["mesh"] = {
        {"lx", real(m.lx)},
        {"ly", real(m.ly)},
        {"nx", count(m.nx)},
        {"ny", count(m.ny)},
        {"contact_side",
         [&m](const std::string& v, std::size_t l) {
             try
             {
                 m.contact_side = parse_contact_side(v);
             }
             catch (const std::invalid_argument& e)
             {
                 throw parse_error(l, e.what());
             }
         }},
        {"diagonal",
         [&m](const std::string& v, std::size_t l) {
             if (v == "right")
                 m.diagonal = DiagonalPattern::right;
             else if (v == "crossed")
                 m.diagonal = DiagonalPattern::crossed;
             else
                 throw parse_error(l, "unknown diagonal pattern '" + v + "'");
         }},
        {"file", text(m.file)},
        {"refinements", count(m.refinements)},
    };
    keys["materials"] = {
        {"lambda_e", real(a.lambda_e)},
        {"mu_e", real(a.mu_e)},
        {"lambda_v", real(a.lambda_v)},
        {"mu_v", real(a.mu_v)},
        {"expansion", real(a.expansion)},
        {"conductivity", real(a.conductivity)},
        {"exchange", real(a.exchange)},
        {"reference_temperature", real(a.reference_temperature)},
        {"friction", flag(a.friction)},
        {"friction_a", real(a.friction_a)},
        {"friction_b", real(a.friction_b)},
        {"friction_alpha", real(a.friction_alpha)},
        {"rho_reg", real(a.rho_reg)},
        {"heat_coefficient", real(a.heat_coefficient)},
        {"slip_cap", real(a.slip_cap)},
    };
    keys["data"] = {
        {"volume_force", field(d.volume_force, {{"zero", 0}, {"gravity", 1}, {"stationary_manufactured", 1}})},
        {"traction", field(d.traction, {{"zero", 0}, {"pulse_traction", 3}, {"stationary_manufactured", 1}})},
        {"heat_source", field(d.heat_source, {{"zero", 0}, {"constant", 1}})},
        {"displacement0", field(d.displacement0, {{"zero", 0}, {"sine_bump", 1}, {"stationary_manufactured", 1}})},
        {"velocity0", field(d.velocity0, {{"zero", 0}, {"sine_bump", 1}})},
        {"temperature0", field(d.temperature0, {{"zero", 0}, {"cosine", 1}})},
    };
    keys["time"] = {
        {"final_time", real(spec.time.final_time)},
        {"steps", count(spec.time.steps)},
        {"coupling", real(spec.time.coupling)},
    };
    keys["solver"] = {
        {"newton_tol", real(s.newton_tol)},
        {"newton_max_iter", count(s.newton_max_iter)},
        {"backtrack", real(s.backtrack)},
        {"min_damping", real(s.min_damping)},
        {"watchdog_threshold", real(s.watchdog_threshold)},
        {"watchdog_steps", count(s.watchdog_steps)},
        {"fallback", flag(s.enable_fallback)},
        {"fp_max_sweeps", count(s.fp_max_sweeps)},
        {"fp_tol", real(s.fp_tol)},
        {"relaxation", real(s.fp_relaxation)},
    };
    keys["output"] = {
        {"dir", text(spec.output.dir)},
        {"prefix", text(spec.output.prefix)},
        {"snapshot_every", count(spec.output.snapshot_every)},
    };

    std::set<std::string> seen;
    while (std::getline(is, raw))
    {
        ++line;
        const auto hash = raw.find('#');
        const auto ln   = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (ln.empty())
            continue;
        if (ln.front() == '[')
        {
            if (ln.back() != ']')
                throw parse_error(line, "malformed section header");
            section = detail::trim(ln.substr(1, ln.size() - 2));
            if (!keys.count(section))
                throw parse_error(line, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = ln.find('=');
        if (eq == std::string::npos)
            throw parse_error(line, "expected 'key = value'");
        if (section.empty())
            throw parse_error(line, "key outside of a section");
        const auto key   = detail::trim(ln.substr(0, eq));
        const auto value = detail::trim(ln.substr(eq + 1));
        const auto it    = keys[section].find(key);
        if (it == keys[section].end())
            throw parse_error(line, "unknown key '" + key + "' in [" + section + "]");
        if (!seen.insert(section + "." + key).second)
            throw parse_error(line, "duplicate key '" + key + "'");
        if (value.empty())
            throw parse_error(line, "missing value for '" + key + "'");
        it->second(value, line);
    }
    try
    {
        spec.solver.validate();
        TimeGrid(spec.time.final_time, spec.time.steps);
    }
    catch (const std::invalid_argument& e)
    {
        throw parse_error(line, e.what());
    }
    return spec;
}

inline RunSpec
parse_config_file(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw std::runtime_error("cannot open config '" + path + "'");
    try
    {
        return parse_config(is);
    }
    catch (const parse_error& e)
    {
        throw parse_error(e.line(), e.message() + " (in " + path + ")");
    }
}

/// Level-0 mesh of a run: the rectangle generator or a mesh file, refined
/// `refinements` times (parent chain kept).
inline std::shared_ptr<const Mesh>
build_mesh(const MeshSpec& m)
{
    std::shared_ptr<const Mesh> mesh =
        m.file.empty() ? std::make_shared<const Mesh>(generate_rect_mesh(m.lx, m.ly, m.nx, m.ny, m.contact_side, m.diagonal))
                       : std::make_shared<const Mesh>(read_mesh(m.file));
    return refine_times(mesh, m.refinements);
}

inline MaterialSet
build_materials(const MaterialSpec& s)
{
    MaterialSet m;
    m.elastic          = ElasticTensor::isotropic(s.lambda_e, s.mu_e);
    m.viscosity        = ViscosityLaw::linear_isotropic(s.lambda_v, s.mu_v);
    m.expansion        = ExpansionTensor::isotropic(s.expansion);
    m.conductivity     = ConductivityLaw::linear_isotropic(s.conductivity);
    m.heat_exchange    = HeatExchange::linear(s.exchange, s.reference_temperature);
    m.friction         = FrictionPotential::exponential(s.friction_a, s.friction_b, s.friction_alpha, s.rho_reg);
    m.frictional_heat  = FrictionalHeat::capped_linear(s.heat_coefficient, s.slip_cap);
    m.friction_enabled = s.friction;
    return m;
}

/// Axis-aligned bounding box of a mesh, used to scale the built-in fields.
struct Box
{
    Vec2 lo = Vec2::Zero(), hi = Vec2::Ones();

    Vec2
    size() const
    {
        return hi - lo;
    }
};

inline Box
bounding_box(const Mesh& m)
{
    Box b{Vec2::Constant(std::numeric_limits<double>::infinity()), Vec2::Constant(-std::numeric_limits<double>::infinity())};
    for (const auto& n : m.nodes())
    {
        b.lo = b.lo.cwiseMin(n.point());
        b.hi = b.hi.cwiseMax(n.point());
    }
    return b;
}

namespace builtin
{

/// Uniform downward body force (0, -g).
inline VectorField
gravity(double g)
{
    return [g](const Vec2&, double) { return Vec2(0.0, -g); };
}

/// Traction (px, py) sin^2(pi t / tp) sin^2(pi x / Lx) on upward-facing
/// Neumann edges for t < tp, zero afterwards and elsewhere.
inline TractionField
pulse_traction(double px, double py, double tp, const Box& box)
{
    const double pi = std::numbers::pi, lx = box.size().x(), x0 = box.lo.x();
    return [=](const Vec2& x, double t, const Vec2& n) {
        if (t >= tp || n.y() < 0.5)
            return Vec2(0.0, 0.0);
        const double st = std::sin(pi * t / tp), sx = std::sin(pi * (x.x() - x0) / lx);
        return Vec2(Vec2(px, py) * (st * st * sx * sx));
    };
}

/// u* = (e (x - x0), 0).
inline InitialVectorField
manufactured_displacement(double e, const Box& box)
{
    const double x0 = box.lo.x();
    return {[=](const Vec2& x) { return Vec2(e * (x.x() - x0), 0.0); },
            [=](const Vec2&) {
                Mat2 g = Mat2::Zero();
                g(0, 0) = e;
                return g;
            }};
}

/// Traction sigma* nu with sigma* = B eps(u*), so that u* is a stationary
/// solution with zero body force.
inline TractionField
manufactured_traction(double e, const ElasticTensor& b)
{
    const Mat2 sigma = from_voigt_stress(b.stress(Voigt(e, 0.0, 0.0)));
    return [sigma](const Vec2&, double, const Vec2& n) { return Vec2(sigma * n); };
}

/// (A sin(pi x / Lx) sin(pi y / Ly), 0).
inline InitialVectorField
sine_bump(double amp, const Box& box)
{
    const double pi = std::numbers::pi;
    const Vec2   lo = box.lo, sz = box.size();
    return {[=](const Vec2& x) {
                return Vec2(amp * std::sin(pi * (x.x() - lo.x()) / sz.x()) * std::sin(pi * (x.y() - lo.y()) / sz.y()), 0.0);
            },
            [=](const Vec2& x) {
                const double ax = pi / sz.x(), ay = pi / sz.y();
                const double sx = std::sin(ax * (x.x() - lo.x())), cx = std::cos(ax * (x.x() - lo.x()));
                const double sy = std::sin(ay * (x.y() - lo.y())), cy = std::cos(ay * (x.y() - lo.y()));
                Mat2         g  = Mat2::Zero();
                g(0, 0)         = amp * ax * cx * sy;
                g(0, 1)         = amp * ay * sx * cy;
                return g;
            }};
}

/// A cos(pi x / Lx).
inline InitialScalarField
cosine(double amp, const Box& box)
{
    const double pi = std::numbers::pi, lx = box.size().x(), x0 = box.lo.x();
    return [=](const Vec2& x) { return amp * std::cos(pi * (x.x() - x0) / lx); };
}

} // namespace builtin

inline ProblemData
build_problem_data(const DataSpec& d, const MaterialSet& mat, const Box& box)
{
    ProblemData p;
    if (d.volume_force.name == "gravity")
        p.f0 = builtin::gravity(d.volume_force.param(0));
    else
        p.f0 = [](const Vec2&, double) { return Vec2(0.0, 0.0); };

    if (d.traction.name == "pulse_traction")
        p.f2 = builtin::pulse_traction(d.traction.param(0), d.traction.param(1), d.traction.param(2), box);
    else if (d.traction.name == "stationary_manufactured")
        p.f2 = builtin::manufactured_traction(d.traction.param(0), mat.elastic);
    else
        p.f2 = [](const Vec2&, double, const Vec2&) { return Vec2(0.0, 0.0); };

    if (d.heat_source.name == "constant")
    {
        const double c = d.heat_source.param(0);
        p.g            = [c](const Vec2&, double) { return c; };
    }
    else
        p.g = [](const Vec2&, double) { return 0.0; };
    return p;
}

inline InitialData
build_initial_data(const DataSpec& d, const Box& box)
{
    InitialData init;
    if (d.displacement0.name == "sine_bump")
        init.u0 = builtin::sine_bump(d.displacement0.param(0), box);
    else if (d.displacement0.name == "stationary_manufactured")
        init.u0 = builtin::manufactured_displacement(d.displacement0.param(0), box);
    if (d.velocity0.name == "sine_bump")
        init.u1 = builtin::sine_bump(d.velocity0.param(0), box);
    if (d.temperature0.name == "cosine")
        init.theta0 = builtin::cosine(d.temperature0.param(0), box);
    return init;
}

/// Everything needed to run the scheme on one mesh.
struct Problem
{
    MaterialSet  materials;
    ProblemData  data;
    InitialData  initial;
    SolverConfig solver;
};

inline Problem
build_problem(const RunSpec& spec, const Mesh& mesh)
{
    const Box box = bounding_box(mesh);
    Problem   p;
    p.materials = build_materials(spec.materials);
    p.data      = build_problem_data(spec.data, p.materials, box);
    p.initial   = build_initial_data(spec.data, box);
    p.solver    = spec.solver;
    return p;
}

} // namespace tcfem
