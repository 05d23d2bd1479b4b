#pragma once

#include "tcfem/stepper.hpp"

#include <cstdio>
#include <fstream>

namespace tcfem
{

namespace detail
{

inline std::string
fmt9(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v + 0.0); // + 0.0 folds -0 into 0
    return buf;
}

} // namespace detail

/// Legacy ASCII unstructured grid with displacement, velocity and
/// temperature as point data.
inline void
write_vtk(const Discretization& d, const SchemeState& s, std::ostream& os)
{
    const Mesh& m = d.mesh();
    if (std::size_t(s.u.size()) != d.nw() || std::size_t(s.w.size()) != d.nw() ||
        std::size_t(s.theta.size()) != d.ntheta())
        throw std::invalid_argument("write_vtk: state does not match the discretization");
    const auto u = to_nodal(d.vector(), s.u);
    const auto w = to_nodal(d.vector(), s.w);

    os << "# vtk DataFile Version 3.0\n";
    os << "tcfem state " << s.n << "\n";
    os << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << m.num_nodes() << " double\n";
    for (const auto& n : m.nodes())
        os << detail::fmt9(n.x) << ' ' << detail::fmt9(n.y) << " 0\n";
    os << "CELLS " << m.num_triangles() << ' ' << 4 * m.num_triangles() << '\n';
    for (const auto& t : m.triangles())
        os << "3 " << t.v[0] << ' ' << t.v[1] << ' ' << t.v[2] << '\n';
    os << "CELL_TYPES " << m.num_triangles() << '\n';
    for (std::size_t t = 0; t < m.num_triangles(); ++t)
        os << "5\n";
    os << "POINT_DATA " << m.num_nodes() << '\n';
    auto vectors = [&](const char* name, const Eigen::MatrixX2d& v) {
        os << "VECTORS " << name << " double\n";
        for (Eigen::Index i = 0; i < v.rows(); ++i)
            os << detail::fmt9(v(i, 0)) << ' ' << detail::fmt9(v(i, 1)) << " 0\n";
    };
    vectors("displacement", u);
    vectors("velocity", w);
    os << "SCALARS temperature double 1\nLOOKUP_TABLE default\n";
    for (Eigen::Index i = 0; i < s.theta.size(); ++i)
        os << detail::fmt9(s.theta(i)) << '\n';
}

inline void
write_vtk(const Discretization& d, const SchemeState& s, const std::string& path)
{
    std::ofstream os(path);
    if (!os)
        throw std::runtime_error("cannot open '" + path + "' for writing");
    write_vtk(d, s, os);
    if (!os)
        throw std::runtime_error("write failed for '" + path + "'");
}

} // namespace tcfem
