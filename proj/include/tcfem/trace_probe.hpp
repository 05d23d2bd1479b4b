#pragma once

#include "tcfem/config.hpp"

#include <numbers>
#include <random>

namespace tcfem
{

struct TraceProbeResult
{
    double      eps     = 0.0;
    double      C       = 0.0; ///< smallest C consistent with all samples
    std::size_t samples = 0;
    std::string worst;         ///< description of the sample attaining C
};

/// Samples P1 functions (low-frequency cosine series and boundary layers of
/// decreasing width) and reports the smallest C with
/// |v|_{L2(boundary)} <= eps |v|_{H1} + C |v|_{L2}.
inline TraceProbeResult
trace_probe(const std::shared_ptr<const Mesh>& mesh, double eps, std::size_t samples, unsigned seed = 1)
{
    if (!(eps > 0.0) || samples == 0)
        throw std::invalid_argument("trace_probe needs eps > 0 and at least one sample");
    const ScalarSpace s(mesh);
    const SpMat       mass  = assemble_mass_scalar(s).matrix;
    const SpMat       stiff = assemble_stiffness_scalar(s).matrix;
    const SpMat       bmass = assemble_boundary_mass(s, std::nullopt).matrix;
    const Box         box   = bounding_box(*mesh);
    const Vec2        lo = box.lo, sz = box.size();
    const double      pi = std::numbers::pi;

    std::mt19937_64                        rng(seed);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    TraceProbeResult                       res;
    res.eps = eps;

    auto consider = [&](const Vector& v, const std::string& what) {
        const double l2 = quadratic_form(mass, v);
        if (!(l2 > 0.0))
            return;
        const double h1 = std::sqrt(l2 + quadratic_form(stiff, v));
        const double gb = std::sqrt(std::max(0.0, quadratic_form(bmass, v)));
        const double c  = (gb - eps * h1) / std::sqrt(l2);
        ++res.samples;
        if (c > res.C)
        {
            res.C     = c;
            res.worst = what;
        }
    };

    const double hmin = mesh->h();
    for (std::size_t i = 0; i < samples; ++i)
    {
        if (i % 2 == 0)
        {
            // random cosine series with modes up to 4 in each direction
            Eigen::Matrix<double, 5, 5> a;
            for (int p = 0; p < 5; ++p)
                for (int q = 0; q < 5; ++q)
                    a(p, q) = coef(rng);
            consider(interpolate(s,
                                 [&](const Vec2& x) {
                                     const double X = (x.x() - lo.x()) / sz.x(), Y = (x.y() - lo.y()) / sz.y();
                                     double       v = 0.0;
                                     for (int p = 0; p < 5; ++p)
                                         for (int q = 0; q < 5; ++q)
                                             v += a(p, q) * std::cos(p * pi * X) * std::cos(q * pi * Y);
                                     return v;
                                 }),
                     "cosine series #" + std::to_string(i));
        }
        else
        {
            // boundary layer exp(-dist / delta), delta from 1/2 down to the mesh size
            const double t     = double(i / 2) / double(std::max<std::size_t>(1, samples / 2));
            const double delta = std::max(hmin, 0.5 * std::pow(hmin / 0.5, t));
            consider(interpolate(s,
                                 [&](const Vec2& x) {
                                     const double dist = std::min({x.x() - lo.x(), lo.x() + sz.x() - x.x(),
                                                                   x.y() - lo.y(), lo.y() + sz.y() - x.y()});
                                     return std::exp(-std::max(0.0, dist) / delta);
                                 }),
                     "boundary layer delta=" + std::to_string(delta));
        }
    }
    return res;
}

} // namespace tcfem
