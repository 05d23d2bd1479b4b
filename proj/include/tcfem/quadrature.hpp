#pragma once

#include "tcfem/core.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <vector>

namespace tcfem
{

/// Triangle rule in barycentric coordinates; weights sum to 1 (multiply by the
/// element area).
struct TriangleRule
{
    std::vector<Eigen::Vector3d> points;
    std::vector<double>          weights;
};

/// Edge rule on the parameter interval [0, 1]; weights sum to 1.
struct EdgeRule
{
    std::vector<double> points;
    std::vector<double> weights;
};

/// Degree 2, interior points.
inline const TriangleRule&
triangle_rule_3()
{
    static const TriangleRule r{
        {Eigen::Vector3d(2. / 3, 1. / 6, 1. / 6), Eigen::Vector3d(1. / 6, 2. / 3, 1. / 6),
         Eigen::Vector3d(1. / 6, 1. / 6, 2. / 3)},
        {1. / 3, 1. / 3, 1. / 3}};
    return r;
}

/// Radon's 7-point rule, degree 5.
inline const TriangleRule&
triangle_rule_7()
{
    static const TriangleRule r = [] {
        const double s15 = std::sqrt(15.0);
        const double a1 = (6.0 - s15) / 21.0, b1 = (9.0 + 2.0 * s15) / 21.0;
        const double a2 = (6.0 + s15) / 21.0, b2 = (9.0 - 2.0 * s15) / 21.0;
        const double w1 = (155.0 - s15) / 1200.0, w2 = (155.0 + s15) / 1200.0;
        TriangleRule q;
        q.points  = {Eigen::Vector3d(1. / 3, 1. / 3, 1. / 3),
                     Eigen::Vector3d(a1, a1, b1),
                     Eigen::Vector3d(a1, b1, a1),
                     Eigen::Vector3d(b1, a1, a1),
                     Eigen::Vector3d(a2, a2, b2),
                     Eigen::Vector3d(a2, b2, a2),
                     Eigen::Vector3d(b2, a2, a2)};
        q.weights = {9.0 / 40.0, w1, w1, w1, w2, w2, w2};
        return q;
    }();
    return r;
}

/// Collapsed (Duffy) tensor Gauss-Legendre rule with 6x6 points; exact for
/// polynomials of total degree 10.
inline const TriangleRule&
triangle_rule_high()
{
    static const TriangleRule r = [] {
        using gl        = boost::math::quadrature::gauss<double, 6>;
        const auto& abs = gl::abscissa();
        const auto& wts = gl::weights();
        std::vector<double> x, w;
        for (std::size_t i = 0; i < abs.size(); ++i)
        {
            x.push_back(0.5 * (1.0 + abs[i]));
            w.push_back(0.5 * wts[i]);
            if (abs[i] != 0.0)
            {
                x.push_back(0.5 * (1.0 - abs[i]));
                w.push_back(0.5 * wts[i]);
            }
        }
        TriangleRule q;
        for (std::size_t i = 0; i < x.size(); ++i)
            for (std::size_t j = 0; j < x.size(); ++j)
            {
                const double u = x[i], v = x[j] * (1.0 - x[i]);
                q.points.emplace_back(1.0 - u - v, u, v);
                // reference triangle area 1/2 -> normalized weight factor 2
                q.weights.push_back(2.0 * w[i] * w[j] * (1.0 - u));
            }
        return q;
    }();
    return r;
}

inline const EdgeRule&
edge_rule_2()
{
    static const EdgeRule r{{0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)}, {0.5, 0.5}};
    return r;
}

inline const EdgeRule&
edge_rule_3()
{
    static const EdgeRule r{{0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)},
                            {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0}};
    return r;
}

} // namespace tcfem
