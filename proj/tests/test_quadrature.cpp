#include "tcfem/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace tcfem;

namespace
{

// Closed form over the reference triangle (0,0), (1,0), (0,1):
// int x^a y^b = a! b! / (a + b + 2)!
double
monomial_integral(int a, int b)
{
    return std::tgamma(a + 1) * std::tgamma(b + 1) / std::tgamma(a + b + 3);
}

double
apply(const TriangleRule& r, int a, int b)
{
    double s = 0.0;
    for (std::size_t q = 0; q < r.points.size(); ++q)
        s += r.weights[q] * std::pow(r.points[q](1), a) * std::pow(r.points[q](2), b);
    return 0.5 * s; // reference area
}

void
check_rule(const TriangleRule& r, int degree, bool interior)
{
    double sum = 0.0;
    for (std::size_t q = 0; q < r.points.size(); ++q)
    {
        EXPECT_GT(r.weights[q], 0.0);
        sum += r.weights[q];
        EXPECT_NEAR(r.points[q].sum(), 1.0, 1e-15);
        if (interior)
            EXPECT_GT(r.points[q].minCoeff(), 0.0);
    }
    EXPECT_NEAR(sum, 1.0, 1e-14);
    for (int a = 0; a <= degree; ++a)
        for (int b = 0; a + b <= degree; ++b)
            EXPECT_NEAR(apply(r, a, b), monomial_integral(a, b), 1e-14) << "x^" << a << " y^" << b;
}

} // namespace

TEST(TriangleRule, ThreePointDegreeTwo)
{
    check_rule(triangle_rule_3(), 2, true);
    EXPECT_GT(std::abs(apply(triangle_rule_3(), 3, 0) - monomial_integral(3, 0)), 1e-6);
}

TEST(TriangleRule, SevenPointDegreeFive)
{
    check_rule(triangle_rule_7(), 5, true);
    EXPECT_GT(std::abs(apply(triangle_rule_7(), 6, 0) - monomial_integral(6, 0)), 1e-8);
}

TEST(TriangleRule, CollapsedGaussDegreeTen)
{
    check_rule(triangle_rule_high(), 10, true);
}

TEST(EdgeRule, GaussExactness)
{
    const std::pair<const EdgeRule*, int> rules[] = {{&edge_rule_2(), 3}, {&edge_rule_3(), 5}};
    for (const auto& [r, degree] : rules)
    {
        for (int p = 0; p <= degree; ++p)
        {
            double s = 0.0;
            for (std::size_t q = 0; q < r->points.size(); ++q)
                s += r->weights[q] * std::pow(r->points[q], p);
            EXPECT_NEAR(s, 1.0 / (p + 1), 1e-15);
        }
        for (double w : r->weights)
            EXPECT_GT(w, 0.0);
    }
}
