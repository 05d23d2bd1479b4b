#include "tcfem/mesh.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

using namespace tcfem;

namespace
{

std::size_t
count_contact(const Mesh& m)
{
    std::size_t c = 0;
    for (const auto& e : m.boundary_edges())
        c += e.tag == BoundaryTag::contact;
    return c;
}

double
total_area(const Mesh& m)
{
    double a = 0.0;
    for (std::size_t t = 0; t < m.num_triangles(); ++t)
        a += m.signed_area(t);
    return a;
}

// Brute-force maximum edge length over all triangle edges.
double
max_edge(const Mesh& m)
{
    double h = 0.0;
    for (const auto& t : m.triangles())
        for (int i = 0; i < 3; ++i)
            h = std::max(h, (m.point(t.v[i]) - m.point(t.v[(i + 1) % 3])).norm());
    return h;
}

struct RectCase
{
    double          lx, ly;
    std::size_t     nx, ny;
    ContactSide     side;
    DiagonalPattern pattern;
};

const RectCase rect_cases[] = {
    {1.0, 1.0, 1, 1, ContactSide::bottom, DiagonalPattern::right},
    {2.0, 1.0, 4, 2, ContactSide::top, DiagonalPattern::crossed},
    {0.3, 1.7, 3, 5, ContactSide::left, DiagonalPattern::right},
    {4.0, 0.5, 8, 1, ContactSide::right, DiagonalPattern::crossed},
    {1.0, 3.0, 2, 7, ContactSide::bottom, DiagonalPattern::crossed},
};

Mesh
unit_square_two_triangles()
{
    return generate_rect_mesh(1.0, 1.0, 1, 1, ContactSide::bottom);
}

} // namespace

TEST(RectMesh, MinimalGrid)
{
    const auto m = unit_square_two_triangles();
    EXPECT_EQ(m.num_nodes(), 4u);
    EXPECT_EQ(m.num_triangles(), 2u);
    EXPECT_EQ(m.boundary_edges().size(), 4u);
    EXPECT_EQ(count_contact(m), 1u);
}

TEST(RectMesh, ContactNormalPointsDown)
{
    const auto m = generate_rect_mesh(2.0, 1.0, 2, 1, ContactSide::bottom);
    EXPECT_EQ(m.num_nodes(), 6u);
    EXPECT_EQ(m.num_triangles(), 4u);
    for (const auto& e : m.boundary_edges())
        if (e.tag == BoundaryTag::contact)
        {
            EXPECT_EQ(e.normal, Vec2(0.0, -1.0));
        }
}

TEST(RectMesh, MeshSizeIsLongestEdge)
{
    const auto m = generate_rect_mesh(1.0, 1.0, 4, 4, ContactSide::bottom);
    EXPECT_NEAR(m.h(), std::sqrt(2.0) / 4.0, 1e-15);
    EXPECT_NEAR(m.h(), 0.3536, 1e-4);
    EXPECT_EQ(m.h(), max_edge(m));
}

TEST(RectMesh, RejectsBadInput)
{
    EXPECT_THROW(generate_rect_mesh(0.0, 1.0, 1, 1, ContactSide::bottom), std::invalid_argument);
    EXPECT_THROW(generate_rect_mesh(1.0, -1.0, 1, 1, ContactSide::bottom), std::invalid_argument);
    EXPECT_THROW(generate_rect_mesh(1.0, 1.0, 0, 1, ContactSide::bottom), std::invalid_argument);
    EXPECT_THROW(generate_rect_mesh(1.0, 1.0, 1, 0, ContactSide::bottom), std::invalid_argument);
}

TEST(RectMesh, ContactSideSelection)
{
    const std::map<ContactSide, Vec2> expected{{ContactSide::bottom, {0, -1}},
                                               {ContactSide::top, {0, 1}},
                                               {ContactSide::left, {-1, 0}},
                                               {ContactSide::right, {1, 0}}};
    for (const auto& [side, normal] : expected)
    {
        const auto m = generate_rect_mesh(2.0, 1.0, 4, 3, side);
        std::size_t count = 0;
        for (const auto& e : m.boundary_edges())
            if (e.tag == BoundaryTag::contact)
            {
                ++count;
                EXPECT_EQ(e.normal, normal);
            }
        const bool horizontal = side == ContactSide::bottom || side == ContactSide::top;
        EXPECT_EQ(count, horizontal ? 4u : 3u);
    }
}

TEST(RectMesh, GeneratorOutputValidates)
{
    for (const auto& c : rect_cases)
    {
        const auto m   = generate_rect_mesh(c.lx, c.ly, c.nx, c.ny, c.side, c.pattern);
        const auto rep = validate_mesh(m);
        EXPECT_TRUE(rep.ok()) << rep.summary();
    }
}

TEST(RectMesh, AreaConservation)
{
    for (const auto& c : rect_cases)
    {
        auto m = std::make_shared<const Mesh>(generate_rect_mesh(c.lx, c.ly, c.nx, c.ny, c.side, c.pattern));
        for (int level = 0; level < 3; ++level)
        {
            EXPECT_NEAR(total_area(*m), c.lx * c.ly, 1e-12 * c.lx * c.ly);
            for (std::size_t t = 0; t < m->num_triangles(); ++t)
                EXPECT_GT(m->signed_area(t), 0.0);
            m = refine_uniform(m);
        }
    }
}

TEST(RectMesh, BoundaryLoopsCloseAndCoverPerimeter)
{
    for (const auto& c : rect_cases)
    {
        const auto                              m = generate_rect_mesh(c.lx, c.ly, c.nx, c.ny, c.side, c.pattern);
        std::map<std::size_t, int>              starts, ends;
        double                                  len = 0.0;
        for (const auto& e : m.boundary_edges())
        {
            ++starts[e.v[0]];
            ++ends[e.v[1]];
            len += m.edge_length(e);
        }
        EXPECT_EQ(starts.size(), ends.size());
        for (const auto& [v, n] : starts)
        {
            EXPECT_EQ(n, 1);
            EXPECT_EQ(ends[v], 1);
        }
        EXPECT_NEAR(len, 2.0 * (c.lx + c.ly), 1e-12);
    }
}

TEST(Refine, SplitCounts)
{
    auto m  = std::make_shared<const Mesh>(unit_square_two_triangles());
    auto m1 = refine_uniform(m);
    EXPECT_EQ(m1->num_triangles(), 8u);
    EXPECT_EQ(m1->num_nodes(), 9u);
    EXPECT_EQ(refine_uniform(m1)->num_triangles(), 32u);
    EXPECT_EQ(refine_times(m, 2)->num_triangles(), 32u);
}

TEST(Refine, MeshSizeHalvesExactly)
{
    for (const auto& c : rect_cases)
    {
        auto m = std::make_shared<const Mesh>(generate_rect_mesh(c.lx, c.ly, c.nx, c.ny, c.side, c.pattern));
        for (int level = 0; level < 3; ++level)
        {
            auto child = refine_uniform(m);
            EXPECT_NEAR(child->h(), m->h() / 2.0, 1e-14 * m->h());
            m = child;
        }
    }
    // power-of-two coordinates: exact in floating point
    auto m = std::make_shared<const Mesh>(generate_rect_mesh(2.0, 1.0, 4, 2, ContactSide::bottom));
    for (int level = 0; level < 4; ++level)
    {
        auto child = refine_uniform(m);
        EXPECT_EQ(child->h(), m->h() / 2.0);
        m = child;
    }
}

TEST(Refine, NestingAndParentMaps)
{
    for (const auto& c : rect_cases)
    {
        auto parent = std::make_shared<const Mesh>(generate_rect_mesh(c.lx, c.ly, c.nx, c.ny, c.side, c.pattern));
        auto child  = refine_uniform(parent);
        ASSERT_EQ(child->parent(), parent);
        ASSERT_EQ(child->node_parents().size(), child->num_nodes());
        ASSERT_EQ(child->element_parents().size(), child->num_triangles());
        std::size_t copied = 0;
        for (std::size_t n = 0; n < child->num_nodes(); ++n)
        {
            const auto [a, b] = child->node_parents()[n];
            const Vec2 expected = 0.5 * (parent->point(a) + parent->point(b));
            if (a == b)
            {
                ++copied;
                EXPECT_EQ(child->point(n), parent->point(a));
            }
            else
                EXPECT_NEAR((child->point(n) - expected).norm(), 0.0, 1e-15);
        }
        EXPECT_EQ(copied, parent->num_nodes());
        // every parent node appears with identical coordinates
        for (const auto& pn : parent->nodes())
        {
            bool found = false;
            for (const auto& cn : child->nodes())
                found = found || (cn.x == pn.x && cn.y == pn.y);
            EXPECT_TRUE(found);
        }
        // each child lies inside its parent: areas sum per parent
        std::vector<double> area(parent->num_triangles(), 0.0);
        for (std::size_t t = 0; t < child->num_triangles(); ++t)
            area[child->element_parents()[t]] += child->signed_area(t);
        for (std::size_t t = 0; t < parent->num_triangles(); ++t)
            EXPECT_NEAR(area[t], parent->signed_area(t), 1e-14);
        EXPECT_TRUE(validate_mesh(*child).ok()) << validate_mesh(*child).summary();
        EXPECT_EQ(count_contact(*child), 2 * count_contact(*parent));
    }
}

TEST(Validate, FlippedTriangle)
{
    const auto m = unit_square_two_triangles();
    auto       tris = m.triangles();
    std::swap(tris[0].v[1], tris[0].v[2]);
    const Mesh bad(m.nodes(), tris, m.boundary_edges());
    const auto rep = validate_mesh(bad);
    EXPECT_EQ(rep.orientation_errors.size(), 1u);
}

TEST(Validate, ContactOnTwoNonParallelSides)
{
    const auto m     = unit_square_two_triangles();
    auto       edges = m.boundary_edges();
    for (auto& e : edges)
        if (e.normal == Vec2(-1.0, 0.0))
            e.tag = BoundaryTag::contact;
    const Mesh bad(m.nodes(), m.triangles(), edges);
    const auto rep = validate_mesh(bad);
    EXPECT_FALSE(rep.contact_normal_errors.empty());
    EXPECT_TRUE(rep.orientation_errors.empty());
}

TEST(Validate, MissingBoundaryEdgeIsUntagged)
{
    const auto m     = generate_rect_mesh(2.0, 1.0, 2, 1, ContactSide::bottom);
    auto       edges = m.boundary_edges();
    edges.pop_back();
    const auto rep = validate_mesh(Mesh(m.nodes(), m.triangles(), edges));
    EXPECT_EQ(rep.untagged_edges.size(), 1u);
}

TEST(Validate, HangingNode)
{
    // one triangle on one side of the diagonal, two on the other side sharing
    // the diagonal midpoint
    std::vector<Node>     nodes{{0, 0, 0}, {1, 1, 0}, {2, 1, 1}, {3, 0, 1}, {4, 0.5, 0.5}};
    std::vector<Triangle> tris{{{0, 1, 3}}, {{1, 2, 4}}, {{4, 2, 3}}};
    std::vector<BoundaryEdge> edges(4);
    edges[0].v = {0, 1};
    edges[1].v = {1, 2};
    edges[2].v = {2, 3};
    edges[3].v = {3, 0};
    const auto rep = validate_mesh(Mesh(nodes, tris, edges));
    EXPECT_FALSE(rep.hanging_nodes.empty()) << rep.summary();
}

TEST(MeshIO, RoundTripIsBitExact)
{
    auto m = std::make_shared<const Mesh>(generate_rect_mesh(0.3, 1.7, 3, 5, ContactSide::left, DiagonalPattern::crossed));
    m      = refine_uniform(m);
    std::stringstream ss;
    write_mesh(*m, ss);
    const Mesh back = read_mesh(ss);
    EXPECT_EQ(back.nodes(), m->nodes());
    EXPECT_EQ(back.triangles(), m->triangles());
    EXPECT_EQ(back.boundary_edges(), m->boundary_edges());
    EXPECT_EQ(back.h(), m->h());
}

TEST(MeshIO, TwoTriangleSquare)
{
    const auto        m = unit_square_two_triangles();
    std::stringstream ss;
    write_mesh(m, ss);
    const Mesh back = read_mesh(ss);
    EXPECT_TRUE(back.same_geometry(m));
}

TEST(MeshIO, CommentsAndBlankLines)
{
    std::stringstream ss("# a mesh\ntcmesh 1\n\nnodes 3 # three\n0 0 0\n1 1 0\n2 0 1\ntriangles 1\n0 0 1 2\n"
                         "boundary_edges 3\n0 0 1 C\n1 1 2 N\n2 2 0 N\n");
    const Mesh m = read_mesh(ss);
    EXPECT_EQ(m.num_nodes(), 3u);
    EXPECT_EQ(m.boundary_edges()[0].tag, BoundaryTag::contact);
    EXPECT_TRUE(validate_mesh(m).ok());
}

TEST(MeshIO, UnknownTagReportsLine)
{
    std::stringstream ss("tcmesh 1\nnodes 3\n0 0 0\n1 1 0\n2 0 1\ntriangles 1\n0 0 1 2\n"
                         "boundary_edges 3\n0 0 1 C\n1 1 2 X\n2 2 0 N\n");
    try
    {
        read_mesh(ss);
        FAIL() << "expected a parse error";
    }
    catch (const parse_error& e)
    {
        EXPECT_EQ(e.line(), 10u);
        EXPECT_NE(std::string(e.what()).find("'X'"), std::string::npos);
    }
}

TEST(MeshIO, EmptyFile)
{
    std::stringstream ss("");
    try
    {
        read_mesh(ss);
        FAIL() << "expected a parse error";
    }
    catch (const parse_error& e)
    {
        EXPECT_NE(std::string(e.what()).find("missing header"), std::string::npos);
    }
}

TEST(MeshIO, BadTokenReportsToken)
{
    std::stringstream ss("tcmesh 1\nnodes 1\n0 zero 0\n");
    try
    {
        read_mesh(ss);
        FAIL() << "expected a parse error";
    }
    catch (const parse_error& e)
    {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_NE(std::string(e.what()).find("'zero'"), std::string::npos);
    }
}

TEST(MeshIO, NonContiguousIds)
{
    std::stringstream ss("tcmesh 1\nnodes 2\n0 0 0\n2 1 0\n");
    EXPECT_THROW(read_mesh(ss), parse_error);
}
