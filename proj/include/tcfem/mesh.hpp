#pragma once

#include "tcfem/core.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace tcfem
{

struct Node
{
    std::size_t id = 0;
    double      x  = 0.0;
    double      y  = 0.0;

    Vec2
    point() const
    {
        return Vec2(x, y);
    }

    bool operator==(const Node&) const = default;
};

struct Triangle
{
    std::array<std::size_t, 3> v{};

    bool operator==(const Triangle&) const = default;
};

enum class BoundaryTag
{
    neumann,
    contact
};

/// Boundary edge oriented counterclockwise along the boundary, so the outward
/// normal is the edge direction rotated by -90 degrees.
struct BoundaryEdge
{
    std::array<std::size_t, 2> v{};
    BoundaryTag                tag = BoundaryTag::neumann;
    Vec2                       normal = Vec2::Zero();

    bool
    operator==(const BoundaryEdge& o) const
    {
        return v == o.v && tag == o.tag && normal == o.normal;
    }
};

enum class ContactSide
{
    bottom,
    top,
    left,
    right
};

enum class DiagonalPattern
{
    right,
    crossed
};

inline ContactSide
parse_contact_side(const std::string& s)
{
    if (s == "bottom")
        return ContactSide::bottom;
    if (s == "top")
        return ContactSide::top;
    if (s == "left")
        return ContactSide::left;
    if (s == "right")
        return ContactSide::right;
    throw std::invalid_argument("unknown contact side '" + s + "'");
}

class Mesh
{
  public:
    /// Child node i was created from parent nodes (a, b): a == b for copied
    /// vertices, otherwise the node is the midpoint of edge (a, b).
    using NodeParent = std::array<std::size_t, 2>;

  private:
    std::vector<Node>         m_nodes;
    std::vector<Triangle>     m_triangles;
    std::vector<BoundaryEdge> m_edges;
    double                    m_h = 0.0;

    std::shared_ptr<const Mesh> m_parent;
    std::vector<NodeParent>     m_node_parent;
    std::vector<std::size_t>    m_element_parent;

  public:
    Mesh() = default;

    /// Normals of the given edges are recomputed from the endpoint order.
    Mesh(std::vector<Node> nodes, std::vector<Triangle> tris, std::vector<BoundaryEdge> edges)
      : m_nodes(std::move(nodes))
      , m_triangles(std::move(tris))
      , m_edges(std::move(edges))
    {
        for (std::size_t i = 0; i < m_nodes.size(); ++i)
        {
            if (!std::isfinite(m_nodes[i].x) || !std::isfinite(m_nodes[i].y))
                throw mesh_error("node " + std::to_string(i) + " has non-finite coordinates");
            m_nodes[i].id = i;
        }
        for (const auto& t : m_triangles)
            for (auto v : t.v)
                if (v >= m_nodes.size())
                    throw mesh_error("triangle references missing node " + std::to_string(v));
        for (auto& e : m_edges)
        {
            for (auto v : e.v)
                if (v >= m_nodes.size())
                    throw mesh_error("boundary edge references missing node " + std::to_string(v));
            const Vec2   d   = m_nodes[e.v[1]].point() - m_nodes[e.v[0]].point();
            const double len = d.norm();
            if (len == 0.0)
                throw mesh_error("degenerate boundary edge");
            e.normal = Vec2(d.y() / len, -d.x() / len);
        }
        for (const auto& t : m_triangles)
            for (int k = 0; k < 3; ++k)
            {
                const Vec2 d = m_nodes[t.v[(k + 1) % 3]].point() - m_nodes[t.v[k]].point();
                m_h = std::max(m_h, d.norm());
            }
    }

    const std::vector<Node>&
    nodes() const
    {
        return m_nodes;
    }
    const std::vector<Triangle>&
    triangles() const
    {
        return m_triangles;
    }
    const std::vector<BoundaryEdge>&
    boundary_edges() const
    {
        return m_edges;
    }
    std::size_t
    num_nodes() const
    {
        return m_nodes.size();
    }
    std::size_t
    num_triangles() const
    {
        return m_triangles.size();
    }
    double
    h() const
    {
        return m_h;
    }

    Vec2
    point(std::size_t i) const
    {
        return m_nodes[i].point();
    }

    const std::shared_ptr<const Mesh>&
    parent() const
    {
        return m_parent;
    }
    const std::vector<NodeParent>&
    node_parents() const
    {
        return m_node_parent;
    }
    const std::vector<std::size_t>&
    element_parents() const
    {
        return m_element_parent;
    }

    void
    set_parent(std::shared_ptr<const Mesh> parent, std::vector<NodeParent> np, std::vector<std::size_t> ep)
    {
        m_parent         = std::move(parent);
        m_node_parent    = std::move(np);
        m_element_parent = std::move(ep);
    }

    double
    signed_area(std::size_t t) const
    {
        const auto& tri = m_triangles[t];
        const Vec2  a = point(tri.v[0]), b = point(tri.v[1]), c = point(tri.v[2]);
        return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
    }

    double
    edge_length(const BoundaryEdge& e) const
    {
        return (point(e.v[1]) - point(e.v[0])).norm();
    }

    /// Nodes incident to at least one CONTACT edge (sorted).
    std::vector<std::size_t>
    contact_nodes() const
    {
        std::set<std::size_t> s;
        for (const auto& e : m_edges)
            if (e.tag == BoundaryTag::contact)
                s.insert(e.v.begin(), e.v.end());
        return {s.begin(), s.end()};
    }

    /// Mesh geometry, topology and tags compared field by field (provenance is
    /// not part of the comparison).
    bool
    same_geometry(const Mesh& o) const
    {
        return m_nodes == o.m_nodes && m_triangles == o.m_triangles && m_edges == o.m_edges && m_h == o.m_h;
    }
};

inline Mesh
generate_rect_mesh(double lx, double ly, std::size_t nx, std::size_t ny, ContactSide contact_side,
                   DiagonalPattern pattern = DiagonalPattern::right)
{
    if (!(lx > 0.0) || !(ly > 0.0))
        throw std::invalid_argument("rectangle dimensions must be positive");
    if (nx == 0 || ny == 0)
        throw std::invalid_argument("subdivision counts must be at least 1");

    std::vector<Node> nodes;
    auto              grid = [&](std::size_t i, std::size_t j) { return j * (nx + 1) + i; };
    for (std::size_t j = 0; j <= ny; ++j)
        for (std::size_t i = 0; i <= nx; ++i)
            nodes.push_back({grid(i, j), lx * double(i) / double(nx), ly * double(j) / double(ny)});

    std::vector<Triangle> tris;
    for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t i = 0; i < nx; ++i)
        {
            const auto p00 = grid(i, j), p10 = grid(i + 1, j), p11 = grid(i + 1, j + 1), p01 = grid(i, j + 1);
            if (pattern == DiagonalPattern::right)
            {
                tris.push_back({{p00, p10, p11}});
                tris.push_back({{p00, p11, p01}});
            }
            else
            {
                const std::size_t c = nodes.size();
                nodes.push_back({c, lx * (double(i) + 0.5) / double(nx), ly * (double(j) + 0.5) / double(ny)});
                tris.push_back({{p00, p10, c}});
                tris.push_back({{p10, p11, c}});
                tris.push_back({{p11, p01, c}});
                tris.push_back({{p01, p00, c}});
            }
        }

    auto tag_for = [&](ContactSide side) {
        return side == contact_side ? BoundaryTag::contact : BoundaryTag::neumann;
    };
    std::vector<BoundaryEdge> edges;
    for (std::size_t i = 0; i < nx; ++i)
        edges.push_back({{grid(i, 0), grid(i + 1, 0)}, tag_for(ContactSide::bottom), {}});
    for (std::size_t j = 0; j < ny; ++j)
        edges.push_back({{grid(nx, j), grid(nx, j + 1)}, tag_for(ContactSide::right), {}});
    for (std::size_t i = nx; i > 0; --i)
        edges.push_back({{grid(i, ny), grid(i - 1, ny)}, tag_for(ContactSide::top), {}});
    for (std::size_t j = ny; j > 0; --j)
        edges.push_back({{grid(0, j), grid(0, j - 1)}, tag_for(ContactSide::left), {}});

    return Mesh(std::move(nodes), std::move(tris), std::move(edges));
}

/// Red refinement: every triangle is split into four through its edge
/// midpoints. The child keeps a reference to the parent and the node/element
/// provenance maps used for exact prolongation.
inline std::shared_ptr<const Mesh>
refine_uniform(const std::shared_ptr<const Mesh>& parent)
{
    if (!parent)
        throw std::invalid_argument("refine_uniform: null mesh");
    const Mesh& m = *parent;

    std::vector<Node>             nodes = m.nodes();
    std::vector<Mesh::NodeParent> node_parent;
    node_parent.reserve(nodes.size() * 4);
    for (std::size_t i = 0; i < nodes.size(); ++i)
        node_parent.push_back({i, i});

    std::map<std::pair<std::size_t, std::size_t>, std::size_t> midpoint;
    auto                                                       mid = [&](std::size_t a, std::size_t b) {
        const auto key = std::minmax(a, b);
        auto       it  = midpoint.find(key);
        if (it != midpoint.end())
            return it->second;
        const std::size_t id = nodes.size();
        const Vec2        p  = 0.5 * (m.point(a) + m.point(b));
        nodes.push_back({id, p.x(), p.y()});
        node_parent.push_back({key.first, key.second});
        midpoint.emplace(key, id);
        return id;
    };

    std::vector<Triangle>    tris;
    std::vector<std::size_t> elem_parent;
    tris.reserve(4 * m.num_triangles());
    for (std::size_t t = 0; t < m.num_triangles(); ++t)
    {
        const auto [a, b, c] = m.triangles()[t].v;
        const auto ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
        tris.push_back({{a, ab, ca}});
        tris.push_back({{ab, b, bc}});
        tris.push_back({{ca, bc, c}});
        tris.push_back({{ab, bc, ca}});
        elem_parent.insert(elem_parent.end(), 4, t);
    }

    std::vector<BoundaryEdge> edges;
    for (const auto& e : m.boundary_edges())
    {
        const auto mm = mid(e.v[0], e.v[1]);
        edges.push_back({{e.v[0], mm}, e.tag, {}});
        edges.push_back({{mm, e.v[1]}, e.tag, {}});
    }

    auto child = std::make_shared<Mesh>(std::move(nodes), std::move(tris), std::move(edges));
    child->set_parent(parent, std::move(node_parent), std::move(elem_parent));
    return child;
}

inline std::shared_ptr<const Mesh>
refine_uniform(const Mesh& m)
{
    return refine_uniform(std::make_shared<const Mesh>(m));
}

inline std::shared_ptr<const Mesh>
refine_times(std::shared_ptr<const Mesh> m, std::size_t times)
{
    for (std::size_t i = 0; i < times; ++i)
        m = refine_uniform(m);
    return m;
}

struct ValidationReport
{
    std::vector<std::string> orientation_errors;
    std::vector<std::string> untagged_edges;
    std::vector<std::string> hanging_nodes;
    std::vector<std::string> contact_normal_errors;
    std::vector<std::string> other_errors;

    bool
    ok() const
    {
        return orientation_errors.empty() && untagged_edges.empty() && hanging_nodes.empty() &&
               contact_normal_errors.empty() && other_errors.empty();
    }

    std::string
    summary() const
    {
        std::ostringstream os;
        auto               dump = [&](const char* what, const std::vector<std::string>& v) {
            for (const auto& s : v)
                os << what << ": " << s << '\n';
        };
        dump("orientation", orientation_errors);
        dump("untagged", untagged_edges);
        dump("hanging", hanging_nodes);
        dump("contact-normal", contact_normal_errors);
        dump("error", other_errors);
        return os.str();
    }
};

inline ValidationReport
validate_mesh(const Mesh& m)
{
    ValidationReport rep;

    for (std::size_t t = 0; t < m.num_triangles(); ++t)
    {
        const auto& v = m.triangles()[t].v;
        if (v[0] == v[1] || v[1] == v[2] || v[0] == v[2])
            rep.other_errors.push_back("triangle " + std::to_string(t) + " has repeated vertices");
        else if (!(m.signed_area(t) > 0.0))
            rep.orientation_errors.push_back("triangle " + std::to_string(t) + " is not counterclockwise");
    }

    // undirected edge -> adjacent triangles
    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> adjacency;
    for (std::size_t t = 0; t < m.num_triangles(); ++t)
        for (int k = 0; k < 3; ++k)
        {
            const auto& v = m.triangles()[t].v;
            adjacency[std::minmax(v[k], v[(k + 1) % 3])].push_back(t);
        }

    std::map<std::pair<std::size_t, std::size_t>, std::size_t> tagged;
    for (std::size_t i = 0; i < m.boundary_edges().size(); ++i)
    {
        const auto& e   = m.boundary_edges()[i];
        const auto  key = std::minmax(e.v[0], e.v[1]);
        if (!tagged.emplace(key, i).second)
            rep.other_errors.push_back("boundary edge " + std::to_string(i) + " is tagged twice");
        auto it = adjacency.find(key);
        if (it == adjacency.end() || it->second.size() != 1)
        {
            rep.other_errors.push_back("tagged edge " + std::to_string(i) + " is not on the mesh boundary");
            continue;
        }
        const auto& tri = m.triangles()[it->second.front()].v;
        std::size_t opposite = tri[0];
        for (auto v : tri)
            if (v != e.v[0] && v != e.v[1])
                opposite = v;
        if ((m.point(opposite) - m.point(e.v[0])).dot(e.normal) >= 0.0)
            rep.other_errors.push_back("boundary edge " + std::to_string(i) + " normal is not outward");
    }

    for (const auto& [key, tris] : adjacency)
    {
        if (tris.size() > 2)
            rep.other_errors.push_back("edge (" + std::to_string(key.first) + "," + std::to_string(key.second) +
                                       ") is shared by more than two triangles");
        if (tris.size() != 1)
            continue;
        // a boundary-like edge with a node in its interior is a hanging node
        const Vec2   a = m.point(key.first), b = m.point(key.second);
        const Vec2   d = b - a;
        const double len2 = d.squaredNorm();
        bool         hanging = false;
        for (std::size_t n = 0; n < m.num_nodes() && !hanging; ++n)
        {
            if (n == key.first || n == key.second)
                continue;
            const Vec2   p     = m.point(n) - a;
            const double cross = d.x() * p.y() - d.y() * p.x();
            const double s     = p.dot(d) / len2;
            if (std::abs(cross) <= 1e-12 * len2 && s > 1e-12 && s < 1.0 - 1e-12)
            {
                rep.hanging_nodes.push_back("node " + std::to_string(n) + " lies inside edge (" +
                                            std::to_string(key.first) + "," + std::to_string(key.second) + ")");
                hanging = true;
            }
        }
        if (!hanging && !tagged.count(key))
            rep.untagged_edges.push_back("edge (" + std::to_string(key.first) + "," + std::to_string(key.second) +
                                         ") has no tag");
    }

    // boundary closure: every boundary vertex has one incoming and one outgoing edge
    std::map<std::size_t, int> out_deg, in_deg;
    for (const auto& e : m.boundary_edges())
    {
        ++out_deg[e.v[0]];
        ++in_deg[e.v[1]];
    }
    for (const auto& [n, c] : out_deg)
        if (c != 1 || in_deg[n] != 1)
            rep.other_errors.push_back("boundary loop is not closed at node " + std::to_string(n));
    for (const auto& [n, c] : in_deg)
        if (!out_deg.count(n))
            rep.other_errors.push_back("boundary loop is not closed at node " + std::to_string(n));

    std::optional<Vec2> contact_normal;
    for (std::size_t i = 0; i < m.boundary_edges().size(); ++i)
    {
        const auto& e = m.boundary_edges()[i];
        if (e.tag != BoundaryTag::contact)
            continue;
        if (!contact_normal)
            contact_normal = e.normal;
        else if ((e.normal - *contact_normal).norm() > 1e-12)
            rep.contact_normal_errors.push_back("contact edge " + std::to_string(i) +
                                                " normal differs from the first contact edge");
    }
    return rep;
}

inline void
write_mesh(const Mesh& m, std::ostream& os)
{
    char buf[128];
    os << "tcmesh 1\n";
    os << "nodes " << m.num_nodes() << '\n';
    for (const auto& n : m.nodes())
    {
        std::snprintf(buf, sizeof buf, "%zu %.17g %.17g\n", n.id, n.x, n.y);
        os << buf;
    }
    os << "triangles " << m.num_triangles() << '\n';
    for (std::size_t t = 0; t < m.num_triangles(); ++t)
    {
        const auto& v = m.triangles()[t].v;
        os << t << ' ' << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
    }
    os << "boundary_edges " << m.boundary_edges().size() << '\n';
    for (std::size_t i = 0; i < m.boundary_edges().size(); ++i)
    {
        const auto& e = m.boundary_edges()[i];
        os << i << ' ' << e.v[0] << ' ' << e.v[1] << ' ' << (e.tag == BoundaryTag::contact ? 'C' : 'N') << '\n';
    }
}

inline void
write_mesh(const Mesh& m, const std::string& path)
{
    std::ofstream ofs(path);
    if (!ofs)
        throw std::runtime_error("cannot open '" + path + "' for writing");
    write_mesh(m, ofs);
    if (!ofs)
        throw std::runtime_error("error writing '" + path + "'");
}

namespace detail
{

class LineReader
{
    std::istream& m_is;
    std::size_t   m_line = 0;

  public:
    explicit LineReader(std::istream& is)
      : m_is(is)
    {
    }

    /// Next non-empty line split into tokens, comments removed.
    bool
    next(std::vector<std::string>& tokens)
    {
        std::string raw;
        while (std::getline(m_is, raw))
        {
            ++m_line;
            if (auto pos = raw.find('#'); pos != std::string::npos)
                raw.erase(pos);
            std::istringstream ss(raw);
            tokens.clear();
            for (std::string t; ss >> t;)
                tokens.push_back(t);
            if (!tokens.empty())
                return true;
        }
        return false;
    }

    std::size_t
    line() const
    {
        return m_line;
    }
};

inline std::size_t
parse_index(const std::string& tok, std::size_t line)
{
    std::size_t pos = 0;
    long long   v   = -1;
    try
    {
        v = std::stoll(tok, &pos);
    }
    catch (const std::exception&)
    {
        pos = 0;
    }
    if (pos != tok.size() || v < 0)
        throw parse_error(line, "expected a non-negative integer, got '" + tok + "'");
    return std::size_t(v);
}

inline double
parse_real(const std::string& tok, std::size_t line)
{
    std::size_t pos = 0;
    double      v   = 0.0;
    try
    {
        v = std::stod(tok, &pos);
    }
    catch (const std::exception&)
    {
        pos = 0;
    }
    if (pos != tok.size())
        throw parse_error(line, "expected a number, got '" + tok + "'");
    return v;
}

} // namespace detail

inline Mesh
read_mesh(std::istream& is)
{
    detail::LineReader       rd(is);
    std::vector<std::string> tok;

    if (!rd.next(tok))
        throw parse_error(rd.line(), "missing header");
    if (tok.size() != 2 || tok[0] != "tcmesh" || tok[1] != "1")
        throw parse_error(rd.line(), "missing header (expected 'tcmesh 1', got '" + tok[0] + "')");

    auto section = [&](const char* name) {
        if (!rd.next(tok))
            throw parse_error(rd.line(), std::string("missing section '") + name + "'");
        if (tok.size() != 2 || tok[0] != name)
            throw parse_error(rd.line(), std::string("expected section '") + name + "', got '" + tok[0] + "'");
        return detail::parse_index(tok[1], rd.line());
    };
    auto row = [&](std::size_t expected_id, std::size_t width) {
        if (!rd.next(tok))
            throw parse_error(rd.line(), "unexpected end of file");
        if (tok.size() != width)
            throw parse_error(rd.line(), "expected " + std::to_string(width) + " fields, got " +
                                             std::to_string(tok.size()));
        if (detail::parse_index(tok[0], rd.line()) != expected_id)
            throw parse_error(rd.line(), "ids must be contiguous from 0, got '" + tok[0] + "'");
    };

    std::vector<Node> nodes(section("nodes"));
    for (std::size_t i = 0; i < nodes.size(); ++i)
    {
        row(i, 3);
        nodes[i] = {i, detail::parse_real(tok[1], rd.line()), detail::parse_real(tok[2], rd.line())};
    }
    std::vector<Triangle> tris(section("triangles"));
    for (std::size_t i = 0; i < tris.size(); ++i)
    {
        row(i, 4);
        for (int k = 0; k < 3; ++k)
        {
            tris[i].v[k] = detail::parse_index(tok[k + 1], rd.line());
            if (tris[i].v[k] >= nodes.size())
                throw parse_error(rd.line(), "node index out of range: '" + tok[k + 1] + "'");
        }
    }
    std::vector<BoundaryEdge> edges(section("boundary_edges"));
    for (std::size_t i = 0; i < edges.size(); ++i)
    {
        row(i, 4);
        for (int k = 0; k < 2; ++k)
        {
            edges[i].v[k] = detail::parse_index(tok[k + 1], rd.line());
            if (edges[i].v[k] >= nodes.size())
                throw parse_error(rd.line(), "node index out of range: '" + tok[k + 1] + "'");
        }
        if (tok[3] == "N")
            edges[i].tag = BoundaryTag::neumann;
        else if (tok[3] == "C")
            edges[i].tag = BoundaryTag::contact;
        else
            throw parse_error(rd.line(), "unknown boundary tag '" + tok[3] + "'");
    }
    if (rd.next(tok))
        throw parse_error(rd.line(), "trailing content '" + tok[0] + "'");
    try
    {
        return Mesh(std::move(nodes), std::move(tris), std::move(edges));
    }
    catch (const mesh_error& e)
    {
        throw parse_error(rd.line(), e.what());
    }
}

inline Mesh
read_mesh(const std::string& path)
{
    std::ifstream ifs(path);
    if (!ifs)
        throw std::runtime_error("cannot open '" + path + "'");
    return read_mesh(ifs);
}

} // namespace tcfem
