#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <utility>

#include "pconcave/geometry.hpp"

namespace pconcave {

// Conforming simplicial mesh of a ConvexDomain: segments in 1D, triangles
// in 2D. Immutable after construction; safe for concurrent reads.
struct Mesh {
    int dim = 2;
    ConvexDomain domain = ConvexDomain::interval(0, 1);
    std::vector<Vec2> nodes;                // y == 0 in 1D
    std::vector<std::array<int, 3>> elems;  // 1D stores {i, j, -1}
    std::vector<int> boundary_nodes;        // ascending
    std::vector<char> node_on_boundary;     // per-node flag
    double h = 0.0;                         // max element diameter

    int node_count() const { return static_cast<int>(nodes.size()); }
    int elem_count() const { return static_cast<int>(elems.size()); }

    double elem_measure(int e) const {
        const auto& el = elems[e];
        if (dim == 1) return std::abs(nodes[el[1]].x - nodes[el[0]].x);
        return 0.5 * cross(nodes[el[1]] - nodes[el[0]], nodes[el[2]] - nodes[el[0]]);
    }

    double elem_diameter(int e) const {
        const auto& el = elems[e];
        if (dim == 1) return std::abs(nodes[el[1]].x - nodes[el[0]].x);
        const double d0 = norm(nodes[el[1]] - nodes[el[0]]);
        const double d1 = norm(nodes[el[2]] - nodes[el[1]]);
        const double d2 = norm(nodes[el[0]] - nodes[el[2]]);
        return std::max({d0, d1, d2});
    }

    // Barycentric coordinates of p in triangle e (2D only).
    std::array<double, 3> barycentric(int e, Vec2 p) const {
        const auto& el = elems[e];
        const Vec2 a = nodes[el[0]], b = nodes[el[1]], c = nodes[el[2]];
        const double det = cross(b - a, c - a);
        const double l1 = cross(p - a, c - a) / det;
        const double l2 = cross(b - a, p - a) / det;
        return {1.0 - l1 - l2, l1, l2};
    }

    // Uniform-bucket point locator, built once at construction.
    struct Locator {
        double x0 = 0, y0 = 0, cell = 1;
        int nx = 0, ny = 0;
        std::vector<std::vector<int>> buckets;
    };
    Locator locator;

    // Element containing p, or -1. bary gets the barycentric coordinates.
    int locate(Vec2 p, std::array<double, 3>& bary, double tol = 1e-10) const {
        if (dim == 1) {
            if (p.x < domain.a() - kEdgeTol || p.x > domain.b() + kEdgeTol) return -1;
            int e = static_cast<int>((p.x - domain.a()) / h);
            e = std::clamp(e, 0, elem_count() - 1);
            while (e > 0 && p.x < nodes[elems[e][0]].x) --e;
            while (e + 1 < elem_count() && p.x > nodes[elems[e][1]].x) ++e;
            const double x0 = nodes[elems[e][0]].x, x1 = nodes[elems[e][1]].x;
            bary = {(x1 - p.x) / (x1 - x0), (p.x - x0) / (x1 - x0), 0.0};
            return e;
        }
        const auto try_elem = [&](int e) {
            const auto l = barycentric(e, p);
            if (l[0] >= -tol && l[1] >= -tol && l[2] >= -tol) {
                bary = l;
                return true;
            }
            return false;
        };
        int cx = static_cast<int>((p.x - locator.x0) / locator.cell);
        int cy = static_cast<int>((p.y - locator.y0) / locator.cell);
        for (int ring = 0; ring <= 1; ++ring) {
            for (int dy = -ring; dy <= ring; ++dy) {
                for (int dx = -ring; dx <= ring; ++dx) {
                    if (std::max(std::abs(dx), std::abs(dy)) != ring) continue;
                    const int gx = cx + dx, gy = cy + dy;
                    if (gx < 0 || gy < 0 || gx >= locator.nx || gy >= locator.ny) continue;
                    for (int e : locator.buckets[static_cast<std::size_t>(gy) * locator.nx + gx]) {
                        if (try_elem(e)) return e;
                    }
                }
            }
        }
        for (int e = 0; e < elem_count(); ++e) {
            if (try_elem(e)) return e;
        }
        return -1;
    }
};

namespace detail {

inline void build_locator(Mesh& m) {
    if (m.dim == 1 || m.elems.empty()) return;
    double xmin = m.nodes[0].x, xmax = xmin, ymin = m.nodes[0].y, ymax = ymin;
    for (const auto& p : m.nodes) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    auto& loc = m.locator;
    loc.cell = std::max(1.5 * m.h, 1e-12);
    loc.x0 = xmin - 0.5 * loc.cell;
    loc.y0 = ymin - 0.5 * loc.cell;
    loc.nx = static_cast<int>((xmax - loc.x0) / loc.cell) + 2;
    loc.ny = static_cast<int>((ymax - loc.y0) / loc.cell) + 2;
    loc.buckets.assign(static_cast<std::size_t>(loc.nx) * loc.ny, {});
    for (int e = 0; e < m.elem_count(); ++e) {
        const auto& el = m.elems[e];
        double exmin = m.nodes[el[0]].x, exmax = exmin, eymin = m.nodes[el[0]].y, eymax = eymin;
        for (int k = 1; k < 3; ++k) {
            exmin = std::min(exmin, m.nodes[el[k]].x);
            exmax = std::max(exmax, m.nodes[el[k]].x);
            eymin = std::min(eymin, m.nodes[el[k]].y);
            eymax = std::max(eymax, m.nodes[el[k]].y);
        }
        const int gx0 = static_cast<int>((exmin - loc.x0) / loc.cell);
        const int gx1 = static_cast<int>((exmax - loc.x0) / loc.cell);
        const int gy0 = static_cast<int>((eymin - loc.y0) / loc.cell);
        const int gy1 = static_cast<int>((eymax - loc.y0) / loc.cell);
        for (int gy = gy0; gy <= gy1; ++gy)
            for (int gx = gx0; gx <= gx1; ++gx)
                loc.buckets[static_cast<std::size_t>(gy) * loc.nx + gx].push_back(e);
    }
}

inline void classify_boundary(Mesh& m) {
    m.node_on_boundary.assign(m.nodes.size(), 0);
    m.boundary_nodes.clear();
    for (int i = 0; i < m.node_count(); ++i) {
        const bool onb = m.dim == 1
                             ? (std::abs(m.nodes[i].x - m.domain.a()) <= kEdgeTol ||
                                std::abs(m.nodes[i].x - m.domain.b()) <= kEdgeTol)
                             : m.domain.boundary_distance(m.nodes[i]) <= kEdgeTol;
        if (onb) {
            m.node_on_boundary[i] = 1;
            m.boundary_nodes.push_back(i);
        }
    }
}

}  // namespace detail

// Deterministic triangulation: fan from the centroid, then uniform midpoint
// refinement until every element diameter is <= h_target. 1D intervals get a
// uniform grid.
inline Mesh triangulate(const ConvexDomain& domain, double h_target) {
    if (!(h_target > 0.0)) throw std::invalid_argument("triangulate: h_target must be > 0");
    Mesh m;
    m.domain = domain;
    if (domain.is_interval()) {
        m.dim = 1;
        const double len = domain.b() - domain.a();
        const int n = std::max(1, static_cast<int>(std::ceil(len / h_target - 1e-12)));
        m.nodes.reserve(static_cast<std::size_t>(n) + 1);
        for (int i = 0; i <= n; ++i) {
            m.nodes.push_back({domain.a() + len * i / n, 0.0});
        }
        for (int i = 0; i < n; ++i) m.elems.push_back({i, i + 1, -1});
        m.h = len / n;
        detail::classify_boundary(m);
        return m;
    }

    m.dim = 2;
    const auto& verts = domain.vertices();
    const Vec2 c = domain.centroid();
    m.nodes = verts;
    m.nodes.push_back(c);
    const int ci = static_cast<int>(m.nodes.size()) - 1;
    for (int i = 0; i < static_cast<int>(verts.size()); ++i) {
        m.elems.push_back({ci, i, (i + 1) % static_cast<int>(verts.size())});
    }

    auto max_diam = [&m]() {
        double d = 0.0;
        for (int e = 0; e < m.elem_count(); ++e) d = std::max(d, m.elem_diameter(e));
        return d;
    };

    while (max_diam() > h_target) {
        std::map<std::pair<int, int>, int> edge_mid;
        auto mid_node = [&](int i, int j) {
            const auto key = std::minmax(i, j);
            auto it = edge_mid.find(key);
            if (it != edge_mid.end()) return it->second;
            m.nodes.push_back(midpoint(m.nodes[i], m.nodes[j]));
            const int id = static_cast<int>(m.nodes.size()) - 1;
            edge_mid.emplace(key, id);
            return id;
        };
        std::vector<std::array<int, 3>> fine;
        fine.reserve(m.elems.size() * 4);
        for (const auto& el : m.elems) {
            const int a = el[0], b = el[1], cc = el[2];
            const int ab = mid_node(a, b), bc = mid_node(b, cc), ca = mid_node(cc, a);
            fine.push_back({a, ab, ca});
            fine.push_back({ab, b, bc});
            fine.push_back({ca, bc, cc});
            fine.push_back({ab, bc, ca});
        }
        m.elems = std::move(fine);
    }
    m.h = max_diam();
    detail::classify_boundary(m);
    detail::build_locator(m);
    return m;
}

// Nodal P1 field over a mesh.
struct ScalarField {
    const Mesh* mesh = nullptr;
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(const Mesh& m, double fill = 0.0)
        : mesh(&m), values(m.nodes.size(), fill) {}

    double max() const { return *std::max_element(values.begin(), values.end()); }
    double min() const { return *std::min_element(values.begin(), values.end()); }
};

// Barycentric P1 interpolation at a point inside the domain.
inline double interpolate(const ScalarField& f, Vec2 p) {
    const Mesh& m = *f.mesh;
    if (!m.domain.contains(p)) throw OutsideDomainError("interpolate: point outside domain");
    std::array<double, 3> l{};
    const int e = m.locate(p, l);
    if (e < 0) throw OutsideDomainError("interpolate: no containing element");
    const auto& el = m.elems[e];
    if (m.dim == 1) return l[0] * f.values[el[0]] + l[1] * f.values[el[1]];
    return l[0] * f.values[el[0]] + l[1] * f.values[el[1]] + l[2] * f.values[el[2]];
}

// CSV export: node table (id,x,y), blank line, element table (id,n0,n1,n2).
inline void write_mesh_csv(const Mesh& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "id,x,y\n";
    char buf[128];
    for (int i = 0; i < m.node_count(); ++i) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", i, m.nodes[i].x, m.nodes[i].y);
        out << buf;
    }
    out << "\n";
    out << "id,n0,n1,n2\n";
    for (int e = 0; e < m.elem_count(); ++e) {
        out << e << ',' << m.elems[e][0] << ',' << m.elems[e][1] << ',' << m.elems[e][2] << '\n';
    }
}

// Rebuild a mesh from its CSV export. Boundary nodes are recovered
// topologically (edges used by a single triangle); the domain is recovered
// as the convex hull of the boundary nodes in 2D, the x-range in 1D.
inline Mesh read_mesh_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    Mesh m;
    std::string line;
    if (!std::getline(in, line) || line.rfind("id,x,y", 0) != 0)
        throw std::runtime_error(path + ": expected node header id,x,y");
    while (std::getline(in, line) && !line.empty() && line.rfind("id,", 0) != 0) {
        int id = 0;
        double x = 0, y = 0;
        if (std::sscanf(line.c_str(), "%d,%lf,%lf", &id, &x, &y) != 3)
            throw std::runtime_error(path + ": bad node row: " + line);
        if (id != static_cast<int>(m.nodes.size()))
            throw std::runtime_error(path + ": node ids must be consecutive from 0");
        m.nodes.push_back({x, y});
    }
    if (line.empty() && !std::getline(in, line))
        throw std::runtime_error(path + ": missing element table");
    if (line.rfind("id,n0,n1,n2", 0) != 0)
        throw std::runtime_error(path + ": expected element header id,n0,n1,n2");
    while (std::getline(in, line) && !line.empty()) {
        int id = 0, n0 = 0, n1 = 0, n2 = 0;
        if (std::sscanf(line.c_str(), "%d,%d,%d,%d", &id, &n0, &n1, &n2) != 4)
            throw std::runtime_error(path + ": bad element row: " + line);
        m.elems.push_back({n0, n1, n2});
    }
    if (m.elems.empty()) throw std::runtime_error(path + ": no elements");
    m.dim = (m.elems[0][2] < 0) ? 1 : 2;

    double hmax = 0.0;
    if (m.dim == 1) {
        double a = m.nodes[0].x, b = a;
        for (const auto& p : m.nodes) {
            a = std::min(a, p.x);
            b = std::max(b, p.x);
        }
        m.domain = ConvexDomain::interval(a, b);
        for (int e = 0; e < m.elem_count(); ++e) hmax = std::max(hmax, m.elem_diameter(e));
        m.h = hmax;
        detail::classify_boundary(m);
        return m;
    }

    // Boundary = edges referenced by exactly one triangle.
    std::map<std::pair<int, int>, int> edge_use;
    for (const auto& el : m.elems) {
        for (int k = 0; k < 3; ++k) {
            ++edge_use[std::minmax(el[k], el[(k + 1) % 3])];
        }
    }
    m.node_on_boundary.assign(m.nodes.size(), 0);
    std::vector<Vec2> bpts;
    for (const auto& [edge, uses] : edge_use) {
        if (uses == 1) {
            m.node_on_boundary[edge.first] = 1;
            m.node_on_boundary[edge.second] = 1;
        }
    }
    for (int i = 0; i < m.node_count(); ++i) {
        if (m.node_on_boundary[i]) {
            m.boundary_nodes.push_back(i);
            bpts.push_back(m.nodes[i]);
        }
    }
    m.domain = ConvexDomain::polygon(convex_hull(std::move(bpts)));
    for (int e = 0; e < m.elem_count(); ++e) hmax = std::max(hmax, m.elem_diameter(e));
    m.h = hmax;
    detail::build_locator(m);
    return m;
}

}  // namespace pconcave
