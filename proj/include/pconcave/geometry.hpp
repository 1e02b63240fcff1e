#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace pconcave {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }
inline Vec2 midpoint(Vec2 a, Vec2 b) { return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)}; }

struct NonConvexError : std::runtime_error {
    explicit NonConvexError(const std::string& what) : std::runtime_error(what) {}
};
struct DegenerateError : std::runtime_error {
    explicit DegenerateError(const std::string& what) : std::runtime_error(what) {}
};
struct OutsideDomainError : std::runtime_error {
    explicit OutsideDomainError(const std::string& what) : std::runtime_error(what) {}
};

// Half-plane containment tolerance (absolute, on signed distance to an edge).
inline constexpr double kEdgeTol = 1e-12;

// A bounded open convex domain: an interval (a,b) or a strictly convex
// polygon with counterclockwise vertices.
class ConvexDomain {
public:
    enum class Kind { Interval, Polygon };

    static ConvexDomain interval(double a, double b) {
        if (!(a < b)) throw DegenerateError("interval needs a < b");
        ConvexDomain d;
        d.kind_ = Kind::Interval;
        d.a_ = a;
        d.b_ = b;
        return d;
    }

    // Vertices may be given clockwise; they are reordered counterclockwise.
    // Throws NonConvexError if any consecutive-edge cross product is <= 0,
    // DegenerateError on repeated vertices or fewer than 3.
    static ConvexDomain polygon(std::vector<Vec2> verts) {
        if (verts.size() < 3) throw DegenerateError("polygon needs at least 3 vertices");
        const std::size_t n = verts.size();
        double scale = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            scale = std::max(scale, std::abs(verts[i].x) + std::abs(verts[i].y));
        }
        const double eps = 1e-14 * std::max(scale, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                if (norm(verts[i] - verts[j]) < eps) {
                    throw DegenerateError("repeated polygon vertex");
                }
            }
        }
        double area2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            area2 += cross(verts[i], verts[(i + 1) % n]);
        }
        if (area2 < 0.0) std::reverse(verts.begin(), verts.end());
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2 e0 = verts[(i + 1) % n] - verts[i];
            const Vec2 e1 = verts[(i + 2) % n] - verts[(i + 1) % n];
            if (!(cross(e0, e1) > 0.0)) {
                throw NonConvexError("polygon is not strictly convex at vertex " +
                                     std::to_string((i + 1) % n));
            }
        }
        ConvexDomain d;
        d.kind_ = Kind::Polygon;
        d.verts_ = std::move(verts);
        return d;
    }

    // Regular n-gon inscribed in the circle of given radius; used to
    // approximate discs.
    static ConvexDomain regular_polygon(int sides, double radius = 1.0, Vec2 center = {}) {
        std::vector<Vec2> v;
        v.reserve(static_cast<std::size_t>(sides));
        for (int k = 0; k < sides; ++k) {
            const double t = 2.0 * M_PI * k / sides;
            v.push_back({center.x + radius * std::cos(t), center.y + radius * std::sin(t)});
        }
        return polygon(std::move(v));
    }

    static ConvexDomain unit_square() {
        return polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
    }

    Kind kind() const { return kind_; }
    bool is_interval() const { return kind_ == Kind::Interval; }
    double a() const { return a_; }
    double b() const { return b_; }
    const std::vector<Vec2>& vertices() const { return verts_; }

    double area() const {
        if (is_interval()) return b_ - a_;
        double s = 0.0;
        for (std::size_t i = 0; i < verts_.size(); ++i) {
            s += cross(verts_[i], verts_[(i + 1) % verts_.size()]);
        }
        return 0.5 * s;
    }

    Vec2 centroid() const {
        if (is_interval()) return {0.5 * (a_ + b_), 0.0};
        double s = 0.0;
        Vec2 c{0, 0};
        for (std::size_t i = 0; i < verts_.size(); ++i) {
            const Vec2 p = verts_[i];
            const Vec2 q = verts_[(i + 1) % verts_.size()];
            const double w = cross(p, q);
            s += w;
            c = c + w * midpoint(p, q);
        }
        return {2.0 / 3.0 * c.x / s, 2.0 / 3.0 * c.y / s};
    }

    double diameter() const {
        if (is_interval()) return b_ - a_;
        double d = 0.0;
        for (std::size_t i = 0; i < verts_.size(); ++i)
            for (std::size_t j = i + 1; j < verts_.size(); ++j)
                d = std::max(d, norm(verts_[i] - verts_[j]));
        return d;
    }

    // Signed distance to the nearest edge half-plane: positive inside.
    double interior_margin(Vec2 p) const {
        if (is_interval()) return std::min(p.x - a_, b_ - p.x);
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < verts_.size(); ++i) {
            const Vec2 v0 = verts_[i];
            const Vec2 v1 = verts_[(i + 1) % verts_.size()];
            const Vec2 e = v1 - v0;
            m = std::min(m, cross(e, p - v0) / norm(e));
        }
        return m;
    }

    bool contains(Vec2 p, double tol = kEdgeTol) const { return interior_margin(p) >= -tol; }
    bool strictly_inside(Vec2 p, double tol = kEdgeTol) const { return interior_margin(p) > tol; }

    // Distance from p to the domain boundary (p assumed inside or near it).
    double boundary_distance(Vec2 p) const {
        if (is_interval()) return std::min(std::abs(p.x - a_), std::abs(b_ - p.x));
        double d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < verts_.size(); ++i) {
            const Vec2 v0 = verts_[i];
            const Vec2 v1 = verts_[(i + 1) % verts_.size()];
            const Vec2 e = v1 - v0;
            const double t = std::clamp(dot(p - v0, e) / dot(e, e), 0.0, 1.0);
            d = std::min(d, norm(p - (v0 + t * e)));
        }
        return d;
    }

private:
    Kind kind_ = Kind::Interval;
    double a_ = 0.0, b_ = 1.0;
    std::vector<Vec2> verts_;
};

inline ConvexDomain make_interval(double a, double b) { return ConvexDomain::interval(a, b); }
inline ConvexDomain make_polygon(std::vector<Vec2> verts) {
    return ConvexDomain::polygon(std::move(verts));
}

// Andrew monotone chain; returns hull vertices counterclockwise.
inline std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
    std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }),
              pts.end());
    const std::size_t n = pts.size();
    if (n < 3) return pts;
    std::vector<Vec2> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0) --k;
        hull[k++] = pts[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = n - 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

inline double polygon_area(const std::vector<Vec2>& poly) {
    double s = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        s += cross(poly[i], poly[(i + 1) % poly.size()]);
    }
    return 0.5 * s;
}

}  // namespace pconcave
