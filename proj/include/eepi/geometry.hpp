#pragma once

#include "eepi/types.hpp"

#include <functional>
#include <vector>

namespace eepi
{

using Ring = std::vector<Point2>;

/// Set of closed rings; outer rings are counter-clockwise, holes clockwise.
/// Rings are stored without a repeated closing vertex.
struct PolygonSet
{
    std::vector<Ring> rings;
    std::vector<bool> isHole;
    Point2 lo = Point2::Zero();
    Point2 hi = Point2::Zero();

    PolygonSet() = default;
    /// Orients each ring according to its hole flag and caches the bounding box.
    PolygonSet(std::vector<Ring> rings, std::vector<bool> holes);

    bool empty() const { return rings.empty(); }
    void add_ring(Ring ring, bool hole);
    void update_bbox();
};

PolygonSet square(double x0, double y0, double x1, double y1);

double ring_signed_area(const Ring& ring);
double polygon_area(const PolygonSet& p);
/// Even-odd rule; points on an edge count as inside.
bool point_in_polygon(const PolygonSet& p, const Point2& pt);
PolygonSet translate(const PolygonSet& p, const Point2& offset);
/// Largest distance from `origin` to any vertex.
double max_distance(const PolygonSet& p, const Point2& origin);

/// Inscribed regular n-gon of the circle (centre, radius), counter-clockwise.
Ring regular_polygon(const Point2& centre, double radius, int n);
/// Clips every ring against a convex counter-clockwise polygon.
PolygonSet clip_convex(const PolygonSet& p, const Ring& convex);
PolygonSet intersect_poly_disc(const PolygonSet& p, const Point2& centre, double radius, int nVertices);

/// Graph distances from a symmetric adjacency matrix, capped at maxlag.
Eigen::MatrixXi nb_order(const BoolMatrix& adjacency, int maxlag);

/// Boundary line integral of F(r)/r^2 * (x dy - y dx), which equals the area
/// integral of f(|s|) when F(r) is the primitive of x f(x). The callback
/// returns F(r)/r^2 for several integrands at once.
Vector green_integral(const std::function<Vector(double)>& FoverR2, int dim, const PolygonSet& domain,
                      double tol, bool* converged = nullptr);

/// Integral of f(|s|) over a domain centred at the kernel origin. F is built by
/// adaptive quadrature; falls back to product Gauss over the triangle fan when
/// the line integral does not converge.
double kernel_cubature(const std::function<double(double)>& f, const PolygonSet& domain, double tol = 1e-6);

/// Same integral through product Gauss-Legendre on the fan triangles (0, p0, p1).
double product_gauss_cubature(const std::function<double(double)>& f, const PolygonSet& domain, int order);

/// Exact area of domain ∩ disc(0, radius) for a true circle.
double disc_area_exact(const PolygonSet& domain, double radius);

/// Exact areas of domain ∩ {knot_{m-1} <= |s| < knot_m} with knot_0 = 0, plus
/// the remainder beyond the last knot as the final entry.
Vector annulus_areas(const PolygonSet& domain, const std::vector<double>& knots);

}  // namespace eepi
