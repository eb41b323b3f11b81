#include "eepi/geometry.hpp"
#include "eepi/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace eepi
{

namespace
{
double cross(const Point2& a, const Point2& b) { return a.x() * b.y() - a.y() * b.x(); }

double signed_angle(const Point2& a, const Point2& b) { return std::atan2(cross(a, b), a.dot(b)); }

// Parameters t in (0, 1) where |p0 + t (p1 - p0)| = radius, ascending.
std::vector<double> circle_crossings(const Point2& p0, const Point2& p1, double radius)
{
    const Point2 e = p1 - p0;
    const double a = e.squaredNorm();
    const double b = p0.dot(e);
    const double c = p0.squaredNorm() - radius * radius;
    std::vector<double> ts;
    if (a == 0.0)
        return ts;
    const double disc = b * b - a * c;
    if (disc <= 0.0)
        return ts;
    const double sq = std::sqrt(disc);
    // Numerically stable pair of roots.
    const double q = -(b + std::copysign(sq, b));
    double t1 = q / a;
    double t2 = (q != 0.0) ? c / q : t1;
    if (t1 > t2)
        std::swap(t1, t2);
    for (double t : {t1, t2})
        if (t > 0.0 && t < 1.0)
            ts.push_back(t);
    return ts;
}
}  // namespace

PolygonSet::PolygonSet(std::vector<Ring> rs, std::vector<bool> holes)
{
    require(rs.size() == holes.size(), "ring and hole-flag counts differ");
    for (size_t i = 0; i < rs.size(); ++i)
        add_ring(std::move(rs[i]), holes[i]);
}

void PolygonSet::add_ring(Ring ring, bool hole)
{
    if (ring.size() >= 2 && ring.front() == ring.back())
        ring.pop_back();
    require(ring.size() >= 3, "degenerate ring with fewer than 3 vertices");
    const double a = ring_signed_area(ring);
    if ((a < 0.0) != hole)
        std::reverse(ring.begin(), ring.end());
    rings.push_back(std::move(ring));
    isHole.push_back(hole);
    update_bbox();
}

void PolygonSet::update_bbox()
{
    lo = Point2::Constant(kInf);
    hi = Point2::Constant(-kInf);
    for (const auto& r : rings)
        for (const auto& p : r)
        {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
    if (rings.empty())
    {
        lo.setZero();
        hi.setZero();
    }
}

PolygonSet square(double x0, double y0, double x1, double y1)
{
    return PolygonSet({{Point2(x0, y0), Point2(x1, y0), Point2(x1, y1), Point2(x0, y1)}}, {false});
}

double ring_signed_area(const Ring& ring)
{
    double s = 0.0;
    const size_t n = ring.size();
    for (size_t i = 0; i < n; ++i)
        s += cross(ring[i], ring[(i + 1) % n]);
    return 0.5 * s;
}

double polygon_area(const PolygonSet& p)
{
    double total = 0.0;
    for (const auto& r : p.rings)
    {
        require(r.size() >= 3, "degenerate ring with fewer than 3 vertices");
        total += ring_signed_area(r);
    }
    return std::max(total, 0.0);
}

bool point_in_polygon(const PolygonSet& p, const Point2& pt)
{
    if (p.empty() || (pt.array() < p.lo.array()).any() || (pt.array() > p.hi.array()).any())
        return false;
    bool inside = false;
    for (const auto& r : p.rings)
    {
        const size_t n = r.size();
        for (size_t i = 0, j = n - 1; i < n; j = i++)
        {
            const Point2& a = r[j];
            const Point2& b = r[i];
            const Point2 ab = b - a;
            const Point2 ap = pt - a;
            const double len2 = ab.squaredNorm();
            const double scale = std::max({1.0, std::abs(a.x()), std::abs(a.y()), std::abs(b.x()), std::abs(b.y())});
            if (std::abs(cross(ab, ap)) <= 1e-12 * scale * std::sqrt(len2) && ap.dot(ab) >= 0.0 && ap.dot(ab) <= len2)
                return true;
            if ((a.y() > pt.y()) != (b.y() > pt.y()))
            {
                const double x = a.x() + (pt.y() - a.y()) * ab.x() / ab.y();
                if (pt.x() < x)
                    inside = !inside;
            }
        }
    }
    return inside;
}

PolygonSet translate(const PolygonSet& p, const Point2& offset)
{
    PolygonSet out = p;
    for (auto& r : out.rings)
        for (auto& v : r)
            v += offset;
    out.update_bbox();
    return out;
}

double max_distance(const PolygonSet& p, const Point2& origin)
{
    double m = 0.0;
    for (const auto& r : p.rings)
        for (const auto& v : r)
            m = std::max(m, (v - origin).norm());
    return m;
}

Ring regular_polygon(const Point2& centre, double radius, int n)
{
    Ring r(n);
    for (int k = 0; k < n; ++k)
    {
        const double a = 2.0 * kPi * k / n;
        r[k] = centre + radius * Point2(std::cos(a), std::sin(a));
    }
    return r;
}

PolygonSet clip_convex(const PolygonSet& p, const Ring& convex)
{
    PolygonSet out;
    const size_t m = convex.size();
    for (size_t ri = 0; ri < p.rings.size(); ++ri)
    {
        Ring poly = p.rings[ri];
        for (size_t e = 0; e < m && !poly.empty(); ++e)
        {
            const Point2& a = convex[e];
            const Point2 dir = convex[(e + 1) % m] - a;
            auto side = [&](const Point2& q) { return cross(dir, q - a); };
            Ring next;
            const size_t n = poly.size();
            for (size_t i = 0; i < n; ++i)
            {
                const Point2& cur = poly[i];
                const Point2& prev = poly[(i + n - 1) % n];
                const double sc = side(cur);
                const double sp = side(prev);
                if (sc >= 0.0)
                {
                    if (sp < 0.0)
                        next.push_back(prev + (cur - prev) * (sp / (sp - sc)));
                    next.push_back(cur);
                }
                else if (sp >= 0.0)
                {
                    if (sp > 0.0)
                        next.push_back(prev + (cur - prev) * (sp / (sp - sc)));
                }
            }
            poly = std::move(next);
        }
        if (poly.size() < 3)
            continue;
        const double area = ring_signed_area(poly);
        if (std::abs(area) <= 1e-14 * std::max(1.0, std::abs(ring_signed_area(p.rings[ri]))))
            continue;
        out.rings.push_back(std::move(poly));
        out.isHole.push_back(p.isHole[ri]);
    }
    out.update_bbox();
    return out;
}

PolygonSet intersect_poly_disc(const PolygonSet& p, const Point2& centre, double radius, int nVertices)
{
    require(radius > 0.0, "disc radius must be positive");
    require(nVertices >= 8, "disc approximation needs at least 8 vertices");
    if (!std::isfinite(radius))
        return p;
    if (p.empty())
        return p;
    // Window entirely inside the polygonal disc: nothing to clip.
    const double inscribed = radius * std::cos(kPi / nVertices);
    if (max_distance(p, centre) <= inscribed)
        return p;
    return clip_convex(p, regular_polygon(centre, radius, nVertices));
}

Eigen::MatrixXi nb_order(const BoolMatrix& adjacency, int maxlag)
{
    require(adjacency.rows() == adjacency.cols(), "adjacency matrix must be square");
    require(maxlag >= 1, "maxlag must be at least 1");
    const int n = static_cast<int>(adjacency.rows());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            require(adjacency(i, j) == adjacency(j, i), "adjacency matrix is not symmetric");
    Eigen::MatrixXi order = Eigen::MatrixXi::Constant(n, n, maxlag);
    for (int s = 0; s < n; ++s)
    {
        std::vector<int> dist(n, -1);
        std::deque<int> queue{s};
        dist[s] = 0;
        while (!queue.empty())
        {
            const int u = queue.front();
            queue.pop_front();
            if (dist[u] >= maxlag)
                continue;
            for (int v = 0; v < n; ++v)
                if (v != u && adjacency(u, v) && dist[v] < 0)
                {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
        }
        for (int v = 0; v < n; ++v)
            if (dist[v] >= 0)
                order(s, v) = std::min(dist[v], maxlag);
    }
    return order;
}

Vector green_integral(const std::function<Vector(double)>& FoverR2, int dim, const PolygonSet& domain, double tol,
                      bool* converged)
{
    require(tol > 0.0, "cubature tolerance must be positive");
    Vector total = Vector::Zero(dim);
    bool ok = true;
    for (const auto& r : domain.rings)
    {
        const size_t n = r.size();
        for (size_t i = 0; i < n; ++i)
        {
            const Point2& p0 = r[i];
            const Point2& p1 = r[(i + 1) % n];
            const double d = cross(p0, p1);
            if (d == 0.0)
                continue;
            const Point2 e = p1 - p0;
            auto integrand = [&](double t) -> Vector { return FoverR2((p0 + t * e).norm()); };
            bool edgeOk = true;
            total += d * quad::integrate_vector(integrand, 0.0, 1.0, 0.1 * tol, 1e-300, &edgeOk);
            ok = ok && edgeOk;
        }
    }
    if (converged)
        *converged = ok;
    return total;
}

double product_gauss_cubature(const std::function<double(double)>& f, const PolygonSet& domain, int order)
{
    const auto [x, w] = quad::gauss_legendre(order);
    double total = 0.0;
    for (const auto& r : domain.rings)
    {
        const size_t n = r.size();
        for (size_t i = 0; i < n; ++i)
        {
            const Point2& p0 = r[i];
            const Point2& p1 = r[(i + 1) % n];
            const double d = cross(p0, p1);
            if (d == 0.0)
                continue;
            // Duffy map of the triangle (0, p0, p1): s = u (p0 + v (p1 - p0)).
            double tri = 0.0;
            for (int a = 0; a < order; ++a)
            {
                const double rv = (p0 + x[a] * (p1 - p0)).norm();
                double inner = 0.0;
                for (int b = 0; b < order; ++b)
                    inner += w[b] * x[b] * f(x[b] * rv);
                tri += w[a] * inner;
            }
            total += d * tri;
        }
    }
    return total;
}

double kernel_cubature(const std::function<double(double)>& f, const PolygonSet& domain, double tol)
{
    require(tol > 0.0, "cubature tolerance must be positive");
    // F(r)/r^2 = int_0^1 u f(u r) du, finite down to r = 0.
    bool finite = true;
    auto FoverR2 = [&](double r) -> Vector {
        const auto res = quad::integrate(
            [&](double u) {
                const double v = f(u * r);
                if (!std::isfinite(v))
                    finite = false;
                return u * v;
            },
            0.0, 1.0, 0.01 * tol, 1e-300);
        return Vector::Constant(1, res.value);
    };
    bool converged = true;
    const double value = green_integral(FoverR2, 1, domain, tol, &converged)(0);
    require(finite, "kernel is not finite on the integration domain", ErrorCode::Numerical);
    if (converged && std::isfinite(value))
        return value;
    return product_gauss_cubature(f, domain, 64);
}

double disc_area_exact(const PolygonSet& domain, double radius)
{
    if (!std::isfinite(radius))
        return polygon_area(domain);
    if (radius <= 0.0)
        return 0.0;
    const double r2 = radius * radius;
    double total = 0.0;
    for (const auto& r : domain.rings)
    {
        const size_t n = r.size();
        for (size_t i = 0; i < n; ++i)
        {
            const Point2& p0 = r[i];
            const Point2& p1 = r[(i + 1) % n];
            std::vector<double> ts{0.0};
            for (double t : circle_crossings(p0, p1, radius))
                ts.push_back(t);
            ts.push_back(1.0);
            for (size_t k = 0; k + 1 < ts.size(); ++k)
            {
                const Point2 a = p0 + ts[k] * (p1 - p0);
                const Point2 b = p0 + ts[k + 1] * (p1 - p0);
                const Point2 mid = 0.5 * (a + b);
                if (mid.squaredNorm() <= r2)
                    total += 0.5 * cross(a, b);
                else
                    total += 0.5 * r2 * signed_angle(a, b);
            }
        }
    }
    return std::max(total, 0.0);
}

Vector annulus_areas(const PolygonSet& domain, const std::vector<double>& knots)
{
    for (size_t k = 0; k < knots.size(); ++k)
        require(knots[k] > 0.0 && (k == 0 || knots[k] > knots[k - 1]), "knots must be positive and increasing");
    const size_t m = knots.size();
    Vector areas(m + 1);
    double inner = 0.0;
    for (size_t k = 0; k < m; ++k)
    {
        const double a = disc_area_exact(domain, knots[k]);
        areas(k) = std::max(a - inner, 0.0);
        inner = std::max(a, inner);
    }
    areas(m) = std::max(polygon_area(domain) - inner, 0.0);
    return areas;
}

}  // namespace eepi
