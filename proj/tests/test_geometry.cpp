#include "eepi/geometry.hpp"
#include "eepi/io.hpp"
#include "eepi/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace eepi;

namespace
{
PolygonSet square_with_hole()
{
    PolygonSet p = square(0, 0, 1, 1);
    p.add_ring({Point2(0.25, 0.25), Point2(0.75, 0.25), Point2(0.75, 0.75), Point2(0.25, 0.75)}, true);
    return p;
}

double inscribed(double r, int n) { return kPi * r * r * (n / (2.0 * kPi)) * std::sin(2.0 * kPi / n); }
}  // namespace

TEST_CASE("polygon_area with and without holes")
{
    CHECK(polygon_area(square(0, 0, 1, 1)) == doctest::Approx(1.0));
    CHECK(polygon_area(square_with_hole()) == doctest::Approx(0.75));
    CHECK_THROWS_AS(polygon_area(PolygonSet({{Point2(0, 0), Point2(1, 0)}}, {false})), Error);
}

TEST_CASE("point_in_polygon: inside, hole and boundary")
{
    const PolygonSet p = square_with_hole();
    CHECK(point_in_polygon(square(0, 0, 1, 1), Point2(0.5, 0.5)));
    CHECK_FALSE(point_in_polygon(p, Point2(0.5, 0.5)));
    CHECK(point_in_polygon(p, Point2(0.1, 0.1)));
    CHECK(point_in_polygon(p, Point2(0.0, 0.5)));
    CHECK_FALSE(point_in_polygon(p, Point2(1.5, 0.5)));
}

TEST_CASE("point_in_polygon Monte Carlo matches the area ratio")
{
    // L-shaped polygon
    const PolygonSet L({{Point2(0, 0), Point2(3, 0), Point2(3, 1), Point2(1, 1), Point2(1, 3), Point2(0, 3)}},
                       {false});
    CounterRng rng(5);
    const int n = 100000;
    int inside = 0;
    for (int i = 0; i < n; ++i)
        inside += point_in_polygon(L, Point2(3 * rng.uniform(), 3 * rng.uniform()));
    const double p = polygon_area(L) / 9.0;
    CHECK(std::abs(inside - n * p) <= 3.0 * std::sqrt(n * p * (1 - p)));
}

TEST_CASE("nb_order: single region, path and triangle inequality")
{
    BoolMatrix one = BoolMatrix::Constant(1, 1, false);
    CHECK(nb_order(one, 5)(0, 0) == 0);
    BoolMatrix path = BoolMatrix::Constant(3, 3, false);
    path(0, 1) = path(1, 0) = path(1, 2) = path(2, 1) = true;
    const auto o = nb_order(path, 5);
    CHECK(o(0, 2) == 2);
    CHECK(o(2, 0) == 2);
    BoolMatrix asym = path;
    asym(1, 0) = false;
    CHECK_THROWS_AS(nb_order(asym, 5), Error);

    const int U = 12;
    BoolMatrix a = BoolMatrix::Constant(U, U, false);
    CounterRng rng(3);
    for (int i = 0; i < U; ++i)
        for (int j = i + 1; j < U; ++j)
            if (rng.uniform() < 0.2)
                a(i, j) = a(j, i) = true;
    const auto d = nb_order(a, 100);
    for (int i = 0; i < U; ++i)
        for (int j = 0; j < U; ++j)
            for (int k = 0; k < U; ++k)
                if (d(i, j) < 100 && d(j, k) < 100 && d(i, k) < 100)
                    CHECK(d(i, k) <= d(i, j) + d(j, k));
}

TEST_CASE("intersect_poly_disc: inscribed area, half disc, monotone in r and n")
{
    const PolygonSet big = square(-100, -100, 100, 100);
    CHECK(polygon_area(intersect_poly_disc(big, Point2(3, 4), 10, 16)) == doctest::Approx(inscribed(10, 16)));
    const PolygonSet half = square(0, -100, 100, 100);
    CHECK(polygon_area(intersect_poly_disc(half, Point2(0, 0), 10, 16)) ==
          doctest::Approx(inscribed(10, 16) / 2));
    CHECK(intersect_poly_disc(square(0, 0, 1, 1), Point2(50, 50), 2, 16).empty());

    const PolygonSet L({{Point2(0, 0), Point2(3, 0), Point2(3, 1), Point2(1, 1), Point2(1, 3), Point2(0, 3)}},
                       {false});
    const Point2 c(1.2, 0.8);
    double prev = 0.0;
    for (double r = 0.2; r < 4.0; r += 0.2)
    {
        const double a = polygon_area(intersect_poly_disc(L, c, r, 64));
        CHECK(a >= prev - 1e-12);
        prev = a;
    }
    const double exact = disc_area_exact(translate(L, -c), 1.5);
    double prevErr = 1e300;
    for (int n : {16, 64, 256})
    {
        const double err = std::abs(polygon_area(intersect_poly_disc(L, c, 1.5, n)) - exact);
        CHECK(err <= prevErr);
        prevErr = err;
    }
    CHECK(prevErr < 1e-3);
}

TEST_CASE("intersect_poly_disc matches rejection sampling")
{
    CounterRng rng(11);
    const PolygonSet L({{Point2(0, 0), Point2(3, 0), Point2(3, 1), Point2(1, 1), Point2(1, 3), Point2(0, 3)}},
                       {false});
    for (int rep = 0; rep < 5; ++rep)
    {
        const Point2 c(3 * rng.uniform(), 3 * rng.uniform());
        const double r = 0.5 + 1.5 * rng.uniform();
        const PolygonSet clip = intersect_poly_disc(L, c, r, 16);
        const Ring gon = regular_polygon(c, r, 16);
        const PolygonSet gonSet({gon}, {false});
        const int n = 40000;
        int hit = 0;
        for (int i = 0; i < n; ++i)
        {
            const Point2 s(3 * rng.uniform(), 3 * rng.uniform());
            hit += point_in_polygon(L, s) && point_in_polygon(gonSet, s);
        }
        const double p = polygon_area(clip) / 9.0;
        CHECK(std::abs(hit - n * p) <= 3.5 * std::sqrt(n * p * (1 - p)) + 1);
    }
}

TEST_CASE("kernel_cubature: constants, Gaussian mass and power law")
{
    const PolygonSet L({{Point2(-1, -1), Point2(3, -1), Point2(3, 1), Point2(1, 1), Point2(1, 3), Point2(-1, 3)}},
                       {false});
    CHECK(kernel_cubature([](double) { return 2.5; }, L, 1e-8) == doctest::Approx(2.5 * polygon_area(L)));
    const double sigma = 1.3;
    const PolygonSet wide = square(-20 * sigma, -20 * sigma, 20 * sigma, 20 * sigma);
    CHECK(kernel_cubature([&](double x) { return std::exp(-x * x / (2 * sigma * sigma)); }, wide, 1e-9) ==
          doctest::Approx(2 * kPi * sigma * sigma).epsilon(1e-8));

    // power law over the inscribed 16-gon: compare with fine product Gauss
    const double s = 0.7, d = 2.3, R = 5.0;
    const PolygonSet gon({regular_polygon(Point2(0, 0), R, 16)}, {false});
    auto f = [&](double x) { return std::pow(x + s, -d); };
    const double green = kernel_cubature(f, gon, 1e-10);
    const double pg = product_gauss_cubature(f, gon, 60);
    CHECK(green == doctest::Approx(pg).epsilon(1e-8));
    // and the 1D radial oracle on the true disc bounds it from above
    double radial = 0.0;
    const int m = 200000;
    for (int i = 0; i < m; ++i)
    {
        const double x = (i + 0.5) * R / m;
        radial += 2 * kPi * x * f(x) * R / m;
    }
    CHECK(green < radial);
    CHECK(green > radial * 0.95);
}

TEST_CASE("annulus areas sum to the polygon area")
{
    const PolygonSet p = square(-4, -2, 6, 5);
    const Vector a = annulus_areas(p, {1.0, 2.5, 4.0});
    CHECK(a.sum() == doctest::Approx(polygon_area(p)).epsilon(1e-12));
    CHECK(a(0) == doctest::Approx(kPi).epsilon(1e-12));
}

TEST_CASE("GeoJSON with holes and adjacency edge lists")
{
    const std::string gj = R"({"type":"FeatureCollection","features":[
      {"type":"Feature","properties":{"id":"A"},"geometry":{"type":"Polygon","coordinates":[
        [[0,0],[2,0],[2,2],[0,2],[0,0]],[[0.5,0.5],[1.5,0.5],[1.5,1.5],[0.5,1.5],[0.5,0.5]]]}},
      {"type":"Feature","properties":{"id":"B"},"geometry":{"type":"MultiPolygon","coordinates":[
        [[[2,0],[3,0],[3,1],[2,1],[2,0]]],[[[2,1],[3,1],[3,2],[2,2],[2,1]]]]}}]})";
    const auto f = io::parse_geojson(gj);
    REQUIRE(f.size() == 2);
    CHECK(f[0].id == "A");
    CHECK(polygon_area(f[0].geometry) == doctest::Approx(3.0));
    CHECK(polygon_area(f[1].geometry) == doctest::Approx(2.0));
    CHECK(polygon_area(io::merge_features(f)) == doctest::Approx(5.0));

    const BoolMatrix adj = io::parse_adjacency("A,B\n", {"A", "B", "C"});
    CHECK(adj(0, 1));
    CHECK(adj(1, 0));
    CHECK_FALSE(adj(0, 2));
    CHECK_THROWS_AS(io::parse_adjacency("A,Z\n", {"A", "B"}), Error);
}
