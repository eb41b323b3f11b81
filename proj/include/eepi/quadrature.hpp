#pragma once

#include "eepi/types.hpp"

#include <array>
#include <cmath>
#include <utility>
#include <vector>

namespace eepi::quad
{

namespace detail
{
// Gauss-Kronrod 7-15 nodes on [-1, 1] (positive half, centre last).
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename T>
struct Wrapped;

inline double magnitude(const Vector& v) { return v.cwiseAbs().maxCoeff(); }
template <typename T>
inline double magnitude(const Wrapped<T>& w)
{
    return std::abs(w.v);
}

template <typename F>
auto gk15(F&& f, double a, double b)
{
    const double centre = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    auto fc = f(centre);
    auto kronrod = (fc * kKronrodWeights[7]).eval();
    auto gauss = (fc * kGaussWeights[3]).eval();
    for (int i = 0; i < 7; ++i)
    {
        const double dx = half * kKronrodNodes[i];
        auto f1 = f(centre - dx);
        auto f2 = f(centre + dx);
        kronrod += (f1 + f2) * kKronrodWeights[i];
        if (i % 2 == 1)
            gauss += (f1 + f2) * kGaussWeights[i / 2];
    }
    auto value = (kronrod * half).eval();
    const double err = magnitude(((kronrod - gauss) * half).eval());
    return std::pair{value, err};
}

template <typename T>
struct Wrapped
{
    T v;
    Wrapped eval() const { return *this; }
    Wrapped operator+(const Wrapped& o) const { return {v + o.v}; }
    Wrapped operator-(const Wrapped& o) const { return {v - o.v}; }
    Wrapped operator*(double s) const { return {v * s}; }
    Wrapped& operator+=(const Wrapped& o)
    {
        v += o.v;
        return *this;
    }
};
}  // namespace detail

struct QuadResult
{
    double value = 0.0;
    double error = 0.0;
    bool converged = true;
};

/// Adaptive Gauss-Kronrod (7-15) integration of a scalar function over [a, b].
/// Stops when the error estimate is below max(absTol, relTol * |value|).
template <typename F>
QuadResult integrate(F&& f, double a, double b, double relTol = 1e-10, double absTol = 1e-14,
                     int maxIntervals = 2000)
{
    if (a == b)
        return {};
    struct Interval
    {
        double a, b, value, error;
    };
    auto wrapped = [&f](double x) { return detail::Wrapped<double>{static_cast<double>(f(x))}; };
    std::vector<Interval> intervals;
    auto [v0, e0] = detail::gk15(wrapped, a, b);
    intervals.push_back({a, b, v0.v, e0});
    double total = v0.v;
    double totalErr = e0;
    while (totalErr > std::max(absTol, relTol * std::abs(total)))
    {
        if (static_cast<int>(intervals.size()) >= maxIntervals)
            return {total, totalErr, false};
        size_t worst = 0;
        for (size_t i = 1; i < intervals.size(); ++i)
            if (intervals[i].error > intervals[worst].error)
                worst = i;
        const Interval w = intervals[worst];
        const double mid = 0.5 * (w.a + w.b);
        auto [vl, el] = detail::gk15(wrapped, w.a, mid);
        auto [vr, er] = detail::gk15(wrapped, mid, w.b);
        intervals[worst] = {w.a, mid, vl.v, el};
        intervals.push_back({mid, w.b, vr.v, er});
        total += vl.v + vr.v - w.value;
        totalErr += el + er - w.error;
    }
    return {total, totalErr, true};
}

/// Adaptive Gauss-Kronrod for vector-valued integrands; the error criterion is
/// the max-norm over components, relative to the max-norm of the value.
template <typename F>
Vector integrate_vector(F&& f, double a, double b, double relTol, double absTol, bool* converged = nullptr,
                        int maxIntervals = 2000)
{
    struct Interval
    {
        double a, b;
        Vector value;
        double error;
    };
    auto g = [&f](double x) -> Vector { return f(x); };
    std::vector<Interval> intervals;
    auto [v0, e0] = detail::gk15(g, a, b);
    intervals.push_back({a, b, v0, e0});
    Vector total = v0;
    double totalErr = e0;
    if (converged)
        *converged = true;
    while (totalErr > std::max(absTol, relTol * total.cwiseAbs().maxCoeff()))
    {
        if (static_cast<int>(intervals.size()) >= maxIntervals)
        {
            if (converged)
                *converged = false;
            break;
        }
        size_t worst = 0;
        for (size_t i = 1; i < intervals.size(); ++i)
            if (intervals[i].error > intervals[worst].error)
                worst = i;
        const Interval w = intervals[worst];
        const double mid = 0.5 * (w.a + w.b);
        auto [vl, el] = detail::gk15(g, w.a, mid);
        auto [vr, er] = detail::gk15(g, mid, w.b);
        intervals[worst] = {w.a, mid, vl, el};
        intervals.push_back({mid, w.b, vr, er});
        total += vl + vr - w.value;
        totalErr += el + er - w.error;
    }
    return total;
}

/// Gauss-Legendre nodes and weights on [0, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n)
{
    std::vector<double> x(n), w(n);
    for (int i = 0; i < n; ++i)
    {
        double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it)
        {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k)
            {
                const double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-15)
                break;
        }
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    return {x, w};
}

}  // namespace eepi::quad
