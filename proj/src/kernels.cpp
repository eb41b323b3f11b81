#include "eepi/kernels.hpp"
#include "eepi/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace eepi
{

namespace
{
// int_0^L exp(eps s) ds
double E(double eps, double L)
{
    if (std::abs(eps * L) < 1e-8)
        return L * (1.0 + 0.5 * eps * L);
    return std::expm1(eps * L) / eps;
}

// int_0^L s exp(eps s) ds
double S(double eps, double L)
{
    const double x = eps * L;
    if (std::abs(x) < 1e-3)
    {
        double sum = 0.0, term = L * L;  // L^{k+2} eps^k / k!
        for (int k = 0; k < 8; ++k)
        {
            sum += term / (k + 2);
            term *= x / (k + 1);
        }
        return sum;
    }
    return (std::exp(x) * (x - 1.0) + 1.0) / (eps * eps);
}

const std::vector<double>& gl20_nodes()
{
    static const auto nw = quad::gauss_legendre(20);
    return nw.first;
}
const std::vector<double>& gl20_weights()
{
    static const auto nw = quad::gauss_legendre(20);
    return nw.second;
}

// Step function helpers: height index for x with knots k_1..k_K and cutoff R.
// Returns -1 beyond R, 0 on [0, k_1), m on [k_m, k_{m+1}).
int step_interval(double x, const std::vector<double>& knots, double maxRange)
{
    if (x >= maxRange)
        return -1;
    const auto it = std::upper_bound(knots.begin(), knots.end(), x);
    return static_cast<int>(it - knots.begin());
}

double step_height(int m, const Vector& theta) { return m == 0 ? 1.0 : std::exp(theta(m - 1)); }

void check_step(const std::vector<double>& knots, double maxRange)
{
    require(!knots.empty(), "step kernel needs at least one knot", ErrorCode::InvalidSpec);
    for (size_t k = 0; k < knots.size(); ++k)
        require(knots[k] > 0.0 && (k == 0 || knots[k] > knots[k - 1]), "step knots must be positive and increasing",
                ErrorCode::InvalidSpec);
    require(maxRange > knots.back(), "maxRange must exceed the last knot", ErrorCode::InvalidSpec);
}
}  // namespace

std::string to_string(SiafKind kind)
{
    switch (kind)
    {
    case SiafKind::Constant:
        return "constant";
    case SiafKind::Gaussian:
        return "gaussian";
    case SiafKind::Powerlaw:
        return "powerlaw";
    case SiafKind::Step:
        return "step";
    }
    return "unknown";
}

std::string to_string(TiafKind kind)
{
    switch (kind)
    {
    case TiafKind::Constant:
        return "constant";
    case TiafKind::Exponential:
        return "exponential";
    case TiafKind::Step:
        return "step";
    }
    return "unknown";
}

SiafKind parse_siaf_kind(const std::string& name)
{
    if (name == "constant")
        return SiafKind::Constant;
    if (name == "gaussian")
        return SiafKind::Gaussian;
    if (name == "powerlaw")
        return SiafKind::Powerlaw;
    if (name == "step")
        return SiafKind::Step;
    throw Error(ErrorCode::InvalidSpec, "unknown spatial interaction function '" + name + "'");
}

TiafKind parse_tiaf_kind(const std::string& name)
{
    if (name == "constant")
        return TiafKind::Constant;
    if (name == "exponential")
        return TiafKind::Exponential;
    if (name == "step")
        return TiafKind::Step;
    throw Error(ErrorCode::InvalidSpec, "unknown temporal interaction function '" + name + "'");
}

// ---------------------------------------------------------------- siaf

int Siaf::npars() const
{
    switch (kind)
    {
    case SiafKind::Constant:
        return 0;
    case SiafKind::Gaussian:
        return 1;
    case SiafKind::Powerlaw:
        return 2;
    case SiafKind::Step:
        return static_cast<int>(knots.size());
    }
    return 0;
}

std::vector<std::string> Siaf::parameter_names() const
{
    switch (kind)
    {
    case SiafKind::Constant:
        return {};
    case SiafKind::Gaussian:
        return {"siaf.1"};
    case SiafKind::Powerlaw:
        return {"siaf.1", "siaf.2"};
    case SiafKind::Step:
    {
        std::vector<std::string> n;
        for (size_t k = 0; k < knots.size(); ++k)
            n.push_back("siaf." + std::to_string(k + 1));
        return n;
    }
    }
    return {};
}

double Siaf::f(double x, const Vector& theta) const
{
    switch (kind)
    {
    case SiafKind::Constant:
        return 1.0;
    case SiafKind::Gaussian:
    {
        const double s = std::exp(theta(0));
        return std::exp(-x * x / (2.0 * s * s));
    }
    case SiafKind::Powerlaw:
        return std::pow(x + std::exp(theta(0)), -std::exp(theta(1)));
    case SiafKind::Step:
    {
        const int m = step_interval(x, knots, maxRange);
        return m < 0 ? 0.0 : step_height(m, theta);
    }
    }
    return 0.0;
}

Vector Siaf::df(double x, const Vector& theta) const
{
    Vector d = Vector::Zero(npars());
    switch (kind)
    {
    case SiafKind::Constant:
        break;
    case SiafKind::Gaussian:
    {
        const double s = std::exp(theta(0));
        const double z = x * x / (s * s);
        d(0) = std::exp(-0.5 * z) * z;
        break;
    }
    case SiafKind::Powerlaw:
    {
        const double s = std::exp(theta(0));
        const double p = std::exp(theta(1));
        const double fx = std::pow(x + s, -p);
        d(0) = -p * s * fx / (x + s);
        d(1) = -p * std::log(x + s) * fx;
        break;
    }
    case SiafKind::Step:
    {
        const int m = step_interval(x, knots, maxRange);
        if (m > 0)
            d(m - 1) = step_height(m, theta);
        break;
    }
    }
    return d;
}

Vector Siaf::FoverR2(double r, const Vector& theta, bool withGradient) const
{
    const int np = withGradient ? npars() : 0;
    Vector out = Vector::Zero(1 + np);
    switch (kind)
    {
    case SiafKind::Constant:
        out(0) = 0.5;
        break;
    case SiafKind::Gaussian:
    {
        const double s2 = std::exp(2.0 * theta(0));
        const double u = r * r / (2.0 * s2);
        if (u < 1e-12)
        {
            out(0) = 0.5 * (1.0 - 0.5 * u);
            if (np)
                out(1) = 0.5 * u;
            break;
        }
        const double oneMinusE = -std::expm1(-u);
        out(0) = s2 * oneMinusE / (r * r);
        if (np)
            out(1) = 2.0 * out(0) - std::exp(-u);
        break;
    }
    case SiafKind::Powerlaw:
    {
        const double a = std::exp(theta(0));
        const double p = std::exp(theta(1));
        if (r <= 2.0 * a)
        {
            const auto& x = gl20_nodes();
            const auto& w = gl20_weights();
            for (int k = 0; k < 20; ++k)
            {
                const double v = x[k] * r + a;
                const double fv = std::pow(v, -p);
                out(0) += w[k] * x[k] * fv;
                if (np)
                {
                    out(1) += w[k] * x[k] * (-p * a * fv / v);
                    out(2) += w[k] * x[k] * (-p * std::log(v) * fv);
                }
            }
            break;
        }
        const double L = std::log1p(r / a);
        const double la = std::log(a);
        const double scale = std::exp((2.0 - p) * la);
        const double E2 = E(2.0 - p, L);
        const double E1 = E(1.0 - p, L);
        const double r2 = r * r;
        out(0) = scale * (E2 - E1) / r2;
        if (np)
        {
            const double E0 = E(-p, L);
            const double Fnext = std::exp((1.0 - p) * la) * (E1 - E0);
            out(1) = -p * a * Fnext / r2;
            const double G = scale * (la * (E2 - E1) + S(2.0 - p, L) - S(1.0 - p, L));
            out(2) = -p * G / r2;
        }
        break;
    }
    case SiafKind::Step:
    {
        // F(r) = sum of h_m (min(r, k_m)^2 - k_{m-1}^2)/2 over intervals below r.
        const int K = static_cast<int>(knots.size());
        double lower = 0.0;
        for (int m = 0; m <= K; ++m)
        {
            const double upper = std::min(m < K ? knots[m] : maxRange, maxRange);
            if (r <= lower)
                break;
            const double top = std::min(r, upper);
            const double piece = 0.5 * (top * top - lower * lower);
            const double h = step_height(m, theta);
            out(0) += h * piece;
            if (np && m > 0)
                out(m) += h * piece;
            lower = upper;
        }
        if (r > 0.0)
            out /= r * r;
        else
            out(0) = 0.5;
        break;
    }
    }
    return out;
}

double Siaf::F(double r, const Vector& theta) const
{
    if (!std::isfinite(r))
    {
        switch (kind)
        {
        case SiafKind::Gaussian:
            return std::exp(2.0 * theta(0));
        case SiafKind::Powerlaw:
        {
            const double a = std::exp(theta(0));
            const double p = std::exp(theta(1));
            require(p > 2.0, "power-law kernel with d <= 2 has infinite mass", ErrorCode::Numerical);
            return std::pow(a, 2.0 - p) * (1.0 / (p - 2.0) - 1.0 / (p - 1.0));
        }
        case SiafKind::Step:
            require(std::isfinite(maxRange), "step kernel without maxRange has infinite mass", ErrorCode::Numerical);
            return F(maxRange, theta);
        case SiafKind::Constant:
            throw Error(ErrorCode::Numerical, "constant kernel has infinite mass on the plane");
        }
    }
    return r * r * FoverR2(r, theta, false)(0);
}

RegionCache Siaf::cache(const PolygonSet& region) const
{
    RegionCache rc;
    rc.area = polygon_area(region);
    if (kind == SiafKind::Step)
    {
        check_step(knots, maxRange);
        std::vector<double> k = knots;
        if (std::isfinite(maxRange))
            k.push_back(maxRange);
        rc.annuli = annulus_areas(region, k);
    }
    return rc;
}

Vector Siaf::integrate(const PolygonSet& region, const RegionCache& rc, const Vector& theta, double tol,
                       bool withGradient) const
{
    const int np = withGradient ? npars() : 0;
    Vector out = Vector::Zero(1 + np);
    if (region.empty())
        return out;
    switch (kind)
    {
    case SiafKind::Constant:
        out(0) = rc.area;
        return out;
    case SiafKind::Step:
    {
        const int K = static_cast<int>(knots.size());
        for (int m = 0; m <= K; ++m)
        {
            const double v = step_height(m, theta) * rc.annuli(m);
            out(0) += v;
            if (np && m > 0)
                out(m) = v;
        }
        return out;
    }
    case SiafKind::Gaussian:
    case SiafKind::Powerlaw:
    {
        bool ok = true;
        out = green_integral([&](double r) { return FoverR2(r, theta, withGradient); }, 1 + np, region, tol, &ok);
        if (!ok)
            require(out.allFinite(), "kernel cubature failed", ErrorCode::Numerical);
        return out;
    }
    }
    return out;
}

Point2 Siaf::sample(double bound, const Vector& theta, CounterRng& rng) const
{
    require(bound > 0.0, "sampling bound must be positive");
    const double angle = 2.0 * kPi * rng.uniform();
    const double u = rng.uniform();
    double r = 0.0;
    switch (kind)
    {
    case SiafKind::Constant:
        require(std::isfinite(bound), "constant kernel needs a finite sampling bound", ErrorCode::Numerical);
        r = bound * std::sqrt(u);
        break;
    case SiafKind::Gaussian:
    {
        const double s = std::exp(theta(0));
        const double mass = std::isfinite(bound) ? -std::expm1(-bound * bound / (2.0 * s * s)) : 1.0;
        r = s * std::sqrt(-2.0 * std::log1p(-u * mass));
        break;
    }
    case SiafKind::Step:
    {
        const double R = std::min(bound, maxRange);
        require(std::isfinite(R), "step kernel needs a finite range for sampling", ErrorCode::Numerical);
        const double target = u * F(R, theta);
        // Invert the piecewise quadratic F.
        const int K = static_cast<int>(knots.size());
        double lower = 0.0, acc = 0.0;
        r = R;
        for (int m = 0; m <= K; ++m)
        {
            const double upper = std::min(m < K ? knots[m] : maxRange, R);
            const double h = step_height(m, theta);
            const double piece = 0.5 * h * (upper * upper - lower * lower);
            if (acc + piece >= target || m == K || upper >= R)
            {
                r = std::sqrt(lower * lower + 2.0 * (target - acc) / h);
                r = std::min(r, upper);
                break;
            }
            acc += piece;
            lower = upper;
        }
        break;
    }
    case SiafKind::Powerlaw:
    {
        const double total = F(bound, theta);
        const double target = u * total;
        double lo = 0.0;
        double hi = std::isfinite(bound) ? bound : std::exp(theta(0));
        if (!std::isfinite(bound))
            while (F(hi, theta) < target)
                hi *= 2.0;
        for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++it)
        {
            const double mid = 0.5 * (lo + hi);
            (F(mid, theta) < target ? lo : hi) = mid;
        }
        r = 0.5 * (lo + hi);
        break;
    }
    }
    return r * Point2(std::cos(angle), std::sin(angle));
}

// ---------------------------------------------------------------- tiaf

int Tiaf::npars() const
{
    switch (kind)
    {
    case TiafKind::Constant:
        return 0;
    case TiafKind::Exponential:
        return 1;
    case TiafKind::Step:
        return static_cast<int>(knots.size());
    }
    return 0;
}

std::vector<std::string> Tiaf::parameter_names() const
{
    std::vector<std::string> n;
    for (int k = 0; k < npars(); ++k)
        n.push_back("tiaf." + std::to_string(k + 1));
    return n;
}

double Tiaf::g(double t, const Vector& theta) const
{
    switch (kind)
    {
    case TiafKind::Constant:
        return 1.0;
    case TiafKind::Exponential:
        return std::exp(-std::exp(theta(0)) * t);
    case TiafKind::Step:
    {
        const int m = step_interval(t, knots, maxRange);
        return m < 0 ? 0.0 : step_height(m, theta);
    }
    }
    return 0.0;
}

Vector Tiaf::dg(double t, const Vector& theta) const
{
    Vector d = Vector::Zero(npars());
    switch (kind)
    {
    case TiafKind::Constant:
        break;
    case TiafKind::Exponential:
    {
        const double a = std::exp(theta(0));
        d(0) = -a * t * std::exp(-a * t);
        break;
    }
    case TiafKind::Step:
    {
        const int m = step_interval(t, knots, maxRange);
        if (m > 0)
            d(m - 1) = step_height(m, theta);
        break;
    }
    }
    return d;
}

Vector Tiaf::G(double t, const Vector& theta, bool withGradient) const
{
    const int np = withGradient ? npars() : 0;
    Vector out = Vector::Zero(1 + np);
    if (t <= 0.0)
        return out;
    switch (kind)
    {
    case TiafKind::Constant:
        out(0) = t;
        break;
    case TiafKind::Exponential:
    {
        const double a = std::exp(theta(0));
        out(0) = -std::expm1(-a * t) / a;
        if (np)
            out(1) = t * std::exp(-a * t) - out(0);
        break;
    }
    case TiafKind::Step:
    {
        check_step(knots, maxRange);
        const int K = static_cast<int>(knots.size());
        double lower = 0.0;
        for (int m = 0; m <= K && t > lower; ++m)
        {
            const double upper = m < K ? knots[m] : maxRange;
            const double v = step_height(m, theta) * (std::min(t, upper) - lower);
            out(0) += v;
            if (np && m > 0)
                out(m) = v;
            lower = upper;
        }
        break;
    }
    }
    return out;
}

}  // namespace eepi
