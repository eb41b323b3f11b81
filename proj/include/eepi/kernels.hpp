#pragma once

#include "eepi/geometry.hpp"
#include "eepi/rng.hpp"
#include "eepi/types.hpp"

#include <string>
#include <vector>

namespace eepi
{

enum class SiafKind
{
    Constant,
    Gaussian,
    Powerlaw,
    Step,
};

enum class TiafKind
{
    Constant,
    Exponential,
    Step,
};

/// Per-region quantities that do not depend on kernel parameters.
struct RegionCache
{
    double area = 0.0;
    Vector annuli;  // areas between consecutive step knots (step kernels only)
};

/// Spatial interaction function f(x; theta), isotropic in the distance x.
/// Parameters are on the log scale: gaussian (log sigma), powerlaw
/// (log sigma, log d), step (log heights 2..K+1; the first height is 1).
struct Siaf
{
    SiafKind kind = SiafKind::Constant;
    std::vector<double> knots;  // step only
    double maxRange = kInf;     // step only: f = 0 beyond

    int npars() const;
    std::vector<std::string> parameter_names() const;

    double f(double x, const Vector& theta) const;
    /// Derivatives of f with respect to theta.
    Vector df(double x, const Vector& theta) const;

    /// F(r)/r^2 followed by its theta-derivatives, F(r) = int_0^r x f(x) dx.
    Vector FoverR2(double r, const Vector& theta, bool withGradient) const;
    /// F(r) (radial mass up to r, without the 2 pi factor).
    double F(double r, const Vector& theta) const;

    RegionCache cache(const PolygonSet& region) const;
    /// Integral of f(|s|) over a region centred at the origin, followed by the
    /// theta-derivatives when requested.
    Vector integrate(const PolygonSet& region, const RegionCache& rc, const Vector& theta, double tol,
                     bool withGradient) const;

    /// Offset drawn from the density proportional to f(|s|) on the disc of
    /// radius `bound` (infinite for integrable kernels).
    Point2 sample(double bound, const Vector& theta, CounterRng& rng) const;
};

/// Temporal interaction function g(t; theta); exponential uses log alpha and
/// step uses log heights 2..K+1.
struct Tiaf
{
    TiafKind kind = TiafKind::Constant;
    std::vector<double> knots;
    double maxRange = kInf;

    int npars() const;
    std::vector<std::string> parameter_names() const;

    double g(double t, const Vector& theta) const;
    Vector dg(double t, const Vector& theta) const;
    /// G(t) = int_0^t g, followed by its theta-derivatives when requested.
    Vector G(double t, const Vector& theta, bool withGradient) const;
};

std::string to_string(SiafKind kind);
std::string to_string(TiafKind kind);
SiafKind parse_siaf_kind(const std::string& name);
TiafKind parse_tiaf_kind(const std::string& name);

}  // namespace eepi
