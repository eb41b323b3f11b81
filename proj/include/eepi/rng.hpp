#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace eepi
{

/// Counter-based generator: the n-th output of stream (seed, stream) is a fixed
/// bijective mix of a key and n, so independent substreams need no shared state.
class CounterRng
{
public:
    using result_type = std::uint64_t;

    CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(mix(seed + 0x632BE59BD9B4E019ULL) ^ (stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL)))
    {
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return mix(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

    std::uint64_t counter() const { return counter_; }

    /// Uniform on the open interval (0, 1).
    double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

    double normal() { return std::normal_distribution<double>()(*this); }
    double exponential(double rate) { return -std::log(uniform()) / rate; }
    double gamma(double shape, double scale) { return std::gamma_distribution<double>(shape, scale)(*this); }
    long poisson(double mean)
    {
        if (mean <= 0.0)
            return 0;
        return std::poisson_distribution<long>(mean)(*this);
    }
    /// Negative binomial with mean mu and variance mu (1 + psi mu), via the gamma-Poisson mixture.
    long negbin(double mu, double psi)
    {
        if (mu <= 0.0)
            return 0;
        if (psi <= 0.0)
            return poisson(mu);
        return poisson(gamma(1.0 / psi, psi * mu));
    }

private:
    static constexpr std::uint64_t mix(std::uint64_t z)
    {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace eepi
