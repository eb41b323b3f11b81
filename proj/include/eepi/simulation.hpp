#pragma once

#include "eepi/hhh4.hpp"
#include "eepi/twinsir.hpp"
#include "eepi/twinstim.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace eepi::simulation
{

struct Hhh4Config
{
    int nsim = 1;
    std::optional<std::uint64_t> seed;
    int from = 2;  // first simulated time point, 1-based
    int to = 0;    // last simulated time point; 0 means T
    Vector yStart;  // counts at time `from - 1`; empty means the observed ones
    int threads = 1;
};

/// nsim matrices of (to - from + 1) x U counts.
std::vector<Matrix> simulate_hhh4(const hhh4::Model& model, const Vector& theta, const Hhh4Config& config);

/// Deterministic recursion for the conditional mean path, m_t = e nu_t + Lambda_t m_{t-1}.
Matrix mean_recursion(const hhh4::Model& model, const Vector& theta, int from, int to, const Vector& yStart);

/// Offset with density proportional to f on the disc of radius `bound`.
Point2 sample_kernel_location(const Siaf& siaf, const Vector& theta, double bound, CounterRng& rng);

/// Uniform location inside a polygon.
Point2 sample_in_polygon(const PolygonSet& region, CounterRng& rng);

struct TwinstimConfig
{
    int nsim = 1;
    std::optional<std::uint64_t> seed;
    /// Events before t0 that may trigger offspring inside the window.
    std::vector<Event> prehistory;
    int threads = 1;
};

struct SimulatedPattern
{
    PointPattern pattern;
    /// 0 for endemic events, the 1-based index of the parent otherwise
    /// (negative for parents in the prehistory).
    std::vector<int> source;
};

/// Endemic events cell by cell, offspring by thinning proposals from each parent's
/// kernel envelope. Marks and ranges are drawn from observed events of the same type.
std::vector<SimulatedPattern> simulate_twinstim(const twinstim::Model& model, const Vector& theta,
                                                const std::vector<PolygonSet>& tiles, const TwinstimConfig& config);

struct TwinsirConfig
{
    int nsim = 1;
    std::optional<std::uint64_t> seed;
    double tEnd = kInf;  // default: end of the observed history
    /// Infectious period of a newly infected individual; fixed delay by default.
    double delay = 1.0;
    std::function<double(int individual, CounterRng& rng)> infectiousPeriod;
    int threads = 1;
};

/// Gillespie simulation under piecewise-constant intensities.
std::vector<EventHistory> simulate_twinsir(const twinsir::Model& model, const Vector& theta,
                                           const TwinsirConfig& config);

/// Reconstructs the input description of an event history.
EventHistoryInput history_input(const EventHistory& history);

}  // namespace eepi::simulation
