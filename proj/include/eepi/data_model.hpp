#pragma once

#include "eepi/geometry.hpp"
#include "eepi/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace eepi
{

// ---------------------------------------------------------------- counts

struct CountSeries
{
    Matrix counts;  // T x U, integral and nonnegative
    int startYear = 1;
    int startSample = 1;
    int freq = 52;
    Matrix popFrac;  // T x U, rows sum to one
    Eigen::MatrixXi nbOrder;
    std::vector<std::string> unitIds;
    std::vector<PolygonSet> map;  // empty or one entry per unit

    int nTime() const { return static_cast<int>(counts.rows()); }
    int nUnits() const { return static_cast<int>(counts.cols()); }
    int unit_index(const std::string& id) const;
};

struct CountsInput
{
    Matrix counts;
    std::vector<std::string> unitIds;
    int startYear = 1;
    int startSample = 1;
    int freq = 52;
    /// T x U or 1 x U (broadcast over time); empty means equal fractions.
    Matrix popFrac;
    std::optional<BoolMatrix> adjacency;
    std::optional<Eigen::MatrixXi> nbOrder;
    int maxlag = std::numeric_limits<int>::max();
    std::vector<PolygonSet> map;
};

CountSeries validate_counts(const CountsInput& input);

// ---------------------------------------------------------------- point pattern

struct Event
{
    double time = 0.0;
    Point2 location = Point2::Zero();
    int type = 0;
    double epsT = kInf;
    double epsS = kInf;
    std::vector<std::string> marks;
    int tile = -1;  // index into StGrid::tileIds
    int cell = -1;  // row of the space-time grid containing the event
    std::string tileId;
};

struct StGrid
{
    Vector start, stop, area;
    std::vector<int> tile;  // per row, index into tileIds
    std::vector<std::string> tileIds;
    std::vector<std::string> covariateNames;
    Matrix covariates;  // rows x covariates
    std::vector<double> blockStarts;  // distinct interval starts, ascending
    std::vector<int> block;  // per row, index into blockStarts
    std::vector<double> blockStops;
    std::vector<int> cellIndex;  // nBlocks x nTiles, block-major; -1 when absent

    /// Derives blocks and the cell lookup from start/stop/tile.
    void index();

    int rows() const { return static_cast<int>(start.size()); }
    int nBlocks() const { return static_cast<int>(blockStarts.size()); }
    int nTiles() const { return static_cast<int>(tileIds.size()); }
    int covariate_index(const std::string& name) const;
    /// Grid row containing (tile, t) with start < t <= stop, or -1.
    int find_cell(int tile, double t) const;
};

struct PointPattern
{
    std::vector<Event> events;  // ascending in time
    std::vector<std::string> markNames;
    std::vector<std::string> typeNames;
    PolygonSet W;
    StGrid stgrid;
    BoolMatrix qmatrix;  // qmatrix(from, to)
    double t0 = 0.0;
    double T = 0.0;
    int nCircle2Poly = 16;
    std::vector<PolygonSet> influenceRegions;  // centred at the event location

    int nEvents() const { return static_cast<int>(events.size()); }
    int nTypes() const { return static_cast<int>(typeNames.size()); }
    int mark_index(const std::string& name) const;
};

struct EventInput
{
    double time;
    Point2 location;
    std::string type;
    double epsT;
    double epsS;
    std::string tile;
    std::vector<std::string> marks;
};

struct PointPatternInput
{
    std::vector<EventInput> events;
    std::vector<std::string> markNames;
    PolygonSet W;
    StGrid stgrid;  // blockStarts/block are derived
    std::vector<std::string> typeNames;  // empty: sorted distinct event types
    std::optional<BoolMatrix> qmatrix;  // default identity
    int nCircle2Poly = 16;
    double areaTolerance = 0.005;
};

PointPattern build_point_pattern(const PointPatternInput& input);

/// Shifts every event location by a uniform vector in the disc of radius
/// spatialAmount, redrawing shifts that would leave W. Deterministic in seed.
PointPattern untie(const PointPattern& pattern, double spatialAmount, std::uint64_t seed);
/// Minimum positive pairwise distance between event locations.
double min_separation(const PointPattern& pattern);
/// Number of pairs of events at identical coordinates.
int count_duplicate_locations(const PointPattern& pattern);

PointPattern update_ranges(const PointPattern& pattern, std::optional<double> epsS, std::optional<double> epsT);
void compute_influence_regions(PointPattern& pattern);

/// Events counted per grid time block (rows) and tile (columns); freq and
/// start only label the resulting series.
CountSeries aggregate_to_counts(const PointPattern& pattern, int freq, int startYear, int startSample,
                                const std::vector<std::string>& tiles);

// ---------------------------------------------------------------- event history

/// Distance basis B(d) = 1 for d in an interval with configurable closure.
struct DistanceBasis
{
    std::string name;
    double lower = 0.0;
    double upper = kInf;
    bool lowerClosed = true;
    bool upperClosed = false;

    bool contains(double d) const
    {
        const bool lo = lowerClosed ? d >= lower : d > lower;
        const bool hi = upperClosed ? d <= upper : d < upper;
        return lo && hi;
    }
};

/// Pair covariate w_ij = 1 when both individuals have `value` in `column`.
struct PairCovariate
{
    std::string name;
    std::string column;
    std::string value;
};

struct IndividualInput
{
    std::string id;
    Point2 location = Point2::Zero();
    double tI = kInf;  // infection time; <= t0 marks an initial infective
    double tR = kInf;  // removal time
    std::vector<std::string> attributes;  // parallel to attributeNames
};

struct CovariateChange
{
    int individual;
    double time;
    std::string column;
    double value;
};

struct EventHistory
{
    std::vector<std::string> ids;
    Matrix coords;  // N x 2
    std::vector<double> tI, tR;
    std::vector<std::string> attributeNames;
    std::vector<std::vector<std::string>> attributes;  // per individual
    double t0 = 0.0;
    std::vector<double> blockStart, blockStop;
    std::vector<int> eventOf;    // per block: individual infected at stop, or -1
    std::vector<int> removalOf;  // per block: individual removed at stop, or -1
    Matrix atRisk;               // blocks x N
    std::vector<std::string> endemicNames;
    std::vector<Matrix> endemic;  // per column: blocks x N
    std::vector<DistanceBasis> basis;
    std::vector<PairCovariate> pairs;
    std::vector<std::string> epidemicNames;
    std::vector<Matrix> epidemic;  // per term: blocks x N

    int nBlocks() const { return static_cast<int>(blockStart.size()); }
    int nIndividuals() const { return static_cast<int>(ids.size()); }
    int epidemic_index(const std::string& name) const;
    int endemic_index(const std::string& name) const;
};

struct EventHistoryInput
{
    std::vector<IndividualInput> individuals;
    std::vector<std::string> attributeNames;
    double t0 = 0.0;
    std::vector<DistanceBasis> basis;
    std::vector<PairCovariate> pairs;
    /// Numeric attributes kept as (initially constant) endemic covariates.
    std::vector<std::string> keepCols;
    std::vector<CovariateChange> changes;
};

EventHistory build_event_history(const EventHistoryInput& input);

/// Adds indicator terms B1 = (0,k1), B2 = [k1,k2), ..., B_{m+1} = [k_m, inf).
EventHistory step_kernel_terms(const EventHistory& history, const std::vector<double>& knots);

}  // namespace eepi
