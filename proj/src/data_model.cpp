#include "eepi/data_model.hpp"
#include "eepi/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace eepi
{

int CountSeries::unit_index(const std::string& id) const
{
    for (size_t i = 0; i < unitIds.size(); ++i)
        if (unitIds[i] == id)
            return static_cast<int>(i);
    throw Error(ErrorCode::InvalidInput, "unknown unit '" + id + "'");
}

CountSeries validate_counts(const CountsInput& in)
{
    const int T = static_cast<int>(in.counts.rows());
    const int U = static_cast<int>(in.counts.cols());
    require(T >= 1 && U >= 1, "count grid must have at least one row and one column");
    require(static_cast<int>(in.unitIds.size()) == U,
            "count grid has " + std::to_string(U) + " columns but " + std::to_string(in.unitIds.size()) + " unit ids");
    require(in.freq >= 1, "frequency must be positive");
    for (int t = 0; t < T; ++t)
        for (int i = 0; i < U; ++i)
        {
            const double y = in.counts(t, i);
            require(std::isfinite(y) && y >= 0.0 && y == std::floor(y),
                    "count at time " + std::to_string(t + 1) + ", unit '" + in.unitIds[i] +
                        "' is not a nonnegative integer");
        }

    CountSeries cs;
    cs.counts = in.counts;
    cs.unitIds = in.unitIds;
    cs.startYear = in.startYear;
    cs.startSample = in.startSample;
    cs.freq = in.freq;

    if (in.popFrac.size() == 0)
        cs.popFrac = Matrix::Constant(T, U, 1.0 / U);
    else if (in.popFrac.rows() == 1 && in.popFrac.cols() == U)
        cs.popFrac = in.popFrac.replicate(T, 1);
    else
    {
        require(in.popFrac.rows() == T && in.popFrac.cols() == U, "population fractions do not match the count grid");
        cs.popFrac = in.popFrac;
    }
    for (int t = 0; t < T; ++t)
    {
        require((cs.popFrac.row(t).array() >= 0.0).all(), "population fractions must be nonnegative");
        require(std::abs(cs.popFrac.row(t).sum() - 1.0) <= 1e-10,
                "population fractions at time " + std::to_string(t + 1) + " do not sum to 1");
    }

    if (in.nbOrder)
    {
        require(in.nbOrder->rows() == U && in.nbOrder->cols() == U, "neighbourhood matrix does not match units");
        require((in.nbOrder->array() >= 0).all(), "neighbourhood orders must be nonnegative");
        cs.nbOrder = *in.nbOrder;
    }
    else if (in.adjacency)
    {
        require(in.adjacency->rows() == U && in.adjacency->cols() == U, "adjacency matrix does not match units");
        cs.nbOrder = nb_order(*in.adjacency, in.maxlag);
    }
    else
        cs.nbOrder = Eigen::MatrixXi::Zero(U, U);

    if (!in.map.empty())
        require(static_cast<int>(in.map.size()) == U, "map must provide one polygon set per unit");
    cs.map = in.map;
    return cs;
}

// ---------------------------------------------------------------- point pattern

int StGrid::covariate_index(const std::string& name) const
{
    for (size_t i = 0; i < covariateNames.size(); ++i)
        if (covariateNames[i] == name)
            return static_cast<int>(i);
    throw Error(ErrorCode::InvalidInput, "stgrid has no column '" + name + "'");
}

void StGrid::index()
{
    const int n = rows();
    require(static_cast<int>(tile.size()) == n && area.size() == n && stop.size() == n,
            "stgrid columns differ in length");
    std::set<double> starts;
    for (int r = 0; r < n; ++r)
    {
        require(stop(r) > start(r), "stgrid row " + std::to_string(r + 1) + " has stop <= start");
        require(area(r) > 0.0, "stgrid row " + std::to_string(r + 1) + " has nonpositive area");
        starts.insert(start(r));
    }
    blockStarts.assign(starts.begin(), starts.end());
    blockStops.assign(blockStarts.size(), 0.0);
    block.assign(n, -1);
    cellIndex.assign(blockStarts.size() * tileIds.size(), -1);
    for (int r = 0; r < n; ++r)
    {
        const int b = static_cast<int>(std::lower_bound(blockStarts.begin(), blockStarts.end(), start(r)) -
                                       blockStarts.begin());
        block[r] = b;
        if (blockStops[b] == 0.0)
            blockStops[b] = stop(r);
        require(blockStops[b] == stop(r), "stgrid rows of one time block have different stop times");
        int& slot = cellIndex[static_cast<size_t>(b) * tileIds.size() + tile[r]];
        require(slot < 0, "duplicate stgrid row for tile '" + tileIds[tile[r]] + "'");
        slot = r;
    }
    for (size_t b = 0; b + 1 < blockStarts.size(); ++b)
        require(blockStops[b] == blockStarts[b + 1], "stgrid time blocks are not consecutive");
    for (size_t b = 0; b < blockStarts.size(); ++b)
        for (size_t k = 0; k < tileIds.size(); ++k)
            require(cellIndex[b * tileIds.size() + k] >= 0,
                    "stgrid lacks tile '" + tileIds[k] + "' in block " + std::to_string(b + 1));
}

int StGrid::find_cell(int tileIdx, double t) const
{
    if (blockStarts.empty() || tileIdx < 0 || tileIdx >= nTiles())
        return -1;
    auto it = std::lower_bound(blockStarts.begin(), blockStarts.end(), t);
    if (it == blockStarts.begin())
        return -1;
    const size_t b = static_cast<size_t>(it - blockStarts.begin()) - 1;
    if (t > blockStops[b])
        return -1;
    return cellIndex[b * tileIds.size() + tileIdx];
}

int PointPattern::mark_index(const std::string& name) const
{
    for (size_t i = 0; i < markNames.size(); ++i)
        if (markNames[i] == name)
            return static_cast<int>(i);
    return -1;
}

void compute_influence_regions(PointPattern& p)
{
    p.influenceRegions.resize(p.events.size());
    for (size_t i = 0; i < p.events.size(); ++i)
    {
        const Event& e = p.events[i];
        p.influenceRegions[i] = translate(intersect_poly_disc(p.W, e.location, e.epsS, p.nCircle2Poly), -e.location);
    }
}

PointPattern build_point_pattern(const PointPatternInput& in)
{
    PointPattern p;
    p.W = in.W;
    p.stgrid = in.stgrid;
    p.markNames = in.markNames;
    p.nCircle2Poly = in.nCircle2Poly;
    require(p.nCircle2Poly >= 8, "nCircle2Poly must be at least 8");
    require(!p.W.empty(), "observation window is empty");
    p.stgrid.index();
    require(p.stgrid.nBlocks() >= 1, "stgrid is empty");
    p.t0 = p.stgrid.blockStarts.front();
    p.T = p.stgrid.blockStops.back();

    // Tile areas against the window.
    std::vector<double> tileArea(p.stgrid.nTiles(), -1.0);
    for (int r = 0; r < p.stgrid.rows(); ++r)
    {
        double& a = tileArea[p.stgrid.tile[r]];
        if (a < 0.0)
            a = p.stgrid.area(r);
    }
    const double sumTiles = std::accumulate(tileArea.begin(), tileArea.end(), 0.0);
    const double areaW = polygon_area(p.W);
    require(std::abs(sumTiles - areaW) <= in.areaTolerance * areaW,
            "sum of tile areas (" + std::to_string(sumTiles) + ") is inconsistent with the window area (" +
                std::to_string(areaW) + ")");

    p.typeNames = in.typeNames;
    if (p.typeNames.empty())
    {
        std::set<std::string> types;
        for (const auto& e : in.events)
            types.insert(e.type);
        p.typeNames.assign(types.begin(), types.end());
        if (p.typeNames.empty())
            p.typeNames.push_back("1");
    }
    const int K = p.nTypes();
    if (in.qmatrix)
    {
        require(in.qmatrix->rows() == K && in.qmatrix->cols() == K,
                "qmatrix must be " + std::to_string(K) + "x" + std::to_string(K));
        p.qmatrix = *in.qmatrix;
    }
    else
        p.qmatrix = BoolMatrix::Identity(K, K);

    std::map<std::string, int> tileIndex;
    for (int k = 0; k < p.stgrid.nTiles(); ++k)
        tileIndex[p.stgrid.tileIds[k]] = k;
    std::map<std::string, int> typeIndex;
    for (int k = 0; k < K; ++k)
        typeIndex[p.typeNames[k]] = k;

    std::vector<size_t> order(in.events.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return in.events[a].time < in.events[b].time; });
    for (size_t idx : order)
    {
        const EventInput& ei = in.events[idx];
        const std::string where = "event " + std::to_string(idx + 1);
        require(std::isfinite(ei.time) && ei.time > p.t0 && ei.time <= p.T,
                where + ": time " + std::to_string(ei.time) + " outside the observation period");
        auto ti = tileIndex.find(ei.tile);
        require(ti != tileIndex.end(), where + ": tile '" + ei.tile + "' is not in stgrid");
        auto ty = typeIndex.find(ei.type);
        require(ty != typeIndex.end(), where + ": unknown type '" + ei.type + "'");
        require(ei.epsT > 0.0 && ei.epsS > 0.0, where + ": interaction ranges must be positive");
        require(ei.marks.size() == in.markNames.size(), where + ": wrong number of marks");
        require(ei.location.allFinite(), where + ": non-finite location");
        Event e;
        e.time = ei.time;
        e.location = ei.location;
        e.type = ty->second;
        e.epsT = ei.epsT;
        e.epsS = ei.epsS;
        e.marks = ei.marks;
        e.tile = ti->second;
        e.tileId = ei.tile;
        e.cell = p.stgrid.find_cell(e.tile, e.time);
        require(e.cell >= 0, where + ": no stgrid cell covers its tile and time");
        p.events.push_back(std::move(e));
    }
    compute_influence_regions(p);
    return p;
}

PointPattern untie(const PointPattern& pattern, double spatialAmount, std::uint64_t seed)
{
    require(spatialAmount >= 0.0 && std::isfinite(spatialAmount), "untie amount must be nonnegative");
    if (spatialAmount == 0.0)
        return pattern;
    PointPattern out = pattern;
    CounterRng rng(seed, 0);
    for (auto& e : out.events)
    {
        for (int attempt = 0;; ++attempt)
        {
            require(attempt < 10000, "untie could not keep an event inside the window", ErrorCode::Numerical);
            const double r = spatialAmount * std::sqrt(rng.uniform());
            const double a = 2.0 * kPi * rng.uniform();
            const Point2 cand = e.location + r * Point2(std::cos(a), std::sin(a));
            if (point_in_polygon(out.W, cand))
            {
                e.location = cand;
                break;
            }
        }
    }
    compute_influence_regions(out);
    return out;
}

double min_separation(const PointPattern& pattern)
{
    double m = kInf;
    const auto& ev = pattern.events;
    for (size_t i = 0; i < ev.size(); ++i)
        for (size_t j = i + 1; j < ev.size(); ++j)
        {
            const double d = (ev[i].location - ev[j].location).norm();
            if (d > 0.0)
                m = std::min(m, d);
        }
    return m;
}

int count_duplicate_locations(const PointPattern& pattern)
{
    int n = 0;
    const auto& ev = pattern.events;
    for (size_t i = 0; i < ev.size(); ++i)
        for (size_t j = i + 1; j < ev.size(); ++j)
            if (ev[i].location == ev[j].location)
                ++n;
    return n;
}

PointPattern update_ranges(const PointPattern& pattern, std::optional<double> epsS, std::optional<double> epsT)
{
    if (epsS)
        require(*epsS > 0.0, "eps.s must be positive");
    if (epsT)
        require(*epsT > 0.0, "eps.t must be positive");
    PointPattern out = pattern;
    for (auto& e : out.events)
    {
        if (epsS)
            e.epsS = *epsS;
        if (epsT)
            e.epsT = *epsT;
    }
    if (epsS)
        compute_influence_regions(out);
    return out;
}

CountSeries aggregate_to_counts(const PointPattern& pattern, int freq, int startYear, int startSample,
                                const std::vector<std::string>& tiles)
{
    const StGrid& g = pattern.stgrid;
    std::map<std::string, int> gridTile;
    for (int k = 0; k < g.nTiles(); ++k)
        gridTile[g.tileIds[k]] = k;
    std::vector<int> column(g.nTiles(), -1);
    for (size_t c = 0; c < tiles.size(); ++c)
    {
        auto it = gridTile.find(tiles[c]);
        require(it != gridTile.end(), "tile '" + tiles[c] + "' does not occur in stgrid");
        column[it->second] = static_cast<int>(c);
    }
    Matrix counts = Matrix::Zero(g.nBlocks(), static_cast<int>(tiles.size()));
    for (const auto& e : pattern.events)
    {
        const int c = column[e.tile];
        require(c >= 0, "event tile '" + g.tileIds[e.tile] + "' is missing from the requested tiles");
        counts(g.block[e.cell], c) += 1.0;
    }
    CountsInput ci;
    ci.counts = counts;
    ci.unitIds = tiles;
    ci.freq = freq;
    ci.startYear = startYear;
    ci.startSample = startSample;
    return validate_counts(ci);
}

// ---------------------------------------------------------------- event history

int EventHistory::epidemic_index(const std::string& name) const
{
    for (size_t i = 0; i < epidemicNames.size(); ++i)
        if (epidemicNames[i] == name)
            return static_cast<int>(i);
    return -1;
}

int EventHistory::endemic_index(const std::string& name) const
{
    for (size_t i = 0; i < endemicNames.size(); ++i)
        if (endemicNames[i] == name)
            return static_cast<int>(i);
    return -1;
}

namespace
{
int attribute_index(const std::vector<std::string>& names, const std::string& name)
{
    for (size_t i = 0; i < names.size(); ++i)
        if (names[i] == name)
            return static_cast<int>(i);
    throw Error(ErrorCode::InvalidInput, "individuals have no attribute '" + name + "'");
}

// Fills the epidemic term matrices from the infectious sets of each block.
void compute_epidemic_terms(EventHistory& h)
{
    const int B = h.nBlocks();
    const int N = h.nIndividuals();
    h.epidemicNames.clear();
    h.epidemic.clear();
    std::vector<std::pair<int, std::string>> pairCols;
    for (const auto& pc : h.pairs)
        pairCols.emplace_back(attribute_index(h.attributeNames, pc.column), pc.value);

    Matrix dist(N, N);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            dist(i, j) = (h.coords.row(i) - h.coords.row(j)).norm();

    for (const auto& b : h.basis)
    {
        h.epidemicNames.push_back(b.name);
        h.epidemic.push_back(Matrix::Zero(B, N));
    }
    for (const auto& pc : h.pairs)
    {
        h.epidemicNames.push_back(pc.name);
        h.epidemic.push_back(Matrix::Zero(B, N));
    }
    const int nBasis = static_cast<int>(h.basis.size());

    for (int b = 0; b < B; ++b)
    {
        const double start = h.blockStart[b];
        std::vector<int> infectious;
        for (int j = 0; j < N; ++j)
            if (h.tI[j] <= start && start < h.tR[j])
                infectious.push_back(j);
        for (int i = 0; i < N; ++i)
        {
            if (h.atRisk(b, i) == 0.0)
                continue;
            for (int j : infectious)
            {
                for (int m = 0; m < nBasis; ++m)
                    if (h.basis[m].contains(dist(i, j)))
                        h.epidemic[m](b, i) += 1.0;
                for (size_t q = 0; q < pairCols.size(); ++q)
                {
                    const auto& [col, value] = pairCols[q];
                    if (h.attributes[i][col] == value && h.attributes[j][col] == value)
                        h.epidemic[nBasis + q](b, i) += 1.0;
                }
            }
        }
    }
}
}  // namespace

EventHistory build_event_history(const EventHistoryInput& in)
{
    const int N = static_cast<int>(in.individuals.size());
    require(N >= 1, "event history needs at least one individual");
    require(std::isfinite(in.t0), "t0 must be finite");
    EventHistory h;
    h.t0 = in.t0;
    h.attributeNames = in.attributeNames;
    h.basis = in.basis;
    h.pairs = in.pairs;
    h.coords.resize(N, 2);
    std::vector<double> breaks;
    for (int i = 0; i < N; ++i)
    {
        const auto& ind = in.individuals[i];
        const std::string who = "individual '" + ind.id + "'";
        require(ind.attributes.size() == in.attributeNames.size(), who + ": wrong number of attributes");
        require(ind.location.allFinite(), who + ": non-finite coordinates");
        require(!std::isnan(ind.tI) && !std::isnan(ind.tR), who + ": missing event time");
        if (std::isfinite(ind.tI))
            require(ind.tR > ind.tI, who + ": removal time is not after infection time");
        else
            require(!std::isfinite(ind.tR), who + ": removal without infection");
        require(ind.tR > in.t0, who + ": removal time precedes the observation start");
        h.ids.push_back(ind.id);
        h.coords.row(i) = ind.location.transpose();
        h.tI.push_back(ind.tI);
        h.tR.push_back(ind.tR);
        h.attributes.push_back(ind.attributes);
        if (std::isfinite(ind.tI) && ind.tI > in.t0)
            breaks.push_back(ind.tI);
        if (std::isfinite(ind.tR))
            breaks.push_back(ind.tR);
    }
    for (const auto& c : in.changes)
    {
        require(c.individual >= 0 && c.individual < N, "covariate change refers to an unknown individual");
        require(c.time > in.t0, "covariate change before the observation start");
        breaks.push_back(c.time);
    }
    std::sort(breaks.begin(), breaks.end());
    std::vector<double> merged;
    for (double t : breaks)
        if (merged.empty() || t - merged.back() > 1e-9)
            merged.push_back(t);
    if (merged.empty())
    {
        // Nothing happens: a single block of unit length keeps the structure usable.
        merged.push_back(in.t0 + 1.0);
    }

    const int B = static_cast<int>(merged.size());
    h.blockStart.resize(B);
    h.blockStop = merged;
    for (int b = 0; b < B; ++b)
        h.blockStart[b] = b == 0 ? in.t0 : merged[b - 1];
    h.eventOf.assign(B, -1);
    h.removalOf.assign(B, -1);
    h.atRisk = Matrix::Zero(B, N);

    auto block_of = [&](double t) {
        auto it = std::lower_bound(merged.begin(), merged.end(), t - 1e-9);
        return static_cast<int>(it - merged.begin());
    };
    for (int i = 0; i < N; ++i)
    {
        if (std::isfinite(h.tI[i]) && h.tI[i] > in.t0)
        {
            const int b = block_of(h.tI[i]);
            require(h.eventOf[b] < 0, "tied infection times at t = " + std::to_string(h.tI[i]));
            h.eventOf[b] = i;
        }
        if (std::isfinite(h.tR[i]))
        {
            const int b = block_of(h.tR[i]);
            require(h.removalOf[b] < 0, "tied removal times at t = " + std::to_string(h.tR[i]));
            h.removalOf[b] = i;
        }
        for (int b = 0; b < B; ++b)
            h.atRisk(b, i) = (h.tI[i] > h.blockStart[b] + 1e-9) ? 1.0 : 0.0;
    }

    for (const auto& col : in.keepCols)
    {
        const int a = attribute_index(h.attributeNames, col);
        Matrix z(B, N);
        for (int i = 0; i < N; ++i)
        {
            double v = 0.0;
            try
            {
                v = std::stod(h.attributes[i][a]);
            }
            catch (const std::exception&)
            {
                throw Error(ErrorCode::InvalidInput, "attribute '" + col + "' of individual '" + h.ids[i] +
                                                         "' is not numeric");
            }
            z.col(i).setConstant(v);
        }
        std::vector<CovariateChange> changes;
        for (const auto& c : in.changes)
            if (c.column == col)
                changes.push_back(c);
        std::sort(changes.begin(), changes.end(),
                  [](const CovariateChange& x, const CovariateChange& y) { return x.time < y.time; });
        for (const auto& c : changes)
            for (int b = block_of(c.time) + 1; b < B; ++b)
                z(b, c.individual) = c.value;
        h.endemicNames.push_back(col);
        h.endemic.push_back(std::move(z));
    }
    compute_epidemic_terms(h);
    return h;
}

EventHistory step_kernel_terms(const EventHistory& history, const std::vector<double>& knots)
{
    require(!knots.empty(), "step kernel needs at least one knot");
    for (size_t k = 0; k < knots.size(); ++k)
        require(knots[k] > 0.0 && (k == 0 || knots[k] > knots[k - 1]), "knots must be positive and increasing");
    EventHistory h = history;
    const size_t m = knots.size();
    for (size_t k = 0; k <= m; ++k)
    {
        DistanceBasis b;
        b.name = "B" + std::to_string(k + 1);
        b.lower = k == 0 ? 0.0 : knots[k - 1];
        b.upper = k == m ? kInf : knots[k];
        b.lowerClosed = k > 0;
        b.upperClosed = false;
        h.basis.push_back(b);
    }
    compute_epidemic_terms(h);
    return h;
}

}  // namespace eepi
