#include "eepi/simulation.hpp"
#include "eepi/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace eepi::simulation
{

namespace
{
std::uint64_t need_seed(const std::optional<std::uint64_t>& seed)
{
    require(seed.has_value(), "simulation requires an explicit seed", ErrorCode::InvalidSpec);
    return *seed;
}
}  // namespace

// ---------------------------------------------------------------- hhh4

std::vector<Matrix> simulate_hhh4(const hhh4::Model& model, const Vector& theta, const Hhh4Config& config)
{
    const std::uint64_t seed = need_seed(config.seed);
    const int U = model.data().nUnits();
    const int to = config.to > 0 ? config.to : model.data().nTime();
    require(config.nsim >= 1, "nsim must be positive");
    require(config.from >= 1 && to >= config.from && to <= model.data().nTime(), "invalid simulation period");
    Vector yStart = config.yStart;
    if (yStart.size() == 0)
    {
        require(config.from >= 2, "simulation from the first time point needs y.start");
        yStart = model.data().counts.row(config.from - 2).transpose();
    }
    require(yStart.size() == U, "y.start must provide one count per unit");
    const Vector psi = model.psi(theta);
    std::vector<Matrix> out(config.nsim, Matrix(to - config.from + 1, U));
    parallel_for(config.nsim, config.threads, [&](std::size_t rep) {
        CounterRng rng(seed, rep);
        Vector ylag = yStart;
        Matrix& y = out[rep];
        for (int t = config.from; t <= to; ++t)
        {
            const Vector mu = model.mean_at(theta, t, ylag).mean().row(0).transpose();
            for (int i = 0; i < U; ++i)
                y(t - config.from, i) = static_cast<double>(rng.negbin(mu(i), psi(i)));
            ylag = y.row(t - config.from).transpose();
        }
    });
    return out;
}

Matrix mean_recursion(const hhh4::Model& model, const Vector& theta, int from, int to, const Vector& yStart)
{
    const int U = model.data().nUnits();
    Matrix m(to - from + 1, U);
    Vector prev = yStart;
    for (int t = from; t <= to; ++t)
    {
        m.row(t - from) = model.mean_at(theta, t, prev).mean().row(0);
        prev = m.row(t - from).transpose();
    }
    return m;
}

// ---------------------------------------------------------------- locations

Point2 sample_kernel_location(const Siaf& siaf, const Vector& theta, double bound, CounterRng& rng)
{
    require(bound > 0.0, "radius bound must be positive");
    if (!std::isfinite(bound))
        siaf.F(bound, theta);  // throws for kernels with infinite mass
    return siaf.sample(bound, theta, rng);
}

Point2 sample_in_polygon(const PolygonSet& region, CounterRng& rng)
{
    const double area = polygon_area(region);
    require(area > 0.0, "cannot sample from a polygon without area");
    const Point2 lo = region.lo, hi = region.hi;
    const double boxArea = (hi.x() - lo.x()) * (hi.y() - lo.y());
    auto in_box = [&](const Point2& a, const Point2& b) {
        for (;;)
        {
            const Point2 p(a.x() + rng.uniform() * (b.x() - a.x()), a.y() + rng.uniform() * (b.y() - a.y()));
            if (point_in_polygon(region, p))
                return p;
        }
    };
    if (area / boxArea >= 0.01)
        return in_box(lo, hi);
    // thin shapes: choose a sub-box in proportion to its share of the polygon
    constexpr int n = 32;
    const double dx = (hi.x() - lo.x()) / n, dy = (hi.y() - lo.y()) / n;
    std::vector<double> cum;
    cum.reserve(n * n);
    double acc = 0.0;
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix)
        {
            const PolygonSet box = square(lo.x() + ix * dx, lo.y() + iy * dy, lo.x() + (ix + 1) * dx,
                                          lo.y() + (iy + 1) * dy);
            acc += polygon_area(clip_convex(region, box.rings[0]));
            cum.push_back(acc);
        }
    for (;;)
    {
        const double u = rng.uniform() * acc;
        const int c = static_cast<int>(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
        const int ix = c % n, iy = c / n;
        const Point2 a(lo.x() + ix * dx, lo.y() + iy * dy);
        for (int tries = 0; tries < 10000; ++tries)
        {
            const Point2 p(a.x() + rng.uniform() * dx, a.y() + rng.uniform() * dy);
            if (point_in_polygon(region, p))
                return p;
        }
    }
}

// ---------------------------------------------------------------- twinstim

namespace
{
struct SimEvent
{
    Event event;
    int parent;  // -1 endemic, >= 0 index into the working list, <= -2 prehistory -(p + 2)
};

double tiaf_bound(const Tiaf& tiaf, const Vector& theta, double lo, double hi)
{
    switch (tiaf.kind)
    {
    case TiafKind::Constant:
        return 1.0;
    case TiafKind::Exponential:
        return tiaf.g(lo, theta);
    case TiafKind::Step:
    {
        double m = tiaf.g(lo, theta);
        for (double k : tiaf.knots)
            if (k > lo && k <= hi)
                m = std::max(m, tiaf.g(k, theta));
        return m;
    }
    }
    return 1.0;
}

int locate_tile(const std::vector<PolygonSet>& tiles, const Point2& s)
{
    for (size_t k = 0; k < tiles.size(); ++k)
        if (point_in_polygon(tiles[k], s))
            return static_cast<int>(k);
    return -1;
}
}  // namespace

std::vector<SimulatedPattern> simulate_twinstim(const twinstim::Model& model, const Vector& theta,
                                                const std::vector<PolygonSet>& tiles, const TwinstimConfig& config)
{
    const std::uint64_t seed = need_seed(config.seed);
    const PointPattern& p = model.pattern();
    const StGrid& g = p.stgrid;
    require(static_cast<int>(tiles.size()) == g.nTiles(), "tiles must provide a polygon for every grid tile");
    for (size_t k = 0; k < tiles.size(); ++k)
        require(!tiles[k].empty(), "tile '" + g.tileIds[k] + "' has no geometry");
    require(config.nsim >= 1, "nsim must be positive");
    const int K = std::max(p.nTypes(), 1);
    const twinstim::Spec& sp = model.spec();
    const bool hasEndemic = model.n_endemic() > 0 || !sp.endemicOffset.empty();
    const Vector ths = sp.has_epidemic() ? theta.segment(model.siaf_offset(), sp.siaf.npars()) : Vector();
    const Vector tht = sp.has_epidemic() ? theta.segment(model.tiaf_offset(), sp.tiaf.npars()) : Vector();
    const Vector gamma = theta.segment(model.n_endemic(), model.n_epidemic());

    std::vector<std::vector<int>> byType(K);
    for (int i = 0; i < p.nEvents(); ++i)
        byType[p.events[i].type].push_back(i);
    auto draw_marks = [&](Event& e, CounterRng& rng) {
        const std::vector<int>* pool = &byType[e.type];
        std::vector<int> all;
        if (pool->empty())
        {
            all.resize(p.nEvents());
            std::iota(all.begin(), all.end(), 0);
            pool = &all;
        }
        if (pool->empty())
        {
            e.marks.assign(p.markNames.size(), "");
            return;
        }
        const Event& src = p.events[(*pool)[static_cast<size_t>(rng.uniform() * pool->size())]];
        e.marks = src.marks;
        e.epsS = src.epsS;
        e.epsT = src.epsT;
    };

    std::vector<SimulatedPattern> out(config.nsim);
    parallel_for(config.nsim, config.threads, [&](std::size_t rep) {
        CounterRng rng(seed, rep);
        std::vector<SimEvent> ev;
        if (hasEndemic)
            for (int r = 0; r < g.rows(); ++r)
            {
                const double lo = std::max(g.start(r), p.t0), hi = std::min(g.stop(r), p.T);
                if (hi <= lo)
                    continue;
                for (int k = 0; k < K; ++k)
                {
                    const long n = rng.poisson(model.endemic_rate(theta, r, k) * g.area(r) * (hi - lo));
                    for (long m = 0; m < n; ++m)
                    {
                        SimEvent s{Event{}, -1};
                        s.event.time = lo + rng.uniform() * (hi - lo);
                        s.event.location = sample_in_polygon(tiles[g.tile[r]], rng);
                        s.event.type = k;
                        s.event.tile = g.tile[r];
                        s.event.cell = r;
                        s.event.tileId = g.tileIds[g.tile[r]];
                        draw_marks(s.event, rng);
                        ev.push_back(std::move(s));
                    }
                }
            }

        if (sp.has_epidemic())
        {
            std::vector<SimEvent> parents;
            for (size_t q = 0; q < config.prehistory.size(); ++q)
                parents.push_back({config.prehistory[q], -static_cast<int>(q) - 2});
            // process prehistory first, then every generation in turn
            std::vector<SimEvent> queue = parents;
            std::vector<int> queueIndex(queue.size(), -1);
            for (size_t i = 0; i < ev.size(); ++i)
            {
                queue.push_back(ev[i]);
                queueIndex.push_back(static_cast<int>(i));
            }
            for (size_t qi = 0; qi < queue.size(); ++qi)
            {
                const Event parent = queue[qi].event;
                const int parentRef = queueIndex[qi] >= 0 ? queueIndex[qi] : queue[qi].parent;
                const double eta = std::exp(model.epidemic_design(parent).dot(gamma));
                const double tLo = std::max(parent.time, p.t0);
                const double tHi = std::min(p.T, parent.time + parent.epsT);
                if (tHi <= tLo || eta == 0.0)
                    continue;
                const double gmax = tiaf_bound(sp.tiaf, tht, tLo - parent.time, tHi - parent.time);
                const double discMass = 2.0 * kPi * sp.siaf.F(parent.epsS, ths);
                for (int k = 0; k < K; ++k)
                {
                    if (!p.qmatrix(parent.type, k))
                        continue;
                    const long n = rng.poisson(eta * gmax * discMass * (tHi - tLo));
                    for (long m = 0; m < n; ++m)
                    {
                        const double t = tLo + rng.uniform() * (tHi - tLo);
                        const Point2 s = parent.location + sp.siaf.sample(parent.epsS, ths, rng);
                        const double accept = sp.tiaf.g(t - parent.time, tht) / gmax;
                        if (rng.uniform() > accept || !point_in_polygon(p.W, s))
                            continue;
                        const int tile = locate_tile(tiles, s);
                        if (tile < 0)
                            continue;
                        const int cell = g.find_cell(tile, t);
                        if (cell < 0)
                            continue;
                        SimEvent child{Event{}, parentRef};
                        child.event.time = t;
                        child.event.location = s;
                        child.event.type = k;
                        child.event.tile = tile;
                        child.event.cell = cell;
                        child.event.tileId = g.tileIds[tile];
                        draw_marks(child.event, rng);
                        ev.push_back(child);
                        queue.push_back(child);
                        queueIndex.push_back(static_cast<int>(ev.size()) - 1);
                    }
                }
            }
        }

        std::vector<int> order(ev.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return ev[a].event.time < ev[b].event.time; });
        std::vector<int> position(ev.size());
        for (size_t r = 0; r < order.size(); ++r)
            position[order[r]] = static_cast<int>(r);
        SimulatedPattern sim;
        sim.pattern = p;
        sim.pattern.events.clear();
        for (int idx : order)
        {
            sim.pattern.events.push_back(ev[idx].event);
            const int par = ev[idx].parent;
            sim.source.push_back(par == -1 ? 0 : par >= 0 ? position[par] + 1 : par + 1);
        }
        compute_influence_regions(sim.pattern);
        out[rep] = std::move(sim);
    });
    return out;
}

// ---------------------------------------------------------------- twinSIR

EventHistoryInput history_input(const EventHistory& h)
{
    EventHistoryInput in;
    in.attributeNames = h.attributeNames;
    in.t0 = h.t0;
    in.basis = h.basis;
    in.pairs = h.pairs;
    in.keepCols = h.endemicNames;
    for (int i = 0; i < h.nIndividuals(); ++i)
    {
        IndividualInput ind;
        ind.id = h.ids[i];
        ind.location = h.coords.row(i).transpose();
        ind.tI = h.tI[i];
        ind.tR = h.tR[i];
        ind.attributes = h.attributes[i];
        in.individuals.push_back(ind);
    }
    for (size_t c = 0; c < h.endemic.size(); ++c)
        for (int b = 1; b < h.nBlocks(); ++b)
            for (int i = 0; i < h.nIndividuals(); ++i)
                if (h.endemic[c](b, i) != h.endemic[c](b - 1, i))
                    in.changes.push_back({i, h.blockStart[b], h.endemicNames[c], h.endemic[c](b, i)});
    return in;
}

std::vector<EventHistory> simulate_twinsir(const twinsir::Model& model, const Vector& theta,
                                           const TwinsirConfig& config)
{
    const std::uint64_t seed = need_seed(config.seed);
    require(config.nsim >= 1, "nsim must be positive");
    const EventHistory& h = model.history();
    const twinsir::Spec& sp = model.spec();
    const int N = h.nIndividuals();
    const int na = model.n_alpha();
    const double tEnd = std::isfinite(config.tEnd) ? config.tEnd : h.blockStop.back();
    require(tEnd > h.t0, "simulation end must follow t0");
    for (int k = 0; k < na; ++k)
        require(theta(k) >= 0.0, "epidemic coefficients must be nonnegative");
    const EventHistoryInput base = history_input(h);

    // pair weights per epidemic term
    std::vector<Matrix> w;
    for (const auto& name : sp.epidemic)
    {
        Matrix m = Matrix::Zero(N, N);
        const int t = h.epidemic_index(name);
        const int nBasis = static_cast<int>(h.basis.size());
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j)
            {
                if (i == j)
                    continue;
                if (t < nBasis)
                    m(i, j) = h.basis[t].contains((h.coords.row(i) - h.coords.row(j)).norm()) ? 1.0 : 0.0;
                else
                {
                    const auto& pc = h.pairs[t - nBasis];
                    const auto& names = h.attributeNames;
                    const int col = static_cast<int>(std::find(names.begin(), names.end(), pc.column) - names.begin());
                    m(i, j) = (h.attributes[i][col] == pc.value && h.attributes[j][col] == pc.value) ? 1.0 : 0.0;
                }
            }
        w.push_back(std::move(m));
    }
    Matrix force = Matrix::Zero(N, N);  // sum_k alpha_k w_k(i, j)
    for (int k = 0; k < na; ++k)
        force += theta(k) * w[k];
    std::vector<int> endCols;
    for (const auto& e : sp.endemic)
        endCols.push_back(h.endemic_index(e));

    std::vector<EventHistory> out(config.nsim);
    parallel_for(config.nsim, config.threads, [&](std::size_t rep) {
        CounterRng rng(seed, rep);
        std::vector<double> tI(N, kInf), tR(N, kInf);
        for (int i = 0; i < N; ++i)
            if (h.tI[i] <= h.t0)
            {
                tI[i] = h.tI[i];
                tR[i] = h.tR[i];
            }
        // endemic covariates follow the observed change schedule
        std::vector<double> changeTimes;
        for (const auto& c : base.changes)
            changeTimes.push_back(c.time);
        std::sort(changeTimes.begin(), changeTimes.end());
        auto block_at = [&](double t) {
            const auto it = std::upper_bound(h.blockStart.begin(), h.blockStart.end(), t);
            return std::max(0, static_cast<int>(it - h.blockStart.begin()) - 1);
        };
        double t = h.t0;
        while (t < tEnd)
        {
            const int b = block_at(t);
            Vector lambda = Vector::Zero(N);
            for (int i = 0; i < N; ++i)
            {
                if (tI[i] <= t)
                    continue;
                double en = 0.0;
                if (sp.intercept || !endCols.empty())
                {
                    double eta = sp.intercept ? theta(na) : 0.0;
                    for (size_t c = 0; c < endCols.size(); ++c)
                        eta += theta(na + (sp.intercept ? 1 : 0) + c) * h.endemic[endCols[c]](b, i);
                    en = std::exp(eta);
                }
                double ep = 0.0;
                for (int j = 0; j < N; ++j)
                    if (tI[j] <= t && t < tR[j])
                        ep += force(i, j);
                lambda(i) = en + ep;
            }
            double next = tEnd;
            for (int j = 0; j < N; ++j)
                if (tR[j] > t)
                    next = std::min(next, tR[j]);
            const auto ct = std::upper_bound(changeTimes.begin(), changeTimes.end(), t);
            if (ct != changeTimes.end())
                next = std::min(next, *ct);
            const double total = lambda.sum();
            const double wait = total > 0.0 ? rng.exponential(total) : kInf;
            if (t + wait >= next)
            {
                t = next;
                continue;
            }
            t += wait;
            double u = rng.uniform() * total;
            int who = N - 1;
            for (int i = 0; i < N; ++i)
            {
                u -= lambda(i);
                if (u <= 0.0 && lambda(i) > 0.0)
                {
                    who = i;
                    break;
                }
            }
            tI[who] = t;
            const double d = config.infectiousPeriod ? config.infectiousPeriod(who, rng) : config.delay;
            require(d > 0.0, "infectious period must be positive");
            tR[who] = t + d;
        }
        EventHistoryInput in = base;
        for (int i = 0; i < N; ++i)
        {
            in.individuals[i].tI = tI[i];
            in.individuals[i].tR = tR[i];
        }
        out[rep] = build_event_history(in);
    });
    return out;
}

}  // namespace eepi::simulation
