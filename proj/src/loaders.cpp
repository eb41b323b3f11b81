#include "eepi/loaders.hpp"
#include "eepi/geometry.hpp"
#include "eepi/io.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace eepi::io
{

namespace
{
std::vector<PolygonSet> features_for(const std::vector<Feature>& features, const std::vector<std::string>& ids,
                                     const std::string& what)
{
    std::map<std::string, const PolygonSet*> byId;
    for (const auto& f : features)
        byId[f.id] = &f.geometry;
    std::vector<PolygonSet> out;
    for (const auto& id : ids)
    {
        auto it = byId.find(id);
        require(it != byId.end(), "map has no feature with id '" + id + "' (" + what + ")");
        out.push_back(*it->second);
    }
    return out;
}
}  // namespace

CountSeries load_count_series(const CountFiles& files)
{
    require(!files.counts.empty(), "missing input: counts file (--counts)");
    auto [ids, counts] = read_counts(files.counts);
    CountsInput in;
    in.counts = counts;
    in.unitIds = ids;
    in.freq = files.freq;
    in.startYear = files.startYear;
    in.startSample = files.startSample;
    in.maxlag = files.maxlag;
    if (!files.population.empty())
    {
        auto [popIds, pop] = read_counts(files.population);
        require(popIds == ids, "population file columns must match the count units");
        in.popFrac = pop;
    }
    if (!files.adjacency.empty())
        in.adjacency = read_adjacency(files.adjacency, ids);
    if (!files.map.empty())
        in.map = features_for(read_geojson(files.map), ids, "count units");
    return validate_counts(in);
}

LoadedPattern load_point_pattern(const PatternFiles& files)
{
    require(!files.events.empty(), "missing input: events file (--events)");
    require(!files.stgrid.empty(), "missing input: stgrid file (--stgrid)");
    require(!files.map.empty(), "missing input: map of the observation window (--map)");

    PointPatternInput in;
    in.nCircle2Poly = files.nCircle2Poly;

    const Table g = read_csv(files.stgrid);
    for (const char* c : {"start", "stop", "tile", "area"})
        g.column(c);
    const auto start = g.numbers("start"), stop = g.numbers("stop"), area = g.numbers("area");
    const auto tiles = g.strings("tile");
    const int n = static_cast<int>(g.rows.size());
    in.stgrid.start = Eigen::Map<const Vector>(start.data(), n);
    in.stgrid.stop = Eigen::Map<const Vector>(stop.data(), n);
    in.stgrid.area = Eigen::Map<const Vector>(area.data(), n);
    std::map<std::string, int> tileIndex;
    for (const auto& t : tiles)
        if (!tileIndex.count(t))
        {
            tileIndex[t] = static_cast<int>(in.stgrid.tileIds.size());
            in.stgrid.tileIds.push_back(t);
        }
    for (const auto& t : tiles)
        in.stgrid.tile.push_back(tileIndex[t]);
    for (const auto& h : g.header)
        if (h != "start" && h != "stop" && h != "tile" && h != "area")
            in.stgrid.covariateNames.push_back(h);
    in.stgrid.covariates.resize(n, static_cast<int>(in.stgrid.covariateNames.size()));
    for (size_t k = 0; k < in.stgrid.covariateNames.size(); ++k)
    {
        const auto v = g.numbers(in.stgrid.covariateNames[k]);
        for (int r = 0; r < n; ++r)
            in.stgrid.covariates(r, static_cast<int>(k)) = v[r];
    }

    const auto features = read_geojson(files.map);
    LoadedPattern out;
    out.tiles = features_for(features, in.stgrid.tileIds, "stgrid tiles");
    in.W = merge_features(features);

    const Table e = read_csv(files.events);
    for (const char* c : {"time", "x", "y", "type", "eps_t", "eps_s"})
        e.column(c);
    const bool hasTile = e.has_column("tile");
    for (const auto& h : e.header)
        if (h != "time" && h != "x" && h != "y" && h != "type" && h != "eps_t" && h != "eps_s" && h != "tile")
            in.markNames.push_back(h);
    std::vector<int> markCols;
    for (const auto& m : in.markNames)
        markCols.push_back(e.column(m));
    const int ct = e.column("time"), cx = e.column("x"), cy = e.column("y"), ck = e.column("type"),
              cet = e.column("eps_t"), ces = e.column("eps_s");
    for (size_t i = 0; i < e.rows.size(); ++i)
    {
        const auto& row = e.rows[i];
        EventInput ev;
        ev.time = parse_number(row[ct]);
        ev.location = Point2(parse_number(row[cx]), parse_number(row[cy]));
        ev.type = row[ck];
        ev.epsT = parse_number(row[cet]);
        ev.epsS = parse_number(row[ces]);
        if (hasTile)
            ev.tile = row[e.column("tile")];
        else
        {
            for (size_t k = 0; k < out.tiles.size() && ev.tile.empty(); ++k)
                if (point_in_polygon(out.tiles[k], ev.location))
                    ev.tile = in.stgrid.tileIds[k];
            require(!ev.tile.empty(), "event " + std::to_string(i + 1) + " lies outside every map tile");
        }
        for (int c : markCols)
            ev.marks.push_back(row[c]);
        in.events.push_back(std::move(ev));
    }
    out.pattern = build_point_pattern(in);
    return out;
}

EventHistoryInput load_history_input(const std::string& path)
{
    require(!path.empty(), "missing input: event history file (--events)");
    const Table t = read_csv(path);
    for (const char* c : {"id", "x", "y", "tI", "tR"})
        t.column(c);
    EventHistoryInput in;
    for (const auto& h : t.header)
        if (h != "id" && h != "x" && h != "y" && h != "tI" && h != "tR")
            in.attributeNames.push_back(h);
    const int cid = t.column("id"), cx = t.column("x"), cy = t.column("y"), ci = t.column("tI"), cr = t.column("tR");
    auto time_or_inf = [](const std::string& s) {
        if (s.find_first_not_of(" \t") == std::string::npos)
            return kInf;
        const double v = parse_number(s);
        return std::isnan(v) ? kInf : v;
    };
    for (const auto& row : t.rows)
    {
        IndividualInput ind;
        ind.id = row[cid];
        ind.location = Point2(parse_number(row[cx]), parse_number(row[cy]));
        ind.tI = time_or_inf(row[ci]);
        ind.tR = time_or_inf(row[cr]);
        for (const auto& a : in.attributeNames)
            ind.attributes.push_back(row[t.column(a)]);
        in.individuals.push_back(std::move(ind));
    }
    return in;
}

Hhh4Setup load_hhh4(const std::string& specPath, CountFiles files)
{
    require(!specPath.empty(), "missing input: model spec (--spec)");
    auto spec = model_spec::parse_model_spec(specPath);
    auto* recipe = std::get_if<model_spec::Hhh4Recipe>(&spec);
    require(recipe != nullptr, "spec '" + specPath + "' does not describe an hhh4 model", ErrorCode::InvalidSpec);
    std::map<std::string, Matrix> covariates;
    for (const auto& [name, path] : recipe->covariateFiles)
    {
        if (name == "population")
            files.population = path;
        else
            covariates[name] = read_counts(path).second;
    }
    if (recipe->weights.kind != hhh4::WeightKind::FirstOrder || recipe->ne.active)
        require(!files.adjacency.empty(), "missing input: adjacency (--adjacency) for the neighbourhood component");
    CountSeries data = load_count_series(files);
    hhh4::Spec s = model_spec::resolve_hhh4(*recipe, data, covariates);
    return {*recipe, hhh4::Model(std::move(s), std::move(data))};
}

TwinstimSetup load_twinstim(const std::string& specPath, const std::string& events, const std::string& stgrid,
                            const std::string& map)
{
    require(!specPath.empty(), "missing input: model spec (--spec)");
    auto spec = model_spec::parse_model_spec(specPath);
    auto* recipe = std::get_if<model_spec::TwinstimRecipe>(&spec);
    require(recipe != nullptr, "spec '" + specPath + "' does not describe a twinstim model", ErrorCode::InvalidSpec);
    TwinstimSetup s;
    s.recipe = *recipe;
    s.loaded = load_point_pattern({events, stgrid, map, recipe->nCircle2Poly});
    if (recipe->epsS || recipe->epsT)
        s.loaded.pattern = update_ranges(s.loaded.pattern, recipe->epsS, recipe->epsT);
    s.model.emplace(recipe->spec, s.loaded.pattern);
    return s;
}

twinsir::Model load_twinsir(const std::string& specPath, const std::string& history)
{
    require(!specPath.empty(), "missing input: model spec (--spec)");
    auto spec = model_spec::parse_model_spec(specPath);
    auto* recipe = std::get_if<model_spec::TwinsirRecipe>(&spec);
    require(recipe != nullptr, "spec '" + specPath + "' does not describe a twinSIR model", ErrorCode::InvalidSpec);
    EventHistoryInput in = load_history_input(history);
    in.t0 = recipe->t0;
    in.basis = recipe->basis;
    in.pairs = recipe->pairs;
    in.keepCols = recipe->keepCols;
    EventHistory h = build_event_history(in);
    if (!recipe->stepKnots.empty())
        h = step_kernel_terms(h, recipe->stepKnots);
    return twinsir::Model(recipe->spec, std::move(h));
}

}  // namespace eepi::io
