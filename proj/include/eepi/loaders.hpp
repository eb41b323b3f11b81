#pragma once

#include "eepi/data_model.hpp"
#include "eepi/hhh4.hpp"
#include "eepi/model_spec.hpp"
#include "eepi/twinsir.hpp"
#include "eepi/twinstim.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace eepi::io
{

struct CountFiles
{
    std::string counts;
    std::string population;  // optional counts-format grid, T x U or 1 x U
    std::string adjacency;   // optional edge list
    std::string map;         // optional GeoJSON with one feature per unit
    int maxlag = std::numeric_limits<int>::max();
    int freq = 52;
    int startYear = 1;
    int startSample = 1;
};

CountSeries load_count_series(const CountFiles& files);

struct PatternFiles
{
    std::string events;  // time,x,y,type,eps_t,eps_s[,tile] plus marks
    std::string stgrid;  // start,stop,tile,area plus covariates
    std::string map;     // tiles as GeoJSON features; their union is W
    int nCircle2Poly = 16;
};

struct LoadedPattern
{
    PointPattern pattern;
    std::vector<PolygonSet> tiles;  // aligned with pattern.stgrid.tileIds
};

/// Events without a tile column are assigned to the map feature containing them.
LoadedPattern load_point_pattern(const PatternFiles& files);

/// Event history table id,x,y,tI,tR plus attribute columns; "Inf" or empty
/// means never infected / never removed.
EventHistoryInput load_history_input(const std::string& path);

// Spec-driven model construction shared by the command-line tool and the tests.

struct Hhh4Setup
{
    model_spec::Hhh4Recipe recipe;
    hhh4::Model model;
};

/// A spec covariate named "population" replaces files.population.
Hhh4Setup load_hhh4(const std::string& specPath, CountFiles files);

struct TwinstimSetup
{
    model_spec::TwinstimRecipe recipe;
    LoadedPattern loaded;
    std::optional<twinstim::Model> model;
};

TwinstimSetup load_twinstim(const std::string& specPath, const std::string& events, const std::string& stgrid,
                            const std::string& map);

twinsir::Model load_twinsir(const std::string& specPath, const std::string& history);

}  // namespace eepi::io
