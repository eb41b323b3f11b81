#pragma once

#include "eepi/data_model.hpp"
#include "eepi/hhh4.hpp"
#include "eepi/twinsir.hpp"
#include "eepi/twinstim.hpp"

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace eepi::model_spec
{

/// hhh4 component as written in a spec file; resolved against the data later.
struct Hhh4Component
{
    bool active = false;
    bool intercept = true;
    int S = 0;           // number of sine/cosine pairs
    double period = 52.0;
    std::vector<std::string> offset;      // "population" or covariate names, multiplied
    std::vector<std::string> covariates;  // "t", "log(pop)", "X" or "log(X)"
};

struct Hhh4Recipe
{
    hhh4::Family family = hhh4::Family::NegBin1;
    Hhh4Component end, ar, ne;
    hhh4::WeightsSpec weights;
    int subsetFrom = 0;  // 0: default
    int subsetTo = 0;
    /// Named covariate grids (counts-format files), paths relative to the spec file.
    std::map<std::string, std::string> covariateFiles;
};

struct TwinstimRecipe
{
    twinstim::Spec spec;
    int nCircle2Poly = 16;
    std::optional<double> epsS, epsT;  // override the per-event ranges
};

struct TwinsirRecipe
{
    twinsir::Spec spec;
    double t0 = 0.0;
    std::vector<DistanceBasis> basis;
    std::vector<PairCovariate> pairs;
    std::vector<std::string> keepCols;
    std::vector<double> stepKnots;  // adds B1..B{m+1} when non-empty
};

using ModelSpec = std::variant<Hhh4Recipe, TwinstimRecipe, TwinsirRecipe>;

/// Parses a JSON model spec; unknown keys are rejected by name.
ModelSpec parse_model_spec_text(const std::string& text, const std::string& baseDir = "");
ModelSpec parse_model_spec(const std::string& path);

/// Builds covariate grids and offsets for a count series.
hhh4::Spec resolve_hhh4(const Hhh4Recipe& recipe, const CountSeries& data,
                        const std::map<std::string, Matrix>& covariates = {});

}  // namespace eepi::model_spec
