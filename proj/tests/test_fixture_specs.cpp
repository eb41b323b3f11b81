#include "synthetic.hpp"

#include "eepi/io.hpp"
#include "eepi/loaders.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>

using namespace eepi;
namespace fs = std::filesystem;

// The shipped reference-model specs must load against data in the documented layout.
// Small synthetic stand-ins replace the real data files here.

namespace
{
const fs::path kSpecs = EEPI_FIXTURE_DIR;

fs::path stand_in(const std::string& set)
{
    const fs::path d = fs::temp_directory_path() / ("eepi_fixture_" + std::to_string(::getpid())) / set;
    fs::create_directories(d);
    for (const auto& e : fs::directory_iterator(kSpecs / set))
        if (e.path().extension() == ".json")
            fs::copy_file(e.path(), d / e.path().filename(), fs::copy_options::overwrite_existing);
    return d;
}
}  // namespace

TEST_CASE("measles specs load and fit on a stand-in count series")
{
    const fs::path d = stand_in("measles");
    const CountSeries data = testdata::simulated_counts(6, 104, 41);
    io::write_counts(d / "counts.csv", data.unitIds, data.counts);
    io::write_counts(d / "population.csv", data.unitIds, data.popFrac);
    Matrix sprop(1, 6);
    sprop << 0.03, 0.05, 0.06, 0.07, 0.09, 0.14;
    io::write_counts(d / "Sprop.csv", data.unitIds, sprop);
    std::ofstream adj(d / "adjacency.csv");
    for (int i = 0; i < 6; ++i)
        adj << data.unitIds[i] << "," << data.unitIds[(i + 1) % 6] << "\n";
    adj.close();

    int n = 0;
    for (const auto& e : fs::directory_iterator(d))
    {
        if (e.path().extension() != ".json")
            continue;
        ++n;
        INFO(e.path().filename().string());
        io::CountFiles files;
        files.counts = (d / "counts.csv").string();
        files.adjacency = (d / "adjacency.csv").string();
        const io::Hhh4Setup s = io::load_hhh4(e.path().string(), files);
        const auto& names = s.model.names();
        CHECK(std::find(names.begin(), names.end(), "ar.1") != names.end());
        CHECK(std::find(names.begin(), names.end(), "end.t") != names.end());
        if (s.recipe.end.covariates.size() > 1)
            CHECK(std::find(names.begin(), names.end(), "end.log(Sprop)") != names.end());
        const hhh4::Fit f = hhh4::fit(s.model);
        CHECK(std::isfinite(f.loglik));
    }
    CHECK(n == 14);
}

TEST_CASE("hagelloch specs load on a stand-in history")
{
    const fs::path d = stand_in("hagelloch");
    std::ofstream h(d / "history.csv");
    h << "id,x,y,tI,tR,CL\n";
    CounterRng rng(3);
    for (int i = 0; i < 40; ++i)
    {
        const double tI = i < 25 ? 1.5 * i : kInf;
        h << "p" << i << "," << 40 * (i / 3) << "," << 25 * (i % 7) << ",";
        if (std::isfinite(tI))
            h << tI << "," << tI + 4;
        else
            h << "Inf,Inf";
        h << "," << (i % 3 == 0 ? "1st class" : i % 3 == 1 ? "2nd class" : "preschool") << "\n";
    }
    h.close();
    const twinsir::Model m = io::load_twinsir((d / "hagelloch.json").string(), (d / "history.csv").string());
    CHECK(m.names() ==
          std::vector<std::string>{"household", "c1", "c2", "nothousehold", "cox(logbaseline)"});
    CHECK(std::isfinite(m.loglik(m.start())));
    const twinsir::Model s = io::load_twinsir((d / "fstep.json").string(), (d / "history.csv").string());
    CHECK(s.npars() == 7);
}

TEST_CASE("IMD specs load on a stand-in point pattern")
{
    const fs::path d = stand_in("imd");
    const auto setup = testdata::simulated_pattern(testdata::epidemic_spec(), 42);
    const PointPattern& pat = setup.pattern;
    std::ofstream ev(d / "events.csv");
    ev << "time,x,y,type,eps_t,eps_s,tile,agegrp\n";
    const char* ages[] = {"\"[0,3)\"", "\"[3,19)\"", "\"[19,Inf)\""};
    for (int j = 0; j < pat.nEvents(); ++j)
    {
        const Event& e = pat.events[j];
        ev << io::format_number(e.time) << "," << io::format_number(e.location.x()) << ","
           << io::format_number(e.location.y()) << "," << (e.type ? "C" : "B") << ",30,200," << e.tileId << ","
           << ages[j % 3] << "\n";
    }
    ev.close();
    std::ofstream g(d / "stgrid.csv");
    g << "start,stop,tile,area,popdensity\n";
    for (int r = 0; r < pat.stgrid.rows(); ++r)
        g << pat.stgrid.start(r) << "," << pat.stgrid.stop(r) << "," << pat.stgrid.tileIds[pat.stgrid.tile[r]] << ","
          << pat.stgrid.area(r) << "," << 100 + 10 * r << "\n";
    g.close();
    std::ofstream map(d / "map.geojson");
    map << R"({"type": "FeatureCollection", "features": [)";
    const char* ids[] = {"a", "b", "c", "d"};
    for (int k = 0; k < 4; ++k)
    {
        const double x0 = 50.0 * (k % 2), y0 = 50.0 * (k / 2);
        map << (k ? "," : "") << R"({"type": "Feature", "properties": {"id": ")" << ids[k]
            << R"("}, "geometry": {"type": "Polygon", "coordinates": [[)"
            << "[" << x0 << "," << y0 << "],[" << x0 + 50 << "," << y0 << "],[" << x0 + 50 << "," << y0 + 50
            << "],[" << x0 << "," << y0 + 50 << "],[" << x0 << "," << y0 << "]]]}}";
    }
    map << "]}";
    map.close();

    auto load = [&](const std::string& spec) {
        return io::load_twinstim((d / (spec + ".json")).string(), (d / "events.csv").string(),
                                 (d / "stgrid.csv").string(), (d / "map.geojson").string());
    };
    const auto end = load("endemic");
    CHECK(end.model->names() == std::vector<std::string>{"h.(Intercept)", "h.I(start/365 - 3.5)",
                                                         "h.sin(2 * pi * t/365)", "h.cos(2 * pi * t/365)"});
    const auto gauss = load("gaussian");
    const auto& gn = gauss.model->names();
    for (const char* n : {"e.(Intercept)", "e.typeC", "e.agegrp[3,19)", "e.agegrp[19,Inf)", "e.siaf.1"})
        CHECK(std::find(gn.begin(), gn.end(), n) != gn.end());
    const auto pl = load("powerlaw");
    CHECK(std::isinf(pl.loaded.pattern.events[0].epsS));
    CHECK(pl.recipe.spec.siaf.npars() == 2);
    const auto step = load("step4");
    CHECK(step.recipe.spec.siaf.npars() == 4);
    CHECK(std::isfinite(step.model->loglik(step.model->start(), false, 1e-6).value));
}
