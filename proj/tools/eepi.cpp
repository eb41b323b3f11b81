#include "eepi/forecast.hpp"
#include "eepi/hhh4.hpp"
#include "eepi/io.hpp"
#include "eepi/loaders.hpp"
#include "eepi/model_spec.hpp"
#include "eepi/simulation.hpp"
#include "eepi/special.hpp"
#include "eepi/twinsir.hpp"
#include "eepi/twinstim.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace eepi;

namespace
{

constexpr const char* kVersion = "1.0.0";

enum class LogLevel
{
    Quiet,
    Info,
    Debug,
};

LogLevel log_level()
{
    const char* v = std::getenv("EE_MODELS_LOG");
    if (!v)
        return LogLevel::Info;
    const std::string s(v);
    if (s == "quiet" || s == "error" || s == "0")
        return LogLevel::Quiet;
    if (s == "debug" || s == "2")
        return LogLevel::Debug;
    return LogLevel::Info;
}

void log_info(const std::string& msg)
{
    if (log_level() != LogLevel::Quiet)
        std::cerr << "[eepi] " << msg << "\n";
}

void log_debug(const std::string& msg)
{
    if (log_level() == LogLevel::Debug)
        std::cerr << "[eepi:debug] " << msg << "\n";
}

struct Args
{
    std::string counts, events, stgrid, map, adjacency, spec, out, fit, predictions, compare;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    bool force = false;
    int nsim = 1;
    int from = 0, to = 0;
    std::string type = "final";
    std::string scores = "logs,rps,ses";
    int nPermutations = 9999;
    int freq = 52;
    std::vector<std::string> profile;
};

json number(double v)
{
    if (std::isfinite(v))
        return v;
    return io::format_number(v);
}

json vector_json(const Vector& v)
{
    json a = json::array();
    for (int k = 0; k < v.size(); ++k)
        a.push_back(number(v(k)));
    return a;
}

class Run
{
public:
    Run(std::string command, const Args& args) : command_(std::move(command)), args_(args)
    {
        start_ = std::chrono::steady_clock::now();
        require(!args.out.empty(), "missing output directory (--out)");
        dir_ = args.out;
        if (fs::exists(dir_))
        {
            require(fs::is_directory(dir_), "output path '" + dir_.string() + "' is not a directory", ErrorCode::Io);
            if (!fs::is_empty(dir_))
            {
                require(args.force, "output directory '" + dir_.string() + "' is not empty (use --force)",
                        ErrorCode::Io);
                for (const auto& entry : fs::directory_iterator(dir_))
                    fs::remove_all(entry.path());
            }
        }
        fs::create_directories(dir_);
    }

    fs::path path(const std::string& name) const { return dir_ / name; }

    void write(const std::string& name, const std::string& content)
    {
        io::write_text(path(name), content);
        outputs_.push_back(name);
    }

    void record(const std::string& name) { outputs_.push_back(name); }

    void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

    void set_converged(bool c) { converged_ = converged_ && c; }
    bool converged() const { return converged_; }
    void note(const std::string& key, json value) { extra_[key] = std::move(value); }

    void finish()
    {
        json inputs = json::object();
        auto add = [&](const char* key, const std::string& v) {
            if (!v.empty())
                inputs[key] = v;
        };
        add("counts", args_.counts);
        add("events", args_.events);
        add("stgrid", args_.stgrid);
        add("map", args_.map);
        add("adjacency", args_.adjacency);
        add("fit", args_.fit);
        add("predictions", args_.predictions);
        add("compare", args_.compare);
        json m;
        m["command"] = command_;
        m["inputs"] = inputs;
        m["spec"] = args_.spec.empty() ? json() : json(args_.spec);
        m["seed"] = args_.seed ? json(*args_.seed) : json();
        m["threads"] = args_.threads;
        m["outputDirectory"] = dir_.string();
        m["toolVersion"] = kVersion;
        m["outputs"] = outputs_;
        m["converged"] = converged_;
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        m["wallClockSeconds"] = secs;
        const std::time_t now = std::time(nullptr);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        m["timestamp"] = buf;
        for (auto& [k, v] : extra_.items())
            m[k] = v;
        io::write_text(path("manifest.json"), m.dump(2) + "\n");
    }

private:
    std::string command_;
    const Args& args_;
    fs::path dir_;
    std::vector<std::string> outputs_;
    bool converged_ = true;
    json extra_ = json::object();
    std::chrono::steady_clock::time_point start_;
};

std::string coefficient_tsv(const std::vector<std::string>& names, const Vector& est, const Vector& se)
{
    std::ostringstream os;
    os << "name\testimate\tSE\tz\tp\n";
    for (size_t k = 0; k < names.size(); ++k)
    {
        const double e = est(k), s = se.size() > static_cast<int>(k) ? se(k) : std::nan("");
        const double z = e / s;
        const double p = std::isfinite(z) ? 2.0 * (1.0 - special::normal_cdf(std::abs(z))) : std::nan("");
        os << names[k] << '\t' << io::format_number(e) << '\t' << io::format_number(s) << '\t'
           << io::format_number(z) << '\t' << io::format_number(p) << '\n';
    }
    return os.str();
}

Vector load_theta(const std::string& path, const std::vector<std::string>& names)
{
    const json j = json::parse(io::read_text(path));
    require(j.contains("names") && j.contains("theta"), "fit file '" + path + "' lacks names/theta",
            ErrorCode::InvalidInput);
    const auto fitNames = j["names"].get<std::vector<std::string>>();
    require(fitNames == names, "fit file '" + path + "' does not match the model parameters",
            ErrorCode::InvalidInput);
    Vector theta(names.size());
    for (size_t k = 0; k < names.size(); ++k)
    {
        const json& v = j["theta"][k];
        theta(k) = v.is_number() ? v.get<double>() : io::parse_number(v.get<std::string>());
    }
    return theta;
}

// ---------------------------------------------------------------- model loading

io::Hhh4Setup load_hhh4(const Args& a)
{
    io::CountFiles files;
    files.counts = a.counts;
    files.adjacency = a.adjacency;
    files.map = a.map;
    return io::load_hhh4(a.spec, files);
}

io::TwinstimSetup load_twinstim(const Args& a) { return io::load_twinstim(a.spec, a.events, a.stgrid, a.map); }

twinsir::Model load_twinsir(const Args& a) { return io::load_twinsir(a.spec, a.events); }

std::string model_kind(const std::string& specPath)
{
    const auto spec = model_spec::parse_model_spec(specPath);
    if (std::holds_alternative<model_spec::Hhh4Recipe>(spec))
        return "hhh4";
    if (std::holds_alternative<model_spec::TwinstimRecipe>(spec))
        return "twinstim";
    return "twinsir";
}

// ---------------------------------------------------------------- commands

int cmd_fit_hhh4(const Args& a)
{
    auto setup = load_hhh4(a);
    const hhh4::Model& model = setup.model;
    Run run("fit-hhh4", a);
    log_info("fitting hhh4 with " + std::to_string(model.npars()) + " parameters");
    const hhh4::Fit f = hhh4::fit(model);
    run.set_converged(f.converged);
    hhh4::SummaryOptions so;
    so.maxEV = model.spec().ar.active || model.spec().ne.active;
    const hhh4::Summary sum = hhh4::summarize(model, f, so);

    const auto rep = hhh4::reported_coefficients(f);
    std::vector<std::string> names;
    Vector est(rep.size()), se(rep.size());
    for (size_t k = 0; k < rep.size(); ++k)
    {
        names.push_back(rep[k].name);
        est(k) = rep[k].estimate;
        se(k) = rep[k].se;
    }
    run.write("coefficients.tsv", coefficient_tsv(names, est, se));

    json j;
    j["model"] = "hhh4";
    j["family"] = hhh4::to_string(model.spec().family);
    j["names"] = f.names;
    j["theta"] = vector_json(f.coefficients);
    j["se"] = vector_json(f.se);
    j["loglik"] = number(f.loglik);
    j["df"] = f.df;
    j["nobs"] = f.nobs;
    j["aic"] = number(f.aic());
    j["bic"] = number(f.bic());
    if (so.maxEV)
        j["maxEV"] = number(sum.maxEV);
    j["converged"] = f.converged;
    j["iterations"] = f.iterations;
    j["message"] = f.message;
    run.write_json("fit.json", j);
    run.note("loglik", number(f.loglik));
    run.finish();
    std::cout << "logLik: " << io::format_number(f.loglik) << "  AIC: " << io::format_number(f.aic())
              << "  BIC: " << io::format_number(f.bic()) << "\n";
    return f.converged ? 0 : 2;
}

int cmd_fit_twinstim(const Args& a)
{
    auto setup = load_twinstim(a);
    const twinstim::Model& model = *setup.model;
    Run run("fit-twinstim", a);
    twinstim::Options opts;
    opts.threads = a.threads;
    log_info("fitting twinstim to " + std::to_string(model.pattern().nEvents()) + " events");
    const twinstim::Fit f = twinstim::fit(model, opts);
    run.set_converged(f.converged);
    run.write("coefficients.tsv", coefficient_tsv(f.names, f.coefficients, f.se));
    json j;
    j["model"] = "twinstim";
    j["names"] = f.names;
    j["theta"] = vector_json(f.coefficients);
    j["se"] = vector_json(f.se);
    j["loglik"] = number(f.loglik);
    j["df"] = f.df;
    j["nEvents"] = f.nEvents;
    j["aic"] = number(f.aic());
    j["converged"] = f.converged;
    j["iterations"] = f.iterations;
    j["message"] = f.message;
    j["siafIntegrals"] = vector_json(f.siafIntegrals);
    j["tiafIntegrals"] = vector_json(f.tiafIntegrals);
    if (model.spec().has_epidemic())
    {
        const Vector r0 = twinstim::r0_events(model, f);
        json byType = json::object();
        const auto& types = model.pattern().typeNames;
        for (int k = 0; k < static_cast<int>(types.size()); ++k)
        {
            double s = 0.0;
            int n = 0;
            for (int i = 0; i < model.pattern().nEvents(); ++i)
                if (model.pattern().events[i].type == k)
                {
                    s += r0(i);
                    ++n;
                }
            byType[types[k]] = n > 0 ? number(s / n) : json();
        }
        j["r0TypeMeans"] = byType;
    }
    run.write_json("fit.json", j);
    run.finish();
    std::cout << "logLik: " << io::format_number(f.loglik) << "  AIC: " << io::format_number(f.aic()) << "\n";
    return f.converged ? 0 : 2;
}

int cmd_fit_twinsir(const Args& a)
{
    const twinsir::Model model = load_twinsir(a);
    Run run("fit-twinsir", a);
    log_info("fitting twinSIR with " + std::to_string(model.n_events()) + " infections");
    const twinsir::Fit f = twinsir::fit(model);
    run.set_converged(f.converged);
    run.write("coefficients.tsv", coefficient_tsv(f.names, f.coefficients, f.se));
    json j;
    j["model"] = "twinsir";
    j["names"] = f.names;
    j["theta"] = vector_json(f.coefficients);
    j["se"] = vector_json(f.se);
    j["loglik"] = number(f.loglik);
    j["df"] = f.df;
    j["aic"] = number(f.aic());
    j["converged"] = f.converged;
    j["iterations"] = f.iterations;
    j["message"] = f.message;
    if (!a.profile.empty())
    {
        std::vector<int> idx;
        for (const auto& name : a.profile)
            idx.push_back(model.index_of(name));
        json prof = json::array();
        for (const auto& p : twinsir::profile_ci(model, f, idx))
            prof.push_back({{"name", p.name},
                            {"hlLower", number(p.hlLower)},
                            {"hlUpper", number(p.hlUpper)},
                            {"waldLower", number(p.waldLower)},
                            {"waldUpper", number(p.waldUpper)},
                            {"grid", vector_json(p.grid)},
                            {"profile", vector_json(p.profile)}});
        j["profile"] = prof;
    }
    run.write_json("fit.json", j);
    run.finish();
    std::cout << "logLik: " << io::format_number(f.loglik) << "  AIC: " << io::format_number(f.aic()) << "\n";
    return f.converged ? 0 : 2;
}

int cmd_simulate(const Args& a)
{
    require(a.seed.has_value(), "simulation requires an explicit seed (--seed)", ErrorCode::InvalidSpec);
    require(!a.spec.empty(), "missing input: model spec (--spec)");
    require(a.nsim >= 1, "--nsim must be at least 1");
    const std::string kind = model_kind(a.spec);
    if (kind == "hhh4")
    {
        auto setup = load_hhh4(a);
        const hhh4::Model& model = setup.model;
        Run run("simulate", a);
        Vector theta;
        if (!a.fit.empty())
            theta = load_theta(a.fit, model.names());
        else
        {
            hhh4::FitOptions fo;
            fo.computeCovariance = false;
            const hhh4::Fit f = hhh4::fit(model, fo);
            run.set_converged(f.converged);
            theta = f.coefficients;
        }
        simulation::Hhh4Config cfg;
        cfg.nsim = a.nsim;
        cfg.seed = a.seed;
        cfg.threads = a.threads;
        if (a.from > 0)
            cfg.from = a.from;
        if (a.to > 0)
            cfg.to = a.to;
        const auto sims = simulation::simulate_hhh4(model, theta, cfg);
        for (size_t s = 0; s < sims.size(); ++s)
        {
            char name[32];
            std::snprintf(name, sizeof name, "sim_%04zu.csv", s + 1);
            io::write_counts(run.path(name), model.data().unitIds, sims[s]);
            run.record(name);
        }
        run.finish();
        return run.converged() ? 0 : 2;
    }
    if (kind == "twinstim")
    {
        auto setup = load_twinstim(a);
        const twinstim::Model& model = *setup.model;
        Run run("simulate", a);
        Vector theta;
        if (!a.fit.empty())
            theta = load_theta(a.fit, model.names());
        else
        {
            twinstim::Options opts;
            opts.threads = a.threads;
            const twinstim::Fit f = twinstim::fit(model, opts);
            run.set_converged(f.converged);
            theta = f.coefficients;
        }
        simulation::TwinstimConfig cfg;
        cfg.nsim = a.nsim;
        cfg.seed = a.seed;
        cfg.threads = a.threads;
        const auto sims = simulation::simulate_twinstim(model, theta, setup.loaded.tiles, cfg);
        for (size_t s = 0; s < sims.size(); ++s)
        {
            const PointPattern& p = sims[s].pattern;
            io::Table t;
            t.header = {"time", "x", "y", "type", "eps_t", "eps_s", "tile", "source"};
            for (const auto& m : p.markNames)
                t.header.push_back(m);
            for (int i = 0; i < p.nEvents(); ++i)
            {
                const Event& e = p.events[i];
                std::vector<std::string> r = {io::format_number(e.time),
                                              io::format_number(e.location.x()),
                                              io::format_number(e.location.y()),
                                              p.typeNames[e.type],
                                              io::format_number(e.epsT),
                                              io::format_number(e.epsS),
                                              e.tileId,
                                              std::to_string(sims[s].source[i])};
                for (const auto& m : e.marks)
                    r.push_back(m);
                t.rows.push_back(std::move(r));
            }
            char name[32];
            std::snprintf(name, sizeof name, "sim_%04zu.csv", s + 1);
            run.write(name, io::format_csv(t));
        }
        run.finish();
        return run.converged() ? 0 : 2;
    }
    const twinsir::Model model = load_twinsir(a);
    Run run("simulate", a);
    Vector theta;
    if (!a.fit.empty())
        theta = load_theta(a.fit, model.names());
    else
    {
        const twinsir::Fit f = twinsir::fit(model);
        run.set_converged(f.converged);
        theta = f.coefficients;
    }
    simulation::TwinsirConfig cfg;
    cfg.nsim = a.nsim;
    cfg.seed = a.seed;
    cfg.threads = a.threads;
    const auto sims = simulation::simulate_twinsir(model, theta, cfg);
    for (size_t s = 0; s < sims.size(); ++s)
    {
        const EventHistory& h = sims[s];
        io::Table t;
        t.header = {"id", "x", "y", "tI", "tR"};
        for (const auto& n : h.attributeNames)
            t.header.push_back(n);
        for (int i = 0; i < h.nIndividuals(); ++i)
        {
            std::vector<std::string> r = {h.ids[i], io::format_number(h.coords(i, 0)),
                                          io::format_number(h.coords(i, 1)), io::format_number(h.tI[i]),
                                          io::format_number(h.tR[i])};
            for (const auto& v : h.attributes[i])
                r.push_back(v);
            t.rows.push_back(std::move(r));
        }
        char name[32];
        std::snprintf(name, sizeof name, "sim_%04zu.csv", s + 1);
        run.write(name, io::format_csv(t));
    }
    run.finish();
    return run.converged() ? 0 : 2;
}

io::Table predictions_table(const forecast::PredictiveDistribution& pd)
{
    io::Table t;
    t.header = {"time", "unit", "family", "mean", "logSize", "observed", "flagged"};
    for (int r = 0; r < pd.rows(); ++r)
        for (int c = 0; c < pd.cols(); ++c)
            t.rows.push_back({std::to_string(pd.times[r]), pd.unitIds[c], hhh4::to_string(pd.family),
                              io::format_number(pd.mean(r, c)), io::format_number(pd.logSize(r, c)),
                              io::format_number(pd.observed(r, c)), pd.flagged[r] ? "1" : "0"});
    return t;
}

forecast::PredictiveDistribution read_predictions(const std::string& path)
{
    require(!path.empty(), "missing input: predictions file (--predictions)");
    require(fs::exists(path), "missing input: predictions file '" + path + "' does not exist");
    const io::Table t = io::read_csv(path);
    const int ct = t.column("time"), cu = t.column("unit"), cf = t.column("family"), cm = t.column("mean"),
              cs = t.column("logSize"), co = t.column("observed");
    const int cfl = t.has_column("flagged") ? t.column("flagged") : -1;
    forecast::PredictiveDistribution pd;
    std::map<int, int> rowOf;
    std::map<std::string, int> colOf;
    for (const auto& row : t.rows)
    {
        const int time = static_cast<int>(io::parse_number(row[ct]));
        if (!rowOf.count(time))
        {
            rowOf[time] = static_cast<int>(pd.times.size());
            pd.times.push_back(time);
        }
        if (!colOf.count(row[cu]))
        {
            colOf[row[cu]] = static_cast<int>(pd.unitIds.size());
            pd.unitIds.push_back(row[cu]);
        }
    }
    require(!t.rows.empty(), "predictions file '" + path + "' is empty");
    pd.family = hhh4::parse_family(t.rows[0][cf]);
    const int R = static_cast<int>(pd.times.size()), C = static_cast<int>(pd.unitIds.size());
    require(static_cast<int>(t.rows.size()) == R * C, "predictions file must hold every (time, unit) pair once");
    pd.mean = Matrix::Constant(R, C, std::nan(""));
    pd.logSize = Matrix::Zero(R, C);
    pd.observed = Matrix::Constant(R, C, std::nan(""));
    pd.flagged.assign(R, false);
    for (const auto& row : t.rows)
    {
        const int r = rowOf[static_cast<int>(io::parse_number(row[ct]))], c = colOf[row[cu]];
        pd.mean(r, c) = io::parse_number(row[cm]);
        pd.logSize(r, c) = io::parse_number(row[cs]);
        pd.observed(r, c) = io::parse_number(row[co]);
        if (cfl >= 0 && row[cfl] == "1")
            pd.flagged[r] = true;
    }
    require(pd.mean.allFinite() && pd.observed.allFinite(), "predictions file has duplicate or missing cells");
    return pd;
}

int cmd_predict(const Args& a)
{
    auto setup = load_hhh4(a);
    const hhh4::Model& model = setup.model;
    Run run("predict", a);
    hhh4::Fit full;
    if (!a.fit.empty())
    {
        full.names = model.names();
        full.coefficients = load_theta(a.fit, model.names());
        full.converged = true;
    }
    else
    {
        full = hhh4::fit(model);
        run.set_converged(full.converged);
    }
    const int T = model.data().nTime();
    const int from = a.from > 0 ? a.from : std::max(1, T / 2);
    const int to = a.to > 0 ? a.to : T - 1;
    forecast::PredictionType type;
    if (a.type == "final")
        type = forecast::PredictionType::Final;
    else if (a.type == "rolling")
        type = forecast::PredictionType::Rolling;
    else
        throw Error(ErrorCode::InvalidInput, "unknown prediction type '" + a.type + "' (expected final or rolling)");
    const auto pd = forecast::one_step_ahead(model, full, from, to, type, a.threads);
    for (const auto& w : pd.warnings)
        log_info("warning: " + w);
    run.write("predictions.csv", io::format_csv(predictions_table(pd)));
    run.note("flaggedRows", static_cast<int>(std::count(pd.flagged.begin(), pd.flagged.end(), true)));
    run.finish();
    return run.converged() ? 0 : 2;
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty())
            out.push_back(item);
    return out;
}

int cmd_score(const Args& a)
{
    const auto pd = read_predictions(a.predictions);
    const auto which = split_list(a.scores);
    require(!which.empty(), "no scores requested (--scores)");
    const auto sc = forecast::score_predictions(pd, which);
    std::optional<forecast::Scores> other;
    if (!a.compare.empty())
    {
        require(a.seed.has_value(), "permutation test requires an explicit seed (--seed)", ErrorCode::InvalidSpec);
        const auto pdB = read_predictions(a.compare);
        other = forecast::score_predictions(pdB, which);
    }
    Run run("score", a);
    io::Table t;
    t.header = {"time", "unit"};
    for (const auto& n : which)
        t.header.push_back(n);
    for (int r = 0; r < pd.rows(); ++r)
        for (int c = 0; c < pd.cols(); ++c)
        {
            std::vector<std::string> row = {std::to_string(pd.times[r]), pd.unitIds[c]};
            for (const auto& n : which)
                row.push_back(io::format_number(sc[n](r, c)));
            t.rows.push_back(std::move(row));
        }
    run.write("scores.csv", io::format_csv(t));
    std::ostringstream os;
    os << "score\tmean";
    if (other)
        os << "\tmeanCompare\tdiffObs\tpPermut\tpT";
    os << '\n';
    for (const auto& n : which)
    {
        os << n << '\t' << io::format_number(sc[n].mean());
        if (other)
        {
            require((*other)[n].rows() == sc[n].rows() && (*other)[n].cols() == sc[n].cols(),
                    "compared predictions have a different shape");
            const auto p = forecast::permutation_test(sc[n], (*other)[n], a.nPermutations, *a.seed);
            os << '\t' << io::format_number((*other)[n].mean()) << '\t' << io::format_number(p.diffObs) << '\t'
               << io::format_number(p.pPermut) << '\t' << io::format_number(p.pT);
        }
        os << '\n';
    }
    run.write("summary.tsv", os.str());
    std::cout << os.str();
    run.finish();
    return 0;
}

int cmd_convert(const Args& a)
{
    io::PatternFiles files{a.events, a.stgrid, a.map, 16};
    const auto loaded = io::load_point_pattern(files);
    Run run("convert", a);
    const CountSeries counts =
        aggregate_to_counts(loaded.pattern, a.freq, 1, 1, loaded.pattern.stgrid.tileIds);
    io::write_counts(run.path("counts.csv"), counts.unitIds, counts.counts);
    run.record("counts.csv");
    run.note("totalEvents", counts.counts.sum());
    run.finish();
    std::cout << "total: " << io::format_number(counts.counts.sum()) << "\n";
    return 0;
}

void add_common(CLI::App* sub, Args& a)
{
    sub->add_option("--spec", a.spec, "model spec (JSON)");
    sub->add_option("--out", a.out, "output directory")->required();
    sub->add_flag("--force", a.force, "replace the contents of an existing output directory");
    sub->add_option("--threads", a.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", a.seed, "random seed");
}

void add_counts(CLI::App* sub, Args& a)
{
    sub->add_option("--counts", a.counts, "counts grid (CSV)");
    sub->add_option("--adjacency", a.adjacency, "adjacency edge list");
    sub->add_option("--map", a.map, "GeoJSON map");
}

void add_pattern(CLI::App* sub, Args& a)
{
    sub->add_option("--events", a.events, "events table (CSV)");
    sub->add_option("--stgrid", a.stgrid, "space-time grid (CSV)");
    sub->add_option("--map", a.map, "GeoJSON tiles of the observation window");
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"eepi: endemic-epidemic models for infectious disease surveillance data"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    Args a;

    auto* fitHhh4 = app.add_subcommand("fit-hhh4", "fit an hhh4 model to a counts grid");
    add_common(fitHhh4, a);
    add_counts(fitHhh4, a);

    auto* fitStim = app.add_subcommand("fit-twinstim", "fit a twinstim model to a point pattern");
    add_common(fitStim, a);
    add_pattern(fitStim, a);

    auto* fitSir = app.add_subcommand("fit-twinsir", "fit a twinSIR model to an event history");
    add_common(fitSir, a);
    fitSir->add_option("--events", a.events, "event history (CSV)");
    fitSir->add_option("--profile", a.profile, "coefficients to profile");

    auto* sim = app.add_subcommand("simulate", "simulate from a fitted model");
    add_common(sim, a);
    sim->add_option("--counts", a.counts, "counts grid (CSV)");
    sim->add_option("--adjacency", a.adjacency, "adjacency edge list");
    sim->add_option("--events", a.events, "events table or event history (CSV)");
    sim->add_option("--stgrid", a.stgrid, "space-time grid (CSV)");
    sim->add_option("--map", a.map, "GeoJSON map");
    sim->add_option("--fit", a.fit, "fit.json from a previous run; refit when absent");
    sim->add_option("--nsim", a.nsim, "number of replicates");
    sim->add_option("--from", a.from, "first simulated time point (hhh4)");
    sim->add_option("--to", a.to, "last simulated time point (hhh4)");

    auto* pred = app.add_subcommand("predict", "one-step-ahead predictions of an hhh4 model");
    add_common(pred, a);
    add_counts(pred, a);
    pred->add_option("--fit", a.fit, "fit.json from a previous run; refit when absent");
    pred->add_option("--from", a.from, "predict from + 1 ..");
    pred->add_option("--to", a.to, ".. to + 1");
    pred->add_option("--type", a.type, "final or rolling");

    auto* score = app.add_subcommand("score", "proper scoring rules for predictions");
    add_common(score, a);
    score->add_option("--predictions", a.predictions, "predictions.csv from predict");
    score->add_option("--compare", a.compare, "second predictions file for a permutation test");
    score->add_option("--scores", a.scores, "comma-separated subset of logs,rps,ses");
    score->add_option("--permutations", a.nPermutations, "number of sign-flip permutations");

    auto* conv = app.add_subcommand("convert", "aggregate a point pattern to a counts grid");
    add_common(conv, a);
    add_pattern(conv, a);
    conv->add_option("--freq", a.freq, "time points per year of the result");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        if (e.get_exit_code() == 0)
            return app.exit(e);
        std::cerr << "error[E_USAGE]: " << e.what() << "\n";
        return 1;
    }

    try
    {
        log_debug("threads = " + std::to_string(a.threads));
        if (fitHhh4->parsed())
            return cmd_fit_hhh4(a);
        if (fitStim->parsed())
            return cmd_fit_twinstim(a);
        if (fitSir->parsed())
            return cmd_fit_twinsir(a);
        if (sim->parsed())
            return cmd_simulate(a);
        if (pred->parsed())
            return cmd_predict(a);
        if (score->parsed())
            return cmd_score(a);
        if (conv->parsed())
            return cmd_convert(a);
    }
    catch (const Error& e)
    {
        std::cerr << "error[" << to_string(e.code()) << "]: " << e.what() << "\n";
        return e.code() == ErrorCode::NotConverged ? 2 : 1;
    }
    catch (const json::exception& e)
    {
        std::cerr << "error[E_INPUT]: " << e.what() << "\n";
        return 1;
    }
    catch (const fs::filesystem_error& e)
    {
        std::cerr << "error[E_IO]: " << e.what() << "\n";
        return 1;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error[E_INTERNAL]: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
