#include "eepi/twinstim.hpp"
#include "eepi/io.hpp"
#include "eepi/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace eepi::twinstim
{

void add_season_terms(std::vector<Term>& terms, int S, double period)
{
    require(S >= 1 && period > 0.0, "season terms need S >= 1 and a positive period", ErrorCode::InvalidSpec);
    const std::string p = period == std::floor(period) ? std::to_string(static_cast<long>(period))
                                                       : io::format_number(period);
    for (int s = 1; s <= S; ++s)
    {
        const std::string arg = std::to_string(2 * s) + " * pi * t/" + p;
        Term sn;
        sn.kind = Term::Kind::Sin;
        sn.name = "sin(" + arg + ")";
        sn.period = period;
        sn.harmonic = s;
        Term cs = sn;
        cs.kind = Term::Kind::Cos;
        cs.name = "cos(" + arg + ")";
        terms.push_back(sn);
        terms.push_back(cs);
    }
}

namespace
{
int type_index(const PointPattern& p, const std::string& level)
{
    for (int k = 0; k < p.nTypes(); ++k)
        if (p.typeNames[k] == level)
            return k;
    throw Error(ErrorCode::InvalidSpec, "unknown event type '" + level + "'");
}

double time_term(const Term& term, double t)
{
    switch (term.kind)
    {
    case Term::Kind::Time:
        return (t - term.shift) / term.scale;
    case Term::Kind::Sin:
        return std::sin(2.0 * kPi * term.harmonic * t / term.period);
    case Term::Kind::Cos:
        return std::cos(2.0 * kPi * term.harmonic * t / term.period);
    default:
        return 0.0;
    }
}

Spec endemic_only(const Spec& spec)
{
    Spec s = spec;
    s.epidemicIntercept = false;
    s.epidemic.clear();
    s.siaf = Siaf{};
    s.tiaf = Tiaf{};
    return s;
}

double cell_duration(const PointPattern& p, int row)
{
    return std::max(0.0, std::min(p.stgrid.stop(row), p.T) - std::max(p.stgrid.start(row), p.t0));
}
}  // namespace

Model::Model(Spec spec, PointPattern pattern) : spec_(std::move(spec)), pattern_(std::move(pattern))
{
    const StGrid& g = pattern_.stgrid;
    const int n = pattern_.nEvents();
    const int K = std::max(pattern_.nTypes(), 1);
    for (const auto& t : spec_.endemic)
        require(t.kind != Term::Kind::Level, "endemic term '" + t.name + "': level terms need event marks",
                ErrorCode::InvalidSpec);

    if (spec_.endemicIntercept)
        names_.push_back("h.(Intercept)");
    for (const auto& t : spec_.endemic)
        names_.push_back("h." + t.name);
    nEnd_ = static_cast<int>(names_.size());
    if (spec_.has_epidemic())
    {
        if (spec_.epidemicIntercept)
            names_.push_back("e.(Intercept)");
        for (const auto& t : spec_.epidemic)
            names_.push_back("e." + t.name);
        nEpi_ = static_cast<int>(names_.size()) - nEnd_;
        for (const auto& s : spec_.siaf.parameter_names())
            names_.push_back("e." + s);
        for (const auto& s : spec_.tiaf.parameter_names())
            names_.push_back("e." + s);
    }
    for (size_t a = 0; a < names_.size(); ++a)
        for (size_t b = a + 1; b < names_.size(); ++b)
            require(names_[a] != names_[b], "duplicate coefficient name '" + names_[a] + "'", ErrorCode::InvalidSpec);

    logOff_ = Vector::Zero(g.rows());
    if (!spec_.endemicOffset.empty())
    {
        const int c = g.covariate_index(spec_.endemicOffset);
        for (int r = 0; r < g.rows(); ++r)
        {
            const double v = g.covariates(r, c);
            require(v > 0.0 && std::isfinite(v),
                    "endemic offset '" + spec_.endemicOffset + "' must be positive on every grid cell (row " +
                        std::to_string(r + 1) + ")",
                    ErrorCode::InvalidSpec);
            logOff_(r) = std::log(v);
        }
    }
    for (const auto& t : spec_.endemic)
        if (t.kind == Term::Kind::Column)
            g.covariate_index(t.column);
        else if (t.kind == Term::Kind::Type)
            type_index(pattern_, t.level);

    cellX_.assign(K, Matrix(g.rows(), nEnd_));
    for (int k = 0; k < K; ++k)
        for (int r = 0; r < g.rows(); ++r)
            cellX_[k].row(r) = endemic_design(r, k).transpose();
    endX_.resize(n, nEnd_);
    for (int i = 0; i < n; ++i)
        endX_.row(i) = cellX_[pattern_.events[i].type].row(pattern_.events[i].cell);

    epiX_.resize(n, nEpi_);
    for (int i = 0; i < n; ++i)
        epiX_.row(i) = epidemic_design(pattern_.events[i]).transpose();

    qSum_.resize(n);
    for (int i = 0; i < n; ++i)
    {
        int s = 0;
        for (int k = 0; k < pattern_.nTypes(); ++k)
            s += pattern_.qmatrix(pattern_.events[i].type, k) ? 1 : 0;
        qSum_(i) = s;
    }

    sources_.assign(n, {});
    caches_.assign(n, {});
    if (spec_.has_epidemic())
    {
        for (int i = 0; i < n; ++i)
        {
            const Event& ei = pattern_.events[i];
            for (int j = 0; j < i; ++j)
            {
                const Event& ej = pattern_.events[j];
                const double lag = ei.time - ej.time;
                if (lag <= 0.0 || lag > ej.epsT || !pattern_.qmatrix(ej.type, ei.type))
                    continue;
                const double d = (ei.location - ej.location).norm();
                if (d > ej.epsS)
                    continue;
                sources_[i].push_back({j, d, lag});
            }
        }
        for (int j = 0; j < n; ++j)
            caches_[j] = spec_.siaf.cache(pattern_.influenceRegions[j]);
    }
}

int Model::index_of(const std::string& name) const
{
    for (size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name)
            return static_cast<int>(i);
    throw Error(ErrorCode::InvalidInput, "unknown coefficient '" + name + "'");
}

double Model::term_value(const Term& term, int cell, int type) const
{
    const StGrid& g = pattern_.stgrid;
    switch (term.kind)
    {
    case Term::Kind::Column:
        return g.covariates(cell, g.covariate_index(term.column));
    case Term::Kind::Type:
        return type == type_index(pattern_, term.level) ? 1.0 : 0.0;
    case Term::Kind::Level:
        return 0.0;
    default:
        return time_term(term, g.start(cell));
    }
}

Vector Model::endemic_design(int cell, int type) const
{
    Vector x(nEnd_);
    int k = 0;
    if (spec_.endemicIntercept)
        x(k++) = 1.0;
    for (const auto& t : spec_.endemic)
        x(k++) = term_value(t, cell, type);
    return x;
}

Vector Model::epidemic_design(const Event& e) const
{
    Vector x(nEpi_);
    int k = 0;
    if (spec_.epidemicIntercept && nEpi_ > 0)
        x(k++) = 1.0;
    for (const auto& t : spec_.epidemic)
    {
        double v = 0.0;
        switch (t.kind)
        {
        case Term::Kind::Column:
        {
            const auto& mn = pattern_.markNames;
            const auto it = std::find(mn.begin(), mn.end(), t.column);
            if (it != mn.end())
            {
                v = io::parse_number(e.marks[it - mn.begin()]);
                require(std::isfinite(v), "mark '" + t.column + "' of the event at t = " +
                                              io::format_number(e.time) + " is not a finite number",
                        ErrorCode::InvalidInput);
            }
            else
            {
                require(e.cell >= 0, "event at t = " + io::format_number(e.time) + " has no grid cell for '" +
                                         t.column + "'");
                v = pattern_.stgrid.covariates(e.cell, pattern_.stgrid.covariate_index(t.column));
            }
            break;
        }
        case Term::Kind::Level:
            v = e.marks[pattern_.mark_index(t.column)] == t.level ? 1.0 : 0.0;
            break;
        case Term::Kind::Type:
            v = e.type == type_index(pattern_, t.level) ? 1.0 : 0.0;
            break;
        default:
            v = time_term(t, e.time);
        }
        x(k++) = v;
    }
    return x;
}

double Model::endemic_rate(const Vector& theta, int cell, int type) const
{
    if (nEnd_ == 0 && spec_.endemicOffset.empty())
        return 0.0;
    return std::exp(logOff_(cell) + cellX_[type].row(cell).dot(theta.head(nEnd_)));
}

Vector Model::eta(const Vector& theta) const
{
    if (!spec_.has_epidemic())
        return Vector::Zero(pattern_.nEvents());
    return (epiX_ * theta.segment(nEnd_, nEpi_)).array().exp().matrix();
}

Vector Model::start() const
{
    Vector theta = Vector::Zero(npars());
    const int K = std::max(pattern_.nTypes(), 1);
    const int n = pattern_.nEvents();
    if (spec_.endemicIntercept)
    {
        double expo = 0.0;
        for (int r = 0; r < pattern_.stgrid.rows(); ++r)
            expo += std::exp(logOff_(r)) * pattern_.stgrid.area(r) * cell_duration(pattern_, r);
        expo *= K;
        theta(0) = std::log(std::max(n, 1) / expo);
    }
    if (!spec_.has_epidemic())
        return theta;
    const double scale = std::sqrt(polygon_area(pattern_.W));
    Vector s(spec_.siaf.npars());
    switch (spec_.siaf.kind)
    {
    case SiafKind::Gaussian:
        s(0) = std::log(scale / 20.0);
        break;
    case SiafKind::Powerlaw:
        s << std::log(scale / 100.0), std::log(2.5);
        break;
    default:
        s.setZero();
    }
    theta.segment(siaf_offset(), s.size()) = s;
    if (spec_.tiaf.kind == TiafKind::Exponential)
        theta(tiaf_offset()) = std::log(10.0 / (pattern_.T - pattern_.t0));
    if (spec_.epidemicIntercept)
    {
        double total = 0.0;
        const Vector ts = theta.segment(tiaf_offset(), spec_.tiaf.npars());
        for (int j = 0; j < n; ++j)
        {
            const Event& e = pattern_.events[j];
            const double G = spec_.tiaf.G(std::min(pattern_.T - e.time, e.epsT), ts, false)(0);
            const double F = spec_.siaf.integrate(pattern_.influenceRegions[j], caches_[j], s, 1e-4, false)(0);
            total += G * F * qSum_(j);
        }
        if (total > 0.0)
            theta(nEnd_) = std::log(0.1 * std::max(n, 1) / total);
    }
    return theta;
}

LoglikResult Model::loglik(const Vector& theta, bool withGradient, double tol, int threads) const
{
    require(theta.size() == npars(), "coefficient vector has the wrong length");
    const int n = pattern_.nEvents();
    const int np = npars();
    const int K = std::max(pattern_.nTypes(), 1);
    const bool hasEnd = nEnd_ > 0 || !spec_.endemicOffset.empty();
    const bool hasEpi = spec_.has_epidemic();
    const int nS = hasEpi ? spec_.siaf.npars() : 0;
    const int nT = hasEpi ? spec_.tiaf.npars() : 0;
    const Vector beta = theta.head(nEnd_);
    const Vector ths = theta.segment(siaf_offset(), nS);
    const Vector tht = theta.segment(tiaf_offset(), nT);
    const Vector etas = eta(theta);

    LoglikResult res;
    res.gradient = Vector::Zero(np);
    res.siafIntegrals = Vector::Zero(n);
    res.tiafIntegrals = Vector::Zero(n);

    // per-event integrals, computed independently
    std::vector<Vector> Fj(n), Gj(n);
    if (hasEpi)
    {
        parallel_for(n, threads, [&](std::size_t j) {
            const Event& e = pattern_.events[j];
            Fj[j] = spec_.siaf.integrate(pattern_.influenceRegions[j], caches_[j], ths, tol, withGradient);
            Gj[j] = spec_.tiaf.G(std::min(pattern_.T - e.time, e.epsT), tht, withGradient);
        });
        for (int j = 0; j < n; ++j)
        {
            res.siafIntegrals(j) = Fj[j](0);
            res.tiafIntegrals(j) = Gj[j](0);
        }
    }

    double ll = 0.0;
    Vector& g = res.gradient;
    for (int i = 0; i < n; ++i)
    {
        const Event& ev = pattern_.events[i];
        const double en = hasEnd ? std::exp(logOff_(ev.cell) + endX_.row(i).dot(beta)) : 0.0;
        double epi = 0.0;
        Vector dEpiX, dS, dT;
        if (withGradient)
        {
            dEpiX = Vector::Zero(nEpi_);
            dS = Vector::Zero(nS);
            dT = Vector::Zero(nT);
        }
        for (const Source& src : sources_[i])
        {
            const double fv = spec_.siaf.f(src.distance, ths);
            const double gv = spec_.tiaf.g(src.lag, tht);
            const double c = etas(src.j) * fv * gv;
            epi += c;
            if (withGradient)
            {
                dEpiX += c * epiX_.row(src.j).transpose();
                if (nS)
                    dS += etas(src.j) * gv * spec_.siaf.df(src.distance, ths);
                if (nT)
                    dT += etas(src.j) * fv * spec_.tiaf.dg(src.lag, tht);
            }
        }
        const double lambda = en + epi;
        if (!(lambda > 0.0) || !std::isfinite(lambda))
            throw Error(ErrorCode::Numerical, "intensity " + io::format_number(lambda) + " at event " +
                                                  std::to_string(i + 1) + " (t = " + io::format_number(ev.time) +
                                                  ", tile " + ev.tileId + ")");
        ll += std::log(lambda);
        if (withGradient)
        {
            if (hasEnd && nEnd_)
                g.head(nEnd_) += (en / lambda) * endX_.row(i).transpose();
            if (hasEpi)
            {
                g.segment(nEnd_, nEpi_) += dEpiX / lambda;
                g.segment(siaf_offset(), nS) += dS / lambda;
                g.segment(tiaf_offset(), nT) += dT / lambda;
            }
        }
    }

    if (hasEnd)
        for (int k = 0; k < K; ++k)
            for (int r = 0; r < pattern_.stgrid.rows(); ++r)
            {
                const double w = pattern_.stgrid.area(r) * cell_duration(pattern_, r);
                if (w <= 0.0)
                    continue;
                const double v = std::exp(logOff_(r) + cellX_[k].row(r).dot(beta)) * w;
                ll -= v;
                if (withGradient && nEnd_)
                    g.head(nEnd_) -= v * cellX_[k].row(r).transpose();
            }

    if (hasEpi)
        for (int j = 0; j < n; ++j)
        {
            const double c = etas(j) * qSum_(j);
            const double v = c * Gj[j](0) * Fj[j](0);
            ll -= v;
            if (withGradient)
            {
                g.segment(nEnd_, nEpi_) -= v * epiX_.row(j).transpose();
                for (int p = 0; p < nS; ++p)
                    g(siaf_offset() + p) -= c * Gj[j](0) * Fj[j](1 + p);
                for (int p = 0; p < nT; ++p)
                    g(tiaf_offset() + p) -= c * Gj[j](1 + p) * Fj[j](0);
            }
        }
    res.value = ll;
    if (!withGradient)
        res.gradient.resize(0);
    return res;
}

double Model::cif(const Vector& theta, const Point2& s, double t, int type, int tile) const
{
    require(point_in_polygon(pattern_.W, s), "location outside the observation window");
    require(t > pattern_.t0 && t <= pattern_.T, "time outside the observation period");
    require(type >= 0 && type < std::max(pattern_.nTypes(), 1), "invalid event type");
    const int cell = pattern_.stgrid.find_cell(tile, t);
    require(cell >= 0, "no grid cell for tile " + std::to_string(tile) + " at t = " + io::format_number(t));
    double lambda = (nEnd_ > 0 || !spec_.endemicOffset.empty()) ? endemic_rate(theta, cell, type) : 0.0;
    if (!spec_.has_epidemic())
        return lambda;
    const Vector etas = eta(theta);
    const Vector ths = theta.segment(siaf_offset(), spec_.siaf.npars());
    const Vector tht = theta.segment(tiaf_offset(), spec_.tiaf.npars());
    for (int j = 0; j < pattern_.nEvents(); ++j)
    {
        const Event& e = pattern_.events[j];
        const double lag = t - e.time;
        if (lag <= 0.0)
            break;
        if (lag > e.epsT || !pattern_.qmatrix(e.type, type))
            continue;
        const double d = (s - e.location).norm();
        if (d > e.epsS)
            continue;
        lambda += etas(j) * spec_.siaf.f(d, ths) * spec_.tiaf.g(lag, tht);
    }
    return lambda;
}

Model::GlmData Model::glm_data() const
{
    const int K = std::max(pattern_.nTypes(), 1);
    const int R = pattern_.stgrid.rows();
    Matrix counts = Matrix::Zero(R, K);
    for (const auto& e : pattern_.events)
        counts(e.cell, e.type) += 1.0;
    GlmData d;
    std::vector<std::pair<int, int>> keep;
    for (int k = 0; k < K; ++k)
        for (int r = 0; r < R; ++r)
            if (pattern_.stgrid.area(r) * cell_duration(pattern_, r) > 0.0)
                keep.push_back({r, k});
    d.y.resize(keep.size());
    d.logExposure.resize(keep.size());
    d.X.resize(keep.size(), nEnd_);
    for (size_t m = 0; m < keep.size(); ++m)
    {
        const auto [r, k] = keep[m];
        d.y(m) = counts(r, k);
        d.logExposure(m) = std::log(pattern_.stgrid.area(r) * cell_duration(pattern_, r)) + logOff_(r);
        d.X.row(m) = cellX_[k].row(r);
    }
    return d;
}

// ---------------------------------------------------------------- fitting

int Fit::index_of(const std::string& name) const
{
    for (size_t i = 0; i < names.size(); ++i)
        if (names[i] == name)
            return static_cast<int>(i);
    throw Error(ErrorCode::InvalidInput, "unknown coefficient '" + name + "'");
}

namespace
{
optim::Result run_optim(const Model& model, const Vector& start, double tol, int threads, double relFunTol)
{
    optim::Objective f = [&](const Vector& theta, Vector* grad) {
        try
        {
            const LoglikResult r = model.loglik(theta, grad != nullptr, tol, threads);
            if (grad)
                *grad = -r.gradient;
            return -r.value;
        }
        catch (const Error&)
        {
            if (grad)
                *grad = Vector::Constant(theta.size(), std::numeric_limits<double>::quiet_NaN());
            return std::numeric_limits<double>::quiet_NaN();
        }
    };
    optim::Options opt;
    opt.gradTol = 1e-6;
    opt.relFunTol = relFunTol;
    return optim::minimize_bfgs(f, start, opt);
}

void reject_duplicates(const Model& model)
{
    if (!model.spec().has_epidemic() || model.spec().siaf.kind != SiafKind::Powerlaw)
        return;
    const int dup = count_duplicate_locations(model.pattern());
    require(dup == 0,
            std::to_string(dup) +
                " pairs of events share coordinates; a power-law kernel needs distinct locations (untie the pattern)",
            ErrorCode::InvalidInput);
}
}  // namespace

Fit fit(const Model& model, const Options& options)
{
    reject_duplicates(model);
    Vector start = model.start();
    if (model.spec().has_epidemic() && model.n_endemic() > 0)
    {
        const Model endemic(endemic_only(model.spec()), model.pattern());
        const Fit f0 = fit(endemic, endemic.start(), options);
        start.head(model.n_endemic()) = f0.coefficients;
    }
    return fit(model, start, options);
}

Fit fit(const Model& model, const Vector& start, const Options& options)
{
    reject_duplicates(model);
    require(start.size() == model.npars(), "start vector has the wrong length");
    const bool epi = model.spec().has_epidemic();
    optim::Result res = run_optim(model, start, epi ? options.optimTol : options.finalTol, options.threads,
                                  epi ? 1e-12 : 0.0);
    if (epi)
    {
        const optim::Result polish = run_optim(model, res.x, options.finalTol, options.threads, 1e-13);
        if (polish.value <= res.value || !std::isfinite(res.value))
        {
            const int iters = res.iterations;
            res = polish;
            res.iterations += iters;
        }
    }

    Fit f;
    f.names = model.names();
    f.coefficients = res.x;
    f.df = model.npars();
    f.nEvents = model.pattern().nEvents();
    f.converged = res.converged;
    f.iterations = res.iterations;
    f.message = res.message;
    f.spec = model.spec();
    const LoglikResult final = model.loglik(res.x, false, options.finalTol, options.threads);
    f.loglik = final.value;
    f.siafIntegrals = final.siafIntegrals;
    f.tiafIntegrals = final.tiafIntegrals;

    const int np = model.npars();
    f.covariance = Matrix::Constant(np, np, std::numeric_limits<double>::quiet_NaN());
    f.se = Vector::Constant(np, std::numeric_limits<double>::quiet_NaN());
    const Matrix H = optim::differenced_hessian(
        [&](const Vector& theta) {
            return Vector(-model.loglik(theta, true, options.finalTol, options.threads).gradient);
        },
        res.x);
    Eigen::FullPivLU<Matrix> lu(H);
    if (lu.isInvertible())
    {
        f.covariance = lu.inverse();
        for (int k = 0; k < np; ++k)
            if (f.covariance(k, k) >= 0.0)
                f.se(k) = std::sqrt(f.covariance(k, k));
    }
    return f;
}

Vector r0_events(const Model& model, const Fit& fit)
{
    require(fit.coefficients.size() == model.npars(), "fit does not match the model");
    const Vector etas = model.eta(fit.coefficients);
    const int n = model.pattern().nEvents();
    if (fit.siafIntegrals.size() == n && fit.tiafIntegrals.size() == n)
        return etas.cwiseProduct(fit.tiafIntegrals).cwiseProduct(fit.siafIntegrals).cwiseProduct(model.q_sum());
    const LoglikResult r = model.loglik(fit.coefficients, false, 1e-10);
    return etas.cwiseProduct(r.tiafIntegrals).cwiseProduct(r.siafIntegrals).cwiseProduct(model.q_sum());
}

Vector poisson_glm(const Matrix& X, const Vector& y, const Vector& offset, int* iterations, bool* converged)
{
    const int p = static_cast<int>(X.cols());
    Vector mu = (y.array() + 0.1).matrix();
    Vector eta = mu.array().log().matrix();
    Vector beta = Vector::Zero(p);
    bool ok = false;
    int it = 0;
    for (; it < 200; ++it)
    {
        const Vector z = eta - offset + (y - mu).cwiseQuotient(mu);
        const Matrix XtW = X.transpose() * mu.asDiagonal();
        const Vector next = (XtW * X).ldlt().solve(XtW * z);
        const double change = (next - beta).cwiseAbs().maxCoeff();
        beta = next;
        eta = X * beta + offset;
        mu = eta.array().exp().matrix();
        if (!beta.allFinite())
            break;
        if (it > 0 && change < 1e-12 * (1.0 + beta.cwiseAbs().maxCoeff()))
        {
            ok = true;
            break;
        }
    }
    if (iterations)
        *iterations = it + 1;
    if (converged)
        *converged = ok;
    return beta;
}

GlmComparison glm_equivalence(const Model& model, const Options& options)
{
    require(!model.spec().has_epidemic(), "the Poisson regression equivalence needs an endemic-only model",
            ErrorCode::InvalidSpec);
    GlmComparison cmp;
    cmp.names = model.names();
    const Model::GlmData d = model.glm_data();
    if (d.y.sum() == 0.0)
    {
        cmp.identifiable = false;
        cmp.glm = Vector::Constant(model.npars(), -kInf);
        cmp.twinstim = cmp.glm;
        return cmp;
    }
    bool ok = false;
    cmp.glm = poisson_glm(d.X, d.y, d.logExposure, &cmp.iterations, &ok);
    cmp.identifiable = ok;
    const Fit f = fit(model, cmp.glm, options);
    cmp.twinstim = f.coefficients;
    cmp.maxAbsDifference = (cmp.glm - cmp.twinstim).cwiseAbs().maxCoeff();
    return cmp;
}

// ---------------------------------------------------------------- intensities

namespace
{
Vector block_rates(const Model& model, const Vector& theta)
{
    const PointPattern& p = model.pattern();
    const int K = std::max(p.nTypes(), 1);
    Vector rate = Vector::Zero(p.stgrid.nBlocks());
    if (model.n_endemic() == 0 && model.spec().endemicOffset.empty())
        return rate;
    for (int r = 0; r < p.stgrid.rows(); ++r)
        for (int k = 0; k < K; ++k)
            rate(p.stgrid.block[r]) += model.endemic_rate(theta, r, k) * p.stgrid.area(r);
    return rate;
}

Vector siaf_integrals(const Model& model, const Vector& theta)
{
    if (!model.spec().has_epidemic())
        return Vector::Zero(model.pattern().nEvents());
    return model.loglik(theta, false, 1e-7).siafIntegrals;
}
}  // namespace

GroundIntensity intensity_over_time(const Model& model, const Vector& theta, int resolution)
{
    require(resolution >= 2, "resolution must be at least 2");
    const PointPattern& p = model.pattern();
    const Vector brate = block_rates(model, theta);
    const Vector F = siaf_integrals(model, theta);
    const Vector etas = model.eta(theta);
    const Spec& sp = model.spec();
    GroundIntensity gi;
    gi.times = Vector::LinSpaced(resolution, p.t0, p.T);
    gi.endemic = Vector::Zero(resolution);
    gi.epidemic = Vector::Zero(resolution);
    const Vector tht = sp.has_epidemic() ? theta.segment(model.tiaf_offset(), sp.tiaf.npars()) : Vector();
    for (int m = 0; m < resolution; ++m)
    {
        const double t = gi.times(m);
        int b = 0;
        while (b + 1 < p.stgrid.nBlocks() && t > p.stgrid.blockStops[b])
            ++b;
        gi.endemic(m) = brate.size() ? brate(b) : 0.0;
        if (!sp.has_epidemic())
            continue;
        double e = 0.0;
        for (int j = 0; j < p.nEvents(); ++j)
        {
            const double lag = t - p.events[j].time;
            if (lag <= 0.0)
                break;
            if (lag <= p.events[j].epsT)
                e += etas(j) * sp.tiaf.g(lag, tht) * F(j) * model.q_sum()(j);
        }
        gi.epidemic(m) = e;
    }
    return gi;
}

double cumulative_intensity(const Model& model, const Vector& theta, double t, const Vector& siafIntegrals)
{
    const PointPattern& p = model.pattern();
    const Vector brate = block_rates(model, theta);
    double total = 0.0;
    for (int b = 0; b < p.stgrid.nBlocks(); ++b)
    {
        const double lo = std::max(p.stgrid.blockStarts[b], p.t0);
        const double hi = std::min({p.stgrid.blockStops[b], t, p.T});
        if (hi > lo)
            total += brate(b) * (hi - lo);
    }
    const Spec& sp = model.spec();
    if (!sp.has_epidemic())
        return total;
    const Vector etas = model.eta(theta);
    const Vector tht = theta.segment(model.tiaf_offset(), sp.tiaf.npars());
    for (int j = 0; j < p.nEvents(); ++j)
    {
        const Event& e = p.events[j];
        if (e.time >= t)
            break;
        total += etas(j) * sp.tiaf.G(std::min(t - e.time, e.epsT), tht, false)(0) * siafIntegrals(j) *
                 model.q_sum()(j);
    }
    return total;
}

SpatialProportion intensity_over_space(const Model& model, const Vector& theta, const std::vector<PolygonSet>& tiles,
                                       int resolution)
{
    require(resolution >= 2, "resolution must be at least 2");
    const PointPattern& p = model.pattern();
    require(static_cast<int>(tiles.size()) == p.stgrid.nTiles(), "one tile polygon per grid tile is required");
    const int K = std::max(p.nTypes(), 1);
    const Spec& sp = model.spec();
    Vector tileEndemic = Vector::Zero(p.stgrid.nTiles());
    for (int r = 0; r < p.stgrid.rows(); ++r)
        for (int k = 0; k < K; ++k)
            tileEndemic(p.stgrid.tile[r]) += model.endemic_rate(theta, r, k) * cell_duration(p, r);
    const Vector etas = model.eta(theta);
    Vector Gj = Vector::Zero(p.nEvents());
    Vector ths, tht;
    if (sp.has_epidemic())
    {
        ths = theta.segment(model.siaf_offset(), sp.siaf.npars());
        tht = theta.segment(model.tiaf_offset(), sp.tiaf.npars());
        for (int j = 0; j < p.nEvents(); ++j)
            Gj(j) = sp.tiaf.G(std::min(p.T - p.events[j].time, p.events[j].epsT), tht, false)(0);
    }
    SpatialProportion out;
    const double dx = (p.W.hi.x() - p.W.lo.x()) / resolution;
    const double dy = (p.W.hi.y() - p.W.lo.y()) / resolution;
    out.x = Vector::LinSpaced(resolution, p.W.lo.x() + 0.5 * dx, p.W.hi.x() - 0.5 * dx);
    out.y = Vector::LinSpaced(resolution, p.W.lo.y() + 0.5 * dy, p.W.hi.y() - 0.5 * dy);
    out.proportion = Matrix::Constant(resolution, resolution, std::numeric_limits<double>::quiet_NaN());
    for (int iy = 0; iy < resolution; ++iy)
        for (int ix = 0; ix < resolution; ++ix)
        {
            const Point2 s(out.x(ix), out.y(iy));
            if (!point_in_polygon(p.W, s))
                continue;
            double en = 0.0;
            for (size_t k = 0; k < tiles.size(); ++k)
                if (point_in_polygon(tiles[k], s))
                {
                    en = tileEndemic(k);
                    break;
                }
            double epi = 0.0;
            if (sp.has_epidemic())
                for (int j = 0; j < p.nEvents(); ++j)
                {
                    const double d = (s - p.events[j].location).norm();
                    if (d <= p.events[j].epsS)
                        epi += etas(j) * sp.siaf.f(d, ths) * Gj(j) * model.q_sum()(j);
                }
            out.proportion(iy, ix) = (en + epi) > 0.0 ? epi / (en + epi) : 0.0;
        }
    return out;
}

// ---------------------------------------------------------------- selection

namespace
{
Fit refit(const Spec& spec, const Model& base, const Fit& from, const Options& options)
{
    const Model m(spec, base.pattern());
    Vector start = m.start();
    for (int k = 0; k < m.npars(); ++k)
        for (size_t q = 0; q < from.names.size(); ++q)
            if (from.names[q] == m.names()[k])
                start(k) = from.coefficients(q);
    return fit(m, start, options);
}
}  // namespace

StepResult step_select(const Model& model, const Fit& start, const std::string& component, Direction direction,
                       const std::vector<Term>& candidates, const Options& options)
{
    require(component == "endemic" || component == "epidemic", "component must be 'endemic' or 'epidemic'",
            ErrorCode::InvalidSpec);
    const bool endemic = component == "endemic";
    auto terms_of = [&](Spec& s) -> std::vector<Term>& { return endemic ? s.endemic : s.epidemic; };
    StepResult cur{model.spec(), start, {}};
    {
        Spec probe = cur.spec;
        const bool canDrop = direction != Direction::Forward && !terms_of(probe).empty();
        const bool canAdd = direction != Direction::Backward && !candidates.empty();
        require(canDrop || canAdd, "empty scope for stepwise selection", ErrorCode::InvalidSpec);
    }
    for (;;)
    {
        double bestAic = cur.fit.aic();
        std::optional<StepResult> best;
        Spec base = cur.spec;
        if (direction != Direction::Forward)
            for (size_t k = 0; k < terms_of(base).size(); ++k)
            {
                Spec s = base;
                const std::string name = terms_of(s)[k].name;
                terms_of(s).erase(terms_of(s).begin() + k);
                const Fit f = refit(s, model, cur.fit, options);
                if (f.aic() < bestAic)
                {
                    bestAic = f.aic();
                    best = StepResult{s, f, cur.trace};
                    best->trace.push_back("- " + name);
                }
            }
        if (direction != Direction::Backward)
            for (const Term& t : candidates)
            {
                Spec s = base;
                auto& ts = terms_of(s);
                if (std::any_of(ts.begin(), ts.end(), [&](const Term& x) { return x.name == t.name; }))
                    continue;
                ts.push_back(t);
                const Fit f = refit(s, model, cur.fit, options);
                if (f.aic() < bestAic)
                {
                    bestAic = f.aic();
                    best = StepResult{s, f, cur.trace};
                    best->trace.push_back("+ " + t.name);
                }
            }
        if (!best)
            return cur;
        cur = std::move(*best);
    }
}

}  // namespace eepi::twinstim
