#include "eepi/twinsir.hpp"
#include "eepi/io.hpp"
#include "eepi/special.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace eepi::twinsir
{

Model::Model(Spec spec, EventHistory history) : spec_(std::move(spec)), history_(std::move(history))
{
    require(!spec_.epidemic.empty() || !spec_.endemic.empty() || spec_.intercept, "model has no terms",
            ErrorCode::InvalidSpec);
    for (const auto& e : spec_.epidemic)
    {
        epiCols_.push_back(history_.epidemic_index(e));
        require(epiCols_.back() >= 0, "unknown epidemic term '" + e + "'", ErrorCode::InvalidSpec);
        names_.push_back(e);
    }
    if (spec_.intercept)
        names_.push_back("cox(logbaseline)");
    for (const auto& e : spec_.endemic)
    {
        endCols_.push_back(history_.endemic_index(e));
        require(endCols_.back() >= 0, "unknown endemic term '" + e + "'", ErrorCode::InvalidSpec);
        names_.push_back("cox(" + e + ")");
    }
}

int Model::n_events() const
{
    return static_cast<int>(std::count_if(history_.eventOf.begin(), history_.eventOf.end(), [](int i) { return i >= 0; }));
}

int Model::index_of(const std::string& name) const
{
    for (size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name)
            return static_cast<int>(i);
    throw Error(ErrorCode::InvalidInput, "unknown coefficient '" + name + "'");
}

Vector Model::lower_bounds() const
{
    Vector lo = Vector::Constant(npars(), -kInf);
    lo.head(n_alpha()).setZero();
    return lo;
}

Vector Model::start() const
{
    Vector theta = Vector::Zero(npars());
    if (spec_.intercept)
    {
        double exposure = 0.0;
        for (int b = 0; b < history_.nBlocks(); ++b)
            exposure += history_.atRisk.row(b).sum() * (history_.blockStop[b] - history_.blockStart[b]);
        theta(n_alpha()) = std::log(std::max(n_events(), 1) / std::max(exposure, 1e-300));
    }
    return theta;
}

std::pair<double, double> Model::parts(const Vector& theta, int i, int b) const
{
    double endemic = 0.0;
    if (spec_.intercept || !endCols_.empty())
    {
        double eta = 0.0;
        int k = n_alpha();
        if (spec_.intercept)
            eta += theta(k++);
        for (int c : endCols_)
            eta += theta(k++) * history_.endemic[c](b, i);
        endemic = std::exp(eta);
    }
    double epidemic = 0.0;
    for (int k = 0; k < n_alpha(); ++k)
        epidemic += theta(k) * history_.epidemic[epiCols_[k]](b, i);
    return {endemic, epidemic};
}

double Model::cif(const Vector& theta, int individual, int block) const
{
    require(individual >= 0 && individual < history_.nIndividuals() && block >= 0 && block < history_.nBlocks(),
            "individual or block index out of range");
    if (history_.atRisk(block, individual) == 0.0)
        return 0.0;
    const auto [en, ep] = parts(theta, individual, block);
    return en + ep;
}

double Model::loglik(const Vector& theta, Vector* gradient) const
{
    require(theta.size() == npars(), "coefficient vector has the wrong length");
    const int na = n_alpha();
    const int N = history_.nIndividuals();
    double ll = 0.0;
    Vector g = Vector::Zero(npars());
    auto design = [&](int i, int b, double en, double scale, Vector& out) {
        for (int k = 0; k < na; ++k)
            out(k) += scale * history_.epidemic[epiCols_[k]](b, i);
        int k = na;
        if (spec_.intercept)
            out(k++) += scale * en;
        for (int c : endCols_)
            out(k++) += scale * en * history_.endemic[c](b, i);
    };
    for (int b = 0; b < history_.nBlocks(); ++b)
    {
        const double dt = history_.blockStop[b] - history_.blockStart[b];
        for (int i = 0; i < N; ++i)
        {
            if (history_.atRisk(b, i) == 0.0)
                continue;
            const auto [en, ep] = parts(theta, i, b);
            ll -= (en + ep) * dt;
            if (gradient)
                design(i, b, en, -dt, g);
        }
        const int i = history_.eventOf[b];
        if (i < 0)
            continue;
        require(history_.atRisk(b, i) != 0.0,
                "infection of '" + history_.ids[i] + "' while not at risk", ErrorCode::InvalidInput);
        const auto [en, ep] = parts(theta, i, b);
        const double lambda = en + ep;
        if (!(lambda > 0.0))
            throw Error(ErrorCode::Numerical, "zero intensity at the infection of '" + history_.ids[i] +
                                                  "' (t = " + io::format_number(history_.blockStop[b]) + ")");
        ll += std::log(lambda);
        if (gradient)
            design(i, b, en, 1.0 / lambda, g);
    }
    if (gradient)
        *gradient = g;
    return ll;
}

double Model::compensator(const Vector& theta) const
{
    double total = 0.0;
    for (int b = 0; b < history_.nBlocks(); ++b)
    {
        const double dt = history_.blockStop[b] - history_.blockStart[b];
        for (int i = 0; i < history_.nIndividuals(); ++i)
            if (history_.atRisk(b, i) != 0.0)
            {
                const auto [en, ep] = parts(theta, i, b);
                total += (en + ep) * dt;
            }
    }
    return total;
}

int Fit::index_of(const std::string& name) const
{
    for (size_t i = 0; i < names.size(); ++i)
        if (names[i] == name)
            return static_cast<int>(i);
    throw Error(ErrorCode::InvalidInput, "unknown coefficient '" + name + "'");
}

namespace
{
optim::Objective negative_loglik(const Model& model)
{
    return [&model](const Vector& theta, Vector* grad) {
        try
        {
            Vector g;
            const double ll = model.loglik(theta, grad ? &g : nullptr);
            if (grad)
                *grad = -g;
            return -ll;
        }
        catch (const Error&)
        {
            if (grad)
                *grad = Vector::Constant(theta.size(), std::numeric_limits<double>::quiet_NaN());
            return std::numeric_limits<double>::quiet_NaN();
        }
    };
}
}  // namespace

Fit fit(const Model& model, const optim::Options& options) { return fit(model, model.start(), options); }

Fit fit(const Model& model, const Vector& start, const optim::Options& options)
{
    require(start.size() == model.npars(), "start vector has the wrong length");
    const Vector lower = model.lower_bounds();
    const Vector upper = Vector::Constant(model.npars(), kInf);
    const Vector x0 = start.cwiseMax(lower);
    const optim::Result res = optim::minimize_box(negative_loglik(model), x0, lower, upper, options);

    Fit f;
    f.names = model.names();
    f.coefficients = res.x;
    f.loglik = -res.value;
    f.df = model.npars();
    f.converged = res.converged;
    f.iterations = res.iterations;
    f.message = res.message;

    const int np = model.npars();
    f.atBoundary.assign(np, false);
    Vector g;
    model.loglik(res.x, &g);
    for (int k = 0; k < model.n_alpha(); ++k)
        f.atBoundary[k] = res.x(k) <= 1e-10 && g(k) <= 0.0;

    // Reduced Hessian over the parameters off the boundary.
    std::vector<int> freeIdx;
    for (int k = 0; k < np; ++k)
        if (!f.atBoundary[k])
            freeIdx.push_back(k);
    f.covariance = Matrix::Constant(np, np, std::numeric_limits<double>::quiet_NaN());
    f.se = Vector::Constant(np, std::numeric_limits<double>::quiet_NaN());
    const int nf = static_cast<int>(freeIdx.size());
    if (nf > 0)
    {
        auto embed = [&](const Vector& sub) {
            Vector x = res.x;
            for (int a = 0; a < nf; ++a)
                x(freeIdx[a]) = sub(a);
            return x;
        };
        Vector sub(nf);
        for (int a = 0; a < nf; ++a)
            sub(a) = res.x(freeIdx[a]);
        const Matrix H = optim::differenced_hessian(
            [&](const Vector& s) {
                Vector gg;
                model.loglik(embed(s), &gg);
                Vector out(nf);
                for (int a = 0; a < nf; ++a)
                    out(a) = -gg(freeIdx[a]);
                return out;
            },
            sub);
        Eigen::FullPivLU<Matrix> lu(H);
        if (lu.isInvertible())
        {
            const Matrix C = lu.inverse();
            for (int a = 0; a < nf; ++a)
            {
                for (int b = 0; b < nf; ++b)
                    f.covariance(freeIdx[a], freeIdx[b]) = C(a, b);
                if (C(a, a) >= 0.0)
                    f.se(freeIdx[a]) = std::sqrt(C(a, a));
            }
        }
    }
    return f;
}

// ---------------------------------------------------------------- profiles

namespace
{
struct ProfileSolver
{
    const Model& model;
    const Fit& fit;
    int index;
    Vector warm;  // last optimum of the nuisance parameters

    std::pair<double, bool> operator()(double value)
    {
        const int np = model.npars();
        if (np == 1)
        {
            Vector x(1);
            x(0) = value;
            return {model.loglik(x), true};
        }
        auto embed = [&](const Vector& sub) {
            Vector x(np);
            for (int k = 0, a = 0; k < np; ++k)
                x(k) = k == index ? value : sub(a++);
            return x;
        };
        Vector lower(np - 1);
        for (int k = 0, a = 0; k < np; ++k)
            if (k != index)
                lower(a++) = model.lower_bounds()(k);
        const Vector upper = Vector::Constant(np - 1, kInf);
        optim::Objective f = [&](const Vector& sub, Vector* grad) {
            try
            {
                Vector g;
                const double ll = model.loglik(embed(sub), grad ? &g : nullptr);
                if (grad)
                {
                    grad->resize(np - 1);
                    for (int k = 0, a = 0; k < np; ++k)
                        if (k != index)
                            (*grad)(a++) = -g(k);
                }
                return -ll;
            }
            catch (const Error&)
            {
                if (grad)
                    *grad = Vector::Constant(np - 1, std::numeric_limits<double>::quiet_NaN());
                return std::numeric_limits<double>::quiet_NaN();
            }
        };
        const optim::Result r = optim::minimize_box(f, warm.cwiseMax(lower), lower, upper);
        if (r.converged && std::isfinite(r.value))
            warm = r.x;
        return {-r.value, r.converged && std::isfinite(r.value)};
    }
};

Vector nuisance(const Fit& fit, int index)
{
    Vector v(fit.coefficients.size() - 1);
    for (int k = 0, a = 0; k < fit.coefficients.size(); ++k)
        if (k != index)
            v(a++) = fit.coefficients(k);
    return v;
}
}  // namespace

std::vector<Profile> profile_ci(const Model& model, const Fit& fit, const std::vector<int>& indices, int gridSize,
                                double level)
{
    require(level > 0.0 && level < 1.0, "confidence level must lie in (0,1)");
    require(gridSize >= 3, "profile grid needs at least 3 points");
    const double z = special::normal_quantile(0.5 + 0.5 * level);
    const double cut = 0.5 * special::chisq_quantile(level, 1.0);
    std::vector<Profile> out;
    for (int index : indices)
    {
        require(index >= 0 && index < model.npars(), "profile index out of range");
        const bool isAlpha = index < model.n_alpha();
        const double est = fit.coefficients(index);
        const double se = fit.se(index);
        require(std::isfinite(se) && se > 0.0,
                "no standard error for '" + fit.names[index] + "' (parameter on the boundary?)", ErrorCode::Numerical);
        Profile p;
        p.name = fit.names[index];
        p.waldLower = est - z * se;
        p.waldUpper = est + z * se;
        const double lo = isAlpha ? std::max(0.0, p.waldLower) : p.waldLower;
        p.grid = Vector::LinSpaced(gridSize, lo, p.waldUpper);
        p.profile.resize(gridSize);
        p.flagged.assign(gridSize, false);

        // sweep outward from the estimate so warm starts stay close
        const int mid = static_cast<int>(std::lower_bound(p.grid.data(), p.grid.data() + gridSize, est) - p.grid.data());
        ProfileSolver solver{model, fit, index, nuisance(fit, index)};
        for (int m = mid; m < gridSize; ++m)
        {
            const auto [v, ok] = solver(p.grid(m));
            p.profile(m) = v - fit.loglik;
            p.flagged[m] = !ok;
        }
        solver.warm = nuisance(fit, index);
        for (int m = mid - 1; m >= 0; --m)
        {
            const auto [v, ok] = solver(p.grid(m));
            p.profile(m) = v - fit.loglik;
            p.flagged[m] = !ok;
        }
        for (int m = 0; m < gridSize; ++m)
            if (p.flagged[m])
            {
                int a = m - 1, b = m + 1;
                while (a >= 0 && p.flagged[a])
                    --a;
                while (b < gridSize && p.flagged[b])
                    ++b;
                if (a >= 0 && b < gridSize)
                    p.profile(m) = p.profile(a) + (p.profile(b) - p.profile(a)) * (p.grid(m) - p.grid(a)) /
                                                       (p.grid(b) - p.grid(a));
                else if (a >= 0)
                    p.profile(m) = p.profile(a);
                else if (b < gridSize)
                    p.profile(m) = p.profile(b);
            }

        // highest-likelihood endpoints by root-finding on the profile
        auto h = [&](double v) {
            solver.warm = nuisance(fit, index);
            return solver(v).first - fit.loglik + cut;
        };
        auto endpoint = [&](double dir) {
            double inner = est;
            double step = se;
            double outer = est + dir * step;
            if (isAlpha && outer < 0.0)
                outer = 0.0;
            double ho = h(outer);
            for (int it = 0; ho > 0.0 && it < 60; ++it)
            {
                if (isAlpha && outer == 0.0)
                    return 0.0;
                inner = outer;
                step *= 2.0;
                outer = est + dir * step;
                if (isAlpha && outer < 0.0)
                    outer = 0.0;
                ho = h(outer);
            }
            if (ho > 0.0)
                return dir * kInf;
            const double hi = h(inner);
            if (hi <= 0.0)
                return inner;
            std::uintmax_t maxIter = 100;
            const auto tol = [](double a, double b) { return std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(a)); };
            const auto r = dir < 0 ? boost::math::tools::toms748_solve(h, outer, inner, ho, hi, tol, maxIter)
                                   : boost::math::tools::toms748_solve(h, inner, outer, hi, ho, tol, maxIter);
            return 0.5 * (r.first + r.second);
        };
        p.hlLower = endpoint(-1.0);
        p.hlUpper = endpoint(1.0);
        out.push_back(std::move(p));
    }
    return out;
}

Vector epidemic_proportion(const Model& model, const Vector& theta)
{
    const EventHistory& h = model.history();
    Vector prop = Vector::Zero(h.nBlocks());
    for (int b = 0; b < h.nBlocks(); ++b)
    {
        double epi = 0.0, total = 0.0;
        for (int i = 0; i < h.nIndividuals(); ++i)
            if (h.atRisk(b, i) != 0.0)
            {
                const auto [en, ep] = model.parts(theta, i, b);
                epi += ep;
                total += en + ep;
            }
        prop(b) = total > 0.0 ? epi / total : 0.0;
    }
    return prop;
}

}  // namespace eepi::twinsir
