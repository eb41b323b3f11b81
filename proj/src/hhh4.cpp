#include "eepi/hhh4.hpp"
#include "eepi/io.hpp"
#include "eepi/special.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace eepi::hhh4
{

Family parse_family(const std::string& name)
{
    if (name == "Poisson")
        return Family::Poisson;
    if (name == "NegBin1")
        return Family::NegBin1;
    if (name == "NegBinM")
        return Family::NegBinM;
    throw Error(ErrorCode::InvalidSpec, "unknown family '" + name + "' (expected Poisson, NegBin1 or NegBinM)");
}

std::string to_string(Family family)
{
    switch (family)
    {
    case Family::Poisson:
        return "Poisson";
    case Family::NegBin1:
        return "NegBin1";
    case Family::NegBinM:
        return "NegBinM";
    }
    return "unknown";
}

int WeightsSpec::npars() const
{
    switch (kind)
    {
    case WeightKind::FirstOrder:
        return 0;
    case WeightKind::PowerLaw:
        return 1;
    case WeightKind::OrderWeights:
        return std::max(maxlag - 1, 0);
    }
    return 0;
}

void add_season_terms(Component& component, int S, double period, int T, int U)
{
    require(S >= 1, "number of harmonics S must be at least 1", ErrorCode::InvalidSpec);
    require(period > 0.0, "season period must be positive", ErrorCode::InvalidSpec);
    const std::string periodLabel = period == std::floor(period) ? std::to_string(static_cast<long>(period))
                                                                 : io::format_number(period);
    for (int s = 1; s <= S; ++s)
    {
        const std::string arg = std::to_string(2 * s) + " * pi * t/" + periodLabel;
        CovariateGrid sinG{"sin(" + arg + ")", Matrix(T, U)};
        CovariateGrid cosG{"cos(" + arg + ")", Matrix(T, U)};
        for (int t = 1; t <= T; ++t)
        {
            const double x = 2.0 * kPi * s * t / period;
            sinG.values.row(t - 1).setConstant(std::sin(x));
            cosG.values.row(t - 1).setConstant(std::cos(x));
        }
        component.covariates.push_back(std::move(sinG));
        component.covariates.push_back(std::move(cosG));
    }
}

namespace
{
Matrix raw_weights(const WeightsSpec& spec, const Eigen::MatrixXi& o, const Vector& params)
{
    const int U = static_cast<int>(o.rows());
    Matrix raw = Matrix::Zero(U, U);
    for (int j = 0; j < U; ++j)
        for (int i = 0; i < U; ++i)
        {
            if (i == j)
                continue;
            const int ord = o(j, i);
            switch (spec.kind)
            {
            case WeightKind::FirstOrder:
                raw(j, i) = ord == 1 ? 1.0 : 0.0;
                break;
            case WeightKind::PowerLaw:
            {
                const double d = std::exp(params(0));
                if (ord >= 1 && ord <= spec.maxlag)
                    raw(j, i) = std::pow(static_cast<double>(ord), -d);
                break;
            }
            case WeightKind::OrderWeights:
                if (ord == 1)
                    raw(j, i) = 1.0;
                else if (ord >= 2 && ord <= spec.maxlag)
                    raw(j, i) = std::exp(params(ord - 2));
                break;
            }
        }
    return raw;
}

std::vector<Matrix> raw_weight_derivatives(const WeightsSpec& spec, const Eigen::MatrixXi& o, const Matrix& raw)
{
    const int U = static_cast<int>(o.rows());
    const int np = spec.npars();
    std::vector<Matrix> d(np, Matrix::Zero(U, U));
    for (int j = 0; j < U; ++j)
        for (int i = 0; i < U; ++i)
        {
            if (i == j || raw(j, i) == 0.0)
                continue;
            const int ord = o(j, i);
            if (spec.kind == WeightKind::PowerLaw)
            {
                // raw = o^-d with d = exp(theta): d raw / d theta = -d log(o) raw
                const double dpar = -std::log(static_cast<double>(ord)) * raw(j, i);
                d[0](j, i) = dpar;
            }
            else if (spec.kind == WeightKind::OrderWeights && ord >= 2)
                d[ord - 2](j, i) = raw(j, i);
        }
    return d;
}
}  // namespace

Matrix neighbourhood_weights(const WeightsSpec& spec, const Eigen::MatrixXi& nbOrder, const Vector& params)
{
    require(spec.maxlag >= 1, "maxlag must be at least 1", ErrorCode::InvalidSpec);
    require(params.size() == spec.npars(), "wrong number of weight parameters", ErrorCode::InvalidSpec);
    if (spec.kind == WeightKind::PowerLaw)
        require(std::isfinite(params(0)), "power-law decay d must be positive and finite", ErrorCode::Numerical);
    Matrix w = raw_weights(spec, nbOrder, params);
    if (spec.normalize)
        for (int j = 0; j < w.rows(); ++j)
        {
            const double s = w.row(j).sum();
            if (s > 0.0)
                w.row(j) /= s;
        }
    return w;
}

std::vector<Matrix> neighbourhood_weight_derivatives(const WeightsSpec& spec, const Eigen::MatrixXi& nbOrder,
                                                     const Vector& params)
{
    Matrix raw = raw_weights(spec, nbOrder, params);
    std::vector<Matrix> d = raw_weight_derivatives(spec, nbOrder, raw);
    if (spec.kind == WeightKind::PowerLaw)
        for (auto& m : d)
            m *= std::exp(params(0));
    if (!spec.normalize)
        return d;
    for (auto& m : d)
        for (int j = 0; j < raw.rows(); ++j)
        {
            const double s = raw.row(j).sum();
            if (s <= 0.0)
                continue;
            const double ds = m.row(j).sum();
            m.row(j) = (m.row(j) - raw.row(j) * (ds / s)) / s;
        }
    return d;
}

// ---------------------------------------------------------------- model

namespace
{
Matrix select_rows(const Matrix& full, const std::vector<int>& times, int shift)
{
    Matrix out(times.size(), full.cols());
    for (size_t r = 0; r < times.size(); ++r)
        out.row(r) = full.row(times[r] - 1 + shift);
    return out;
}

void check_component(const Component& c, const std::string& label, int T, int U)
{
    for (const auto& x : c.covariates)
        require(x.values.rows() == T && x.values.cols() == U && x.values.allFinite(),
                label + " covariate '" + x.name + "' must be a finite " + std::to_string(T) + "x" + std::to_string(U) +
                    " grid",
                ErrorCode::InvalidSpec);
    if (c.offset.size() > 0)
        require(c.offset.rows() == T && c.offset.cols() == U && (c.offset.array() >= 0.0).all(),
                label + " offset must be a nonnegative " + std::to_string(T) + "x" + std::to_string(U) + " grid",
                ErrorCode::InvalidSpec);
}

// Stable negative binomial log-density with size r and its derivatives.
struct NBTerm
{
    double value, dmu, dr;
};

NBTerm nb_term(double y, double mu, double r)
{
    NBTerm out{0.0, 0.0, 0.0};
    const double rm = r + mu;
    const long iy = static_cast<long>(y);
    if (iy <= 1000)
    {
        double s = 0.0, ds = 0.0;
        for (long k = 0; k < iy; ++k)
        {
            s += std::log1p((k - mu) / rm);
            ds += 1.0 / (r + k);
        }
        out.value = s - r * std::log1p(mu / r) - std::lgamma(y + 1.0);
        out.dr = ds - std::log1p(mu / r) + (mu - y) / rm;
    }
    else
    {
        out.value = std::lgamma(y + r) - std::lgamma(r) - std::lgamma(y + 1.0) + r * std::log(r / rm) -
                    y * std::log(rm);
        out.dr = special::digamma(y + r) - special::digamma(r) + std::log(r / rm) + 1.0 - (y + r) / rm;
    }
    if (y > 0.0)
    {
        out.value += y * std::log(mu);
        out.dmu = r * (y - mu) / (mu * rm);
    }
    else
        out.dmu = -r / rm;
    return out;
}
}  // namespace

double log_density(Family family, double y, double mu, double psi)
{
    if (mu <= 0.0)
        return y > 0.0 ? -kInf : 0.0;
    if (family == Family::Poisson)
        return y * std::log(mu) - mu - std::lgamma(y + 1.0);
    return nb_term(y, mu, 1.0 / psi).value;
}

Model::Model(Spec spec, CountSeries data) : spec_(std::move(spec)), data_(std::move(data))
{
    const int T = data_.nTime();
    const int U = data_.nUnits();
    require(spec_.end.active || spec_.ar.active || spec_.ne.active, "at least one model component must be active",
            ErrorCode::InvalidSpec);
    check_component(spec_.end, "endemic", T, U);
    check_component(spec_.ar, "autoregressive", T, U);
    check_component(spec_.ne, "neighbourhood", T, U);
    if (spec_.ne.active)
    {
        require(spec_.weights.maxlag >= 1, "maxlag must be at least 1", ErrorCode::InvalidSpec);
        require(data_.nbOrder.rows() == U, "neighbourhood component needs a neighbourhood matrix",
                ErrorCode::InvalidSpec);
    }

    subset_ = spec_.subset;
    if (subset_.empty())
        for (int t = 2; t <= T; ++t)
            subset_.push_back(t);
    for (int t : subset_)
        require(t >= 2 && t <= T, "subset time " + std::to_string(t) + " outside 2.." + std::to_string(T),
                ErrorCode::InvalidSpec);
    require(!subset_.empty(), "empty subset", ErrorCode::InvalidSpec);

    auto add_block = [&](Block& b, const Component& c, const std::string& prefix) {
        b.offset = static_cast<int>(names_.size());
        if (!c.active)
            return;
        if (c.intercept)
            names_.push_back(prefix + ".1");
        for (const auto& x : c.covariates)
            names_.push_back(prefix + "." + x.name);
        b.count = static_cast<int>(names_.size()) - b.offset;
    };
    add_block(arBlock_, spec_.ar, "ar");
    add_block(neBlock_, spec_.ne, "ne");
    add_block(endBlock_, spec_.end, "end");

    wBlock_.offset = static_cast<int>(names_.size());
    if (spec_.ne.active)
    {
        if (spec_.weights.kind == WeightKind::PowerLaw)
            names_.push_back("neweights.d");
        else if (spec_.weights.kind == WeightKind::OrderWeights)
            for (int k = 2; k <= spec_.weights.maxlag; ++k)
                names_.push_back("neweights.d" + std::to_string(k));
    }
    wBlock_.count = static_cast<int>(names_.size()) - wBlock_.offset;

    Y_ = select_rows(data_.counts, subset_, 0);
    Ylag_ = select_rows(data_.counts, subset_, -1);

    psiBlock_.offset = static_cast<int>(names_.size());
    psiIndex_.assign(U, -1);
    if (spec_.family == Family::NegBin1)
    {
        names_.push_back("overdisp");
        std::fill(psiIndex_.begin(), psiIndex_.end(), psiBlock_.offset);
    }
    else if (spec_.family == Family::NegBinM)
        for (int i = 0; i < U; ++i)
            if (Y_.col(i).sum() > 0.0)
            {
                psiIndex_[i] = static_cast<int>(names_.size());
                names_.push_back("overdisp." + data_.unitIds[i]);
            }
    psiBlock_.count = static_cast<int>(names_.size()) - psiBlock_.offset;

    auto views = [&](const Component& c, std::vector<Matrix>& X, Matrix& off) {
        for (const auto& x : c.covariates)
            X.push_back(select_rows(x.values, subset_, 0));
        off = c.offset.size() ? select_rows(c.offset, subset_, 0) : Matrix::Ones(subset_.size(), U);
    };
    views(spec_.ar, arX_, arOff_);
    views(spec_.ne, neX_, neOff_);
    views(spec_.end, endX_, endOff_);
}

int Model::nobs() const { return static_cast<int>(Y_.size()); }

int Model::index_of(const std::string& name) const
{
    for (size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name)
            return static_cast<int>(i);
    throw Error(ErrorCode::InvalidInput, "unknown coefficient '" + name + "'");
}

Vector Model::start() const
{
    Vector theta = Vector::Zero(npars());
    if (spec_.end.active && spec_.end.intercept)
    {
        const double meanY = std::max(Y_.mean(), 1e-3);
        const double meanOff = std::max(endOff_.mean(), 1e-300);
        theta(endBlock_.offset) = std::log(meanY / meanOff);
    }
    return theta;
}

Matrix Model::eta_subset(const std::vector<Matrix>& X, const Component& c, const Block& b, const Vector& theta) const
{
    Matrix eta = Matrix::Zero(Y_.rows(), Y_.cols());
    int k = b.offset;
    if (c.intercept)
        eta.array() += theta(k++);
    for (const auto& x : X)
        eta += theta(k++) * x;
    return eta;
}

Vector Model::eta_row(const Component& c, const Block& b, const Vector& theta, int t) const
{
    Vector eta = Vector::Zero(data_.nUnits());
    int k = b.offset;
    if (c.intercept)
        eta.array() += theta(k++);
    for (const auto& x : c.covariates)
        eta += theta(k++) * x.values.row(t - 1).transpose();
    return eta;
}

Matrix Model::weight_matrix(const Vector& theta) const
{
    return neighbourhood_weights(spec_.weights, data_.nbOrder, theta.segment(wBlock_.offset, wBlock_.count));
}

Matrix Model::weights(const Vector& theta) const
{
    if (!spec_.ne.active)
        return Matrix::Zero(data_.nUnits(), data_.nUnits());
    return weight_matrix(theta);
}

Vector Model::psi(const Vector& theta) const
{
    Vector p = Vector::Zero(data_.nUnits());
    if (spec_.family == Family::Poisson)
        return p;
    for (int i = 0; i < data_.nUnits(); ++i)
        p(i) = psiIndex_[i] >= 0 ? std::exp(theta(psiIndex_[i])) : 1.0;
    return p;
}

Components Model::components(const Vector& theta) const
{
    require(theta.size() == npars(), "coefficient vector has the wrong length", ErrorCode::InvalidInput);
    const int n = static_cast<int>(Y_.rows());
    const int U = static_cast<int>(Y_.cols());
    Components c;
    c.endemic = Matrix::Zero(n, U);
    c.ar = Matrix::Zero(n, U);
    c.ne = Matrix::Zero(n, U);
    if (spec_.end.active)
        c.endemic = endOff_.cwiseProduct(eta_subset(endX_, spec_.end, endBlock_, theta).array().exp().matrix());
    if (spec_.ar.active)
        c.ar = arOff_.cwiseProduct(eta_subset(arX_, spec_.ar, arBlock_, theta).array().exp().matrix())
                   .cwiseProduct(Ylag_);
    if (spec_.ne.active)
    {
        const Matrix nes = Ylag_ * weight_matrix(theta);
        c.ne = neOff_.cwiseProduct(eta_subset(neX_, spec_.ne, neBlock_, theta).array().exp().matrix())
                   .cwiseProduct(nes);
    }
    return c;
}

Components Model::mean_at(const Vector& theta, int t, const Vector& ylag) const
{
    const int U = data_.nUnits();
    require(t >= 1 && t <= data_.nTime(), "time index outside the covariate grids");
    require(ylag.size() == U, "lag-1 counts must have one entry per unit");
    Components c;
    c.endemic = Matrix::Zero(1, U);
    c.ar = Matrix::Zero(1, U);
    c.ne = Matrix::Zero(1, U);
    auto off = [&](const Component& comp) -> Vector {
        return comp.offset.size() ? Vector(comp.offset.row(t - 1).transpose()) : Vector::Ones(U);
    };
    if (spec_.end.active)
        c.endemic.row(0) = off(spec_.end).cwiseProduct(eta_row(spec_.end, endBlock_, theta, t).array().exp().matrix());
    if (spec_.ar.active)
        c.ar.row(0) = off(spec_.ar)
                          .cwiseProduct(eta_row(spec_.ar, arBlock_, theta, t).array().exp().matrix())
                          .cwiseProduct(ylag);
    if (spec_.ne.active)
    {
        const Vector nes = weight_matrix(theta).transpose() * ylag;
        c.ne.row(0) = off(spec_.ne)
                          .cwiseProduct(eta_row(spec_.ne, neBlock_, theta, t).array().exp().matrix())
                          .cwiseProduct(nes);
    }
    return c;
}

std::pair<Vector, Vector> Model::epidemic_rates(const Vector& theta, int t) const
{
    const int U = data_.nUnits();
    Vector lambda = Vector::Zero(U), phi = Vector::Zero(U);
    const Components c = mean_at(theta, t, Vector::Ones(U));
    if (spec_.ar.active)
        lambda = c.ar.row(0).transpose();
    if (spec_.ne.active)
    {
        auto off = spec_.ne.offset.size() ? Vector(spec_.ne.offset.row(t - 1).transpose()) : Vector::Ones(U);
        phi = off.cwiseProduct(eta_row(spec_.ne, neBlock_, theta, t).array().exp().matrix());
    }
    return {lambda, phi};
}

double Model::loglik(const Vector& theta, Vector* gradient) const
{
    const Components c = components(theta);
    const Matrix mu = c.mean();
    const int n = static_cast<int>(Y_.rows());
    const int U = static_cast<int>(Y_.cols());
    const Vector psiv = psi(theta);
    const bool poisson = spec_.family == Family::Poisson;

    Matrix dmu(n, U);
    Vector dlogpsi = Vector::Zero(npars());
    double ll = 0.0;
    for (int i = 0; i < U; ++i)
    {
        const double r = poisson ? 0.0 : 1.0 / psiv(i);
        for (int t = 0; t < n; ++t)
        {
            const double y = Y_(t, i);
            const double m = mu(t, i);
            if (!std::isfinite(m))
                throw Error(ErrorCode::Numerical, "non-finite mean at time " + std::to_string(subset_[t]) +
                                                      ", unit '" + data_.unitIds[i] + "'");
            if (m <= 0.0)
            {
                if (y > 0.0)
                    ll = -kInf;
                dmu(t, i) = -1.0;
                continue;
            }
            if (poisson)
            {
                ll += y * std::log(m) - m - std::lgamma(y + 1.0);
                dmu(t, i) = y / m - 1.0;
            }
            else
            {
                const NBTerm nb = nb_term(y, m, r);
                ll += nb.value;
                dmu(t, i) = nb.dmu;
                if (psiIndex_[i] >= 0)
                    dlogpsi(psiIndex_[i]) += -r * nb.dr;
            }
        }
    }
    if (!gradient)
        return ll;

    Vector& g = *gradient;
    g = dlogpsi;
    auto block_grad = [&](const Component& comp, const Block& b, const std::vector<Matrix>& X, const Matrix& part) {
        if (!comp.active)
            return;
        const Matrix gp = dmu.cwiseProduct(part);
        int k = b.offset;
        if (comp.intercept)
            g(k++) = gp.sum();
        for (const auto& x : X)
            g(k++) = gp.cwiseProduct(x).sum();
    };
    block_grad(spec_.end, endBlock_, endX_, c.endemic);
    block_grad(spec_.ar, arBlock_, arX_, c.ar);
    block_grad(spec_.ne, neBlock_, neX_, c.ne);
    if (spec_.ne.active && wBlock_.count > 0)
    {
        const Matrix phi =
            neOff_.cwiseProduct(eta_subset(neX_, spec_.ne, neBlock_, theta).array().exp().matrix());
        const auto dW = neighbourhood_weight_derivatives(spec_.weights, data_.nbOrder,
                                                         theta.segment(wBlock_.offset, wBlock_.count));
        for (int p = 0; p < wBlock_.count; ++p)
            g(wBlock_.offset + p) = dmu.cwiseProduct(phi).cwiseProduct(Ylag_ * dW[p]).sum();
    }
    return ll;
}

Matrix Model::loglik_terms(const Vector& theta) const
{
    const Matrix mu = components(theta).mean();
    const Vector psiv = psi(theta);
    Matrix out(mu.rows(), mu.cols());
    for (int i = 0; i < mu.cols(); ++i)
        for (int t = 0; t < mu.rows(); ++t)
            out(t, i) = log_density(spec_.family, Y_(t, i), mu(t, i), psiv(i));
    return out;
}

// ---------------------------------------------------------------- fitting

int Fit::index_of(const std::string& name) const
{
    for (size_t i = 0; i < names.size(); ++i)
        if (names[i] == name)
            return static_cast<int>(i);
    throw Error(ErrorCode::InvalidInput, "unknown coefficient '" + name + "'");
}

Fit fit(const Model& model, const FitOptions& options) { return fit(model, model.start(), options); }

Fit fit(const Model& model, const Vector& start, const FitOptions& options)
{
    require(start.size() == model.npars(), "start vector has the wrong length", ErrorCode::InvalidInput);
    optim::Objective objective = [&](const Vector& theta, Vector* grad) {
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
    const optim::Result res = optim::minimize_bfgs(objective, start, options.optim);

    Fit f;
    f.names = model.names();
    f.coefficients = res.x;
    f.loglik = -res.value;
    f.df = model.npars();
    f.nobs = model.nobs();
    f.converged = res.converged;
    f.iterations = res.iterations;
    f.message = res.message;
    f.times = model.subset();
    f.fittedComponents = model.components(res.x);
    f.fitted = f.fittedComponents.mean();
    f.psi = model.psi(res.x);
    f.spec = model.spec();
    const int np = model.npars();
    f.covariance = Matrix::Constant(np, np, std::numeric_limits<double>::quiet_NaN());
    f.se = Vector::Constant(np, std::numeric_limits<double>::quiet_NaN());
    if (options.computeCovariance && np > 0)
    {
        const Matrix H = optim::differenced_hessian(
            [&](const Vector& theta) {
                Vector g;
                model.loglik(theta, &g);
                return Vector(-g);
            },
            res.x);
        Eigen::FullPivLU<Matrix> lu(H);
        if (lu.isInvertible())
        {
            f.covariance = lu.inverse();
            for (int k = 0; k < np; ++k)
                f.se(k) = f.covariance(k, k) >= 0.0 ? std::sqrt(f.covariance(k, k))
                                                    : std::numeric_limits<double>::quiet_NaN();
        }
    }
    return f;
}

namespace
{
bool natural_scale(const std::string& name)
{
    return name == "overdisp" || name.rfind("overdisp.", 0) == 0 || name == "neweights.d";
}
}  // namespace

std::vector<ReportedCoefficient> reported_coefficients(const Fit& fit)
{
    std::vector<ReportedCoefficient> out;
    for (size_t k = 0; k < fit.names.size(); ++k)
    {
        const double est = fit.coefficients(k);
        const double se = fit.se(k);
        if (natural_scale(fit.names[k]))
            out.push_back({fit.names[k], std::exp(est), std::exp(est) * se});
        else
            out.push_back({fit.names[k], est, se});
    }
    return out;
}

Interval confint_wald(const Fit& fit, const std::string& name, double level, CIScale scale)
{
    require(level > 0.0 && level < 1.0, "confidence level must lie in (0,1)");
    const int k = fit.index_of(name);
    const double z = special::normal_quantile(0.5 + 0.5 * level);
    double est = fit.coefficients(k);
    double se = fit.se(k);
    if (scale == CIScale::Reported && natural_scale(name))
    {
        est = std::exp(est);
        se *= est;
    }
    return {est - z * se, est + z * se};
}

std::pair<double, double> amplitude_shift(double gammaSin, double deltaCos)
{
    return {std::hypot(gammaSin, deltaCos), std::atan2(deltaCos, gammaSin)};
}

double max_eigenvalue(const Vector& lambda, const Vector& phi, const Matrix& W)
{
    const int U = static_cast<int>(lambda.size());
    Matrix L(U, U);
    for (int i = 0; i < U; ++i)
        for (int j = 0; j < U; ++j)
            L(i, j) = (i == j) ? lambda(i) : phi(i) * W(j, i);
    if (L.cwiseAbs().maxCoeff() == 0.0)
        return 0.0;
    if (U <= 500)
        return Eigen::EigenSolver<Matrix>(L, false).eigenvalues().cwiseAbs().maxCoeff();
    // Power iteration on the shifted nonnegative matrix L + I.
    const Matrix M = L + Matrix::Identity(U, U);
    Vector x = Vector::Ones(U) / U;
    double rho = 0.0;
    for (int it = 0; it < 100000; ++it)
    {
        const Vector y = M * x;
        const double next = y.sum() / x.sum();
        x = y / y.sum();
        if (std::abs(next - rho) < 1e-10 * std::max(1.0, next))
            return next - 1.0;
        rho = next;
    }
    Eigen::EigenSolver<Matrix> es(L, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

Summary summarize(const Model& model, const Fit& fit, const SummaryOptions& options)
{
    Summary s;
    s.loglik = fit.loglik;
    s.aic = fit.aic();
    s.bic = fit.bic();
    s.nUnits = model.data().nUnits();
    s.nTime = static_cast<int>(fit.times.size());
    const auto rep = reported_coefficients(fit);
    std::vector<bool> done(rep.size(), false);
    for (size_t k = 0; k < rep.size(); ++k)
    {
        if (done[k])
            continue;
        const std::string& name = rep[k].name;
        if (options.amplitudeShift)
        {
            const size_t open = name.find(".sin(");
            if (open != std::string::npos)
            {
                const std::string prefix = name.substr(0, open);
                const std::string arg = name.substr(open + 5);
                const std::string cosName = prefix + ".cos(" + arg;
                int kc = -1;
                for (size_t m = 0; m < rep.size(); ++m)
                    if (rep[m].name == cosName)
                        kc = static_cast<int>(m);
                if (kc >= 0)
                {
                    const double g = fit.coefficients(k), d = fit.coefficients(kc);
                    const auto [A, ph] = amplitude_shift(g, d);
                    Eigen::Matrix2d J;
                    J << g / A, d / A, -d / (A * A), g / (A * A);
                    Eigen::Matrix2d C;
                    C << fit.covariance(k, k), fit.covariance(k, kc), fit.covariance(kc, k), fit.covariance(kc, kc);
                    const Eigen::Matrix2d V = J * C * J.transpose();
                    s.rows.push_back({prefix + ".A(" + arg, A, std::sqrt(V(0, 0))});
                    s.rows.push_back({prefix + ".s(" + arg, ph, std::sqrt(V(1, 1))});
                    done[k] = done[kc] = true;
                    continue;
                }
            }
        }
        const bool toExp =
            std::find(options.idx2Exp.begin(), options.idx2Exp.end(), name) != options.idx2Exp.end();
        if (toExp)
        {
            const double e = std::exp(fit.coefficients(k));
            s.rows.push_back({"exp(" + name + ")", e, e * fit.se(k)});
        }
        else
            s.rows.push_back({name, rep[k].estimate, rep[k].se});
        done[k] = true;
    }
    if (options.maxEV)
    {
        const auto [lambda, phi] = model.epidemic_rates(fit.coefficients, fit.times.front());
        s.maxEV = max_eigenvalue(lambda, phi, model.weights(fit.coefficients));
    }
    return s;
}

Vector mean_reference(const Model& model, const Vector& theta, int t)
{
    const Spec& sp = model.spec();
    const CountSeries& d = model.data();
    const int U = d.nUnits();
    require(t >= 2 && t <= d.nTime(), "time index outside 2..T");
    auto rate = [&](const Component& c, const std::string& prefix, int i) {
        double eta = 0.0;
        if (c.intercept)
            eta += theta(model.index_of(prefix + ".1"));
        for (const auto& x : c.covariates)
            eta += theta(model.index_of(prefix + "." + x.name)) * x.values(t - 1, i);
        const double off = c.offset.size() ? c.offset(t - 1, i) : 1.0;
        return off * std::exp(eta);
    };
    const Matrix W = model.weights(theta);
    Vector mu = Vector::Zero(U);
    for (int i = 0; i < U; ++i)
    {
        double m = 0.0;
        if (sp.end.active)
            m += rate(sp.end, "end", i);
        if (sp.ar.active)
            m += rate(sp.ar, "ar", i) * d.counts(t - 2, i);
        if (sp.ne.active)
        {
            double s = 0.0;
            for (int j = 0; j < U; ++j)
                if (j != i)
                    s += W(j, i) * d.counts(t - 2, j);
            m += rate(sp.ne, "ne", i) * s;
        }
        mu(i) = m;
    }
    return mu;
}

}  // namespace eepi::hhh4
