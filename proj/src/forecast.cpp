#include "eepi/forecast.hpp"
#include "eepi/parallel.hpp"
#include "eepi/rng.hpp"
#include "eepi/special.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace eepi::forecast
{

double PredictiveDistribution::psi(int r, int c) const
{
    return family == hhh4::Family::Poisson ? 0.0 : std::exp(-logSize(r, c));
}

double PredictiveDistribution::log_pmf(int r, int c, double y) const
{
    return hhh4::log_density(family, y, mean(r, c), psi(r, c));
}

PredictiveDistribution one_step_ahead(const hhh4::Model& model, const hhh4::Fit& full, int from, int to,
                                      PredictionType type, int threads)
{
    const CountSeries& data = model.data();
    require(from >= 1 && from <= to && to + 1 <= data.nTime(),
            "prediction window must satisfy 1 <= from <= to < T", ErrorCode::InvalidInput);
    const int n = to - from + 1;
    const int U = data.nUnits();
    PredictiveDistribution pd;
    pd.family = model.spec().family;
    pd.unitIds = data.unitIds;
    pd.mean.resize(n, U);
    pd.logSize = Matrix::Zero(n, U);
    pd.observed.resize(n, U);
    pd.flagged.assign(n, false);
    std::vector<std::string> warn(n);

    auto predict = [&](const hhh4::Model& m, const Vector& theta, int r) {
        const int t = from + r + 1;
        const Vector ylag = data.counts.row(t - 2).transpose();
        pd.mean.row(r) = m.mean_at(theta, t, ylag).mean().row(0);
        if (pd.family != hhh4::Family::Poisson)
            pd.logSize.row(r) = -m.psi(theta).array().log().matrix().transpose();
        pd.observed.row(r) = data.counts.row(t - 1);
    };

    for (int r = 0; r < n; ++r)
        pd.times.push_back(from + r + 1);
    if (type == PredictionType::Final)
    {
        for (int r = 0; r < n; ++r)
            predict(model, full.coefficients, r);
        return pd;
    }

    std::vector<std::optional<hhh4::Model>> models(n);
    std::vector<Vector> thetas(n);
    parallel_for(n, threads, [&](std::size_t r) {
        const int t = from + static_cast<int>(r);
        hhh4::Spec spec = model.spec();
        spec.subset.clear();
        for (int s : model.subset())
            if (s <= t)
                spec.subset.push_back(s);
        try
        {
            require(!spec.subset.empty(), "no data before t = " + std::to_string(t));
            hhh4::Model m(spec, data);
            Vector start = m.start();
            for (int k = 0; k < m.npars(); ++k)
                for (size_t q = 0; q < full.names.size(); ++q)
                    if (full.names[q] == m.names()[k])
                        start(k) = full.coefficients(q);
            hhh4::FitOptions opts;
            opts.computeCovariance = false;
            const hhh4::Fit f = hhh4::fit(m, start, opts);
            if (f.converged && std::isfinite(f.loglik))
            {
                thetas[r] = f.coefficients;
                models[r].emplace(std::move(m));
            }
            else
                warn[r] = "refit up to t = " + std::to_string(t) + " did not converge: " + f.message;
        }
        catch (const Error& e)
        {
            warn[r] = "refit up to t = " + std::to_string(t) + " failed: " + e.what();
        }
    });
    // a failed step reuses the coefficients of the previous successful one
    const hhh4::Model* lastModel = &model;
    Vector lastTheta = full.coefficients;
    for (int r = 0; r < n; ++r)
    {
        if (models[r])
        {
            lastModel = &*models[r];
            lastTheta = thetas[r];
        }
        else
            pd.flagged[r] = true;
        predict(*lastModel, lastTheta, r);
    }
    for (const auto& w : warn)
        if (!w.empty())
            pd.warnings.push_back(w);
    return pd;
}

Vector predictive_cdf(hhh4::Family family, double mu, double psi, int kmax)
{
    Vector cdf(kmax + 1);
    if (mu <= 0.0)
    {
        cdf.setOnes();
        return cdf;
    }
    const bool poisson = family == hhh4::Family::Poisson || psi <= 0.0;
    const double r = poisson ? 0.0 : 1.0 / psi;
    double logp = poisson ? -mu : -r * std::log1p(mu / r);
    const double logq = poisson ? std::log(mu) : std::log(mu / (r + mu));
    double acc = 0.0;
    for (int k = 0; k <= kmax; ++k)
    {
        acc += std::exp(logp);
        cdf(k) = std::min(acc, 1.0);
        logp += logq - std::log(k + 1.0) + (poisson ? 0.0 : std::log(k + r));
    }
    return cdf;
}

double log_score(hhh4::Family family, double y, double mu, double psi)
{
    return -hhh4::log_density(family, y, mu, psi);
}

double ranked_probability_score(hhh4::Family family, double y, double mu, double psi)
{
    const double sd = std::sqrt(mu * (1.0 + (family == hhh4::Family::Poisson ? 0.0 : psi) * mu));
    int kmax = static_cast<int>(std::ceil(std::max(y, mu + 20.0 * sd)));
    for (;;)
    {
        const Vector cdf = predictive_cdf(family, mu, psi, kmax);
        if (1.0 - cdf(kmax) < 1e-10 || kmax > 100000000)
        {
            double s = 0.0;
            for (int k = 0; k <= kmax; ++k)
            {
                const double d = cdf(k) - (y <= k ? 1.0 : 0.0);
                s += d * d;
            }
            return s;
        }
        kmax *= 2;
    }
}

const Matrix& Scores::operator[](const std::string& name) const
{
    for (size_t k = 0; k < names.size(); ++k)
        if (names[k] == name)
            return values[k];
    throw Error(ErrorCode::InvalidInput, "no score named '" + name + "'");
}

Scores score_predictions(const PredictiveDistribution& pd, const std::vector<std::string>& which)
{
    Scores s;
    for (const auto& name : which)
    {
        require(name == "logs" || name == "rps" || name == "ses",
                "unknown score '" + name + "' (expected logs, rps or ses)", ErrorCode::InvalidSpec);
        Matrix v(pd.rows(), pd.cols());
        for (int r = 0; r < pd.rows(); ++r)
            for (int c = 0; c < pd.cols(); ++c)
            {
                const double y = pd.observed(r, c), mu = pd.mean(r, c), psi = pd.psi(r, c);
                if (name == "logs")
                    v(r, c) = log_score(pd.family, y, mu, psi);
                else if (name == "rps")
                    v(r, c) = ranked_probability_score(pd.family, y, mu, psi);
                else
                    v(r, c) = (y - mu) * (y - mu);
            }
        s.names.push_back(name);
        s.values.push_back(std::move(v));
    }
    return s;
}

double pit_conditional_cdf(double u, double below, double at)
{
    if (at <= below)
        return u >= at ? 1.0 : 0.0;
    return std::clamp((u - below) / (at - below), 0.0, 1.0);
}

Vector pit_histogram(const PredictiveDistribution& pd, int nBins)
{
    require(nBins >= 2, "PIT histogram needs at least 2 bins");
    Vector heights = Vector::Zero(nBins);
    const int n = pd.rows() * pd.cols();
    require(n > 0, "no predictions");
    for (int r = 0; r < pd.rows(); ++r)
        for (int c = 0; c < pd.cols(); ++c)
        {
            const double y = pd.observed(r, c);
            const int iy = static_cast<int>(y);
            const Vector cdf = predictive_cdf(pd.family, pd.mean(r, c), pd.psi(r, c), iy);
            const double at = cdf(iy);
            const double below = iy > 0 ? cdf(iy - 1) : 0.0;
            double prev = 0.0;
            for (int j = 1; j <= nBins; ++j)
            {
                const double cur = j == nBins ? 1.0 : pit_conditional_cdf(static_cast<double>(j) / nBins, below, at);
                heights(j - 1) += cur - prev;
                prev = cur;
            }
        }
    return heights * (static_cast<double>(nBins) / n);
}

PermutationResult permutation_test(const Matrix& scoresA, const Matrix& scoresB, int nPermutations,
                                   std::uint64_t seed)
{
    require(scoresA.rows() == scoresB.rows() && scoresA.cols() == scoresB.cols() && scoresA.size() > 0,
            "score arrays must have equal, non-empty shapes");
    require(nPermutations >= 100, "at least 100 permutations are required");
    const Eigen::Map<const Vector> a(scoresA.data(), scoresA.size());
    const Eigen::Map<const Vector> b(scoresB.data(), scoresB.size());
    const Vector d = a - b;
    const int n = static_cast<int>(d.size());
    PermutationResult res;
    res.diffObs = d.mean();
    const double absObs = std::abs(res.diffObs);
    const double slack = 1e-12 * std::max(1.0, d.cwiseAbs().maxCoeff());
    CounterRng rng(seed);
    int extreme = 0;
    for (int p = 0; p < nPermutations; ++p)
    {
        double s = 0.0;
        for (int k = 0; k < n; ++k)
            s += (rng() >> 63) ? d(k) : -d(k);
        if (std::abs(s / n) >= absObs - slack)
            ++extreme;
    }
    res.pPermut = (1.0 + extreme) / (1.0 + nPermutations);
    if (n > 1)
    {
        const double sd = std::sqrt((d.array() - res.diffObs).square().sum() / (n - 1));
        if (sd > 0.0)
        {
            const double t = res.diffObs / (sd / std::sqrt(static_cast<double>(n)));
            res.pT = 2.0 * (1.0 - special::student_t_cdf(std::abs(t), n - 1));
        }
        else
            res.pT = res.diffObs == 0.0 ? 1.0 : 0.0;
    }
    return res;
}

ResidualDiagnostic residual_transform(const std::function<double(double)>& cumulativeIntensity,
                                      const std::vector<double>& eventTimes, double T, double level)
{
    const int n = static_cast<int>(eventTimes.size());
    require(n >= 1, "residual process needs at least one event");
    ResidualDiagnostic r;
    r.tau.resize(n);
    std::vector<double> times = eventTimes;
    std::sort(times.begin(), times.end());
    require(times.back() <= T, "event after the end of the observation period");
    double prev = 0.0;
    for (int i = 0; i < n; ++i)
    {
        r.tau(i) = cumulativeIntensity(times[i]);
        require(std::isfinite(r.tau(i)) && r.tau(i) >= prev - 1e-12 * std::max(1.0, prev),
                "cumulative intensity must be finite, nonnegative and nondecreasing", ErrorCode::InvalidInput);
        prev = r.tau(i);
    }
    const double total = cumulativeIntensity(T);
    require(total >= prev && total > 0.0, "cumulative intensity at T must dominate the event values",
            ErrorCode::InvalidInput);
    r.u = r.tau / total;
    std::sort(r.u.data(), r.u.data() + n);
    r.ecdf.resize(n);
    double D = 0.0;
    for (int i = 0; i < n; ++i)
    {
        r.ecdf(i) = (i + 1.0) / n;
        D = std::max({D, r.ecdf(i) - r.u(i), r.u(i) - static_cast<double>(i) / n});
    }
    r.ksStatistic = D;
    r.ksPValue = 1.0 - special::kolmogorov_cdf(n, D);
    r.bandHalfWidth = special::kolmogorov_quantile(n, level);
    r.lagPairs.resize(std::max(n - 1, 0), 2);
    Vector gaps(n);
    for (int i = 0; i < n; ++i)
        gaps(i) = -std::expm1(-(r.tau(i) - (i > 0 ? r.tau(i - 1) : 0.0)));
    for (int i = 0; i + 1 < n; ++i)
        r.lagPairs.row(i) << gaps(i), gaps(i + 1);
    return r;
}

}  // namespace eepi::forecast
