#include "synthetic.hpp"

#include "eepi/forecast.hpp"

#include <doctest.h>

using namespace eepi;
using namespace eepi::forecast;

namespace
{
PredictiveDistribution single(hhh4::Family family, const std::vector<double>& mu, const std::vector<double>& y,
                              double psi = 0.5)
{
    PredictiveDistribution pd;
    pd.family = family;
    const int n = static_cast<int>(mu.size());
    pd.mean.resize(n, 1);
    pd.logSize.resize(n, 1);
    pd.observed.resize(n, 1);
    for (int i = 0; i < n; ++i)
    {
        pd.times.push_back(i + 1);
        pd.mean(i, 0) = mu[i];
        pd.logSize(i, 0) = std::log(1.0 / psi);
        pd.observed(i, 0) = y[i];
    }
    pd.unitIds = {"u1"};
    pd.flagged.assign(n, false);
    return pd;
}
}  // namespace

TEST_CASE("final one-step-ahead predictions are the fitted values and their logs is minus the loglik")
{
    const CountSeries data = testdata::simulated_counts(5, 100, 3);
    const hhh4::Model m(testdata::hhh4_spec(data), data);
    const hhh4::Fit f = hhh4::fit(m);
    const PredictiveDistribution pd = one_step_ahead(m, f, 70, 90, PredictionType::Final);
    REQUIRE(pd.rows() == 21);
    const Matrix terms = m.loglik_terms(f.coefficients);
    double ll = 0.0;
    for (int r = 0; r < pd.rows(); ++r)
    {
        const int t = pd.times[r];
        CHECK(t == 71 + r);
        ll += terms.row(t - 2).sum();
        for (int u = 0; u < pd.cols(); ++u)
            CHECK(pd.mean(r, u) == doctest::Approx(f.fitted(t - 2, u)).epsilon(1e-12));
    }
    const Scores s = score_predictions(pd, {"logs", "rps", "ses"});
    CHECK(s["logs"].sum() == doctest::Approx(-ll).epsilon(1e-9));
    CHECK(s["rps"].minCoeff() >= 0.0);
    CHECK_THROWS_AS(score_predictions(pd, {"crps"}), Error);

    const PredictiveDistribution one = one_step_ahead(m, f, 50, 50, PredictionType::Final);
    CHECK(one.rows() == 1);
    CHECK(one.cols() == 5);
}

TEST_CASE("rolling predictions react to a structural break")
{
    Matrix y(80, 4);
    CounterRng rng(12);
    for (int t = 0; t < 80; ++t)
        for (int u = 0; u < 4; ++u)
            y(t, u) = rng.poisson(t < 60 ? 2.0 : 12.0);
    const CountSeries data = testdata::count_series(y);
    hhh4::Spec spec;
    spec.family = hhh4::Family::Poisson;
    spec.end.active = true;
    spec.ar.active = true;
    const hhh4::Model m(spec, data);
    const hhh4::Fit f = hhh4::fit(m);
    const PredictiveDistribution fin = one_step_ahead(m, f, 60, 70, PredictionType::Final);
    const PredictiveDistribution rol = one_step_ahead(m, f, 60, 70, PredictionType::Rolling, 2);
    REQUIRE(rol.rows() == fin.rows());
    CHECK((rol.mean - fin.mean).cwiseAbs().maxCoeff() > 1e-3);
    const PredictiveDistribution rol1 = one_step_ahead(m, f, 60, 70, PredictionType::Rolling, 1);
    CHECK(rol1.mean == rol.mean);
}

TEST_CASE("scores: closed forms and tail invariance of rps")
{
    CHECK(log_score(hhh4::Family::Poisson, 0.0, 1.0, 0.0) == doctest::Approx(1.0));
    const Scores s = score_predictions(single(hhh4::Family::NegBin1, {4.0}, {4.0}), {"ses"});
    CHECK(s["ses"](0, 0) == 0.0);
    for (double mu : {0.3, 2.0, 15.0})
        for (double y : {0.0, 3.0, 40.0})
        {
            for (auto fam : {hhh4::Family::Poisson, hhh4::Family::NegBin1})
            {
                const double psi = fam == hhh4::Family::Poisson ? 0.0 : 0.7;
                const Vector cdf = predictive_cdf(fam, mu, psi, 3000);
                double direct = 0.0;
                for (int k = 0; k < cdf.size(); ++k)
                    direct += std::pow(cdf(k) - (y <= k ? 1.0 : 0.0), 2);
                CHECK(ranked_probability_score(fam, y, mu, psi) == doctest::Approx(direct).epsilon(1e-10));
            }
        }
}

TEST_CASE("PIT histogram heights average to one")
{
    const CountSeries data = testdata::simulated_counts(4, 80, 5);
    const hhh4::Model m(testdata::hhh4_spec(data), data);
    const hhh4::Fit f = hhh4::fit(m);
    const PredictiveDistribution pd = one_step_ahead(m, f, 40, 79, PredictionType::Final);
    for (int bins : {2, 5, 10, 17})
    {
        const Vector h = pit_histogram(pd, bins);
        CHECK(h.size() == bins);
        CHECK(std::abs(h.sum() / bins - 1.0) < 1e-12);
    }
    CHECK_THROWS_AS(pit_histogram(pd, 1), Error);
}

TEST_CASE("PIT: degenerate forecast is uniform, overprediction slopes downwards")
{
    // P(y - 1) = 0 and P(y) = 1: the conditional CDF is the identity
    for (double u : {0.0, 0.3, 1.0})
        CHECK(pit_conditional_cdf(u, 0.0, 1.0) == doctest::Approx(u));
    CHECK(pit_conditional_cdf(0.2, 0.4, 0.4) == 0.0);
    CHECK(pit_conditional_cdf(0.5, 0.4, 0.4) == 1.0);

    CounterRng rng(9);
    std::vector<double> mu, y;
    for (int i = 0; i < 4000; ++i)
    {
        mu.push_back(10.0);
        y.push_back(rng.poisson(5.0));
    }
    const Vector h = pit_histogram(single(hhh4::Family::Poisson, mu, y), 10);
    for (int j = 0; j + 1 < h.size(); ++j)
        CHECK(h(j) >= h(j + 1));
}

TEST_CASE("PIT of draws from the predictive distribution is flat")
{
    CounterRng rng(10);
    std::vector<double> mu, y;
    for (int i = 0; i < 10000; ++i)
    {
        mu.push_back(1.0 + 9.0 * rng.uniform());
        y.push_back(rng.negbin(mu.back(), 0.5));
    }
    const Vector h = pit_histogram(single(hhh4::Family::NegBin1, mu, y, 0.5), 10);
    const double sigma = std::sqrt(0.1 * 0.9 / 10000.0) * 10.0;
    for (int j = 0; j < h.size(); ++j)
        CHECK(std::abs(h(j) - 1.0) < 3.0 * sigma);
}

TEST_CASE("permutation test: identity, symmetry and a shift")
{
    CounterRng rng(11);
    Matrix a(10, 10), b(10, 10);
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j)
        {
            a(i, j) = rng.normal();
            b(i, j) = rng.normal();
        }
    const PermutationResult same = permutation_test(a, a, 999, 1);
    CHECK(same.diffObs == 0.0);
    CHECK(same.pPermut == 1.0);

    const PermutationResult ab = permutation_test(a, b, 999, 2);
    const PermutationResult ba = permutation_test(b, a, 999, 2);
    CHECK(ab.diffObs == doctest::Approx(-ba.diffObs));
    CHECK(ab.pPermut == ba.pPermut);
    CHECK(ab.pT == doctest::Approx(ba.pT));
    CHECK(ab.diffObs == doctest::Approx((a - b).mean()));

    const Matrix shifted = (a.array() + 1.0).matrix();
    CHECK(permutation_test(a, shifted, 999, 3).pPermut < 0.01);
    CHECK_THROWS_AS(permutation_test(a, b, 99, 1), Error);
    CHECK_THROWS_AS(permutation_test(a, Matrix::Zero(3, 3), 999, 1), Error);
}

TEST_CASE("residual transform: unit rate, scale invariance, monotonicity")
{
    const std::vector<double> times = {0.5, 1.7, 2.2, 6.1, 9.0};
    const ResidualDiagnostic r1 = residual_transform([](double t) { return t; }, times, 10.0);
    for (size_t i = 0; i < times.size(); ++i)
        CHECK(r1.u(i) == doctest::Approx(times[i] / 10.0));
    const ResidualDiagnostic r3 = residual_transform([](double t) { return 3.0 * t; }, times, 10.0);
    CHECK((r3.u - r1.u).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(r1.lagPairs.rows() == 4);
    CHECK(r1.bandHalfWidth > 0.0);
    CHECK_THROWS_AS(residual_transform([](double t) { return t < 2.0 ? t : 4.0 - t; }, times, 10.0), Error);
}
