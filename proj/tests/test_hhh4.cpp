#include "synthetic.hpp"

#include "eepi/hhh4.hpp"
#include "eepi/optim.hpp"

#include <doctest.h>

#include <numeric>

using namespace eepi;
using namespace eepi::hhh4;

namespace
{
Vector random_theta(const Model& m, const Vector& centre, CounterRng& rng)
{
    Vector th = centre;
    for (int k = 0; k < m.npars(); ++k)
        th(k) += 0.3 * rng.normal();
    return th;
}
}  // namespace

TEST_CASE("season terms: column count and sine at t = 13")
{
    Component c;
    add_season_terms(c, 1, 52, 104, 3);
    REQUIRE(c.covariates.size() == 2);
    CHECK(c.covariates[0].name == "sin(2 * pi * t/52)");
    CHECK(c.covariates[0].values(12, 0) == doctest::Approx(1.0));
    Component c2;
    add_season_terms(c2, 2, 52, 104, 3);
    CHECK(c2.covariates.size() == 4);
    CHECK(c2.covariates[2].name == "sin(4 * pi * t/52)");
    Component c3;
    add_season_terms(c3, 1, 104, 104, 3);
    CHECK(c3.covariates[0].values.rows() == 104);
    CHECK(c3.offset.size() == 0);
    CHECK_THROWS_AS(add_season_terms(c3, 0, 52, 104, 3), Error);
}

TEST_CASE("neighbourhood weights: first order, power law, order weights, normalisation")
{
    const CountSeries data = testdata::count_series(Matrix::Zero(3, 7));
    WeightsSpec first;
    const Matrix w1 = neighbourhood_weights(first, data.nbOrder, Vector());
    CHECK(w1 == w1.transpose());
    CHECK(w1.sum() == doctest::Approx(14.0));

    WeightsSpec pl;
    pl.kind = WeightKind::PowerLaw;
    pl.maxlag = 2;
    Vector d(1);
    d << std::log(2.0);
    const Matrix w2 = neighbourhood_weights(pl, data.nbOrder, d);
    CHECK(w2(0, 1) == doctest::Approx(1.0));
    CHECK(w2(0, 2) == doctest::Approx(0.25));
    CHECK(w2(0, 3) == 0.0);
    CHECK(w2(0, 0) == 0.0);
    pl.normalize = true;
    const Matrix w3 = neighbourhood_weights(pl, data.nbOrder, d);
    for (int j = 0; j < 7; ++j)
        CHECK(w3.row(j).sum() == doctest::Approx(1.0).epsilon(1e-14));

    WeightsSpec ow;
    ow.kind = WeightKind::OrderWeights;
    ow.maxlag = 3;
    Vector om(2);
    om << std::log(0.1), std::log(0.01);
    const Matrix w4 = neighbourhood_weights(ow, data.nbOrder, om);
    CHECK(w4(0, 1) == 1.0);
    CHECK(w4(0, 2) == doctest::Approx(0.1));
    CHECK(w4(0, 3) == doctest::Approx(0.01));
}

TEST_CASE("mean: zero lag counts leave the endemic part; literal loop oracle")
{
    Matrix y = Matrix::Zero(3, 1);
    y(1, 0) = 4;
    CountsInput in;
    in.counts = y;
    in.unitIds = {"a"};
    const CountSeries data = validate_counts(in);
    Spec s;
    s.family = Family::Poisson;
    s.end.active = true;
    s.ar.active = true;
    const Model m(s, data);
    Vector th(2);
    th << std::log(0.5), 0.0;
    const Components c = m.mean_at(th, 3, Vector::Constant(1, 4.0));
    CHECK(c.mean()(0, 0) == doctest::Approx(3.0));
    const Components c0 = m.mean_at(th, 2, Vector::Zero(1));
    CHECK(c0.mean()(0, 0) == doctest::Approx(1.0));

    Vector truth;
    const CountSeries sim = testdata::simulated_counts(6, 60, 4, &truth, Family::NegBin1, true);
    const Model big(testdata::hhh4_spec(sim, Family::NegBin1, true), sim);
    const Components all = big.components(truth);
    const std::vector<int>& sub = big.subset();
    for (size_t r = 0; r < sub.size(); r += 7)
    {
        const Vector ref = mean_reference(big, truth, sub[r]);
        for (int i = 0; i < 6; ++i)
            CHECK(all.mean()(r, i) == doctest::Approx(ref(i)).epsilon(1e-12));
    }
}

TEST_CASE("log densities: Poisson single cell and NegBin limit")
{
    CHECK(log_density(Family::Poisson, 0, 1.0, 0.0) == doctest::Approx(-1.0));
    for (double y : {0.0, 3.0, 17.0})
        CHECK(log_density(Family::NegBin1, y, 4.2, 1e-8) ==
              doctest::Approx(log_density(Family::Poisson, y, 4.2, 0.0)).epsilon(1e-4));
    // large counts use the lgamma branch; compare against the direct formula
    const double y = 2500, mu = 2300, psi = 0.05, r = 1 / psi;
    const double direct = std::lgamma(y + r) - std::lgamma(r) - std::lgamma(y + 1) + r * std::log(r / (r + mu)) +
                          y * std::log(mu / (r + mu));
    CHECK(log_density(Family::NegBin1, y, mu, psi) == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("Poisson log-likelihood is the NegBin limit psi -> 0")
{
    Vector truth;
    const CountSeries data = testdata::simulated_counts(5, 80, 8, &truth);
    const Model nb(testdata::hhh4_spec(data, Family::NegBin1), data);
    const Model po(testdata::hhh4_spec(data, Family::Poisson), data);
    Vector thNb = truth;
    thNb(nb.index_of("overdisp")) = std::log(1e-10);
    const Vector thPo = truth.head(po.npars());
    CHECK(std::abs(nb.loglik(thNb) - po.loglik(thPo)) <= 1e-3);
}

TEST_CASE("gradient matches central differences at 20 points per family")
{
    CounterRng rng(77);
    for (Family fam : {Family::Poisson, Family::NegBin1, Family::NegBinM})
        for (int kind = 0; kind < 3; ++kind)
        {
            const CountSeries data = testdata::simulated_counts(6, 70, 9, nullptr, Family::NegBin1, true);
            Spec s = testdata::hhh4_spec(data, fam, kind == 1);
            if (kind == 2)
            {
                s.weights.kind = WeightKind::OrderWeights;
                s.weights.maxlag = 3;
                s.weights.normalize = true;
            }
            const Model m(s, data);
            const Vector centre = testdata::hhh4_truth(m);
            for (int p = 0; p < 20; ++p)
            {
                const Vector th = random_theta(m, centre, rng);
                Vector g;
                m.loglik(th, &g);
                const Vector fd = optim::numeric_gradient([&](const Vector& x) { return m.loglik(x); }, th);
                CHECK((g - fd).cwiseAbs().maxCoeff() <= 1e-5 * fd.cwiseAbs().maxCoeff());
            }
        }
}

TEST_CASE("fit: AIC/BIC bookkeeping and component sums")
{
    const CountSeries data = testdata::simulated_counts(6, 120, 10, nullptr, Family::NegBin1, true);
    const Model m(testdata::hhh4_spec(data, Family::NegBin1, true), data);
    const Fit f = fit(m);
    REQUIRE(f.converged);
    CHECK(f.df == m.npars());
    CHECK(f.aic() == doctest::Approx(-2 * f.loglik + 2 * m.npars()));
    CHECK(f.bic() == doctest::Approx(-2 * f.loglik + std::log(6.0 * 119) * m.npars()));
    const Matrix sum = f.fittedComponents.endemic + f.fittedComponents.ar + f.fittedComponents.ne;
    CHECK((sum - f.fitted).cwiseAbs().maxCoeff() <= 1e-12 * f.fitted.cwiseAbs().maxCoeff());
    Vector g;
    m.loglik(f.coefficients, &g);
    CHECK(g.cwiseAbs().maxCoeff() < 1e-6);
    CHECK(f.se.allFinite());

    // refitting from the optimum is stable
    const Fit again = fit(m, f.coefficients);
    CHECK(again.loglik == doctest::Approx(f.loglik).epsilon(1e-12));
}

TEST_CASE("endemic-only spec has zero epidemic components and maxEV 0")
{
    const CountSeries data = testdata::simulated_counts(4, 60, 12);
    Spec s;
    s.family = Family::NegBin1;
    s.end.active = true;
    const Model m(s, data);
    const Fit f = fit(m);
    CHECK(f.fittedComponents.ar.cwiseAbs().maxCoeff() == 0.0);
    CHECK(f.fittedComponents.ne.cwiseAbs().maxCoeff() == 0.0);
    CHECK(max_eigenvalue(Vector::Zero(4), Vector::Zero(4), Matrix::Zero(4, 4)) == 0.0);
}

TEST_CASE("amplitude and shift, Wald intervals and reported scales")
{
    const auto [A, phi] = amplitude_shift(1.0, 0.0);
    CHECK(A == doctest::Approx(1.0));
    CHECK(phi == doctest::Approx(0.0));
    const auto [A2, phi2] = amplitude_shift(0.6, 0.8);
    CHECK(A2 == doctest::Approx(1.0));
    CHECK(phi2 == doctest::Approx(std::atan2(0.8, 0.6)));

    const CountSeries data = testdata::simulated_counts(6, 120, 13);
    const Model m(testdata::hhh4_spec(data), data);
    const Fit f = fit(m);
    const int k = f.index_of("overdisp");
    const Interval ci = confint_wald(f, "overdisp");
    // reported scale: psi +- z * psi * SE(log psi)
    const double psi = std::exp(f.coefficients(k));
    CHECK(ci.lower == doctest::Approx(psi - 1.959963984540054 * psi * f.se(k)));
    CHECK(ci.upper == doctest::Approx(psi + 1.959963984540054 * psi * f.se(k)));
    const Interval ar = confint_wald(f, "ar.1", 0.95, CIScale::Internal);
    CHECK(ar.upper - ar.lower == doctest::Approx(2 * 1.959963984540054 * f.se(f.index_of("ar.1"))));
    CHECK_THROWS_AS(confint_wald(f, "nope"), Error);

    Fit degenerate = f;
    degenerate.se.setZero();
    const Interval z = confint_wald(degenerate, "ar.1", 0.95, CIScale::Internal);
    CHECK(z.lower == z.upper);

    SummaryOptions so;
    so.idx2Exp = {"ar.1"};
    so.amplitudeShift = true;
    so.maxEV = true;
    const Summary s = summarize(m, f, so);
    bool sawA = false;
    for (const auto& row : s.rows)
    {
        if (row.name == "exp(ar.1)")
            CHECK(row.estimate == doctest::Approx(std::exp(f.coefficients(f.index_of("ar.1")))));
        sawA = sawA || row.name == "end.A(2 * pi * t/52)";
    }
    CHECK(sawA);
    CHECK(s.maxEV > 0.0);
    CHECK(s.maxEV < 2.0);
}

TEST_CASE("maxEV is invariant under a permutation of units")
{
    CounterRng rng(3);
    const int U = 7;
    Vector lambda(U), phi(U);
    Matrix W = Matrix::Zero(U, U);
    for (int i = 0; i < U; ++i)
    {
        lambda(i) = rng.uniform();
        phi(i) = 0.5 * rng.uniform();
        for (int j = 0; j < U; ++j)
            if (i != j && rng.uniform() < 0.4)
                W(j, i) = rng.uniform();
    }
    std::vector<int> perm(U);
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.end());
    std::swap(perm[1], perm[4]);
    Vector lp(U), pp(U);
    Matrix Wp(U, U);
    for (int a = 0; a < U; ++a)
    {
        lp(a) = lambda(perm[a]);
        pp(a) = phi(perm[a]);
        for (int b = 0; b < U; ++b)
            Wp(a, b) = W(perm[a], perm[b]);
    }
    CHECK(max_eigenvalue(lp, pp, Wp) == doctest::Approx(max_eigenvalue(lambda, phi, W)).epsilon(1e-9));
    // against a dense eigen-solver
    Matrix L = Matrix::Zero(U, U);
    for (int i = 0; i < U; ++i)
        for (int j = 0; j < U; ++j)
            L(i, j) = i == j ? lambda(i) : phi(i) * W(j, i);
    const double dense = Eigen::EigenSolver<Matrix>(L).eigenvalues().cwiseAbs().maxCoeff();
    CHECK(max_eigenvalue(lambda, phi, W) == doctest::Approx(dense).epsilon(1e-9));
}

TEST_CASE("spec validation")
{
    const CountSeries data = testdata::simulated_counts(4, 30, 14);
    Spec none;
    CHECK_THROWS_AS(Model(none, data), Error);
    Spec bad;
    bad.end.active = true;
    bad.subset = {1};
    CHECK_THROWS_AS(Model(bad, data), Error);
    CHECK(parse_family("NegBin1") == Family::NegBin1);
    CHECK_THROWS_AS(parse_family("Binomial"), Error);
}
