// Acceptance suite: one PASS/FAIL/SKIP line per criterion.

#include "acceptance.hpp"
#include "synthetic.hpp"

#include "eepi/forecast.hpp"
#include "eepi/geometry.hpp"
#include "eepi/optim.hpp"
#include "eepi/special.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

using namespace eepi;
using namespace eepi::acceptance;

namespace
{

double rel_error(const Vector& g, const Vector& fd)
{
    return (g - fd).cwiseAbs().maxCoeff() / std::max(fd.cwiseAbs().maxCoeff(), 1e-300);
}

Vector jitter(const Vector& x, double sd, CounterRng& rng)
{
    Vector y = x;
    for (int k = 0; k < y.size(); ++k)
        y(k) += sd * rng.normal();
    return y;
}

double ks_pvalue(std::vector<double> u)
{
    std::sort(u.begin(), u.end());
    const int n = static_cast<int>(u.size());
    double D = 0.0;
    for (int i = 0; i < n; ++i)
        D = std::max({D, (i + 1.0) / n - u[i], u[i] - static_cast<double>(i) / n});
    return 1.0 - special::kolmogorov_cdf(n, D);
}

// ---------------------------------------------------------------- 10

Outcome gradients()
{
    CounterRng rng(2024, 10);
    std::ostringstream os;
    bool ok = true;

    {
        const CountSeries data = testdata::simulated_counts(6, 120, 11, nullptr, hhh4::Family::NegBinM, true);
        const hhh4::Model m(testdata::hhh4_spec(data, hhh4::Family::NegBinM, true), data);
        const Vector truth = testdata::hhh4_truth(m);
        double worst = 0.0;
        for (int p = 0; p < 10; ++p)
        {
            const Vector th = jitter(truth, 0.3, rng);
            Vector g;
            m.loglik(th, &g);
            const Vector fd = optim::numeric_gradient([&](const Vector& x) { return m.loglik(x); }, th, 1e-6);
            worst = std::max(worst, rel_error(g, fd));
        }
        ok = ok && worst <= 1e-5;
        os << "hhh4 " << fmt(worst) << " (tol 1e-5)";
    }
    {
        const EventHistory h = testdata::simulated_history(10, 12);
        const twinsir::Model m(testdata::sir_spec(), h);
        double worst = 0.0;
        for (int p = 0; p < 10; ++p)
        {
            Vector th(m.npars());
            th << 0.2 + 0.8 * rng.uniform(), 0.005 + 0.05 * rng.uniform(), -4.0 + 0.5 * rng.normal(),
                0.5 * rng.normal();
            Vector g;
            m.loglik(th, &g);
            const Vector fd = optim::numeric_gradient([&](const Vector& x) { return m.loglik(x); }, th, 1e-6);
            worst = std::max(worst, rel_error(g, fd));
        }
        ok = ok && worst <= 1e-6;
        os << "; twinSIR " << fmt(worst) << " (tol 1e-6)";
    }
    for (SiafKind kind : {SiafKind::Gaussian, SiafKind::Powerlaw})
    {
        const twinstim::Spec spec = testdata::epidemic_spec(kind);
        const auto setup = testdata::simulated_pattern(spec, 13);
        const twinstim::Model m(spec, setup.pattern);
        const Vector truth = testdata::twinstim_truth(m);
        const double tol = 1e-10;
        double worst = 0.0;
        for (int p = 0; p < 10; ++p)
        {
            const Vector th = jitter(truth, 0.2, rng);
            const Vector g = m.loglik(th, true, tol).gradient;
            const Vector fd =
                optim::numeric_gradient([&](const Vector& x) { return m.loglik(x, false, tol).value; }, th, 1e-6);
            worst = std::max(worst, rel_error(g, fd));
        }
        ok = ok && worst <= 1e-4;
        os << "; twinstim/" << to_string(kind) << " " << fmt(worst) << " (tol 1e-4)";
    }
    return {ok ? Status::Pass : Status::Fail, os.str()};
}

// ---------------------------------------------------------------- 11

Outcome hhh4_recovery()
{
    int inside = 0, total = 0, failedFits = 0;
    for (int rep = 0; rep < 100; ++rep)
    {
        Vector truth;
        const CountSeries data = testdata::simulated_counts(6, 150, 1000 + rep, &truth);
        const hhh4::Model m(testdata::hhh4_spec(data), data);
        const hhh4::Fit f = hhh4::fit(m);
        if (!f.converged)
            ++failedFits;
        for (int k = 0; k < m.npars(); ++k)
        {
            ++total;
            if (std::isfinite(f.se(k)) && std::abs(f.coefficients(k) - truth(k)) <= 3.0 * f.se(k))
                ++inside;
        }
    }
    const double share = static_cast<double>(inside) / total;
    return {share >= 0.95 && failedFits == 0 ? Status::Pass : Status::Fail,
            std::to_string(inside) + "/" + std::to_string(total) + " coefficients within 3 SE (" + fmt(100 * share) +
                "%, need 95%); non-converged fits " + std::to_string(failedFits)};
}

// ---------------------------------------------------------------- 12

Outcome integrals()
{
    std::ostringstream os;
    bool ok = true;
    {
        const twinstim::Spec spec = testdata::epidemic_spec(SiafKind::Gaussian);
        const auto setup = testdata::simulated_pattern(spec, 21, 20.0, 30.0);
        const twinstim::Model m(spec, setup.pattern);
        const Vector th = testdata::twinstim_truth(m);
        const PointPattern& p = m.pattern();
        const auto ll = m.loglik(th, false, 1e-10);
        double sumLog = 0.0;
        for (const auto& e : p.events)
            sumLog += std::log(m.cif(th, e.location, e.time, e.type, e.tile));
        const double integral = sumLog - ll.value;

        // midpoint lattice over W x (t0, T] summed over types
        const int nx = 100, nt = 400;
        const double dx = 100.0 / nx, dt = (p.T - p.t0) / nt;
        double riemann = 0.0;
        for (int it = 0; it < nt; ++it)
        {
            const double t = p.t0 + (it + 0.5) * dt;
            for (int ix = 0; ix < nx; ++ix)
                for (int iy = 0; iy < nx; ++iy)
                {
                    const Point2 s((ix + 0.5) * dx, (iy + 0.5) * dx);
                    const int tile = (s.x() < 50 ? 0 : 1) + (s.y() < 50 ? 0 : 2);
                    for (int k = 0; k < p.nTypes(); ++k)
                        riemann += m.cif(th, s, t, k, tile);
                }
        }
        riemann *= dx * dx * dt;
        const double rel = std::abs(riemann - integral) / integral;
        ok = ok && rel <= 0.01;
        os << "compensator " << fmt(integral, 6) << " vs lattice " << fmt(riemann, 6) << " (rel " << fmt(rel)
           << ", tol 1%)";
    }
    {
        Siaf s;
        s.kind = SiafKind::Step;
        s.knots = {2.0, 5.0, 10.0};
        s.maxRange = 20.0;
        Vector th(3);
        th << std::log(0.5), std::log(0.2), std::log(0.05);
        const PolygonSet big = square(-50, -50, 50, 50);
        const double exact =
            kPi * (4.0 + 0.5 * (25.0 - 4.0) + 0.2 * (100.0 - 25.0) + 0.05 * (400.0 - 100.0));
        const double got = s.integrate(big, s.cache(big), th, 1e-10, false)(0);
        // quarter plane [0, 50]^2: a quarter of every annulus
        const PolygonSet quarter = square(0, 0, 50, 50);
        const double gotQ = s.integrate(quarter, s.cache(quarter), th, 1e-10, false)(0);
        // square [-3, 3]^2: the disc of radius 2 plus the rest inside the second annulus
        const PolygonSet small = square(-3, -3, 3, 3);
        const double exactSmall = 4.0 * kPi + 0.5 * (36.0 - 4.0 * kPi);
        const double gotSmall = s.integrate(small, s.cache(small), th, 1e-10, false)(0);
        Tiaf t;
        t.kind = TiafKind::Step;
        t.knots = {1.0, 3.0};
        Vector tt(2);
        tt << std::log(0.4), std::log(0.1);
        const double G = t.G(7.5, tt, false)(0), Gexact = 1.0 + 0.4 * 2.0 + 0.1 * 4.5;
        const double err = std::max({std::abs(got - exact) / exact, std::abs(gotQ - exact / 4) / (exact / 4),
                                     std::abs(gotSmall - exactSmall) / exactSmall, std::abs(G - Gexact) / Gexact});
        ok = ok && err <= 1e-10;
        os << "; step kernels max rel error " << fmt(err) << " (tol 1e-10)";
    }
    return {ok ? Status::Pass : Status::Fail, os.str()};
}

// ---------------------------------------------------------------- 13

Outcome simulation_gof()
{
    std::ostringstream os;
    bool ok = true;
    {
        const twinstim::Spec spec = testdata::endemic_spec();
        const PointPattern base = build_point_pattern(testdata::square_input(testdata::seed_events(20, 30)));
        const twinstim::Model m(spec, base);
        Vector th = testdata::twinstim_truth(m);
        th(0) = std::log(2e-4);
        simulation::TwinstimConfig cfg;
        cfg.seed = 31;
        cfg.nsim = 200;
        const auto sims = simulation::simulate_twinstim(m, th, testdata::square_tiles(), cfg);
        const StGrid& g = base.stgrid;
        const int K = base.nTypes();
        Matrix observed = Matrix::Zero(g.rows(), K);
        bool inCell = true;
        for (const auto& s : sims)
            for (const auto& e : s.pattern.events)
            {
                observed(e.cell, e.type) += 1.0;
                inCell = inCell && g.find_cell(e.tile, e.time) == e.cell &&
                         point_in_polygon(testdata::square_tiles()[e.tile], e.location);
            }
        double chi2 = 0.0;
        for (int r = 0; r < g.rows(); ++r)
            for (int k = 0; k < K; ++k)
            {
                const double E = cfg.nsim * m.endemic_rate(th, r, k) * g.area(r) * (g.stop(r) - g.start(r));
                chi2 += (observed(r, k) - E) * (observed(r, k) - E) / E;
            }
        const int df = g.rows() * K;
        const double p = 1.0 - special::chisq_cdf(chi2, df);
        ok = ok && p >= 0.01 && inCell;
        os << "cell counts chi2 " << fmt(chi2) << " on " << df << " df, p " << fmt(p)
           << (inCell ? "" : " (event outside its cell)");
    }
    struct Case
    {
        SiafKind kind;
        std::vector<double> knots;
        double maxRange;
        Vector theta;
    };
    Vector gs(1), pl(2), st(2);
    gs << std::log(4.0);
    pl << std::log(2.0), std::log(2.5);
    st << std::log(0.5), std::log(0.1);
    const std::vector<Case> cases = {{SiafKind::Gaussian, {}, kInf, gs},
                                     {SiafKind::Powerlaw, {}, kInf, pl},
                                     {SiafKind::Step, {3.0, 8.0}, 15.0, st}};
    for (size_t c = 0; c < cases.size(); ++c)
    {
        Siaf s;
        s.kind = cases[c].kind;
        s.knots = cases[c].knots;
        s.maxRange = cases[c].maxRange;
        const double bound = 12.0;
        const double Fb = s.F(bound, cases[c].theta);
        CounterRng rng(41, c);
        std::vector<double> ur, ua;
        for (int i = 0; i < 3000; ++i)
        {
            const Point2 x = simulation::sample_kernel_location(s, cases[c].theta, bound, rng);
            ur.push_back(s.F(x.norm(), cases[c].theta) / Fb);
            ua.push_back((std::atan2(x.y(), x.x()) + kPi) / (2.0 * kPi));
        }
        const double pr = ks_pvalue(ur), pa = ks_pvalue(ua);
        ok = ok && pr >= 0.01 && pa >= 0.01;
        os << "; " << to_string(s.kind) << " KS p radial " << fmt(pr) << " angular " << fmt(pa);
    }
    return {ok ? Status::Pass : Status::Fail, os.str()};
}

// ---------------------------------------------------------------- 14

Outcome score_identity()
{
    const EventHistory h = testdata::simulated_history(12, 51);
    const twinsir::Model m(testdata::sir_spec(), h);
    const twinsir::Fit f = twinsir::fit(m);
    const double comp = m.compensator(f.coefficients);
    const double n = m.n_events();
    const double rel = std::abs(comp - n) / n;
    return {rel <= 1e-6 && f.converged ? Status::Pass : Status::Fail,
            "compensator " + fmt(comp, 12) + " vs " + std::to_string(static_cast<int>(n)) + " infections (rel " +
                fmt(rel) + ", tol 1e-6)" + (f.converged ? "" : ", fit did not converge")};
}

// ---------------------------------------------------------------- 15

Outcome calibration()
{
    std::ostringstream os;
    bool ok = true;
    {
        Vector truth;
        const CountSeries data = testdata::simulated_counts(8, 400, 61, &truth);
        const hhh4::Model m(testdata::hhh4_spec(data), data);
        hhh4::Fit f;
        f.names = m.names();
        f.coefficients = truth;
        const auto pd = forecast::one_step_ahead(m, f, 1, data.nTime() - 1, forecast::PredictionType::Final);
        const int nBins = 10;
        const Vector h = forecast::pit_histogram(pd, nBins);
        const double n = pd.rows() * pd.cols(), p = 1.0 / nBins;
        const double sigma = nBins * std::sqrt(n * p * (1 - p)) / n;
        const double worst = (h.array() - 1.0).abs().maxCoeff();
        ok = ok && worst <= 3.0 * sigma;
        os << "PIT max |height - 1| " << fmt(worst) << " vs 3 sigma " << fmt(3 * sigma);
    }
    {
        const twinstim::Spec spec = testdata::epidemic_spec(SiafKind::Gaussian);
        int pass = 0;
        for (int rep = 0; rep < 100; ++rep)
        {
            const auto setup = testdata::simulated_pattern(spec, 7000 + rep);
            const twinstim::Model m(spec, setup.pattern);
            const Vector th = testdata::twinstim_truth(m);
            const auto ll = m.loglik(th, false, 1e-8);
            std::vector<double> times;
            for (const auto& e : m.pattern().events)
                times.push_back(e.time);
            const auto r = forecast::residual_transform(
                [&](double t) { return twinstim::cumulative_intensity(m, th, t, ll.siafIntegrals); }, times,
                m.pattern().T);
            if (r.ksPValue >= 0.05)
                ++pass;
        }
        ok = ok && pass >= 93;
        os << "; residual KS passes " << pass << "/100 at 5% (need 93)";
    }
    return {ok ? Status::Pass : Status::Fail, os.str()};
}

}  // namespace

int main()
{
    const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
        {1, measles_basic},   {2, measles_poisson},     {3, measles_vaccination}, {4, measles_neighbourhood},
        {5, hagelloch_fit},   {6, imd_endemic},         {7, imd_kernels},         {8, imd_r0},
        {9, measles_scores},  {10, gradients},          {11, hhh4_recovery},      {12, integrals},
        {13, simulation_gof}, {14, score_identity},     {15, calibration},
    };
    int failures = 0;
    for (const auto& [id, run] : criteria)
    {
        Outcome o;
        try
        {
            o = run();
        }
        catch (const std::exception& e)
        {
            o = {Status::Fail, std::string("exception: ") + e.what()};
        }
        const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
        if (o.status == Status::Fail)
            ++failures;
        std::printf("criterion %2d: %s: %s\n", id, tag, o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
