#pragma once

// Special functions and distribution helpers used by the likelihoods and the
// diagnostic tests.

namespace eepi::special
{
double digamma(double x);
double trigamma(double x);

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);
/// Regularized incomplete beta I_x(a, b).
double beta_inc(double a, double b, double x);

double normal_cdf(double z);
double normal_quantile(double p);

double chisq_cdf(double x, double df);
double chisq_quantile(double p, double df);

double student_t_cdf(double t, double df);

/// Exact P(D_n < d) for the one-sample Kolmogorov statistic (Marsaglia, Tsang & Wang).
double kolmogorov_cdf_exact(int n, double d);
/// Limiting distribution P(sqrt(n) D_n <= x).
double kolmogorov_cdf_asymptotic(double x);
/// P(D_n <= d): exact for n <= 100, asymptotic otherwise.
double kolmogorov_cdf(int n, double d);
/// Smallest d with kolmogorov_cdf(n, d) >= level.
double kolmogorov_quantile(int n, double level);

}  // namespace eepi::special
