#pragma once

#include "eepi/hhh4.hpp"
#include "eepi/types.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace eepi::forecast
{

/// Negative binomial (or Poisson) predictions per (time, unit).
struct PredictiveDistribution
{
    hhh4::Family family = hhh4::Family::NegBin1;
    std::vector<int> times;  // 1-based time of each row
    std::vector<std::string> unitIds;
    Matrix mean;
    Matrix logSize;  // log(1/psi); unused for Poisson
    Matrix observed;
    std::vector<bool> flagged;  // per row: refit failed, previous coefficients used
    std::vector<std::string> warnings;

    int rows() const { return static_cast<int>(mean.rows()); }
    int cols() const { return static_cast<int>(mean.cols()); }
    double psi(int r, int c) const;
    double log_pmf(int r, int c, double y) const;
};

enum class PredictionType
{
    Final,
    Rolling,
};

/// Predictions for time points from + 1 .. to + 1. Rolling refits the model on
/// the data up to each t, warm-started from `full`.
PredictiveDistribution one_step_ahead(const hhh4::Model& model, const hhh4::Fit& full, int from, int to,
                                      PredictionType type, int threads = 1);

/// P(Y <= k) for k = 0..kmax.
Vector predictive_cdf(hhh4::Family family, double mu, double psi, int kmax);

double log_score(hhh4::Family family, double y, double mu, double psi);
double ranked_probability_score(hhh4::Family family, double y, double mu, double psi);

struct Scores
{
    std::vector<std::string> names;
    std::vector<Matrix> values;  // per score: rows x units

    const Matrix& operator[](const std::string& name) const;
};

/// Scores named "logs", "rps" and "ses".
Scores score_predictions(const PredictiveDistribution& pd, const std::vector<std::string>& which);

/// Non-randomised PIT histogram heights (uniform calibration gives 1).
Vector pit_histogram(const PredictiveDistribution& pd, int nBins);
/// Contribution of one prediction: conditional CDF at u.
double pit_conditional_cdf(double u, double cdfBelow, double cdfAt);

struct PermutationResult
{
    double diffObs = 0.0;
    double pPermut = 1.0;
    double pT = 1.0;
};

/// Paired comparison of two score arrays by random sign flips and a paired t-test.
PermutationResult permutation_test(const Matrix& scoresA, const Matrix& scoresB, int nPermutations,
                                   std::uint64_t seed);

struct ResidualDiagnostic
{
    Vector tau;  // cumulative intensity at the events
    Vector u;    // sorted tau / Lambda(T)
    Vector ecdf;
    double ksStatistic = 0.0;
    double ksPValue = 1.0;
    double bandHalfWidth = 0.0;  // 95% Kolmogorov band
    Matrix lagPairs;  // (U_i, U_{i+1}) with U_i = 1 - exp(-(tau_i - tau_{i-1}))
};

/// Residual process of a point process fit: Lambda_g at the event times and at T.
ResidualDiagnostic residual_transform(const std::function<double(double)>& cumulativeIntensity,
                                      const std::vector<double>& eventTimes, double T, double level = 0.95);

}  // namespace eepi::forecast
