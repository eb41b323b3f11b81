#pragma once

#include "eepi/data_model.hpp"
#include "eepi/optim.hpp"
#include "eepi/types.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace eepi::hhh4
{

enum class Family
{
    Poisson,
    NegBin1,
    NegBinM,
};

enum class WeightKind
{
    FirstOrder,
    PowerLaw,
    OrderWeights,
};

struct WeightsSpec
{
    WeightKind kind = WeightKind::FirstOrder;
    int maxlag = 1;
    /// Row normalisation over the source unit j.
    bool normalize = false;

    int npars() const;
};

struct CovariateGrid
{
    std::string name;
    Matrix values;  // T x U
};

/// One linear predictor: log(rate) = intercept + sum beta_k x_k, times an offset.
struct Component
{
    bool active = false;
    bool intercept = true;
    std::vector<CovariateGrid> covariates;
    Matrix offset;  // T x U multiplicative offset; empty means 1
};

struct Spec
{
    Family family = Family::NegBin1;
    Component end, ar, ne;
    WeightsSpec weights;
    /// Fitted time points, 1-based; empty means 2..T.
    std::vector<int> subset;
};

Family parse_family(const std::string& name);
std::string to_string(Family family);

/// log P(Y = y) for mean mu and overdispersion psi (psi ignored for Poisson).
double log_density(Family family, double y, double mu, double psi);

/// Appends sin(s w t), cos(s w t) for s = 1..S with w = 2 pi / period and t = 1..T.
void add_season_terms(Component& component, int S, double period, int T, int U);

/// w_ji for source j (row) and target i (column).
Matrix neighbourhood_weights(const WeightsSpec& spec, const Eigen::MatrixXi& nbOrder, const Vector& params);
/// Derivatives of the weight matrix with respect to each (internal) parameter.
std::vector<Matrix> neighbourhood_weight_derivatives(const WeightsSpec& spec, const Eigen::MatrixXi& nbOrder,
                                                     const Vector& params);

struct Components
{
    Matrix endemic, ar, ne;
    Matrix mean() const { return endemic + ar + ne; }
};

/// Spec compiled against a data set: parameter layout, subset views and the
/// likelihood.
class Model
{
public:
    Model(Spec spec, CountSeries data);

    const Spec& spec() const { return spec_; }
    const CountSeries& data() const { return data_; }
    const std::vector<int>& subset() const { return subset_; }
    const std::vector<std::string>& names() const { return names_; }
    int npars() const { return static_cast<int>(names_.size()); }
    int nobs() const;

    /// Deterministic start: endemic intercept log(mean Y / mean offset), others 0.
    Vector start() const;

    /// Log-likelihood over the subset; gradient with respect to the internal parameters.
    double loglik(const Vector& theta, Vector* gradient = nullptr) const;
    /// Per-cell log-likelihood contributions (subset rows x U).
    Matrix loglik_terms(const Vector& theta) const;

    Components components(const Vector& theta) const;
    /// Mean components at 1-based time t given lag-1 counts (length U).
    Components mean_at(const Vector& theta, int t, const Vector& ylag) const;
    /// Overdispersion psi per unit (zeros for Poisson).
    Vector psi(const Vector& theta) const;
    Matrix weights(const Vector& theta) const;
    /// lambda_i and phi_i at 1-based time t.
    std::pair<Vector, Vector> epidemic_rates(const Vector& theta, int t) const;

    int index_of(const std::string& name) const;

private:
    struct Block
    {
        int offset = 0;  // first parameter index
        int count = 0;
    };
    Matrix eta_subset(const std::vector<Matrix>& X, const Component& c, const Block& b, const Vector& theta) const;
    Vector eta_row(const Component& c, const Block& b, const Vector& theta, int t) const;
    Matrix weight_matrix(const Vector& theta) const;

    Spec spec_;
    CountSeries data_;
    std::vector<int> subset_;  // 1-based
    std::vector<std::string> names_;
    Block arBlock_, neBlock_, endBlock_, wBlock_, psiBlock_;
    std::vector<int> psiIndex_;  // per unit: parameter index or -1 (fixed at start)
    Matrix Y_, Ylag_;           // subset rows x U
    std::vector<Matrix> arX_, neX_, endX_;
    Matrix arOff_, neOff_, endOff_;
};

struct Fit
{
    std::vector<std::string> names;
    Vector coefficients;  // internal scale
    Matrix covariance;
    Vector se;
    double loglik = 0.0;
    int df = 0;
    int nobs = 0;
    bool converged = false;
    int iterations = 0;
    std::string message;
    std::vector<int> times;  // fitted time points, 1-based
    Components fittedComponents;
    Matrix fitted;
    Vector psi;
    Spec spec;

    double aic() const { return -2.0 * loglik + 2.0 * df; }
    double bic() const { return -2.0 * loglik + std::log(static_cast<double>(nobs)) * df; }
    int index_of(const std::string& name) const;
};

struct FitOptions
{
    optim::Options optim;
    bool computeCovariance = true;
};

Fit fit(const Model& model, const FitOptions& options = {});
Fit fit(const Model& model, const Vector& start, const FitOptions& options = {});

struct ReportedCoefficient
{
    std::string name;
    double estimate;
    double se;
};

/// Coefficients on the reported scale: overdispersion psi and power-law d
/// natural (delta-method SE), everything else internal.
std::vector<ReportedCoefficient> reported_coefficients(const Fit& fit);

struct Interval
{
    double lower;
    double upper;
};

enum class CIScale
{
    Internal,
    Reported,
};

/// Wald interval estimate +- z SE on the chosen scale.
Interval confint_wald(const Fit& fit, const std::string& name, double level = 0.95,
                      CIScale scale = CIScale::Reported);

struct SummaryRow
{
    std::string name;
    double estimate;
    double se;
};

struct SummaryOptions
{
    std::vector<std::string> idx2Exp;  // names to exponentiate
    bool amplitudeShift = false;
    bool maxEV = false;
};

struct Summary
{
    std::vector<SummaryRow> rows;
    double maxEV = 0.0;
    double loglik, aic, bic;
    int nUnits, nTime;
};

Summary summarize(const Model& model, const Fit& fit, const SummaryOptions& options);

/// (A, phi) from the sine and cosine coefficients.
std::pair<double, double> amplitude_shift(double gammaSin, double deltaCos);

/// Spectral radius of Lambda with Lambda_ii = lambda_i, Lambda_ij = phi_i w_ji.
double max_eigenvalue(const Vector& lambda, const Vector& phi, const Matrix& W);

/// mu for every unit at time t by a literal loop over the three terms.
Vector mean_reference(const Model& model, const Vector& theta, int t);

}  // namespace eepi::hhh4
