#pragma once

#include "eepi/data_model.hpp"
#include "eepi/optim.hpp"
#include "eepi/types.hpp"

#include <string>
#include <vector>

namespace eepi::twinsir
{

struct Spec
{
    std::vector<std::string> epidemic;  // columns of EventHistory::epidemic (alpha >= 0)
    std::vector<std::string> endemic;   // columns of EventHistory::endemic
    bool intercept = true;              // log baseline
};

/// Compiled spec; coefficients are ordered alpha (epidemic) then beta (endemic).
class Model
{
public:
    Model(Spec spec, EventHistory history);

    const Spec& spec() const { return spec_; }
    const EventHistory& history() const { return history_; }
    const std::vector<std::string>& names() const { return names_; }
    int npars() const { return static_cast<int>(names_.size()); }
    int n_alpha() const { return static_cast<int>(spec_.epidemic.size()); }
    int n_events() const;
    int index_of(const std::string& name) const;

    Vector lower_bounds() const;
    Vector start() const;

    double loglik(const Vector& theta, Vector* gradient = nullptr) const;
    /// lambda_i on block b (zero when not at risk).
    double cif(const Vector& theta, int individual, int block) const;
    /// Endemic and epidemic parts of lambda_i on block b, ignoring the at-risk indicator.
    std::pair<double, double> parts(const Vector& theta, int individual, int block) const;
    double compensator(const Vector& theta) const;

private:
    Spec spec_;
    EventHistory history_;
    std::vector<std::string> names_;
    std::vector<int> epiCols_, endCols_;
};

struct Fit
{
    std::vector<std::string> names;
    Vector coefficients;
    Matrix covariance;
    Vector se;
    std::vector<bool> atBoundary;
    double loglik = 0.0;
    int df = 0;
    bool converged = false;
    int iterations = 0;
    std::string message;

    Vector alpha(int nAlpha) const { return coefficients.head(nAlpha); }
    double aic() const { return -2.0 * loglik + 2.0 * df; }
    int index_of(const std::string& name) const;
};

Fit fit(const Model& model, const optim::Options& options = {});
Fit fit(const Model& model, const Vector& start, const optim::Options& options = {});

struct Profile
{
    std::string name;
    Vector grid;
    Vector profile;  // normalised: profile log-likelihood minus the maximum
    std::vector<bool> flagged;
    double hlLower = 0.0, hlUpper = 0.0;
    double waldLower = 0.0, waldUpper = 0.0;
};

/// Profile log-likelihood on a grid over the Wald interval plus highest-likelihood
/// intervals from the chi-squared(1) cutoff.
std::vector<Profile> profile_ci(const Model& model, const Fit& fit, const std::vector<int>& indices,
                                int gridSize = 25, double level = 0.95);

/// Share of the total intensity attributable to the epidemic terms, per block.
Vector epidemic_proportion(const Model& model, const Vector& theta);

}  // namespace eepi::twinsir
