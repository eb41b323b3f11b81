#pragma once

#include "eepi/data_model.hpp"
#include "eepi/kernels.hpp"
#include "eepi/optim.hpp"
#include "eepi/types.hpp"

#include <string>
#include <vector>

namespace eepi::twinstim
{

/// A single regressor of the endemic or epidemic predictor.
struct Term
{
    enum class Kind
    {
        Column,  // numeric stgrid column (endemic) or numeric mark (epidemic)
        Level,   // indicator column == level
        Type,    // indicator event type == level
        Time,    // (t - shift) / scale at the cell start
        Sin,     // sin(2 pi harmonic t / period)
        Cos,
    };
    Kind kind = Kind::Column;
    std::string name;
    std::string column;
    std::string level;
    double scale = 1.0;
    double shift = 0.0;
    double period = 365.0;
    int harmonic = 1;
};

struct Spec
{
    bool endemicIntercept = true;
    std::vector<Term> endemic;
    /// stgrid column entering the endemic predictor as log(value); empty for none.
    std::string endemicOffset;
    bool epidemicIntercept = false;
    std::vector<Term> epidemic;
    Siaf siaf;
    Tiaf tiaf;

    bool has_epidemic() const { return epidemicIntercept || !epidemic.empty(); }
};

/// Appends sin/cos terms of harmonics 1..S in time with the given period.
void add_season_terms(std::vector<Term>& terms, int S, double period);

struct Options
{
    double optimTol = 1e-5;  // relative cubature tolerance during optimisation
    double finalTol = 1e-7;  // final likelihood and covariance
    int threads = 1;
};

struct LoglikResult
{
    double value = 0.0;
    Vector gradient;
    Vector siafIntegrals;  // per event, over the influence region
    Vector tiafIntegrals;  // per event, over (0, min(T - t_j, eps_j)]
};

class Model
{
public:
    Model(Spec spec, PointPattern pattern);

    const Spec& spec() const { return spec_; }
    const PointPattern& pattern() const { return pattern_; }
    const std::vector<std::string>& names() const { return names_; }
    int npars() const { return static_cast<int>(names_.size()); }
    int index_of(const std::string& name) const;

    int n_endemic() const { return nEnd_; }
    int n_epidemic() const { return nEpi_; }
    int siaf_offset() const { return nEnd_ + nEpi_; }
    int tiaf_offset() const { return nEnd_ + nEpi_ + spec_.siaf.npars(); }

    /// Deterministic start from closed-form endemic rate matching.
    Vector start() const;

    LoglikResult loglik(const Vector& theta, bool withGradient, double tol, int threads = 1) const;

    /// lambda(s, t, k) for a location inside grid tile `tile`.
    double cif(const Vector& theta, const Point2& s, double t, int type, int tile) const;
    /// Endemic rate rho nu for grid row `cell` and type k.
    double endemic_rate(const Vector& theta, int cell, int type) const;
    /// Epidemic predictor eta_j per event.
    Vector eta(const Vector& theta) const;
    /// Epidemic regressors of an arbitrary event (marks, type, time and grid cell).
    Vector epidemic_design(const Event& event) const;
    /// Number of types each event can infect.
    const Vector& q_sum() const { return qSum_; }

    /// Events mapped to grid rows by type: observed counts and exposure (area x duration x offset).
    struct GlmData
    {
        Vector y, logExposure;
        Matrix X;
    };
    GlmData glm_data() const;

private:
    Vector endemic_design(int cell, int type) const;
    double term_value(const Term& term, int cell, int type) const;

    Spec spec_;
    PointPattern pattern_;
    std::vector<std::string> names_;
    int nEnd_ = 0, nEpi_ = 0;
    Matrix epiX_;     // events x nEpi
    Vector qSum_;     // per event
    Vector logOff_;   // per grid row
    std::vector<RegionCache> caches_;
    struct Source
    {
        int j;
        double distance;
        double lag;
    };
    std::vector<std::vector<Source>> sources_;  // per event: potential parents
    Matrix endX_;        // events x nEnd, at each event's cell and type
    std::vector<Matrix> cellX_;  // per type: rows x nEnd
};

struct Fit
{
    std::vector<std::string> names;
    Vector coefficients;
    Matrix covariance;
    Vector se;
    double loglik = 0.0;
    int df = 0;
    int nEvents = 0;
    bool converged = false;
    int iterations = 0;
    std::string message;
    Vector siafIntegrals;
    Vector tiafIntegrals;
    Spec spec;

    double aic() const { return -2.0 * loglik + 2.0 * df; }
    int index_of(const std::string& name) const;
};

/// Fits by quasi-Newton; epidemic models are warm-started from the endemic-only fit.
Fit fit(const Model& model, const Options& options = {});
Fit fit(const Model& model, const Vector& start, const Options& options = {});

/// Per-event expected number of offspring.
Vector r0_events(const Model& model, const Fit& fit);

struct GlmComparison
{
    std::vector<std::string> names;
    Vector glm;
    Vector twinstim;
    double maxAbsDifference = 0.0;
    bool identifiable = true;
    int iterations = 0;
};

/// Poisson regression with log link and offset by IRLS.
Vector poisson_glm(const Matrix& X, const Vector& y, const Vector& offset, int* iterations = nullptr,
                   bool* converged = nullptr);
/// Compares an endemic-only fit with the aggregated cell-count Poisson regression.
GlmComparison glm_equivalence(const Model& model, const Options& options = {});

struct GroundIntensity
{
    Vector times, endemic, epidemic;
};

/// Ground intensity aggregated over space and types on `resolution` equidistant times.
GroundIntensity intensity_over_time(const Model& model, const Vector& theta, int resolution);

struct SpatialProportion
{
    Vector x, y;        // pixel centres
    Matrix proportion;  // y-rows x x-columns; NaN outside W
};

/// Epidemic share of the accumulated intensity on a pixel grid over the bounding box of W.
SpatialProportion intensity_over_space(const Model& model, const Vector& theta, const std::vector<PolygonSet>& tiles,
                                       int resolution);

/// Cumulative ground intensity Lambda_g(t) from t0.
double cumulative_intensity(const Model& model, const Vector& theta, double t, const Vector& siafIntegrals);

enum class Direction
{
    Backward,
    Forward,
    Both,
};

struct StepResult
{
    Spec spec;
    Fit fit;
    std::vector<std::string> trace;  // "- name" / "+ name" per accepted move
};

/// Greedy AIC selection over endemic ("endemic") or epidemic ("epidemic") terms.
StepResult step_select(const Model& model, const Fit& start, const std::string& component, Direction direction,
                       const std::vector<Term>& candidates = {}, const Options& options = {});

}  // namespace eepi::twinstim
