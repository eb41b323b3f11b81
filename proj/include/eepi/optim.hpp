#pragma once

#include "eepi/types.hpp"

#include <functional>
#include <string>

namespace eepi::optim
{

/// Objective to minimise. Returns f(x); writes the gradient when `grad` is non-null.
using Objective = std::function<double(const Vector& x, Vector* grad)>;
using GradientFn = std::function<Vector(const Vector& x)>;

struct Options
{
    int maxIterations = 500;
    /// Converged when the max-norm of the (projected) gradient is below this.
    double gradTol = 1e-6;
    /// Optional fallback: relative decrease of f below this over 3 successive
    /// iterations also counts as convergence. Zero disables the rule.
    double relFunTol = 0.0;
    /// Newton refinement steps with a differenced Hessian once BFGS stalls.
    int newtonPolish = 10;
    /// Largest allowed step (max-norm) in one line search.
    double maxStep = 10.0;
};

struct Result
{
    Vector x;
    double value = 0.0;
    Vector gradient;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    std::string message;
};

/// Unconstrained BFGS with backtracking (Armijo) line search.
Result minimize_bfgs(const Objective& f, const Vector& x0, const Options& options = {});

/// Box-constrained projected quasi-Newton; infinite bounds are allowed.
Result minimize_box(const Objective& f, const Vector& x0, const Vector& lower, const Vector& upper,
                    const Options& options = {});

/// Central-difference Jacobian of a gradient, symmetrised; step h_k = relStep * max(1, |x_k|).
Matrix differenced_hessian(const GradientFn& gradient, const Vector& x, double relStep = 1e-5);

/// Central-difference gradient of a scalar function (test and diagnostic use).
Vector numeric_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double relStep = 1e-6);

}  // namespace eepi::optim
