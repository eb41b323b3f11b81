#include "eepi/optim.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>

namespace eepi::optim
{

namespace
{

struct Box
{
    Vector lower, upper;

    Vector project(const Vector& x) const { return x.cwiseMax(lower).cwiseMin(upper); }

    // Free variables: not pinned at a bound by a gradient pointing outward.
    std::vector<int> free_set(const Vector& x, const Vector& g) const
    {
        std::vector<int> idx;
        for (int i = 0; i < x.size(); ++i)
        {
            const bool atLower = x(i) <= lower(i) && g(i) > 0.0;
            const bool atUpper = x(i) >= upper(i) && g(i) < 0.0;
            if (!atLower && !atUpper)
                idx.push_back(i);
        }
        return idx;
    }

    double projected_gradient_norm(const Vector& x, const Vector& g) const
    {
        double m = 0.0;
        for (int i : free_set(x, g))
            m = std::max(m, std::abs(g(i)));
        return m;
    }
};

class Minimizer
{
public:
    Minimizer(const Objective& f, const Box& box, const Options& options) : f_(f), box_(box), opt_(options) {}

    Result run(const Vector& x0)
    {
        Result res;
        const int n = static_cast<int>(x0.size());
        Vector x = box_.project(x0);
        Vector g(n);
        double fx = eval(x, &g);
        require(std::isfinite(fx), "objective is not finite at the start point", ErrorCode::Numerical);

        Matrix H = Matrix::Identity(n, n);
        bool scaled = false;
        std::vector<int> prevFree;
        int smallDecrease = 0;
        int iter = 0;
        std::string message = "iteration limit reached";
        bool converged = false;

        for (; iter < opt_.maxIterations; ++iter)
        {
            if (box_.projected_gradient_norm(x, g) < opt_.gradTol)
            {
                converged = true;
                message = "gradient tolerance reached";
                break;
            }
            std::vector<int> freeIdx = box_.free_set(x, g);
            if (freeIdx != prevFree)
            {
                H.setIdentity();
                scaled = false;
                prevFree = freeIdx;
            }

            Vector d = direction(H, g, freeIdx);
            if (g.dot(d) >= 0.0)
            {
                H.setIdentity();
                scaled = false;
                d = direction(H, g, freeIdx);
            }

            Vector xNew, gNew(n);
            double fNew = 0.0;
            bool ok = line_search(x, fx, g, d, xNew, fNew, gNew);
            if (!ok && (scaled || !H.isIdentity()))
            {
                H.setIdentity();
                scaled = false;
                d = direction(H, g, freeIdx);
                ok = line_search(x, fx, g, d, xNew, fNew, gNew);
            }
            if (!ok)
            {
                message = "line search made no progress";
                break;
            }
            {
                const Vector s = xNew - x;
                const Vector y = gNew - g;
                const double sy = s.dot(y);
                if (sy > 1e-12 * s.norm() * y.norm())
                {
                    if (!scaled)
                    {
                        H *= sy / y.squaredNorm();
                        scaled = true;
                    }
                    const double rho = 1.0 / sy;
                    const Vector Hy = H * y;
                    H += (rho * rho * y.dot(Hy) + rho) * s * s.transpose() - rho * (Hy * s.transpose() + s * Hy.transpose());
                }
                const double decrease = fx - fNew;
                x = xNew;
                g = gNew;
                if (opt_.relFunTol > 0.0 && decrease <= opt_.relFunTol * std::max(1.0, std::abs(fNew)))
                {
                    if (++smallDecrease >= 3)
                    {
                        fx = fNew;
                        converged = true;
                        message = "relative function tolerance reached";
                        ++iter;
                        break;
                    }
                }
                else
                    smallDecrease = 0;
                fx = fNew;
            }
        }

        if (!converged && opt_.newtonPolish > 0)
        {
            if (polish(x, fx, g))
            {
                converged = true;
                message = "gradient tolerance reached after Newton refinement";
            }
        }

        res.x = x;
        res.value = fx;
        res.gradient = g;
        res.iterations = iter;
        res.evaluations = evaluations_;
        res.converged = converged;
        res.message = message;
        return res;
    }

private:
    double eval(const Vector& x, Vector* g)
    {
        ++evaluations_;
        return f_(x, g);
    }

    static Vector direction(const Matrix& H, const Vector& g, const std::vector<int>& freeIdx)
    {
        const int n = static_cast<int>(g.size());
        Vector d = Vector::Zero(n);
        for (int a : freeIdx)
            for (int b : freeIdx)
                d(a) -= H(a, b) * g(b);
        return d;
    }

    bool line_search(const Vector& x, double fx, const Vector& g, const Vector& d, Vector& xNew, double& fNew,
                     Vector& gNew)
    {
        constexpr double c1 = 1e-4;
        const double dmax = d.cwiseAbs().maxCoeff();
        if (dmax == 0.0)
            return false;
        double step = std::min(1.0, opt_.maxStep / dmax);
        for (int k = 0; k < 60; ++k, step *= 0.5)
        {
            xNew = box_.project(x + step * d);
            const Vector s = xNew - x;
            if (s.cwiseAbs().maxCoeff() == 0.0)
                return false;
            fNew = eval(xNew, &gNew);
            if (!std::isfinite(fNew) || !gNew.allFinite())
                continue;
            if (fNew <= fx + c1 * g.dot(s))
                return true;
        }
        return false;
    }

    // Newton steps with a differenced Hessian on the free variables; accepted
    // whenever the projected gradient shrinks, which still works once f itself
    // has hit its rounding floor.
    bool polish(Vector& x, double& fx, Vector& g)
    {
        GradientFn grad = [this](const Vector& z) {
            Vector gz(z.size());
            eval(z, &gz);
            return gz;
        };
        for (int it = 0; it < opt_.newtonPolish; ++it)
        {
            const double pg = box_.projected_gradient_norm(x, g);
            if (pg < opt_.gradTol)
                return true;
            const std::vector<int> freeIdx = box_.free_set(x, g);
            const int m = static_cast<int>(freeIdx.size());
            if (m == 0)
                return false;
            const Matrix Hfull = differenced_hessian(grad, x);
            Matrix Hs(m, m);
            Vector gs(m);
            for (int a = 0; a < m; ++a)
            {
                gs(a) = g(freeIdx[a]);
                for (int b = 0; b < m; ++b)
                    Hs(a, b) = Hfull(freeIdx[a], freeIdx[b]);
            }
            Eigen::LDLT<Matrix> ldlt(Hs);
            if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
                return false;
            const Vector ds = ldlt.solve(gs);
            if (!ds.allFinite())
                return false;
            bool accepted = false;
            double step = 1.0;
            for (int k = 0; k < 10 && !accepted; ++k, step *= 0.5)
            {
                Vector xNew = x;
                for (int a = 0; a < m; ++a)
                    xNew(freeIdx[a]) -= step * ds(a);
                xNew = box_.project(xNew);
                Vector gNew(x.size());
                const double fNew = eval(xNew, &gNew);
                if (!std::isfinite(fNew) || !gNew.allFinite())
                    continue;
                const double tolF = 1e-10 * std::max(1.0, std::abs(fx));
                if (box_.projected_gradient_norm(xNew, gNew) < pg && fNew <= fx + tolF)
                {
                    x = xNew;
                    g = gNew;
                    fx = fNew;
                    accepted = true;
                }
            }
            if (!accepted)
                return false;
        }
        return box_.projected_gradient_norm(x, g) < opt_.gradTol;
    }

    const Objective& f_;
    const Box& box_;
    const Options& opt_;
    int evaluations_ = 0;
};

}  // namespace

Result minimize_bfgs(const Objective& f, const Vector& x0, const Options& options)
{
    const Box box{Vector::Constant(x0.size(), -kInf), Vector::Constant(x0.size(), kInf)};
    return Minimizer(f, box, options).run(x0);
}

Result minimize_box(const Objective& f, const Vector& x0, const Vector& lower, const Vector& upper,
                    const Options& options)
{
    require(lower.size() == x0.size() && upper.size() == x0.size(), "bound vectors must match the parameter length",
            ErrorCode::InvalidSpec);
    require((lower.array() <= upper.array()).all(), "lower bounds must not exceed upper bounds", ErrorCode::InvalidSpec);
    const Box box{lower, upper};
    return Minimizer(f, box, options).run(x0);
}

Matrix differenced_hessian(const GradientFn& gradient, const Vector& x, double relStep)
{
    const int n = static_cast<int>(x.size());
    Matrix H(n, n);
    for (int k = 0; k < n; ++k)
    {
        const double h = relStep * std::max(1.0, std::abs(x(k)));
        Vector xp = x, xm = x;
        xp(k) += h;
        xm(k) -= h;
        H.col(k) = (gradient(xp) - gradient(xm)) / (2.0 * h);
    }
    return 0.5 * (H + H.transpose());
}

Vector numeric_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double relStep)
{
    const int n = static_cast<int>(x.size());
    Vector g(n);
    for (int k = 0; k < n; ++k)
    {
        const double h = relStep * std::max(1.0, std::abs(x(k)));
        Vector xp = x, xm = x;
        xp(k) += h;
        xm(k) -= h;
        g(k) = (f(xp) - f(xm)) / (2.0 * h);
    }
    return g;
}

}  // namespace eepi::optim
