#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "lp.hpp"

namespace prollout::numerics {

/// minimize 0.5 z'Hz + f'z subject to G z <= h and Aeq z = beq.
struct QpProblem {
    Matrix H;
    Vector f;
    Matrix G;
    Vector h;
    Matrix Aeq;
    Vector beq;

    [[nodiscard]] Eigen::Index num_vars() const { return f.size(); }
    [[nodiscard]] double objective(const Vector& z) const { return 0.5 * z.dot(H * z) + f.dot(z); }
};

struct QpResult {
    SolveStatus status = SolveStatus::Infeasible;
    Vector x;
    double value = std::numeric_limits<double>::infinity();
    Vector multipliers; // one per row of G (zero when inactive)
    int iterations = 0;
};

namespace detail {

inline bool satisfies(const QpProblem& p, const Vector& z, double tol) {
    if (p.G.rows() > 0 && (p.G * z - p.h).maxCoeff() > tol)
        return false;
    if (p.Aeq.rows() > 0 && (p.Aeq * z - p.beq).cwiseAbs().maxCoeff() > tol)
        return false;
    return true;
}

} // namespace detail

/// Primal active-set method. A feasible start comes from the unconstrained
/// minimizer when it is feasible, otherwise from a Phase-1 LP. The working
/// set begins with the equalities only; blocking constraints enter one at a
/// time, and the most negative multiplier leaves (lowest index on ties).
inline QpResult qp_solve(const QpProblem& p, const NumericSettings& s = default_settings()) {
    const Eigen::Index n = p.f.size();
    const Eigen::Index mi = p.G.rows();
    const Eigen::Index me = p.Aeq.rows();
    require(p.H.rows() == n && p.H.cols() == n, "qp_solve: H has wrong shape");
    require(mi == 0 || p.G.cols() == n, "qp_solve: G has wrong column count");
    require(p.h.size() == mi, "qp_solve: h has wrong size");
    require(me == 0 || p.Aeq.cols() == n, "qp_solve: Aeq has wrong column count");
    require(p.beq.size() == me, "qp_solve: beq has wrong size");
    require((p.H - p.H.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + p.H.cwiseAbs().maxCoeff()),
            "qp_solve: H must be symmetric");

    QpResult out;
    const double feas_tol = s.feasibility * (1.0 + (mi > 0 ? p.h.cwiseAbs().maxCoeff() : 0.0));

    Vector z;
    {
        Eigen::LDLT<Matrix> ldlt(p.H);
        Vector z_unc = ldlt.solve(-p.f);
        if (me == 0 && z_unc.allFinite() && detail::satisfies(p, z_unc, feas_tol)) {
            z = z_unc;
        } else {
            LpProblem phase1{Vector::Zero(n), p.G, p.h, p.Aeq, p.beq};
            const auto lp = lp_solve(phase1, s);
            if (lp.status != SolveStatus::Optimal) {
                out.status = lp.status == SolveStatus::IterLimit ? SolveStatus::IterLimit
                                                                 : SolveStatus::Infeasible;
                return out;
            }
            z = lp.x;
        }
    }

    std::vector<Eigen::Index> working; // indices into G rows
    std::vector<char> in_working(static_cast<size_t>(mi), 0);
    const int max_iter = 50 * static_cast<int>(n + mi + me);
    Vector lambda_eq;
    Vector lambda_w;

    for (out.iterations = 0; out.iterations <= max_iter; ++out.iterations) {
        const auto nw = static_cast<Eigen::Index>(working.size());
        const Eigen::Index k = me + nw;
        Matrix kkt = Matrix::Zero(n + k, n + k);
        kkt.topLeftCorner(n, n) = p.H;
        Matrix Aw(k, n);
        if (me > 0)
            Aw.topRows(me) = p.Aeq;
        for (Eigen::Index i = 0; i < nw; ++i)
            Aw.row(me + i) = p.G.row(working[static_cast<size_t>(i)]);
        kkt.topRightCorner(n, k) = Aw.transpose();
        kkt.bottomLeftCorner(k, n) = Aw;
        Vector rhs = Vector::Zero(n + k);
        const Vector grad = p.H * z + p.f;
        rhs.head(n) = -grad;
        const Vector sol = kkt.fullPivLu().solve(rhs);
        const Vector step = sol.head(n);
        const Vector lam = sol.tail(k);

        const double zscale = 1.0 + z.cwiseAbs().maxCoeff();
        if (step.cwiseAbs().maxCoeff() <= 1e-11 * zscale) {
            // Stationary on the working set: check multiplier signs.
            Eigen::Index drop = -1;
            double most_negative = -s.stationarity;
            for (Eigen::Index i = 0; i < nw; ++i) {
                if (lam(me + i) < most_negative) {
                    most_negative = lam(me + i);
                    drop = i;
                }
            }
            if (drop < 0) {
                out.status = SolveStatus::Optimal;
                out.x = z;
                out.value = p.objective(z);
                out.multipliers = Vector::Zero(mi);
                for (Eigen::Index i = 0; i < nw; ++i)
                    out.multipliers(working[static_cast<size_t>(i)]) = std::max(0.0, lam(me + i));
                return out;
            }
            in_working[static_cast<size_t>(working[static_cast<size_t>(drop)])] = 0;
            working.erase(working.begin() + drop);
            continue;
        }

        // Ratio test against inactive constraints.
        double alpha = 1.0;
        Eigen::Index blocking = -1;
        for (Eigen::Index i = 0; i < mi; ++i) {
            if (in_working[static_cast<size_t>(i)])
                continue;
            const double ap = p.G.row(i).dot(step);
            if (ap <= 1e-12 * (1.0 + step.cwiseAbs().maxCoeff()))
                continue;
            const double slack = std::max(0.0, p.h(i) - p.G.row(i).dot(z));
            const double a = slack / ap;
            if (a < alpha) {
                alpha = a;
                blocking = i;
            }
        }
        z += alpha * step;
        if (blocking >= 0) {
            working.push_back(blocking);
            in_working[static_cast<size_t>(blocking)] = 1;
        }
    }
    out.status = SolveStatus::IterLimit;
    out.x = z;
    out.value = p.objective(z);
    return out;
}

/// Stationarity residual ||Hz + f + G'lambda + Aeq'nu|| for a returned
/// optimal point, with equality multipliers recovered by least squares.
inline double qp_stationarity_residual(const QpProblem& p, const QpResult& r) {
    Vector g = p.H * r.x + p.f;
    if (p.G.rows() > 0)
        g += p.G.transpose() * r.multipliers;
    if (p.Aeq.rows() > 0) {
        const Vector nu = p.Aeq.transpose().colPivHouseholderQr().solve(-g);
        g += p.Aeq.transpose() * nu;
    }
    return g.cwiseAbs().maxCoeff();
}

} // namespace prollout::numerics
