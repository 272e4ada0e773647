#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "settings.hpp"

namespace prollout::numerics {

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterLimit };

inline const char* to_string(SolveStatus s) {
    switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unbounded: return "Unbounded";
    case SolveStatus::IterLimit: return "IterLimit";
    }
    return "?";
}

/// minimize c'z subject to G z <= h and Aeq z = beq, z free.
struct LpProblem {
    Vector c;
    Matrix G;
    Vector h;
    Matrix Aeq;
    Vector beq;

    [[nodiscard]] Eigen::Index num_vars() const { return c.size(); }
};

struct LpResult {
    SolveStatus status = SolveStatus::Infeasible;
    Vector x;
    double value = std::numeric_limits<double>::infinity();
    int iterations = 0;
};

namespace detail {

// Dense tableau. Rows 0..m-1 are constraints, row m is the reduced-cost
// row; the last column holds the right-hand side (and -objective in row m).
class SimplexTableau {
public:
    SimplexTableau(Eigen::Index rows, Eigen::Index cols)
        : t_(Matrix::Zero(rows + 1, cols + 1)), basis_(static_cast<size_t>(rows), -1) {}

    Matrix& table() { return t_; }
    std::vector<int>& basis() { return basis_; }
    [[nodiscard]] Eigen::Index rows() const { return t_.rows() - 1; }
    [[nodiscard]] Eigen::Index cols() const { return t_.cols() - 1; }
    [[nodiscard]] double rhs(Eigen::Index r) const { return t_(r, cols()); }

    void pivot(Eigen::Index r, Eigen::Index c) {
        t_.row(r) /= t_(r, c);
        for (Eigen::Index i = 0; i < t_.rows(); ++i) {
            if (i == r)
                continue;
            const double f = t_(i, c);
            if (f != 0.0)
                t_.row(i) -= f * t_.row(r);
        }
        basis_[static_cast<size_t>(r)] = static_cast<int>(c);
    }

    // Bland's rule over columns [0, allowed_cols).
    SolveStatus run(Eigen::Index allowed_cols, int max_iter, int& iterations, double pivot_tol) {
        const Eigen::Index m = rows();
        const double cost_tol = 1e-10;
        for (;;) {
            Eigen::Index enter = -1;
            for (Eigen::Index j = 0; j < allowed_cols; ++j) {
                if (t_(m, j) < -cost_tol) {
                    enter = j;
                    break;
                }
            }
            if (enter < 0)
                return SolveStatus::Optimal;
            if (iterations >= max_iter)
                return SolveStatus::IterLimit;

            Eigen::Index leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < m; ++i) {
                const double a = t_(i, enter);
                if (a <= pivot_tol)
                    continue;
                const double ratio = std::max(rhs(i), 0.0) / a;
                if (ratio < best - 1e-12 ||
                    (std::abs(ratio - best) <= 1e-12 && leave >= 0 &&
                     basis_[static_cast<size_t>(i)] < basis_[static_cast<size_t>(leave)])) {
                    best = ratio;
                    leave = i;
                }
            }
            if (leave < 0)
                return SolveStatus::Unbounded;
            pivot(leave, enter);
            ++iterations;
        }
    }

private:
    Matrix t_;
    std::vector<int> basis_;
};

} // namespace detail

/// Two-phase dense simplex with Bland's anti-cycling rule. Free variables
/// are split as z = z+ - z-, inequalities receive slack columns.
inline LpResult lp_solve(const LpProblem& p, const NumericSettings& s = default_settings()) {
    const Eigen::Index n = p.c.size();
    const Eigen::Index mi = p.G.rows();
    const Eigen::Index me = p.Aeq.rows();
    require(mi == 0 || p.G.cols() == n, "lp_solve: G has wrong column count");
    require(p.h.size() == mi, "lp_solve: h has wrong size");
    require(me == 0 || p.Aeq.cols() == n, "lp_solve: Aeq has wrong column count");
    require(p.beq.size() == me, "lp_solve: beq has wrong size");
    require(p.c.allFinite() && (mi == 0 || (p.G.allFinite() && p.h.allFinite())),
            "lp_solve: non-finite data");

    const Eigen::Index m = mi + me;
    const Eigen::Index n_struct = 2 * n + mi; // z+, z-, slacks

    // Rows needing an artificial: equalities and inequalities with h < 0.
    std::vector<Eigen::Index> art_rows;
    for (Eigen::Index i = 0; i < mi; ++i)
        if (p.h(i) < 0.0)
            art_rows.push_back(i);
    for (Eigen::Index i = 0; i < me; ++i)
        art_rows.push_back(mi + i);
    const auto n_art = static_cast<Eigen::Index>(art_rows.size());
    const Eigen::Index cols = n_struct + n_art;

    detail::SimplexTableau tab(m, cols);
    Matrix& t = tab.table();
    for (Eigen::Index i = 0; i < mi; ++i) {
        const double sign = p.h(i) < 0.0 ? -1.0 : 1.0;
        t.block(i, 0, 1, n) = sign * p.G.row(i);
        t.block(i, n, 1, n) = -sign * p.G.row(i);
        t(i, 2 * n + i) = sign;
        t(i, cols) = sign * p.h(i);
        if (sign > 0.0)
            tab.basis()[static_cast<size_t>(i)] = static_cast<int>(2 * n + i);
    }
    for (Eigen::Index i = 0; i < me; ++i) {
        const double sign = p.beq(i) < 0.0 ? -1.0 : 1.0;
        t.block(mi + i, 0, 1, n) = sign * p.Aeq.row(i);
        t.block(mi + i, n, 1, n) = -sign * p.Aeq.row(i);
        t(mi + i, cols) = sign * p.beq(i);
    }
    for (Eigen::Index k = 0; k < n_art; ++k) {
        const Eigen::Index r = art_rows[static_cast<size_t>(k)];
        t(r, n_struct + k) = 1.0;
        tab.basis()[static_cast<size_t>(r)] = static_cast<int>(n_struct + k);
    }

    LpResult out;
    const int max_iter = 50 * static_cast<int>(m + cols) + 1000;

    if (n_art > 0) {
        // Phase 1: minimize the sum of artificials.
        for (Eigen::Index r : art_rows)
            t.row(m) -= t.row(r);
        for (Eigen::Index k = 0; k < n_art; ++k)
            t(m, n_struct + k) = 0.0;
        const auto st = tab.run(cols, max_iter, out.iterations, s.pivot);
        if (st == SolveStatus::IterLimit) {
            out.status = st;
            return out;
        }
        const double infeas = -t(m, cols);
        const double scale = 1.0 + (m > 0 ? t.col(cols).head(m).cwiseAbs().maxCoeff() : 0.0);
        if (infeas > s.feasibility * scale) {
            out.status = SolveStatus::Infeasible;
            return out;
        }
        // Drive artificials out of the basis where possible.
        for (Eigen::Index r = 0; r < m; ++r) {
            if (tab.basis()[static_cast<size_t>(r)] < n_struct)
                continue;
            for (Eigen::Index j = 0; j < n_struct; ++j) {
                if (std::abs(t(r, j)) > 1e-9) {
                    tab.pivot(r, j);
                    break;
                }
            }
        }
    }

    // Phase 2 objective row.
    Vector cost = Vector::Zero(cols);
    cost.head(n) = p.c;
    cost.segment(n, n) = -p.c;
    t.row(m).setZero();
    t.block(m, 0, 1, cols) = cost.transpose();
    for (Eigen::Index r = 0; r < m; ++r) {
        const int b = tab.basis()[static_cast<size_t>(r)];
        if (b >= 0 && cost(b) != 0.0)
            t.row(m) -= cost(b) * t.row(r);
    }
    const auto st = tab.run(n_struct, max_iter, out.iterations, s.pivot);
    if (st != SolveStatus::Optimal) {
        out.status = st;
        return out;
    }

    Vector zz = Vector::Zero(cols);
    for (Eigen::Index r = 0; r < m; ++r) {
        const int b = tab.basis()[static_cast<size_t>(r)];
        if (b >= 0)
            zz(b) = tab.rhs(r);
    }
    out.x = zz.head(n) - zz.segment(n, n);
    out.value = p.c.dot(out.x);
    out.status = SolveStatus::Optimal;
    return out;
}

/// Maximum violation of G z <= h and |Aeq z - beq| at a point.
inline double lp_feasibility_residual(const LpProblem& p, const Vector& z) {
    double r = 0.0;
    if (p.G.rows() > 0)
        r = std::max(r, (p.G * z - p.h).maxCoeff());
    if (p.Aeq.rows() > 0)
        r = std::max(r, (p.Aeq * z - p.beq).cwiseAbs().maxCoeff());
    return r;
}

} // namespace prollout::numerics
