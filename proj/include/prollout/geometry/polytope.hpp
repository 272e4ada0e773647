#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "../numerics/lp.hpp"

namespace prollout::geometry {

using numerics::require;

/// Halfspace polytope {x : Hx <= h}.
struct Polytope {
    Matrix H;
    Vector h;

    Polytope() = default;
    Polytope(Matrix H_, Vector h_) : H(std::move(H_)), h(std::move(h_)) {
        require(H.rows() == h.size(), "Polytope: H and h row counts differ");
    }

    [[nodiscard]] Eigen::Index dim() const { return H.cols(); }
    [[nodiscard]] Eigen::Index num_rows() const { return H.rows(); }

    /// Box {x : |x_i| <= bound} in dimension n.
    static Polytope box(Eigen::Index n, double bound) {
        Matrix H(2 * n, n);
        H << Matrix::Identity(n, n), -Matrix::Identity(n, n);
        return {H, Vector::Constant(2 * n, bound)};
    }

    /// Box with per-coordinate bounds lo <= x <= hi.
    static Polytope box(const Vector& lo, const Vector& hi) {
        const Eigen::Index n = lo.size();
        Matrix H(2 * n, n);
        H << Matrix::Identity(n, n), -Matrix::Identity(n, n);
        Vector h(2 * n);
        h << hi, -lo;
        return {H, h};
    }
};

inline constexpr double kMembershipTolerance = 1e-9;

inline bool contains(const Polytope& p, const Vector& x, double tol = kMembershipTolerance) {
    require(x.size() == p.dim(), "contains: dimension mismatch");
    if (p.num_rows() == 0)
        return true;
    return (p.H * x - p.h).maxCoeff() <= tol;
}

/// Scales every row to a unit infinity-norm normal. Zero rows are dropped
/// when trivially satisfied and rejected otherwise.
inline Polytope normalize(const Polytope& p) {
    std::vector<Eigen::Index> keep;
    Vector scale(p.num_rows());
    for (Eigen::Index i = 0; i < p.num_rows(); ++i) {
        const double s = p.H.row(i).cwiseAbs().maxCoeff();
        if (s <= 1e-14) {
            if (p.h(i) < -1e-12)
                throw Error("normalize: zero-normal row with negative offset (empty set)");
            continue;
        }
        scale(i) = s;
        keep.push_back(i);
    }
    Polytope out{Matrix(static_cast<Eigen::Index>(keep.size()), p.dim()),
                 Vector(static_cast<Eigen::Index>(keep.size()))};
    for (size_t k = 0; k < keep.size(); ++k) {
        const auto i = keep[k];
        const auto r = static_cast<Eigen::Index>(k);
        out.H.row(r) = p.H.row(i) / scale(i);
        out.h(r) = p.h(i) / scale(i);
    }
    return out;
}

/// max c'x over P; +inf when unbounded, -inf when P is empty.
inline double support_value(const Polytope& p, const Vector& c) {
    numerics::LpProblem lp{-c, p.H, p.h, Matrix(0, p.dim()), Vector(0)};
    const auto r = numerics::lp_solve(lp);
    switch (r.status) {
    case numerics::SolveStatus::Optimal: return -r.value;
    case numerics::SolveStatus::Unbounded: return std::numeric_limits<double>::infinity();
    case numerics::SolveStatus::Infeasible: return -std::numeric_limits<double>::infinity();
    case numerics::SolveStatus::IterLimit: break;
    }
    throw Error("support_value: LP iteration limit");
}

inline bool is_empty(const Polytope& p) {
    numerics::LpProblem lp{Vector::Zero(p.dim()), p.H, p.h, Matrix(0, p.dim()), Vector(0)};
    return numerics::lp_solve(lp).status == numerics::SolveStatus::Infeasible;
}

inline bool is_bounded(const Polytope& p) {
    for (Eigen::Index i = 0; i < p.dim(); ++i) {
        const Vector e = Vector::Unit(p.dim(), i);
        if (!std::isfinite(support_value(p, e)) || !std::isfinite(support_value(p, -e)))
            return false;
    }
    return true;
}

/// Drops rows whose maximum over the remaining rows stays within
/// h_i + 1e-8 (one LP per row, scanned in index order). Throws on an
/// empty polytope.
inline Polytope remove_redundancy(const Polytope& input) {
    const Polytope p = normalize(input);
    if (p.num_rows() == 0)
        return p;
    if (is_empty(p))
        throw Error("remove_redundancy: polytope is empty");

    std::vector<char> alive(static_cast<size_t>(p.num_rows()), 1);
    for (Eigen::Index i = 0; i < p.num_rows(); ++i) {
        std::vector<Eigen::Index> others;
        for (Eigen::Index j = 0; j < p.num_rows(); ++j)
            if (j != i && alive[static_cast<size_t>(j)])
                others.push_back(j);
        Polytope rest{Matrix(static_cast<Eigen::Index>(others.size()), p.dim()),
                      Vector(static_cast<Eigen::Index>(others.size()))};
        for (size_t k = 0; k < others.size(); ++k) {
            rest.H.row(static_cast<Eigen::Index>(k)) = p.H.row(others[k]);
            rest.h(static_cast<Eigen::Index>(k)) = p.h(others[k]);
        }
        const double v = others.empty() ? std::numeric_limits<double>::infinity()
                                        : support_value(rest, p.H.row(i).transpose());
        if (v <= p.h(i) + 1e-8)
            alive[static_cast<size_t>(i)] = 0;
    }
    Eigen::Index count = 0;
    for (char a : alive)
        count += a;
    Polytope out{Matrix(count, p.dim()), Vector(count)};
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < p.num_rows(); ++i) {
        if (!alive[static_cast<size_t>(i)])
            continue;
        out.H.row(r) = p.H.row(i);
        out.h(r++) = p.h(i);
    }
    return out;
}

inline Polytope stack(const Polytope& a, const Polytope& b) {
    require(a.dim() == b.dim(), "stack: dimension mismatch");
    Polytope out{Matrix(a.num_rows() + b.num_rows(), a.dim()), Vector(a.num_rows() + b.num_rows())};
    out.H << a.H, b.H;
    out.h << a.h, b.h;
    return out;
}

inline Polytope intersect(const Polytope& a, const Polytope& b) {
    return remove_redundancy(stack(a, b));
}

/// a is a subset of b (row-wise support LPs).
inline bool is_subset(const Polytope& a, const Polytope& b, double tol = 1e-8) {
    require(a.dim() == b.dim(), "is_subset: dimension mismatch");
    const Polytope nb = normalize(b);
    for (Eigen::Index i = 0; i < nb.num_rows(); ++i)
        if (support_value(a, nb.H.row(i).transpose()) > nb.h(i) + tol)
            return false;
    return true;
}

inline bool set_equal(const Polytope& a, const Polytope& b, double tol = 1e-8) {
    return is_subset(a, b, tol) && is_subset(b, a, tol);
}

/// {x : M x in P}.
inline Polytope preimage(const Polytope& p, const Matrix& m) {
    require(m.rows() == p.dim(), "preimage: dimension mismatch");
    return {p.H * m, p.h};
}

} // namespace prollout::geometry
