#pragma once

#include <string>

#include "../numerics/eigen_values.hpp"
#include "polytope.hpp"

namespace prollout::geometry {

struct InvariantSetResult {
    Polytope set;
    int iterations = 0;
    bool certified = false; // false when the iteration cap was hit
};

/// Maximal constraint-admissible invariant set of x+ = A_cl x inside X_c,
/// via O_{k+1} = O_k ∩ {x : A_cl x ∈ O_k} until two iterates coincide.
inline InvariantSetResult invariant_set(const Matrix& a_cl, const Polytope& constraints,
                                        int max_iterations = 200) {
    require(a_cl.rows() == a_cl.cols() && a_cl.rows() == constraints.dim(),
            "invariant_set: dimension mismatch");
    const double rho = numerics::spectral_radius(a_cl);
    if (rho >= 1.0)
        throw Error("invariant_set: closed loop has spectral radius " + std::to_string(rho));
    if (!is_bounded(constraints))
        throw Error("invariant_set: constraint polytope is unbounded");
    if (!contains(constraints, Vector::Zero(constraints.dim()), -1e-12))
        throw Error("invariant_set: origin is not in the interior of the constraint set");

    InvariantSetResult out;
    Polytope current = remove_redundancy(constraints);
    for (out.iterations = 1; out.iterations <= max_iterations; ++out.iterations) {
        Polytope next = intersect(current, preimage(current, a_cl));
        if (set_equal(next, current)) {
            out.set = std::move(next);
            out.certified = true;
            return out;
        }
        current = std::move(next);
    }
    out.iterations = max_iterations;
    out.set = std::move(current);
    out.certified = false;
    return out;
}

/// Largest alpha with {x : x'Kx <= alpha} inside X_c: the minimum over
/// facets of h_i^2 / (H_i K^-1 H_i').
inline double sublevel_alpha(const Matrix& k, const Polytope& constraints) {
    require(k.rows() == k.cols() && k.rows() == constraints.dim(), "sublevel_alpha: dimension mismatch");
    Eigen::LLT<Matrix> llt(0.5 * (k + k.transpose()));
    if (llt.info() != Eigen::Success)
        throw Error("sublevel_alpha: K is not positive definite");
    if (!contains(constraints, Vector::Zero(constraints.dim()), -1e-12))
        throw Error("sublevel_alpha: origin is not in the interior of the constraint set");
    double alpha = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < constraints.num_rows(); ++i) {
        const Vector hi = constraints.H.row(i).transpose();
        const double denom = hi.dot(llt.solve(hi));
        if (denom <= 0.0)
            continue;
        alpha = std::min(alpha, constraints.h(i) * constraints.h(i) / denom);
    }
    if (!std::isfinite(alpha))
        throw Error("sublevel_alpha: constraint set does not bound the ellipsoid");
    return alpha;
}

} // namespace prollout::geometry
