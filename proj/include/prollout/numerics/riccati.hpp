#pragma once

#include <cmath>
#include <string>

#include "eigen_values.hpp"

namespace prollout::numerics {

inline double inf_norm(const Matrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().rowwise().sum().maxCoeff();
}

/// Solves K = A_cl' K A_cl + W by the doubling form of the series
/// sum_k (A_cl')^k W A_cl^k. Throws when the spectral radius is not
/// below one.
inline Matrix dlyap(const Matrix& a_cl, const Matrix& w) {
    require(a_cl.rows() == a_cl.cols(), "dlyap: A_cl must be square");
    require(w.rows() == a_cl.rows() && w.cols() == a_cl.cols(), "dlyap: W has wrong shape");
    const double rho = spectral_radius(a_cl);
    if (rho >= 1.0 - 1e-12)
        throw Error("dlyap: spectral radius " + std::to_string(rho) + " is not below 1");

    Matrix k = w;
    Matrix a = a_cl;
    for (int it = 0; it < 64; ++it) {
        const Matrix inc = a.transpose() * k * a;
        k += inc;
        a = a * a;
        if (inf_norm(inc) <= 1e-17 * (1.0 + inf_norm(k)) || inf_norm(a) == 0.0)
            break;
    }
    return 0.5 * (k + k.transpose());
}

inline double dlyap_residual(const Matrix& a_cl, const Matrix& w, const Matrix& k) {
    return inf_norm(k - a_cl.transpose() * k * a_cl - w);
}

/// Gain L = -(B'KB + R)^-1 B'KA associated with a Riccati solution.
inline Matrix riccati_gain(const Matrix& a, const Matrix& b, const Matrix& r, const Matrix& k) {
    const Matrix s = b.transpose() * k * b + r;
    return -s.ldlt().solve(b.transpose() * k * a);
}

inline double dare_residual(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                            const Matrix& k) {
    const Matrix s = b.transpose() * k * b + r;
    const Matrix rhs = a.transpose() * (k - k * b * s.ldlt().solve(b.transpose() * k)) * a + q;
    return inf_norm(k - rhs);
}

/// Discrete algebraic Riccati equation K = A'(K - KB(B'KB+R)^-1 B'K)A + Q
/// by fixed-point iteration from K = Q.
inline Matrix dare(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                   const NumericSettings& s = default_settings()) {
    const Eigen::Index n = a.rows();
    require(a.cols() == n, "dare: A must be square");
    require(b.rows() == n, "dare: B has wrong row count");
    require(q.rows() == n && q.cols() == n, "dare: Q has wrong shape");
    require(r.rows() == b.cols() && r.cols() == b.cols(), "dare: R has wrong shape");

    Matrix k = q;
    for (int it = 0; it < s.riccati_max_iterations; ++it) {
        const Matrix sm = b.transpose() * k * b + r;
        Matrix next = a.transpose() * (k - k * b * sm.ldlt().solve(b.transpose() * k)) * a + q;
        next = 0.5 * (next + next.transpose());
        if (!next.allFinite())
            break;
        const double diff = inf_norm(next - k);
        k = std::move(next);
        if (diff <= s.riccati_step * (1.0 + inf_norm(k)))
            return k;
    }
    throw Error("dare: fixed-point iteration did not converge");
}

} // namespace prollout::numerics
