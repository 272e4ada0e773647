#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Eigenvalues>

#include "settings.hpp"

namespace prollout::numerics {

struct EigenResult {
    std::vector<std::complex<double>> values;
    bool converged = true;

    [[nodiscard]] double spectral_radius() const {
        double r = 0.0;
        for (const auto& v : values)
            r = std::max(r, std::abs(v));
        return r;
    }
};

namespace detail {

// Roots of t^2 - tr t + det; conjugate pair ordered (+imag, -imag).
inline EigenResult eig_2x2(const Matrix& m) {
    const double tr = m(0, 0) + m(1, 1);
    const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    const double half = 0.5 * tr;
    const double disc = half * half - det;
    EigenResult out;
    if (disc >= 0.0) {
        const double s = std::sqrt(disc);
        // Avoid cancellation for the smaller-magnitude root.
        const double big = half + (half >= 0.0 ? s : -s);
        const double small = big != 0.0 ? det / big : 0.0;
        out.values = {{std::max(big, small), 0.0}, {std::min(big, small), 0.0}};
    } else {
        const double s = std::sqrt(-disc);
        out.values = {{half, s}, {half, -s}};
    }
    return out;
}

} // namespace detail

/// Eigenvalues of a small square matrix. 2x2 inputs use the closed-form
/// characteristic polynomial; larger inputs go through Eigen's shifted
/// Hessenberg-QR iteration.
inline EigenResult eig(const Matrix& m) {
    require(m.rows() == m.cols(), "eig: matrix must be square");
    require(m.rows() >= 1, "eig: empty matrix");
    if (m.rows() == 1)
        return EigenResult{{{m(0, 0), 0.0}}, true};
    if (m.rows() == 2)
        return detail::eig_2x2(m);

    Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
    EigenResult out;
    out.converged = solver.info() == Eigen::Success;
    if (!out.converged)
        return out;
    const auto& ev = solver.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        out.values.push_back(ev(i));
    return out;
}

inline double spectral_radius(const Matrix& m) {
    const auto r = eig(m);
    require(r.converged, "spectral_radius: eigenvalue iteration did not converge");
    return r.spectral_radius();
}

} // namespace prollout::numerics
