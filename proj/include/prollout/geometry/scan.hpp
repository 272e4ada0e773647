#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <thread>
#include <vector>

#include "polytope.hpp"

namespace prollout::geometry {

/// Vertices of a bounded 2-D polytope, counter-clockwise by angle about
/// their centroid.
inline std::vector<Vector> vertices_2d(const Polytope& input) {
    require(input.dim() == 2, "vertices_2d: polytope must be 2-dimensional");
    const Polytope p = normalize(input);
    if (is_empty(p))
        return {};
    if (!is_bounded(p))
        throw Error("vertices_2d: polytope is unbounded");

    std::vector<Vector> pts;
    for (Eigen::Index i = 0; i < p.num_rows(); ++i) {
        for (Eigen::Index j = i + 1; j < p.num_rows(); ++j) {
            Eigen::Matrix2d m;
            m << p.H(i, 0), p.H(i, 1), p.H(j, 0), p.H(j, 1);
            const double det = m.determinant();
            if (std::abs(det) < 1e-12)
                continue;
            const Eigen::Vector2d v = m.inverse() * Eigen::Vector2d(p.h(i), p.h(j));
            Vector x = v;
            if (!contains(p, x, 1e-9))
                continue;
            const bool dup = std::any_of(pts.begin(), pts.end(),
                                         [&](const Vector& q) { return (q - x).norm() < 1e-9; });
            if (!dup)
                pts.push_back(x);
        }
    }
    if (pts.empty())
        return pts;
    Vector c = Vector::Zero(2);
    for (const auto& q : pts)
        c += q;
    c /= static_cast<double>(pts.size());
    std::sort(pts.begin(), pts.end(), [&](const Vector& a, const Vector& b) {
        return std::atan2(a(1) - c(1), a(0) - c(0)) < std::atan2(b(1) - c(1), b(0) - c(0));
    });
    return pts;
}

/// Grid labels over a 2-D box: a unit index 1..p, or nullopt for "infinite".
struct SupportScan {
    double spacing = 0.1;
    Vector lo = Vector::Zero(2);
    Vector hi = Vector::Zero(2);
    int nx = 0;
    int ny = 0;
    std::vector<std::optional<int>> labels; // row-major: index = iy * nx + ix

    [[nodiscard]] Vector point(int ix, int iy) const {
        Vector x(2);
        x << lo(0) + spacing * ix, lo(1) + spacing * iy;
        return x;
    }
    [[nodiscard]] const std::optional<int>& label(int ix, int iy) const {
        return labels[static_cast<size_t>(iy * nx + ix)];
    }
    [[nodiscard]] size_t finite_count() const {
        return static_cast<size_t>(std::count_if(labels.begin(), labels.end(),
                                                 [](const auto& l) { return l.has_value(); }));
    }

    void write_csv(std::ostream& os) const {
        os << "x1,x2,label\n";
        os << std::setprecision(10);
        for (int iy = 0; iy < ny; ++iy) {
            for (int ix = 0; ix < nx; ++ix) {
                const Vector x = point(ix, iy);
                os << x(0) << ',' << x(1) << ',';
                const auto& l = label(ix, iy);
                if (l)
                    os << *l;
                else
                    os << "inf";
                os << '\n';
            }
        }
    }
};

using ScanEvaluator = std::function<std::optional<int>(const Vector&)>;

/// Labels every grid point of [lo, hi] at the given spacing. Rows are
/// distributed over workers; labels depend only on the point.
inline SupportScan support_scan(const ScanEvaluator& evaluate, const Vector& lo, const Vector& hi,
                                double spacing, unsigned workers = 1) {
    require(spacing > 0.0, "support_scan: spacing must be positive");
    require(lo.size() == 2 && hi.size() == 2, "support_scan: box must be 2-dimensional");
    SupportScan scan;
    scan.spacing = spacing;
    scan.lo = lo;
    scan.hi = hi;
    scan.nx = static_cast<int>(std::floor((hi(0) - lo(0)) / spacing + 1e-9)) + 1;
    scan.ny = static_cast<int>(std::floor((hi(1) - lo(1)) / spacing + 1e-9)) + 1;
    scan.labels.assign(static_cast<size_t>(scan.nx * scan.ny), std::nullopt);

    auto run_rows = [&](unsigned w, unsigned stride) {
        for (int iy = static_cast<int>(w); iy < scan.ny; iy += static_cast<int>(stride))
            for (int ix = 0; ix < scan.nx; ++ix)
                scan.labels[static_cast<size_t>(iy * scan.nx + ix)] = evaluate(scan.point(ix, iy));
    };
    workers = std::max(1u, workers);
    if (workers == 1) {
        run_rows(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back(run_rows, w, workers);
        for (auto& t : pool)
            t.join();
    }
    return scan;
}

} // namespace prollout::geometry
