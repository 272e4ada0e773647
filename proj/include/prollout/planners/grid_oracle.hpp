#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "lookahead.hpp"

namespace prollout::planners {

namespace detail {

// Plain-double mirror of a two-state, single-input problem, so the
// exhaustive search avoids Eigen temporaries in its innermost loop.
struct FlatProblem {
    struct Mode {
        double a11, a12, a21, a22, b1, b2;
    };
    std::vector<Mode> modes;
    bool pwa = false;
    double g1 = 0.0, g2 = 0.0;
    CostKind cost = CostKind::Quadratic;
    double q11 = 0.0, q12 = 0.0, q22 = 0.0, r = 0.0;
    std::vector<std::array<double, 2>> q_rows;
    std::vector<std::array<double, 3>> state_rows; // h1 x1 + h2 x2 <= h
    std::vector<std::array<double, 3>> terminal_rows;
    bool ellipse = false;
    double e11 = 0.0, e12 = 0.0, e22 = 0.0, alpha = 0.0;
    bool quad_terminal = true;
    double k11 = 0.0, k12 = 0.0, k22 = 0.0;
    std::vector<std::array<double, 2>> k_rows;
    CostKind k_norm = CostKind::Norm1;

    static std::vector<std::array<double, 3>> rows_of(const geometry::Polytope& p) {
        std::vector<std::array<double, 3>> out;
        for (Eigen::Index i = 0; i < p.num_rows(); ++i)
            out.push_back({p.H(i, 0), p.H(i, 1), p.h(i)});
        return out;
    }

    static bool inside(const std::vector<std::array<double, 3>>& rows, double x1, double x2, double tol) {
        for (const auto& row : rows)
            if (row[0] * x1 + row[1] * x2 > row[2] + tol)
                return false;
        return true;
    }

    static double norm_of(const std::vector<std::array<double, 2>>& rows, double x1, double x2, CostKind kind) {
        double s = 0.0;
        for (const auto& row : rows) {
            const double v = std::abs(row[0] * x1 + row[1] * x2);
            s = kind == CostKind::Norm1 ? s + v : std::max(s, v);
        }
        return s;
    }

    explicit FlatProblem(const LookaheadProblem& p) {
        const ControlModel& m = p.m();
        for (size_t i = 0; i < m.A.size(); ++i)
            modes.push_back({m.A[i](0, 0), m.A[i](0, 1), m.A[i](1, 0), m.A[i](1, 1), m.B[i](0, 0), m.B[i](1, 0)});
        pwa = m.dynamics == DynamicsKind::PiecewiseAffine;
        if (pwa) {
            g1 = m.guard(0);
            g2 = m.guard(1);
        }
        cost = m.cost;
        if (cost == CostKind::Quadratic) {
            q11 = m.Q(0, 0);
            q12 = m.Q(0, 1) + m.Q(1, 0);
            q22 = m.Q(1, 1);
            r = m.R(0, 0);
        } else {
            for (Eigen::Index i = 0; i < m.Q.rows(); ++i)
                q_rows.push_back({m.Q(i, 0), m.Q(i, 1)});
            r = m.R.cwiseAbs().maxCoeff();
            if (cost == CostKind::Norm1)
                r = m.R.cwiseAbs().sum();
        }
        if (m.state_constraints)
            state_rows = rows_of(*m.state_constraints);
        if (const auto* poly = std::get_if<geometry::Polytope>(&p.terminal.set))
            terminal_rows = rows_of(*poly);
        if (const auto* s = std::get_if<SublevelSet>(&p.terminal.set)) {
            ellipse = true;
            e11 = s->K(0, 0);
            e12 = s->K(0, 1) + s->K(1, 0);
            e22 = s->K(1, 1);
            alpha = s->alpha;
        }
        if (const auto* v = std::get_if<QuadraticValue>(&p.terminal.value)) {
            k11 = v->K(0, 0);
            k12 = v->K(0, 1) + v->K(1, 0);
            k22 = v->K(1, 1);
        } else {
            const auto& nv = std::get<NormValue>(p.terminal.value);
            quad_terminal = false;
            k_norm = nv.norm;
            for (Eigen::Index i = 0; i < nv.K.rows(); ++i)
                k_rows.push_back({nv.K(i, 0), nv.K(i, 1)});
        }
    }

    [[nodiscard]] double state_cost(double x1, double x2) const {
        if (cost == CostKind::Quadratic)
            return q11 * x1 * x1 + q12 * x1 * x2 + q22 * x2 * x2;
        return norm_of(q_rows, x1, x2, cost);
    }
    [[nodiscard]] double input_cost(double u) const {
        return cost == CostKind::Quadratic ? r * u * u : r * std::abs(u);
    }
    [[nodiscard]] double terminal(double x1, double x2) const {
        if (ellipse && e11 * x1 * x1 + e12 * x1 * x2 + e22 * x2 * x2 > alpha + geometry::kMembershipTolerance)
            return std::numeric_limits<double>::infinity();
        if (!inside(terminal_rows, x1, x2, geometry::kMembershipTolerance))
            return std::numeric_limits<double>::infinity();
        if (quad_terminal)
            return k11 * x1 * x1 + k12 * x1 * x2 + k22 * x2 * x2;
        return norm_of(k_rows, x1, x2, k_norm);
    }
};

} // namespace detail

/// Brute force over a uniform grid of scalar control sequences in
/// [-b, b]^l (b = model input bound, or 1 when unbounded), and over every
/// admissible mode sequence for switched dynamics. Every candidate is
/// simulated through the true dynamics. Two-state models only.
inline PlannerSolution grid_oracle(const LookaheadProblem& p, double resolution) {
    require(p.model != nullptr, "grid_oracle: no model");
    const ControlModel& model = p.m();
    require(model.input_dim() == 1 && model.state_dim() == 2, "grid_oracle: two states and a scalar control only");
    require(model.cost == CostKind::Quadratic || model.R.size() == 1, "grid_oracle: scalar R expected");
    require(p.horizon >= 1 && p.horizon <= 3, "grid_oracle: horizon must be 1..3");
    require(resolution > 0.0, "grid_oracle: resolution must be positive");

    const double bound = model.input_bound.value_or(1.0);
    const int steps = static_cast<int>(std::llround(2.0 * bound / resolution));
    std::vector<double> grid;
    for (int i = 0; i <= steps; ++i)
        grid.push_back(-bound + 2.0 * bound * i / steps);

    PlannerSolution best;
    if (!model.state_admissible(p.x0))
        return best;
    const detail::FlatProblem fp(p);
    const int L = p.horizon;
    std::vector<std::vector<int>> mode_seqs;
    if (model.dynamics == DynamicsKind::Switched)
        mode_seqs = detail::mode_sequences(p);
    else
        mode_seqs.emplace_back(static_cast<size_t>(L), 0);

    double best_value = std::numeric_limits<double>::infinity();
    std::array<double, 3> u{};
    std::array<int, 3> realized{};
    std::array<int, 3> best_modes{};
    std::array<double, 3> best_u{};
    const double tol = geometry::kMembershipTolerance;

    for (const auto& modes : mode_seqs) {
        auto rec = [&](auto&& self, int k, double x1, double x2, double partial) -> void {
            if (k == L) {
                const double v = partial + fp.terminal(x1, x2);
                ++best.programs_solved;
                if (v < best_value) {
                    best_value = v;
                    best_u = u;
                    best_modes = realized;
                }
                return;
            }
            if (k > 0 && !detail::FlatProblem::inside(fp.state_rows, x1, x2, tol))
                return;
            int mode = modes[static_cast<size_t>(k)];
            if (fp.pwa)
                mode = fp.g1 * x1 + fp.g2 * x2 >= 0.0 ? 0 : 1;
            realized[static_cast<size_t>(k)] = mode;
            const auto& md = fp.modes[static_cast<size_t>(mode)];
            const double ax1 = md.a11 * x1 + md.a12 * x2;
            const double ax2 = md.a21 * x1 + md.a22 * x2;
            const double base = partial + fp.state_cost(x1, x2);
            if (base >= best_value)
                return;
            for (double c : grid) {
                const double g = base + fp.input_cost(c);
                if (g >= best_value)
                    continue;
                u[static_cast<size_t>(k)] = c;
                self(self, k + 1, ax1 + md.b1 * c, ax2 + md.b2 * c, g);
            }
        };
        rec(rec, 0, p.x0(0), p.x0(1), 0.0);
    }
    if (std::isfinite(best_value)) {
        best.value = ExtendedCost::from_numeric(best_value);
        for (int k = 0; k < L; ++k) {
            best.controls.push_back(Vector::Constant(1, best_u[static_cast<size_t>(k)]));
            best.modes.push_back(best_modes[static_cast<size_t>(k)]);
        }
    }
    return best;
}

} // namespace prollout::planners
