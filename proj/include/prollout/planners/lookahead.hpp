#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "../core/model.hpp"
#include "../core/terminal.hpp"
#include "../numerics/lp.hpp"
#include "../numerics/qp.hpp"

namespace prollout::planners {

using numerics::require;

/// Per-stage mode restriction for switched dynamics: a fixed mode, or
/// nullopt when the planner may choose freely. Empty means all stages free.
using ModeSchedule = std::vector<std::optional<int>>;

/// The l-step problem: minimize the stage costs over the horizon plus the
/// terminal ingredient at x_l, starting from x0.
struct LookaheadProblem {
    const ControlModel* model = nullptr;
    int horizon = 1;
    TerminalIngredient terminal;
    ModeSchedule schedule;
    Vector x0;

    [[nodiscard]] const ControlModel& m() const { return *model; }
};

struct PlannerSolution {
    ExtendedCost value = ExtendedCost::infinity();
    std::vector<Vector> controls; // empty when the value is infinite
    std::vector<int> modes;       // mode used at each stage
    int programs_solved = 0;
    bool certified = true;
    std::string diagnostics;

    [[nodiscard]] Control first_control() const {
        require(!controls.empty(), "PlannerSolution: no controls (infeasible)");
        return {controls.front(), modes.empty() ? 0 : modes.front()};
    }
};

/// Condensed program for one fixed mode sequence. The first m*l variables
/// are the controls u_0..u_{l-1}; norm costs append epigraph variables.
/// The objective value of the lookahead equals program value + constant.
struct CondensedProgram {
    bool is_lp = false;
    numerics::QpProblem qp;
    numerics::LpProblem lp;
    double constant = 0.0;
    Eigen::Index control_vars = 0;
    std::vector<int> modes;
    std::vector<Matrix> phi;   // x_k = phi[k] x0 + gamma[k] z_u, k = 0..l
    std::vector<Matrix> gamma;

    [[nodiscard]] Vector predicted_state(int k, const Vector& x0, const Vector& z) const {
        return phi[static_cast<size_t>(k)] * x0 + gamma[static_cast<size_t>(k)] * z.head(control_vars);
    }
};

namespace detail {

struct RowBuilder {
    std::vector<Vector> rows;
    std::vector<double> rhs;
    Eigen::Index cols = 0;

    void add(const Vector& g, double h) {
        rows.push_back(g);
        rhs.push_back(h);
    }
    [[nodiscard]] Matrix G() const {
        Matrix out(static_cast<Eigen::Index>(rows.size()), cols);
        for (size_t i = 0; i < rows.size(); ++i)
            out.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
        return out;
    }
    [[nodiscard]] Vector h() const {
        Vector out(static_cast<Eigen::Index>(rhs.size()));
        for (size_t i = 0; i < rhs.size(); ++i)
            out(static_cast<Eigen::Index>(i)) = rhs[i];
        return out;
    }
};

inline bool quadratic_terminal(const TerminalIngredient& t) { return std::holds_alternative<QuadraticValue>(t.value); }

// Adds +-(row . x_k) <= ... epigraph rows: |(M x)_j| <= e for the chosen
// norm, where x = offset + map z. Returns the number of epigraph variables.
inline void add_norm_epigraph(RowBuilder& rb, Vector& cost, Eigen::Index& next_var, const Matrix& M,
                              const Matrix& map, const Vector& offset, CostKind norm) {
    const Matrix Mm = M * map;
    const Vector Mo = M * offset;
    if (norm == CostKind::Norm1) {
        for (Eigen::Index j = 0; j < M.rows(); ++j) {
            const Eigen::Index e = next_var++;
            cost(e) = 1.0;
            for (double sgn : {1.0, -1.0}) {
                Vector g = Vector::Zero(rb.cols);
                g.head(Mm.cols()) = sgn * Mm.row(j).transpose();
                g(e) = -1.0;
                rb.add(g, -sgn * Mo(j));
            }
        }
    } else {
        const Eigen::Index e = next_var++;
        cost(e) = 1.0;
        for (Eigen::Index j = 0; j < M.rows(); ++j)
            for (double sgn : {1.0, -1.0}) {
                Vector g = Vector::Zero(rb.cols);
                g.head(Mm.cols()) = sgn * Mm.row(j).transpose();
                g(e) = -1.0;
                rb.add(g, -sgn * Mo(j));
            }
    }
}

inline Eigen::Index epigraph_count(const Matrix& M, CostKind norm) { return norm == CostKind::Norm1 ? M.rows() : 1; }

} // namespace detail

/// Condenses the lookahead for the mode sequence `modes` (one entry per
/// stage). For piecewise-affine dynamics, rows forcing the guard sign of
/// x_1..x_{l-1} to match `modes` are included. Ellipsoidal terminal sets are
/// not represented here; see solve_unit.
inline CondensedProgram condense(const LookaheadProblem& p, const std::vector<int>& modes) {
    const ControlModel& model = p.m();
    const int L = p.horizon;
    require(L >= 1, "condense: horizon must be positive");
    require(static_cast<int>(modes.size()) == L, "condense: one mode per stage");
    require(p.x0.size() == model.state_dim(), "condense: initial state dimension mismatch");
    require(p.terminal.dim() == model.state_dim(), "condense: terminal dimension mismatch");
    const bool quad_cost = model.cost == CostKind::Quadratic;
    const bool quad_term = detail::quadratic_terminal(p.terminal);
    if (quad_cost != quad_term)
        throw Error("condense: stage cost and terminal value must both be quadratic or both be norms");

    const Eigen::Index n = model.state_dim();
    const Eigen::Index m = model.input_dim();
    const Eigen::Index nu = m * L;

    CondensedProgram cp;
    cp.modes = modes;
    cp.control_vars = nu;
    cp.phi.push_back(Matrix::Identity(n, n));
    cp.gamma.push_back(Matrix::Zero(n, nu));
    for (int k = 0; k < L; ++k) {
        const auto mk = static_cast<size_t>(modes[static_cast<size_t>(k)]);
        require(mk < model.A.size(), "condense: mode out of range");
        Matrix g = model.A[mk] * cp.gamma.back();
        g.middleCols(m * k, m) += model.B[mk];
        cp.phi.push_back(model.A[mk] * cp.phi.back());
        cp.gamma.push_back(std::move(g));
    }

    Eigen::Index n_epi = 0;
    CostKind norm = model.cost;
    if (!quad_cost) {
        const auto& nv = std::get<NormValue>(p.terminal.value);
        n_epi = L * (detail::epigraph_count(model.Q, norm) + detail::epigraph_count(model.R, norm)) +
                detail::epigraph_count(nv.K, nv.norm);
    }
    const Eigen::Index nz = nu + n_epi;

    detail::RowBuilder rb;
    rb.cols = nz;
    auto add_state_rows = [&](const Matrix& H, const Vector& h, int k) {
        const Matrix Hg = H * cp.gamma[static_cast<size_t>(k)];
        const Vector Hp = H * (cp.phi[static_cast<size_t>(k)] * p.x0);
        for (Eigen::Index i = 0; i < H.rows(); ++i) {
            Vector g = Vector::Zero(nz);
            g.head(nu) = Hg.row(i).transpose();
            rb.add(g, h(i) - Hp(i));
        }
    };
    if (model.input_bound) {
        for (Eigen::Index j = 0; j < nu; ++j)
            for (double sgn : {1.0, -1.0}) {
                Vector g = Vector::Zero(nz);
                g(j) = sgn;
                rb.add(g, *model.input_bound);
            }
    }
    if (model.state_constraints)
        for (int k = 1; k < L; ++k)
            add_state_rows(model.state_constraints->H, model.state_constraints->h, k);
    if (const auto* poly = std::get_if<geometry::Polytope>(&p.terminal.set))
        add_state_rows(poly->H, poly->h, L);
    if (model.dynamics == DynamicsKind::PiecewiseAffine)
        for (int k = 1; k < L; ++k) {
            // mode 0 <=> guard'x_k >= 0, i.e. -guard'x_k <= 0
            const double sgn = modes[static_cast<size_t>(k)] == 0 ? -1.0 : 1.0;
            add_state_rows(sgn * model.guard.transpose(), Vector::Zero(1), k);
        }

    if (quad_cost) {
        const Matrix& K = std::get<QuadraticValue>(p.terminal.value).K;
        Matrix H = Matrix::Zero(nu, nu);
        Vector f = Vector::Zero(nu);
        double c = 0.0;
        for (int k = 0; k <= L; ++k) {
            const Matrix& W = k < L ? model.Q : K;
            const Matrix& G = cp.gamma[static_cast<size_t>(k)];
            const Vector px = cp.phi[static_cast<size_t>(k)] * p.x0;
            H += G.transpose() * W * G;
            f += G.transpose() * W * px;
            c += px.dot(W * px);
        }
        for (int k = 0; k < L; ++k)
            H.block(m * k, m * k, m, m) += model.R;
        const Matrix H2 = H + H.transpose();
        cp.qp = numerics::QpProblem{H2, 2.0 * f, rb.G(), rb.h(), Matrix(0, nu), Vector(0)};
        cp.constant = c;
    } else {
        cp.is_lp = true;
        Vector cost = Vector::Zero(nz);
        Eigen::Index next = nu;
        for (int k = 0; k < L; ++k) {
            detail::add_norm_epigraph(rb, cost, next, model.Q, cp.gamma[static_cast<size_t>(k)],
                                      cp.phi[static_cast<size_t>(k)] * p.x0, norm);
            Matrix sel = Matrix::Zero(m, nu);
            sel.middleCols(m * k, m) = Matrix::Identity(m, m);
            detail::add_norm_epigraph(rb, cost, next, model.R, sel, Vector::Zero(m), norm);
        }
        const auto& nv = std::get<NormValue>(p.terminal.value);
        detail::add_norm_epigraph(rb, cost, next, nv.K, cp.gamma.back(), cp.phi.back() * p.x0, nv.norm);
        cp.lp = numerics::LpProblem{cost, rb.G(), rb.h(), Matrix(0, nz), Vector(0)};
    }
    return cp;
}

/// Cost of applying `controls` from x0 through the true model, checking
/// every constraint to `tol`. Returns infinity on any violation.
inline ExtendedCost evaluate_sequence(const LookaheadProblem& p, const std::vector<Vector>& controls,
                                      const std::vector<int>& modes, double tol = 1e-8,
                                      std::vector<int>* realized_modes = nullptr) {
    const ControlModel& model = p.m();
    Vector x = p.x0;
    double total = 0.0;
    for (int k = 0; k < p.horizon; ++k) {
        const Vector& u = controls[static_cast<size_t>(k)];
        if (model.state_constraints && !geometry::contains(*model.state_constraints, x, tol))
            return ExtendedCost::infinity();
        if (model.input_bound && u.size() > 0 && u.cwiseAbs().maxCoeff() > *model.input_bound + tol)
            return ExtendedCost::infinity();
        total += model.stage_value(x, u);
        const int requested = modes.empty() ? 0 : modes[static_cast<size_t>(k)];
        if (realized_modes)
            realized_modes->push_back(model.active_mode(x, requested));
        x = model.step(x, {u, requested});
    }
    const bool inside = std::visit(
        [&](const auto& s) -> bool {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, WholeSpace>)
                return true;
            else if constexpr (std::is_same_v<S, geometry::Polytope>)
                return geometry::contains(s, x, tol);
            else
                return x.dot(s.K * x) <= s.alpha + tol;
        },
        p.terminal.set);
    if (!inside)
        return ExtendedCost::infinity();
    return ExtendedCost::from_numeric(total + terminal_value(p.terminal, x));
}

namespace detail {

struct ProgramOutcome {
    numerics::SolveStatus status = numerics::SolveStatus::Infeasible;
    Vector z;
    double value = std::numeric_limits<double>::infinity();
    int programs = 0;
    bool converged = true;
};

inline ProgramOutcome solve_program(CondensedProgram& cp) {
    ProgramOutcome out;
    ++out.programs;
    if (cp.is_lp) {
        const auto r = numerics::lp_solve(cp.lp);
        out.status = r.status;
        if (r.status == numerics::SolveStatus::Optimal) {
            out.z = r.x;
            out.value = r.value + cp.constant;
        }
    } else {
        const auto r = numerics::qp_solve(cp.qp);
        out.status = r.status;
        if (r.status == numerics::SolveStatus::Optimal) {
            out.z = r.x;
            out.value = r.value + cp.constant;
        }
    }
    return out;
}

inline void append_row(CondensedProgram& cp, const Vector& g, double h) {
    auto grow = [&](Matrix& G, Vector& hv) {
        G.conservativeResize(G.rows() + 1, g.size());
        G.row(G.rows() - 1) = g.transpose();
        hv.conservativeResize(hv.size() + 1);
        hv(hv.size() - 1) = h;
    };
    if (cp.is_lp)
        grow(cp.lp.G, cp.lp.h);
    else
        grow(cp.qp.G, cp.qp.h);
}

/// Outer approximation of {x_l : x_l'K x_l <= alpha} by supporting
/// halfspaces at the radial projection of each infeasible iterate.
inline ProgramOutcome solve_with_ellipse(CondensedProgram& cp, const SublevelSet& s, const Vector& x0,
                                         int max_cuts = 30) {
    const double alpha_cut = s.alpha * (1.0 - 1e-7);
    ProgramOutcome total;
    total.programs = 0;
    for (int it = 0; it <= max_cuts; ++it) {
        auto r = solve_program(cp);
        r.programs += total.programs;
        if (r.status != numerics::SolveStatus::Optimal)
            return r;
        const Vector xl = cp.predicted_state(static_cast<int>(cp.phi.size()) - 1, x0, r.z);
        const double v = xl.dot(s.K * xl);
        if (v <= s.alpha)
            return r;
        total = r;
        const Vector pnt = xl * std::sqrt(alpha_cut / v);
        const Vector normal = s.K * pnt; // normal' x <= alpha_cut
        Vector g = Vector::Zero(cp.is_lp ? cp.lp.c.size() : cp.qp.f.size());
        g.head(cp.control_vars) = cp.gamma.back().transpose() * normal;
        append_row(cp, g, alpha_cut - normal.dot(cp.phi.back() * x0));
    }
    total.converged = false;
    return total;
}

inline std::vector<std::vector<int>> mode_sequences(const LookaheadProblem& p) {
    const ControlModel& model = p.m();
    const int L = p.horizon;
    std::vector<std::vector<int>> seqs;
    switch (model.dynamics) {
    case DynamicsKind::Linear:
        seqs.emplace_back(static_cast<size_t>(L), 0);
        break;
    case DynamicsKind::PiecewiseAffine: {
        const int first = model.active_mode(p.x0);
        for (int mask = 0; mask < (1 << (L - 1)); ++mask) {
            std::vector<int> s{first};
            for (int k = 1; k < L; ++k)
                s.push_back((mask >> (L - 1 - k)) & 1);
            seqs.push_back(std::move(s));
        }
        break;
    }
    case DynamicsKind::Switched: {
        require(p.schedule.empty() || static_cast<int>(p.schedule.size()) == L,
                "mode schedule must have one entry per stage");
        std::vector<int> s(static_cast<size_t>(L), 0);
        const int M = model.mode_count();
        auto fixed = [&](int k) -> std::optional<int> {
            return p.schedule.empty() ? std::nullopt : p.schedule[static_cast<size_t>(k)];
        };
        // Lexicographic enumeration of the free stages.
        std::function<void(int)> rec = [&](int k) {
            if (k == L) {
                seqs.push_back(s);
                return;
            }
            if (const auto f = fixed(k)) {
                require(*f >= 0 && *f < M, "mode schedule entry out of range");
                s[static_cast<size_t>(k)] = *f;
                rec(k + 1);
                return;
            }
            for (int d = 0; d < M; ++d) {
                s[static_cast<size_t>(k)] = d;
                rec(k + 1);
            }
        };
        rec(0);
        break;
    }
    }
    return seqs;
}

} // namespace detail

/// Solves the unit's l-step problem exactly: one convex program per
/// admissible mode sequence, the lowest value winning (earliest sequence on
/// ties). Infeasibility yields an infinite value.
inline PlannerSolution solve_unit(const LookaheadProblem& p) {
    require(p.model != nullptr, "solve_unit: no model");
    const ControlModel& model = p.m();
    PlannerSolution best;
    if (model.state_constraints && !geometry::contains(*model.state_constraints, p.x0)) {
        best.diagnostics = "initial state violates the state constraints";
        return best;
    }
    const Eigen::Index m = model.input_dim();
    std::ostringstream diag;
    double best_value = std::numeric_limits<double>::infinity();
    for (const auto& modes : detail::mode_sequences(p)) {
        CondensedProgram cp = condense(p, modes);
        detail::ProgramOutcome r;
        if (const auto* ell = std::get_if<SublevelSet>(&p.terminal.set))
            r = detail::solve_with_ellipse(cp, *ell, p.x0);
        else
            r = detail::solve_program(cp);
        best.programs_solved += r.programs;
        if (r.status == numerics::SolveStatus::IterLimit) {
            best.certified = false;
            diag << "iteration limit for mode sequence; ";
            continue;
        }
        if (r.status != numerics::SolveStatus::Optimal)
            continue;
        if (!r.converged) {
            best.certified = false;
            diag << "terminal ellipse cuts did not converge; ";
            continue;
        }
        std::vector<Vector> controls;
        for (int k = 0; k < p.horizon; ++k)
            controls.push_back(r.z.segment(m * k, m));
        std::vector<int> realized;
        const ExtendedCost resim = evaluate_sequence(p, controls, modes, 1e-8, &realized);
        const double tol = 1e-6 * std::max(1.0, std::abs(r.value));
        const bool consistent = resim.is_finite() && std::abs(resim.value() - r.value) <= tol;
        if (model.dynamics == DynamicsKind::PiecewiseAffine && (!consistent || realized != modes))
            continue; // guard boundary reached with the other mode assumed
        if (!consistent) {
            best.certified = false;
            diag << "re-simulation mismatch (" << r.value << " vs " << resim << "); ";
            continue;
        }
        if (r.value < best_value) {
            best_value = r.value;
            best.controls = std::move(controls);
            best.modes = modes;
        }
    }
    if (!best.controls.empty())
        best.value = ExtendedCost::from_numeric(best_value, 1e-7);
    best.diagnostics = diag.str();
    return best;
}

} // namespace prollout::planners
