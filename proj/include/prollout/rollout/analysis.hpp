#pragma once

#include <algorithm>
#include <chrono>
#include <ostream>
#include <utility>

#include "../geometry/scan.hpp"
#include "coordinator.hpp"

namespace prollout::rollout {

/// Jbar_i(x) = (T^{l_i - l} J_i)(x) with l = min_i l_i: the terminal
/// ingredient itself when l_i = l, otherwise a planner at the reduced
/// horizon (keeping the tail of the unit's mode schedule).
inline ExtendedCost shifted_terminal(const RolloutConfig& cfg, size_t unit, const Vector& x) {
    int ell = cfg.units.front().lookahead;
    for (const auto& u : cfg.units)
        ell = std::min(ell, u.lookahead);
    const RolloutUnitSpec& spec = cfg.units[unit];
    const int shift = spec.lookahead - ell;
    if (shift == 0) {
        if (!cfg.m().state_admissible(x))
            return ExtendedCost::infinity();
        return eval_terminal(spec.terminal, x);
    }
    planners::ModeSchedule tail;
    if (!spec.schedule.empty())
        tail.assign(spec.schedule.end() - shift, spec.schedule.end());
    return planners::solve_unit({&cfg.m(), shift, spec.terminal, tail, x}).value;
}

struct SupportScanPair {
    geometry::SupportScan jbar;     // label: argmin_i Jbar_i(x)
    geometry::SupportScan rollout;  // label: unit selected at x when the closed loop has finite cost
};

/// Support of Jbar and of J_mu~ on a grid over [lo, hi].
inline SupportScanPair support_scan_rollout(const RolloutConfig& cfg, const Vector& lo, const Vector& hi, double spacing,
                                            unsigned workers = 1, const SimulationOptions& sim = {}) {
    cfg.validate();
    SupportScanPair out;
    out.jbar = geometry::support_scan(
        [&](const Vector& x) -> std::optional<int> {
            ExtendedCost best = ExtendedCost::infinity();
            std::optional<int> label;
            for (size_t i = 0; i < cfg.units.size(); ++i) {
                const ExtendedCost v = shifted_terminal(cfg, i, x);
                if (v < best) {
                    best = v;
                    label = static_cast<int>(i) + 1;
                }
            }
            return label;
        },
        lo, hi, spacing, workers);
    SimulationOptions s = sim;
    s.workers = 1;
    out.rollout = geometry::support_scan(
        [&](const Vector& x) -> std::optional<int> {
            const Trajectory t = closed_loop_simulate(cfg, x, s);
            if (t.reason != Termination::Converged)
                return std::nullopt;
            return t.steps.front().selected + 1;
        },
        lo, hi, spacing, workers);
    return out;
}

struct TimingReport {
    int steps = 0;
    int units = 0;
    int workers = 1;
    std::vector<double> unit_mean_seconds;
    double sequential_seconds = 0.0; // sum of per-unit times over the run
    double parallel_seconds = 0.0;   // wall time with `workers` threads
    double max_unit_sum_seconds = 0.0; // sum over steps of the slowest unit: ideal parallel time
    std::vector<int> programs_per_step;

    void print(std::ostream& os) const {
        os << "steps " << steps << ", units " << units << ", workers " << workers << "\n";
        for (size_t i = 0; i < unit_mean_seconds.size(); ++i)
            os << "  unit " << i + 1 << " mean " << unit_mean_seconds[i] * 1e3 << " ms per step\n";
        os << "  sequential " << sequential_seconds << " s, parallel wall " << parallel_seconds
           << " s, ideal parallel " << max_unit_sum_seconds << " s\n";
        if (!programs_per_step.empty()) {
            const auto [mn, mx] = std::minmax_element(programs_per_step.begin(), programs_per_step.end());
            os << "  convex programs per step: " << *mn << ".." << *mx << "\n";
        }
    }
};

/// Runs the closed loop twice, once with one worker and once with
/// `workers`, and reports per-unit and aggregate times.
inline TimingReport timing_report(const RolloutConfig& cfg, const Vector& x0, int steps, int workers) {
    SimulationOptions opt;
    opt.max_steps = steps;
    opt.workers = 1;
    const Trajectory seq = closed_loop_simulate(cfg, x0, opt);
    opt.workers = std::max(1, workers);
    const auto t0 = std::chrono::steady_clock::now();
    closed_loop_simulate(cfg, x0, opt);
    TimingReport rep;
    rep.parallel_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep.steps = static_cast<int>(seq.steps.size());
    rep.units = static_cast<int>(cfg.units.size());
    rep.workers = opt.workers;
    rep.unit_mean_seconds.assign(cfg.units.size(), 0.0);
    for (const auto& r : seq.steps) {
        double slowest = 0.0;
        for (size_t i = 0; i < r.seconds.size(); ++i) {
            rep.unit_mean_seconds[i] += r.seconds[i];
            rep.sequential_seconds += r.seconds[i];
            slowest = std::max(slowest, r.seconds[i]);
        }
        rep.max_unit_sum_seconds += slowest;
        rep.programs_per_step.push_back(r.total_programs());
    }
    for (auto& v : rep.unit_mean_seconds)
        v /= std::max(1, rep.steps);
    return rep;
}

/// (T^m J0)(x) with J0 = 0: the m-step problem with every mode free, no
/// terminal cost and no terminal set.
inline planners::PlannerSolution value_iteration_bound(const ControlModel& model, const Vector& x, int m) {
    require(m >= 1, "value_iteration_bound: m must be positive");
    TerminalIngredient zero;
    const auto n = model.state_dim();
    if (model.cost == CostKind::Quadratic)
        zero.value = QuadraticValue{Matrix::Zero(n, n)};
    else
        zero.value = NormValue{Matrix::Zero(1, n), model.cost};
    return planners::solve_unit({&model, m, zero, {}, x});
}

/// T^1 J0 .. T^m J0 at x, with the first index where the sequence drops by
/// more than `tol` (or -1).
struct LowerBoundSequence {
    std::vector<ExtendedCost> values;
    int programs = 0;
    int first_decrease = -1;

    [[nodiscard]] bool monotone() const { return first_decrease < 0; }
};

inline LowerBoundSequence lower_bound_sequence(const ControlModel& model, const Vector& x, int m, double tol = 1e-7) {
    LowerBoundSequence out;
    for (int k = 1; k <= m; ++k) {
        const auto sol = value_iteration_bound(model, x, k);
        out.programs += sol.programs_solved;
        if (!out.values.empty() && out.first_decrease < 0 && out.values.back().is_finite()) {
            const double prev = out.values.back().value();
            if (sol.value.is_finite() && sol.value.value() < prev - tol * std::max(1.0, prev))
                out.first_decrease = k;
        }
        out.values.push_back(sol.value);
    }
    return out;
}

} // namespace prollout::rollout
