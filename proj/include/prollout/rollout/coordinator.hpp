#pragma once

#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <thread>
#include <vector>

#include "unit_spec.hpp"

namespace prollout::rollout {

using numerics::require;

struct RolloutConfig {
    const ControlModel* model = nullptr;
    std::vector<RolloutUnitSpec> units;
    int workers = 1;

    [[nodiscard]] const ControlModel& m() const { return *model; }
    void validate() const {
        require(model != nullptr, "RolloutConfig: no model");
        require(!units.empty(), "RolloutConfig: at least one unit is required");
        for (const auto& u : units)
            require(u.lookahead >= 1, "RolloutConfig: unit lookahead must be positive");
    }
};

/// Everything the central unit sees at one state.
struct StepRecord {
    int k = 0;
    Vector x;
    std::vector<ExtendedCost> values; // J~_i(x_k)
    std::vector<int> programs;        // convex programs solved per unit
    std::vector<double> seconds;      // wall time per unit
    int selected = -1;                // zero-based lowest-index argmin, -1 when all infinite
    Control control;
    ExtendedCost stage_cost;
    ExtendedCost running_cost; // including this stage
    ExtendedCost bound;        // min_i J~_i(x_k)
    bool certified = true;

    [[nodiscard]] int total_programs() const {
        int s = 0;
        for (int p : programs)
            s += p;
        return s;
    }
};

/// Solves every unit's lookahead at x (concurrently on up to `workers`
/// threads), joins, then selects the lowest-index minimum.
inline StepRecord coordinator_step(const RolloutConfig& cfg, const Vector& x, int workers = 1) {
    cfg.validate();
    const size_t p = cfg.units.size();
    std::vector<planners::PlannerSolution> sols(p);
    std::vector<double> secs(p, 0.0);
    auto run = [&](size_t i) {
        const auto t0 = std::chrono::steady_clock::now();
        sols[i] = planners::solve_unit(cfg.units[i].problem(cfg.m(), x));
        secs[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    const size_t w = std::min(p, static_cast<size_t>(std::max(1, workers)));
    if (w <= 1) {
        for (size_t i = 0; i < p; ++i)
            run(i);
    } else {
        std::vector<std::thread> pool;
        for (size_t t = 0; t < w; ++t)
            pool.emplace_back([&, t] {
                for (size_t i = t; i < p; i += w)
                    run(i);
            });
        for (auto& th : pool)
            th.join();
    }

    StepRecord rec;
    rec.x = x;
    rec.seconds = std::move(secs);
    rec.bound = ExtendedCost::infinity();
    for (size_t i = 0; i < p; ++i) {
        rec.values.push_back(sols[i].value);
        rec.programs.push_back(sols[i].programs_solved);
        rec.certified = rec.certified && sols[i].certified;
        if (sols[i].value < rec.bound) {
            rec.bound = sols[i].value;
            rec.selected = static_cast<int>(i);
        }
    }
    if (rec.selected >= 0) {
        rec.control = sols[static_cast<size_t>(rec.selected)].first_control();
        rec.stage_cost = cfg.m().stage_cost(x, rec.control);
    } else {
        rec.stage_cost = ExtendedCost::infinity();
    }
    return rec;
}

enum class Termination { Converged, Infeasible, StepCap };

inline const char* to_string(Termination t) {
    switch (t) {
    case Termination::Converged: return "Converged";
    case Termination::Infeasible: return "Infeasible";
    case Termination::StepCap: return "StepCap";
    }
    return "?";
}

struct SimulationOptions {
    int max_steps = 200;
    double stage_tol = 1e-9;
    double state_tol = 1e-6;
    double bound_slack = 1e-6;
    int workers = 1;
};

struct Trajectory {
    std::vector<StepRecord> steps;
    Termination reason = Termination::StepCap;
    Vector final_state;
    bool bound_respected = true;  // running cost + bound(x_k) <= bound(x_0) + slack at every k
    bool bound_decreasing = true; // bound(x_{k+1}) <= bound(x_k) + slack

    [[nodiscard]] ExtendedCost cost() const {
        if (reason == Termination::Infeasible || steps.empty())
            return ExtendedCost::infinity();
        return steps.back().running_cost;
    }
    [[nodiscard]] ExtendedCost initial_bound() const {
        return steps.empty() ? ExtendedCost::infinity() : steps.front().bound;
    }
};

/// Applies the rollout policy from x0 until the state and stage cost vanish,
/// all units are infeasible, or the step cap is reached.
inline Trajectory closed_loop_simulate(const RolloutConfig& cfg, const Vector& x0, const SimulationOptions& opt = {}) {
    require(opt.max_steps >= 1, "closed_loop_simulate: steps must be positive");
    Trajectory traj;
    Vector x = x0;
    ExtendedCost running(0.0);
    for (int k = 0; k < opt.max_steps; ++k) {
        StepRecord rec = coordinator_step(cfg, x, opt.workers);
        rec.k = k;
        if (rec.selected < 0 || rec.stage_cost.is_infinite()) {
            rec.running_cost = ExtendedCost::infinity();
            traj.steps.push_back(std::move(rec));
            traj.reason = Termination::Infeasible;
            traj.final_state = x;
            return traj;
        }
        running = running + rec.stage_cost;
        rec.running_cost = running;
        if (!traj.steps.empty()) {
            const double b0 = traj.steps.front().bound.value();
            const double prev_running = traj.steps.back().running_cost.value();
            if (prev_running + rec.bound.value() > b0 + opt.bound_slack)
                traj.bound_respected = false;
            if (rec.bound.value() > traj.steps.back().bound.value() + opt.bound_slack)
                traj.bound_decreasing = false;
        }
        const double g = rec.stage_cost.value();
        const Control u = rec.control;
        traj.steps.push_back(std::move(rec));
        x = cfg.m().step(x, u);
        if (g < opt.stage_tol && x.norm() < opt.state_tol) {
            traj.reason = Termination::Converged;
            traj.final_state = x;
            return traj;
        }
    }
    traj.reason = Termination::StepCap;
    traj.final_state = x;
    return traj;
}

namespace detail {

inline void write_cost(std::ostream& os, ExtendedCost c) {
    if (c.is_infinite())
        os << "inf";
    else
        os << c.value();
}

} // namespace detail

/// CSV: k, x1..xn, u, mode, stage_cost, running_cost, J1..Jp, selected_unit
/// (one-based, 0 when none), bound.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const ControlModel& model) {
    const auto n = model.state_dim();
    const size_t p = traj.steps.empty() ? 0 : traj.steps.front().values.size();
    os << "k";
    for (Eigen::Index i = 0; i < n; ++i)
        os << ",x" << i + 1;
    os << ",u,mode,stage_cost,running_cost";
    for (size_t i = 0; i < p; ++i)
        os << ",J" << i + 1;
    os << ",selected_unit,bound\n";
    os << std::setprecision(17);
    for (const auto& r : traj.steps) {
        os << r.k;
        for (Eigen::Index i = 0; i < n; ++i)
            os << ',' << r.x(i);
        os << ',';
        if (r.selected >= 0 && r.control.v.size() > 0)
            os << r.control.v(0);
        os << ',';
        if (model.dynamics != DynamicsKind::Linear && r.selected >= 0)
            os << model.active_mode(r.x, r.control.mode) + 1;
        os << ',';
        detail::write_cost(os, r.stage_cost);
        os << ',';
        detail::write_cost(os, r.running_cost);
        for (const auto& v : r.values) {
            os << ',';
            detail::write_cost(os, v);
        }
        os << ',' << r.selected + 1 << ',';
        detail::write_cost(os, r.bound);
        os << '\n';
    }
}

} // namespace prollout::rollout
