#include <gtest/gtest.h>

#include <chrono>
#include <sstream>

#include "prollout/design/recipes.hpp"
#include "prollout/numerics/literals.hpp"
#include "prollout/rollout/analysis.hpp"

using namespace prollout;
using namespace prollout::rollout;

namespace {

ControlModel constrained_integrator() {
    ControlModel m;
    m.A = {make_matrix({{1, 1}, {0, 1}})};
    m.B = {make_matrix({{1}, {0.5}})};
    m.Q = Matrix::Identity(2, 2);
    m.R = make_matrix({{1}});
    m.state_constraints = geometry::Polytope::box(2, 5.0);
    m.input_bound = 1.0;
    return m;
}

RolloutConfig four_units(const ControlModel& m) {
    using design::SetMode;
    RolloutConfig cfg;
    cfg.model = &m;
    const auto u1 = design::design_riccati_terminal(m);
    const auto u2 = design::design_trial_gain_terminal(m, make_matrix({{-0.1, -1.2}}), SetMode::Polytope);
    const auto u3 = design::design_trial_gain_terminal(m, make_matrix({{-0.2, -0.7}}), SetMode::Polytope);
    const auto u4 = design::design_trial_gain_terminal(m, make_matrix({{-0.3, -0.8}}), SetMode::Sublevel);
    for (const auto* a : {&u1, &u2, &u3, &u4})
        cfg.units.push_back({"", 3, a->terminal, {}});
    return cfg;
}

} // namespace

TEST(Coordinator, SingleUnitIsPlainLookahead) {
    const ControlModel m = constrained_integrator();
    RolloutConfig cfg = four_units(m);
    cfg.units.resize(1);
    const Vector x = make_vector({-3, 1.5});
    const auto rec = coordinator_step(cfg, x);
    const auto sol = planners::solve_unit(cfg.units[0].problem(m, x));
    EXPECT_EQ(rec.values[0], sol.value);
    EXPECT_EQ(rec.selected, 0);
    EXPECT_EQ(rec.control.v(0), sol.controls[0](0));
}

TEST(Coordinator, SelectsLowestIndexMinimum) {
    const ControlModel m = constrained_integrator();
    RolloutConfig cfg = four_units(m);
    cfg.units.push_back(cfg.units[1]);
    const Vector x = make_vector({1, -1});
    const auto rec = coordinator_step(cfg, x);
    ASSERT_GE(rec.selected, 0);
    for (size_t i = 0; i < rec.values.size(); ++i) {
        EXPECT_LE(rec.bound, rec.values[i]);
        if (static_cast<int>(i) < rec.selected) {
            EXPECT_LT(rec.bound, rec.values[i]);
        }
    }
    EXPECT_EQ(rec.values[1], rec.values[4]);
}

TEST(Coordinator, AllUnitsInfeasibleEndsTrajectory) {
    const ControlModel m = constrained_integrator();
    const RolloutConfig cfg = four_units(m);
    const auto traj = closed_loop_simulate(cfg, make_vector({5, 5}));
    EXPECT_EQ(traj.reason, Termination::Infeasible);
    EXPECT_EQ(traj.steps.front().selected, -1);
    EXPECT_TRUE(traj.cost().is_infinite());
}

TEST(ClosedLoop, OriginStaysAtOriginWithZeroCost) {
    const ControlModel m = constrained_integrator();
    const auto traj = closed_loop_simulate(four_units(m), Vector::Zero(2));
    EXPECT_EQ(traj.reason, Termination::Converged);
    EXPECT_EQ(traj.steps.size(), 1u);
    EXPECT_EQ(traj.cost(), ExtendedCost(0.0));
}

TEST(ClosedLoop, CostBoundedByInitialValueAndBoundDecreases) {
    const ControlModel m = constrained_integrator();
    const RolloutConfig cfg = four_units(m);
    for (const Vector& x0 : {make_vector({-5, 2.7}), make_vector({2.3, -0.6}), make_vector({4, -2})}) {
        const auto traj = closed_loop_simulate(cfg, x0);
        ASSERT_EQ(traj.reason, Termination::Converged) << x0.transpose();
        EXPECT_LE(traj.cost().value(), traj.initial_bound().value() + 1e-6);
        EXPECT_TRUE(traj.bound_respected);
        EXPECT_TRUE(traj.bound_decreasing);
        // Replay the applied controls through the dynamics.
        Vector x = x0;
        for (const auto& r : traj.steps) {
            EXPECT_EQ(r.x, x);
            x = m.step(x, r.control);
        }
    }
}

TEST(ClosedLoop, WorkerCountDoesNotChangeTrajectory) {
    const ControlModel m = constrained_integrator();
    const RolloutConfig cfg = four_units(m);
    SimulationOptions one, four;
    four.workers = 4;
    const auto a = closed_loop_simulate(cfg, make_vector({-4, 2}), one);
    const auto b = closed_loop_simulate(cfg, make_vector({-4, 2}), four);
    ASSERT_EQ(a.steps.size(), b.steps.size());
    for (size_t k = 0; k < a.steps.size(); ++k) {
        EXPECT_EQ(a.steps[k].x, b.steps[k].x);
        EXPECT_EQ(a.steps[k].values, b.steps[k].values);
        EXPECT_EQ(a.steps[k].selected, b.steps[k].selected);
    }
}

TEST(ClosedLoop, TrajectoryCsvLayout) {
    const ControlModel m = constrained_integrator();
    const auto traj = closed_loop_simulate(four_units(m), make_vector({1, 1}));
    std::ostringstream os;
    write_trajectory_csv(os, traj, m);
    std::istringstream is(os.str());
    std::string header, first;
    std::getline(is, header);
    std::getline(is, first);
    EXPECT_EQ(header, "k,x1,x2,u,mode,stage_cost,running_cost,J1,J2,J3,J4,selected_unit,bound");
    EXPECT_EQ(first.rfind("0,1,1,", 0), 0u);
}

TEST(SupportScan, InteriorPointInBothAndOutsideStateBoundInNeither) {
    const ControlModel m = constrained_integrator();
    const RolloutConfig cfg = four_units(m);
    const auto scans = support_scan_rollout(cfg, make_vector({-6, -6}), make_vector({6, 6}), 3.0);
    ASSERT_EQ(scans.jbar.nx, 5);
    EXPECT_TRUE(scans.jbar.label(2, 2).has_value());
    EXPECT_TRUE(scans.rollout.label(2, 2).has_value());
    EXPECT_FALSE(scans.jbar.label(0, 0).has_value());
    EXPECT_FALSE(scans.rollout.label(0, 0).has_value());
    EXPECT_FALSE(scans.rollout.label(4, 2).has_value());
}

TEST(Timing, ReportsProgramCountsPerStep) {
    const ControlModel m = constrained_integrator();
    const RolloutConfig cfg = four_units(m);
    const auto rep = timing_report(cfg, make_vector({-4, 2}), 10, 2);
    EXPECT_EQ(rep.units, 4);
    EXPECT_EQ(rep.steps, 10);
    for (int c : rep.programs_per_step)
        EXPECT_GE(c, 4);
    EXPECT_GE(rep.sequential_seconds, rep.max_unit_sum_seconds);
}
