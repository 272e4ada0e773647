#pragma once

#include <string>

#include "../planners/lookahead.hpp"

namespace prollout::rollout {

/// One computational unit: an l_i-step lookahead with terminal ingredient
/// J_i, optionally restricted to a fixed-mode schedule.
struct RolloutUnitSpec {
    std::string name;
    int lookahead = 1;
    TerminalIngredient terminal;
    planners::ModeSchedule schedule;

    [[nodiscard]] planners::LookaheadProblem problem(const ControlModel& model, const Vector& x) const {
        return {&model, lookahead, terminal, schedule, x};
    }
};

} // namespace prollout::rollout
