#pragma once

#include <variant>

#include "model.hpp"

namespace prollout {

/// u = L x.
struct LinearGain {
    Matrix L;
};

/// u = L_nonneg x when guard'x >= 0, otherwise u = L_neg x. The guard is the
/// model's (the same hyperplane that switches piecewise-affine dynamics).
struct PiecewiseGain {
    Matrix L_nonneg;
    Matrix L_neg;
};

/// u = L x with the switching mode held fixed.
struct SwitchedGain {
    Matrix L;
    int mode = 0;
};

using Policy = std::variant<LinearGain, PiecewiseGain, SwitchedGain>;

inline Control apply_policy(const Policy& policy, const ControlModel& model, const Vector& x) {
    return std::visit(
        [&](const auto& p) -> Control {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, LinearGain>) {
                return {p.L * x, 0};
            } else if constexpr (std::is_same_v<P, PiecewiseGain>) {
                numerics::require(model.guard.size() == x.size(), "apply_policy: model has no guard");
                return {model.guard.dot(x) >= 0.0 ? Vector(p.L_nonneg * x) : Vector(p.L_neg * x), 0};
            } else {
                return {p.L * x, p.mode};
            }
        },
        policy);
}

/// Closed-loop matrix x+ = A_cl x for a policy, on the region where `x`
/// sits (the piecewise case depends on the side of the guard).
inline Matrix closed_loop_matrix(const Policy& policy, const ControlModel& model, const Vector& x) {
    const Control u = apply_policy(policy, model, x);
    const auto mode = static_cast<size_t>(model.active_mode(x, u.mode));
    return std::visit(
        [&](const auto& p) -> Matrix {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, PiecewiseGain>)
                return model.A[mode] + model.B[mode] * (model.guard.dot(x) >= 0.0 ? p.L_nonneg : p.L_neg);
            else
                return model.A[mode] + model.B[mode] * p.L;
        },
        policy);
}

} // namespace prollout
