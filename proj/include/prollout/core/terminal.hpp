#pragma once

#include <variant>

#include "../geometry/polytope.hpp"
#include "model.hpp"

namespace prollout {

/// V(x) = x'Kx.
struct QuadraticValue {
    Matrix K;
};

/// V(x) = ||Kx||_p with p in {1, inf}; K may be rectangular.
struct NormValue {
    Matrix K;
    CostKind norm = CostKind::Norm1;
};

/// {x : x'Kx <= alpha}.
struct SublevelSet {
    Matrix K;
    double alpha = 0.0;
};

/// No constraint: S is the whole space.
struct WholeSpace {};

using TerminalValue = std::variant<QuadraticValue, NormValue>;
using TerminalSet = std::variant<WholeSpace, geometry::Polytope, SublevelSet>;

/// J(x) = V(x) + indicator of S.
struct TerminalIngredient {
    TerminalValue value = QuadraticValue{};
    TerminalSet set = WholeSpace{};

    [[nodiscard]] Eigen::Index dim() const {
        return std::visit([](const auto& v) { return v.K.cols(); }, value);
    }
};

inline double terminal_value(const TerminalIngredient& t, const Vector& x) {
    return std::visit(
        [&](const auto& v) -> double {
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, QuadraticValue>)
                return x.dot(v.K * x);
            else
                return vector_norm(v.K * x, v.norm);
        },
        t.value);
}

inline bool terminal_contains(const TerminalIngredient& t, const Vector& x) {
    return std::visit(
        [&](const auto& s) -> bool {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, WholeSpace>)
                return true;
            else if constexpr (std::is_same_v<S, geometry::Polytope>)
                return geometry::contains(s, x);
            else
                return x.dot(s.K * x) <= s.alpha + geometry::kMembershipTolerance;
        },
        t.set);
}

inline ExtendedCost eval_terminal(const TerminalIngredient& t, const Vector& x) {
    numerics::require(x.size() == t.dim(), "eval_terminal: dimension mismatch");
    if (!terminal_contains(t, x))
        return ExtendedCost::infinity();
    return ExtendedCost::from_numeric(terminal_value(t, x));
}

} // namespace prollout
