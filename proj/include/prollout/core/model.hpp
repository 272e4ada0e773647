#pragma once

#include <optional>
#include <string>
#include <vector>

#include "../geometry/polytope.hpp"
#include "extended_cost.hpp"

namespace prollout {

enum class ModelVariant { Finite, LinearQuadratic, LinearNorm, PiecewiseAffine, Switched };
enum class DynamicsKind { Linear, PiecewiseAffine, Switched };
enum class CostKind { Quadratic, Norm1, NormInf };

/// Continuous control: an input vector plus a discrete mode (used only by
/// switched systems; ignored elsewhere).
struct Control {
    Vector v;
    int mode = 0;
};

inline double vector_norm(const Vector& v, CostKind kind) {
    if (v.size() == 0)
        return 0.0;
    return kind == CostKind::Norm1 ? v.cwiseAbs().sum() : v.cwiseAbs().maxCoeff();
}

/// Dynamics x+ = A_m x + B_m u with a stage cost that is quadratic
/// (x'Qx + u'Ru) or a p-norm (||Qx||_p + ||Ru||_p), plus the indicator of
/// the hard set C = {x in state_constraints, |u|_inf <= input_bound}.
///
/// The mode m is 0 for linear dynamics, selected by the sign of guard'x for
/// piecewise-affine dynamics (m = 0 when guard'x >= 0), and chosen by the
/// controller for switched dynamics.
struct ControlModel {
    DynamicsKind dynamics = DynamicsKind::Linear;
    std::vector<Matrix> A;
    std::vector<Matrix> B;
    Vector guard;
    CostKind cost = CostKind::Quadratic;
    Matrix Q;
    Matrix R;
    std::optional<geometry::Polytope> state_constraints;
    std::optional<double> input_bound;

    [[nodiscard]] Eigen::Index state_dim() const { return A.empty() ? 0 : A.front().rows(); }
    [[nodiscard]] Eigen::Index input_dim() const { return B.empty() ? 0 : B.front().cols(); }
    [[nodiscard]] int mode_count() const { return static_cast<int>(A.size()); }

    [[nodiscard]] ModelVariant variant() const {
        switch (dynamics) {
        case DynamicsKind::PiecewiseAffine: return ModelVariant::PiecewiseAffine;
        case DynamicsKind::Switched: return ModelVariant::Switched;
        case DynamicsKind::Linear: break;
        }
        return cost == CostKind::Quadratic ? ModelVariant::LinearQuadratic : ModelVariant::LinearNorm;
    }

    void validate() const {
        using numerics::require;
        require(!A.empty() && A.size() == B.size(), "ControlModel: need matching A and B lists");
        const auto n = state_dim();
        const auto m = input_dim();
        for (size_t i = 0; i < A.size(); ++i) {
            require(A[i].rows() == n && A[i].cols() == n, "ControlModel: A matrices must be n x n");
            require(B[i].rows() == n && B[i].cols() == m, "ControlModel: B matrices must be n x m");
        }
        require(Q.cols() == n && (cost != CostKind::Quadratic || Q.rows() == n), "ControlModel: Q has wrong shape");
        require(R.cols() == m && (cost != CostKind::Quadratic || R.rows() == m), "ControlModel: R has wrong shape");
        if (dynamics == DynamicsKind::Linear)
            require(A.size() == 1, "ControlModel: linear dynamics take one (A, B) pair");
        if (dynamics == DynamicsKind::PiecewiseAffine) {
            require(A.size() == 2, "ControlModel: piecewise-affine dynamics take two modes");
            require(guard.size() == n, "ControlModel: guard must have state dimension");
        }
        if (state_constraints)
            require(state_constraints->dim() == n, "ControlModel: state constraint dimension mismatch");
        if (input_bound)
            require(*input_bound > 0.0, "ControlModel: input bound must be positive");
    }

    /// Mode that governs the transition from x. `requested` is honoured only
    /// for switched dynamics.
    [[nodiscard]] int active_mode(const Vector& x, int requested = 0) const {
        switch (dynamics) {
        case DynamicsKind::Linear: return 0;
        case DynamicsKind::PiecewiseAffine: return guard.dot(x) >= 0.0 ? 0 : 1;
        case DynamicsKind::Switched:
            numerics::require(requested >= 0 && requested < mode_count(), "ControlModel: mode out of range");
            return requested;
        }
        return 0;
    }

    [[nodiscard]] Vector step(const Vector& x, const Control& u) const {
        const int m = active_mode(x, u.mode);
        return A[static_cast<size_t>(m)] * x + B[static_cast<size_t>(m)] * u.v;
    }

    [[nodiscard]] bool state_admissible(const Vector& x) const {
        return !state_constraints || geometry::contains(*state_constraints, x);
    }

    [[nodiscard]] bool input_admissible(const Vector& u) const {
        return !input_bound || u.size() == 0 ||
               u.cwiseAbs().maxCoeff() <= *input_bound + geometry::kMembershipTolerance;
    }

    /// Stage cost without the hard-set indicator.
    [[nodiscard]] double stage_value(const Vector& x, const Vector& u) const {
        if (cost == CostKind::Quadratic)
            return x.dot(Q * x) + u.dot(R * u);
        return vector_norm(Q * x, cost) + vector_norm(R * u, cost);
    }

    [[nodiscard]] ExtendedCost stage_cost(const Vector& x, const Control& u) const {
        if (!state_admissible(x) || !input_admissible(u.v))
            return ExtendedCost::infinity();
        return ExtendedCost::from_numeric(stage_value(x, u.v));
    }
};

inline const char* to_string(ModelVariant v) {
    switch (v) {
    case ModelVariant::Finite: return "Finite";
    case ModelVariant::LinearQuadratic: return "LinearQuadratic";
    case ModelVariant::LinearNorm: return "LinearNorm";
    case ModelVariant::PiecewiseAffine: return "PiecewiseAffine";
    case ModelVariant::Switched: return "Switched";
    }
    return "?";
}

} // namespace prollout
