#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "extended_cost.hpp"
#include "model.hpp"
#include "policy.hpp"

namespace prollout {

enum class PolicyCostOutcome { Converged, LeftHardSet, StepCapContracting, StepCapDiverging };

inline const char* to_string(PolicyCostOutcome o) {
    switch (o) {
    case PolicyCostOutcome::Converged: return "converged";
    case PolicyCostOutcome::LeftHardSet: return "left hard set";
    case PolicyCostOutcome::StepCapContracting: return "step cap (tail contracting)";
    case PolicyCostOutcome::StepCapDiverging: return "step cap (tail not contracting)";
    }
    return "?";
}

struct PolicyCostReport {
    ExtendedCost cost;
    PolicyCostOutcome outcome = PolicyCostOutcome::Converged;
    std::size_t steps = 0;
};

struct PolicyCostOptions {
    std::size_t max_steps = 10000;
    double stage_tolerance = 1e-9;
    double state_tolerance = 1e-6;
    std::size_t tail_window = 100;
    double tail_tolerance = 1e-6;
};

/// Forward simulation of J_mu(x0) = sum_k g(x_k, mu(x_k)).
inline PolicyCostReport evaluate_policy_cost(const ControlModel& model, const Policy& policy, const Vector& x0,
                                             const PolicyCostOptions& opt = {}) {
    PolicyCostReport rep;
    Vector x = x0;
    std::deque<double> tail;
    double tail_sum = 0.0;
    double total = 0.0;
    for (rep.steps = 0; rep.steps < opt.max_steps; ++rep.steps) {
        const Control u = apply_policy(policy, model, x);
        const ExtendedCost g = model.stage_cost(x, u);
        if (g.is_infinite()) {
            rep.cost = ExtendedCost::infinity();
            rep.outcome = PolicyCostOutcome::LeftHardSet;
            return rep;
        }
        total += g.value();
        tail.push_back(g.value());
        tail_sum += g.value();
        if (tail.size() > opt.tail_window) {
            tail_sum -= tail.front();
            tail.pop_front();
        }
        if (g.value() < opt.stage_tolerance && x.norm() < opt.state_tolerance) {
            rep.cost = ExtendedCost(total);
            rep.outcome = PolicyCostOutcome::Converged;
            ++rep.steps;
            return rep;
        }
        x = model.step(x, u);
    }
    if (tail_sum > opt.tail_tolerance) {
        rep.cost = ExtendedCost::infinity();
        rep.outcome = PolicyCostOutcome::StepCapDiverging;
    } else {
        rep.cost = ExtendedCost(total);
        rep.outcome = PolicyCostOutcome::StepCapContracting;
    }
    return rep;
}

/// Result of probing TJ <= J. `margin` is max over probes of (TJ)(x) - J(x),
/// with probes where J(x) = inf contributing nothing and probes where TJ is
/// infinite but J finite contributing +inf.
template <class State>
struct DecreaseCertificate {
    double margin = -std::numeric_limits<double>::infinity();
    std::optional<State> worst;
    std::size_t probes = 0;
    std::size_t finite_probes = 0;
    bool pass = true;
};

template <class State, class CostFn, class OneStepFn>
DecreaseCertificate<State> check_region_of_decreasing(const std::vector<State>& probes, CostFn&& cost,
                                                      OneStepFn&& one_step, double tolerance = 1e-7) {
    DecreaseCertificate<State> cert;
    cert.probes = probes.size();
    for (const State& x : probes) {
        const ExtendedCost j = cost(x);
        if (j.is_infinite())
            continue;
        ++cert.finite_probes;
        const ExtendedCost tj = one_step(x);
        const double m = tj.is_infinite() ? std::numeric_limits<double>::infinity() : tj.value() - j.value();
        if (m > cert.margin) {
            cert.margin = m;
            cert.worst = x;
        }
    }
    cert.pass = cert.margin <= tolerance;
    return cert;
}

/// J_bar(x) = min_i J_i(x), with the argmin set available.
template <class State>
class PointwiseMin {
public:
    using Evaluator = std::function<ExtendedCost(const State&)>;

    explicit PointwiseMin(std::vector<Evaluator> parts) : parts_(std::move(parts)) {
        numerics::require(!parts_.empty(), "PointwiseMin: need at least one cost");
    }

    [[nodiscard]] std::size_t size() const { return parts_.size(); }

    [[nodiscard]] std::vector<ExtendedCost> values(const State& x) const {
        std::vector<ExtendedCost> v;
        v.reserve(parts_.size());
        for (const auto& f : parts_)
            v.push_back(f(x));
        return v;
    }

    ExtendedCost operator()(const State& x) const {
        ExtendedCost best = ExtendedCost::infinity();
        for (const auto& f : parts_)
            best = min(best, f(x));
        return best;
    }

    /// Zero-based indices attaining the minimum, ascending.
    [[nodiscard]] std::vector<std::size_t> argmin_set(const State& x) const {
        const auto v = values(x);
        ExtendedCost best = ExtendedCost::infinity();
        for (const auto& c : v)
            best = min(best, c);
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < v.size(); ++i)
            if (v[i] == best)
                out.push_back(i);
        return out;
    }

    [[nodiscard]] std::size_t argmin(const State& x) const { return argmin_set(x).front(); }

private:
    std::vector<Evaluator> parts_;
};

} // namespace prollout
