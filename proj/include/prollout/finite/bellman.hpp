#pragma once

#include <algorithm>
#include <vector>

#include "finite_model.hpp"

namespace prollout::finite {

/// (TJ)(x) with the full argmin control set per state and its
/// lowest-index representative.
struct BellmanResult {
    CostTable values;
    std::vector<std::vector<int>> argmin;
    FinitePolicy best;
};

/// Controls allowed per state; an empty outer vector means "all controls".
using ControlSubset = std::vector<std::vector<int>>;

inline ExtendedCost q_value(const FiniteModel& m, const CostTable& J, int x, int u) {
    const Edge& e = m.edge(x, u);
    return e.cost + J[static_cast<size_t>(e.next)];
}

inline BellmanResult bellman_restricted(const FiniteModel& m, const CostTable& J, const ControlSubset& allowed) {
    require(static_cast<int>(J.size()) == m.size(), "bellman: table size differs from model size");
    require(allowed.empty() || static_cast<int>(allowed.size()) == m.size(), "bellman: subset size mismatch");
    BellmanResult out;
    out.values.resize(J.size());
    out.argmin.resize(J.size());
    out.best.resize(J.size());
    std::vector<int> all;
    for (int x = 0; x < m.size(); ++x) {
        const std::vector<int>* controls = nullptr;
        if (allowed.empty()) {
            all.resize(static_cast<size_t>(m.control_count(x)));
            for (int u = 0; u < m.control_count(x); ++u)
                all[static_cast<size_t>(u)] = u;
            controls = &all;
        } else {
            controls = &allowed[static_cast<size_t>(x)];
            require(!controls->empty(), "bellman_restricted: empty control subset at state " + m.name(x));
        }
        ExtendedCost best = ExtendedCost::infinity();
        std::vector<int> arg;
        for (int u : *controls) {
            require(u >= 0 && u < m.control_count(x), "bellman_restricted: control out of range");
            const ExtendedCost q = q_value(m, J, x, u);
            if (q < best) {
                best = q;
                arg.clear();
            }
            if (q == best)
                arg.push_back(u);
        }
        std::sort(arg.begin(), arg.end());
        out.values[static_cast<size_t>(x)] = best;
        out.best[static_cast<size_t>(x)] = arg.front();
        out.argmin[static_cast<size_t>(x)] = std::move(arg);
    }
    return out;
}

inline BellmanResult bellman(const FiniteModel& m, const CostTable& J) { return bellman_restricted(m, J, {}); }

/// T^k J (or the restricted operator when `allowed` is nonempty).
inline CostTable bellman_power(const FiniteModel& m, CostTable J, int k, const ControlSubset& allowed = {}) {
    require(k >= 0, "bellman_power: negative power");
    for (int i = 0; i < k; ++i)
        J = bellman_restricted(m, J, allowed).values;
    return J;
}

inline CostTable pointwise_min(const std::vector<CostTable>& tables) {
    require(!tables.empty(), "pointwise_min: no tables");
    CostTable out = tables.front();
    for (const auto& t : tables)
        for (size_t x = 0; x < out.size(); ++x)
            out[x] = min(out[x], t[x]);
    return out;
}

/// One-step evaluation of a policy: g(x, mu(x)) + J(f(x, mu(x))).
inline CostTable policy_step(const FiniteModel& m, const FinitePolicy& mu, const CostTable& J) {
    CostTable out(J.size());
    for (int x = 0; x < m.size(); ++x)
        out[static_cast<size_t>(x)] = q_value(m, J, x, mu[static_cast<size_t>(x)]);
    return out;
}

/// Exact J_mu by following each trajectory until it revisits a state. A
/// cycle of zero total cost ends the sum; any other cycle, or an infinite
/// edge, gives infinity.
inline CostTable exact_policy_cost(const FiniteModel& m, const FinitePolicy& mu) {
    require(static_cast<int>(mu.size()) == m.size(), "exact_policy_cost: policy size mismatch");
    CostTable out(static_cast<size_t>(m.size()));
    for (int start = 0; start < m.size(); ++start) {
        std::vector<int> first_visit(static_cast<size_t>(m.size()), -1);
        std::vector<ExtendedCost> prefix; // prefix[k] = cost of the first k steps
        prefix.emplace_back(0.0);
        int x = start;
        for (int k = 0;; ++k) {
            first_visit[static_cast<size_t>(x)] = k;
            const Edge& e = m.edge(x, mu[static_cast<size_t>(x)]);
            prefix.push_back(prefix.back() + e.cost);
            x = e.next;
            if (first_visit[static_cast<size_t>(x)] >= 0)
                break;
        }
        const ExtendedCost total = prefix.back();
        const auto k0 = static_cast<size_t>(first_visit[static_cast<size_t>(x)]);
        const bool free_cycle = total.is_finite() && total.value() == prefix[k0].value();
        out[static_cast<size_t>(start)] = free_cycle ? total : ExtendedCost::infinity();
    }
    return out;
}

/// T^0 0, T^1 0, ..., T^m 0.
inline std::vector<CostTable> value_iteration_sequence(const FiniteModel& m, int steps) {
    std::vector<CostTable> seq{zero_table(m)};
    for (int k = 0; k < steps; ++k)
        seq.push_back(bellman(m, seq.back()).values);
    return seq;
}

inline CostTable value_iteration_lower_bound(const FiniteModel& m, int steps) {
    return bellman_power(m, zero_table(m), steps);
}

/// Exact optimal cost for nonnegative costs: zero at states that can stay
/// on zero-cost edges forever, shortest-path distance to those states
/// elsewhere. States that cannot reach them are infinite; with integer costs
/// every such infinite path accumulates unbounded cost.
inline CostTable optimal_cost(const FiniteModel& m) {
    const int n = m.size();
    // States with an infinite zero-cost path: greatest fixed point of
    // Z = {x : some zero-cost edge leads into Z}.
    std::vector<char> z(static_cast<size_t>(n), 1);
    for (bool changed = true; changed;) {
        changed = false;
        for (int x = 0; x < n; ++x) {
            if (!z[static_cast<size_t>(x)])
                continue;
            bool ok = false;
            for (int u = 0; u < m.control_count(x) && !ok; ++u) {
                const Edge& e = m.edge(x, u);
                ok = e.cost == ExtendedCost(0.0) && z[static_cast<size_t>(e.next)];
            }
            if (!ok) {
                z[static_cast<size_t>(x)] = 0;
                changed = true;
            }
        }
    }
    CostTable J(static_cast<size_t>(n), ExtendedCost::infinity());
    for (int x = 0; x < n; ++x)
        if (z[static_cast<size_t>(x)])
            J[static_cast<size_t>(x)] = ExtendedCost(0.0);
    // Bellman-Ford relaxation; nonnegative costs converge within n passes.
    for (int pass = 0; pass < n; ++pass)
        for (int x = 0; x < n; ++x)
            for (int u = 0; u < m.control_count(x); ++u)
                J[static_cast<size_t>(x)] = min(J[static_cast<size_t>(x)], q_value(m, J, x, u));
    return J;
}

struct FiniteUnit {
    int lookahead = 1;
    CostTable terminal;
};

struct FiniteRolloutStep {
    std::vector<ExtendedCost> values; // (T^{l_i} J_i)(x) per unit
    int selected = 0;                 // lowest-index argmin, zero-based
    int first_control = 0;            // selected unit's first control
    std::vector<int> first_controls;  // each unit's first control
};

/// The central unit's choice at x: every unit evaluates T^{l_i} J_i, the
/// lowest value wins and its first control is applied.
inline FiniteRolloutStep parallel_rollout_finite(const FiniteModel& m, const std::vector<FiniteUnit>& units, int x) {
    require(!units.empty(), "parallel_rollout_finite: no units");
    FiniteRolloutStep step;
    for (const auto& unit : units) {
        require(unit.lookahead >= 1, "parallel_rollout_finite: lookahead must be positive");
        const CostTable tail = bellman_power(m, unit.terminal, unit.lookahead - 1);
        const BellmanResult last = bellman(m, tail);
        step.values.push_back(last.values[static_cast<size_t>(x)]);
        step.first_controls.push_back(last.best[static_cast<size_t>(x)]);
    }
    for (size_t i = 1; i < step.values.size(); ++i)
        if (step.values[i] < step.values[static_cast<size_t>(step.selected)])
            step.selected = static_cast<int>(i);
    step.first_control = step.first_controls[static_cast<size_t>(step.selected)];
    return step;
}

/// The rollout policy tabulated over every state.
inline FinitePolicy rollout_policy(const FiniteModel& m, const std::vector<FiniteUnit>& units) {
    FinitePolicy mu;
    for (int x = 0; x < m.size(); ++x)
        mu.push_back(parallel_rollout_finite(m, units, x).first_control);
    return mu;
}

} // namespace prollout::finite
