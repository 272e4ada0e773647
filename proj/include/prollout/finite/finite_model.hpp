#pragma once

#include <random>
#include <string>
#include <vector>

#include "../core/extended_cost.hpp"

namespace prollout::finite {

using numerics::require;

/// One available control at a state: move to `next` paying `cost`.
struct Edge {
    int next = 0;
    ExtendedCost cost;
};

/// Enumerated states; the controls at state x are the indices into edges[x].
struct FiniteModel {
    std::vector<std::string> names;
    std::vector<std::vector<Edge>> edges;

    [[nodiscard]] int size() const { return static_cast<int>(edges.size()); }
    [[nodiscard]] int control_count(int x) const { return static_cast<int>(edges[static_cast<size_t>(x)].size()); }
    [[nodiscard]] const Edge& edge(int x, int u) const {
        return edges[static_cast<size_t>(x)][static_cast<size_t>(u)];
    }

    [[nodiscard]] int index_of(const std::string& name) const {
        for (size_t i = 0; i < names.size(); ++i)
            if (names[i] == name)
                return static_cast<int>(i);
        throw Error("FiniteModel: unknown state '" + name + "'");
    }

    [[nodiscard]] std::string name(int x) const {
        return static_cast<size_t>(x) < names.size() ? names[static_cast<size_t>(x)] : std::to_string(x);
    }

    void validate() const {
        require(!edges.empty(), "FiniteModel: no states");
        require(names.empty() || names.size() == edges.size(), "FiniteModel: one name per state");
        for (int x = 0; x < size(); ++x) {
            require(control_count(x) > 0, "FiniteModel: state " + name(x) + " has no controls");
            for (const auto& e : edges[static_cast<size_t>(x)])
                require(e.next >= 0 && e.next < size(), "FiniteModel: edge from " + name(x) + " leaves the model");
        }
    }
};

/// A value per state.
using CostTable = std::vector<ExtendedCost>;

/// A control index per state.
using FinitePolicy = std::vector<int>;

inline CostTable zero_table(const FiniteModel& m) { return CostTable(static_cast<size_t>(m.size())); }

/// Four sites A, B, C, D joined by one-way streets, with a free self-loop at D.
inline FiniteModel shortest_path_example() {
    FiniteModel m;
    m.names = {"A", "B", "C", "D"};
    m.edges = {
        {{1, ExtendedCost(5)}, {2, ExtendedCost(8)}},
        {{2, ExtendedCost(2)}, {3, ExtendedCost(3)}},
        {{1, ExtendedCost(3)}, {3, ExtendedCost(2)}},
        {{3, ExtendedCost(0)}},
    };
    return m;
}

struct RandomModelOptions {
    int max_states = 8;
    int max_controls = 4;
    int max_cost = 9;
};

/// Random model with integer costs. The last state is absorbing with a
/// single zero-cost self-loop.
inline FiniteModel random_model(std::mt19937_64& rng, const RandomModelOptions& opt = {}) {
    std::uniform_int_distribution<int> n_dist(2, opt.max_states);
    const int n = n_dist(rng);
    std::uniform_int_distribution<int> u_dist(1, opt.max_controls);
    std::uniform_int_distribution<int> next_dist(0, n - 1);
    std::uniform_int_distribution<int> cost_dist(0, opt.max_cost);
    FiniteModel m;
    m.edges.resize(static_cast<size_t>(n));
    for (int x = 0; x < n - 1; ++x) {
        const int k = u_dist(rng);
        for (int u = 0; u < k; ++u)
            m.edges[static_cast<size_t>(x)].push_back({next_dist(rng), ExtendedCost(cost_dist(rng))});
    }
    m.edges[static_cast<size_t>(n - 1)].push_back({n - 1, ExtendedCost(0)});
    for (int x = 0; x < n; ++x)
        m.names.push_back("s" + std::to_string(x));
    return m;
}

/// Random table with integer entries, infinite with probability `p_inf`.
inline CostTable random_table(std::mt19937_64& rng, const FiniteModel& m, double p_inf = 0.2, int max_value = 20) {
    std::bernoulli_distribution inf(p_inf);
    std::uniform_int_distribution<int> v(0, max_value);
    CostTable t;
    for (int x = 0; x < m.size(); ++x)
        t.push_back(inf(rng) ? ExtendedCost::infinity() : ExtendedCost(v(rng)));
    return t;
}

inline FinitePolicy random_policy(std::mt19937_64& rng, const FiniteModel& m) {
    FinitePolicy mu;
    for (int x = 0; x < m.size(); ++x) {
        std::uniform_int_distribution<int> d(0, m.control_count(x) - 1);
        mu.push_back(d(rng));
    }
    return mu;
}

} // namespace prollout::finite
