#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bellman.hpp"

namespace prollout::finite {

/// Outcome of one named property over a batch of random instances.
struct PropertyOutcome {
    std::string name;
    bool pass = true;
    long checks = 0;
    std::string detail; // first counterexample, if any
};

namespace detail {

class PropertyLog {
public:
    explicit PropertyLog(std::vector<PropertyOutcome>& out) : out_(out) {}

    PropertyOutcome& get(const std::string& name) {
        for (auto& o : out_)
            if (o.name == name)
                return o;
        out_.push_back({name, true, 0, {}});
        return out_.back();
    }

    void check(const std::string& name, bool ok, const std::function<std::string()>& describe) {
        auto& o = get(name);
        ++o.checks;
        if (!ok && o.pass) {
            o.pass = false;
            o.detail = describe();
        }
    }

private:
    std::vector<PropertyOutcome>& out_;
};

inline bool leq(const CostTable& a, const CostTable& b) {
    for (size_t i = 0; i < a.size(); ++i)
        if (b[i] < a[i])
            return false;
    return true;
}

inline std::string where(int instance, int x) {
    std::ostringstream os;
    os << "instance " << instance << ", state " << x;
    return os.str();
}

} // namespace detail

/// Exact checks of the parallel-rollout identities and inequalities on
/// random finite models with integer costs.
inline std::vector<PropertyOutcome> finite_property_suite(std::uint64_t seed, int instances = 100) {
    std::vector<PropertyOutcome> results;
    detail::PropertyLog log(results);
    std::mt19937_64 rng(seed);

    for (int inst = 0; inst < instances; ++inst) {
        const FiniteModel m = random_model(rng);
        const int n = m.size();
        std::uniform_int_distribution<int> p_dist(1, 4);
        const int p = p_dist(rng);

        // Arbitrary tables.
        std::vector<CostTable> raw;
        for (int i = 0; i < p; ++i)
            raw.push_back(random_table(rng, m));
        // Tables in the region of decreasing: costs of random policies.
        std::vector<FinitePolicy> policies;
        std::vector<CostTable> dec;
        for (int i = 0; i < p; ++i) {
            policies.push_back(random_policy(rng, m));
            dec.push_back(exact_policy_cost(m, policies.back()));
        }

        for (const auto& J : dec)
            log.check("policy costs lie in the region of decreasing", detail::leq(bellman(m, J).values, J),
                      [&] { return "instance " + std::to_string(inst); });

        for (int ell = 1; ell <= 3; ++ell) {
            std::uniform_int_distribution<int> extra(0, 2);
            std::vector<int> ells;
            for (int i = 0; i < p; ++i)
                ells.push_back(ell + (i == 0 ? 0 : extra(rng)));

            for (const auto* family : {&raw, &dec}) {
                const bool decreasing = family == &dec;
                std::vector<CostTable> jbar_i;
                for (int i = 0; i < p; ++i)
                    jbar_i.push_back(bellman_power(m, (*family)[static_cast<size_t>(i)], ells[static_cast<size_t>(i)] - ell));
                const CostTable jbar = pointwise_min(jbar_i);

                // Min over units of T^l Jbar_i equals T^l Jbar.
                std::vector<CostTable> per_unit;
                for (const auto& t : jbar_i)
                    per_unit.push_back(bellman_power(m, t, ell));
                const CostTable lhs = pointwise_min(per_unit);
                const CostTable rhs = bellman_power(m, jbar, ell);
                for (int x = 0; x < n; ++x)
                    log.check("min of unit values equals T^l of the minimum", lhs[static_cast<size_t>(x)] == rhs[static_cast<size_t>(x)],
                              [&] { return detail::where(inst, x); });

                // Argmin of T^{l-1}Jbar is the union over minimizing units.
                const BellmanResult whole = bellman(m, bellman_power(m, jbar, ell - 1));
                std::vector<BellmanResult> parts;
                for (const auto& t : jbar_i)
                    parts.push_back(bellman(m, bellman_power(m, t, ell - 1)));
                for (int x = 0; x < n; ++x) {
                    std::set<int> uni;
                    for (int i = 0; i < p; ++i)
                        if (per_unit[static_cast<size_t>(i)][static_cast<size_t>(x)] == lhs[static_cast<size_t>(x)])
                            for (int u : parts[static_cast<size_t>(i)].argmin[static_cast<size_t>(x)])
                                uni.insert(u);
                    const auto& a = whole.argmin[static_cast<size_t>(x)];
                    log.check("argmin of the minimum is the union over minimizing units",
                              std::set<int>(a.begin(), a.end()) == uni, [&] { return detail::where(inst, x); });
                }

                if (!decreasing)
                    continue;

                // Jbar from decreasing tables is decreasing.
                log.check("pointwise minimum of decreasing tables is decreasing",
                          detail::leq(bellman(m, jbar).values, jbar), [&] { return "instance " + std::to_string(inst); });

                // Rollout cost bounded by the central unit's value.
                std::vector<FiniteUnit> units;
                for (int i = 0; i < p; ++i)
                    units.push_back({ells[static_cast<size_t>(i)], dec[static_cast<size_t>(i)]});
                const FinitePolicy mu = rollout_policy(m, units);
                const CostTable j_mu = exact_policy_cost(m, mu);
                for (int x = 0; x < n; ++x)
                    log.check("rollout cost is bounded by the best unit value",
                              j_mu[static_cast<size_t>(x)] <= rhs[static_cast<size_t>(x)],
                              [&] { return detail::where(inst, x); });

                // Every minimizing control decreases T^l J, for J = Jbar.
                const CostTable tl = rhs;
                const BellmanResult prev = whole;
                for (int x = 0; x < n; ++x)
                    for (int u : prev.argmin[static_cast<size_t>(x)]) {
                        const int y = m.edge(x, u).next;
                        log.check(ell == 1 ? "one-step value decreases along minimizing controls"
                                           : "l-step value decreases along minimizing controls",
                                  tl[static_cast<size_t>(y)] <= tl[static_cast<size_t>(x)],
                                  [&] { return detail::where(inst, x); });
                    }
                // Same along closed-loop rollout trajectories.
                for (int x0 = 0; x0 < n; ++x0) {
                    int x = x0;
                    for (int k = 0; k < n + 2; ++k) {
                        const int y = m.edge(x, mu[static_cast<size_t>(x)]).next;
                        log.check("l-step value decreases along rollout trajectories",
                                  tl[static_cast<size_t>(y)] <= tl[static_cast<size_t>(x)],
                                  [&] { return detail::where(inst, x); });
                        x = y;
                    }
                }
            }

            // Restricted operator: with Ubar containing mu(x), J_mu satisfies
            // Tbar J <= J, and then T(Tbar^l J) <= Tbar^l J.
            for (int i = 0; i < p; ++i) {
                ControlSubset ubar(static_cast<size_t>(n));
                std::bernoulli_distribution keep(0.5);
                for (int x = 0; x < n; ++x) {
                    const int mu_x = policies[static_cast<size_t>(i)][static_cast<size_t>(x)];
                    for (int u = 0; u < m.control_count(x); ++u)
                        if (u == mu_x || keep(rng))
                            ubar[static_cast<size_t>(x)].push_back(u);
                }
                const CostTable& J = dec[static_cast<size_t>(i)];
                const CostTable tbar_j = bellman_restricted(m, J, ubar).values;
                log.check("restricted operator dominates the full operator",
                          detail::leq(bellman(m, J).values, tbar_j), [&] { return "instance " + std::to_string(inst); });
                if (!detail::leq(tbar_j, J))
                    continue;
                const CostTable iter = bellman_power(m, J, ell, ubar);
                log.check("restricted iterates stay in the region of decreasing",
                          detail::leq(bellman(m, iter).values, iter), [&] { return "instance " + std::to_string(inst); });
            }
        }

        // Monotonicity of T.
        {
            CostTable lo = random_table(rng, m, 0.1);
            CostTable hi = lo;
            std::uniform_int_distribution<int> bump(0, 3);
            for (auto& v : hi)
                if (v.is_finite())
                    v = v + ExtendedCost(bump(rng));
            log.check("Bellman operator is monotone", detail::leq(bellman(m, lo).values, bellman(m, hi).values),
                      [&] { return "instance " + std::to_string(inst); });
        }

        // Value iteration from zero: monotone, below J*, J* a fixed point.
        const CostTable jstar = optimal_cost(m);
        const auto seq = value_iteration_sequence(m, 8);
        for (size_t k = 0; k + 1 < seq.size(); ++k)
            log.check("value iteration from zero is non-decreasing", detail::leq(seq[k], seq[k + 1]),
                      [&] { return "instance " + std::to_string(inst) + ", m = " + std::to_string(k); });
        for (const auto& t : seq)
            log.check("value iteration from zero stays below the optimal cost", detail::leq(t, jstar),
                      [&] { return "instance " + std::to_string(inst); });
        log.check("optimal cost is a Bellman fixed point", bellman(m, jstar).values == jstar,
                  [&] { return "instance " + std::to_string(inst); });
    }
    return results;
}

} // namespace prollout::finite
