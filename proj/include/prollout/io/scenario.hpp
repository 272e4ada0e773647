#pragma once

#include <filesystem>
#include <map>

#include "../finite/bellman.hpp"
#include "../rollout/coordinator.hpp"
#include "artifact_io.hpp"

namespace prollout::io {

/// How a unit's base policy is given: as matrices, or as the Riccati gain
/// of one mode (or of each mode, for piecewise-affine dynamics).
struct PolicySpec {
    enum class Source { Given, Riccati, PiecewiseRiccati };
    Source source = Source::Given;
    Policy given = LinearGain{};
    int mode = 0;
};

/// One unit's terminal-ingredient recipe as written in a scenario.
///   riccati        {mode}
///   trial_gain     {L, set: polytope | sublevel | whole_space, mode}
///   norm_lyapunov  {L, p, set: whole_space | invariant, mode}
///   literal        {policy, terminal: {V, S}}; S may be "invariant"
///   artifact       {path}
struct RecipeSpec {
    std::string kind;
    int mode = 0;
    Matrix L;
    std::string set = "polytope";
    CostKind p = CostKind::Norm1;
    PolicySpec policy;
    TerminalValue value = QuadraticValue{};
    TerminalSet given_set = WholeSpace{};
    bool invariant_set = false;
    std::string path;
};

struct UnitEntry {
    std::string name;
    int lookahead = 1;
    RecipeSpec recipe;
    std::optional<std::pair<int, int>> iterate; // (mode, count)
    bool optional = false;                      // dropped when its artifact file is absent
};

/// Finite-model unit: J_i is the exact cost of a base policy (successor
/// state per state) or an explicit table.
struct FiniteUnitEntry {
    std::string name;
    int lookahead = 1;
    std::vector<std::pair<std::string, std::string>> base_policy;
    std::vector<std::pair<std::string, ExtendedCost>> terminal;
};

struct ScanSettings {
    Vector lo;
    Vector hi;
    double spacing = 0.1;
};

struct Scenario {
    std::string name;
    std::string title;
    std::vector<std::string> notes;
    std::vector<std::string> assumptions;
    bool finite = false;
    ControlModel model;
    finite::FiniteModel graph;
    std::vector<UnitEntry> units;
    std::vector<FiniteUnitEntry> finite_units;
    std::vector<Vector> x0;
    std::vector<std::string> start_states;
    std::optional<ScanSettings> scan;
    std::optional<int> lowerbound_m;
    int max_steps = 200;
    std::string reference;
    std::string source_dir; // not serialized; resolves relative paths

    [[nodiscard]] std::string resolve(const std::string& rel) const {
        if (rel.empty() || std::filesystem::path(rel).is_absolute() || source_dir.empty())
            return rel;
        return (std::filesystem::path(source_dir) / rel).lexically_normal().string();
    }
};

namespace detail {

inline std::vector<std::string> as_string_list(const json& j, const std::string& path) {
    std::vector<std::string> out;
    if (!j.is_array())
        throw SchemaError(path, "expected a list of strings");
    for (size_t i = 0; i < j.size(); ++i)
        out.push_back(as_string(j[i], child(path, i)));
    return out;
}

inline PolicySpec as_policy_spec(const json& j, const std::string& path) {
    PolicySpec s;
    const std::string type = as_string(field(j, "type", path), path + "/type");
    if (type == "riccati") {
        s.source = PolicySpec::Source::Riccati;
        if (has(j, "mode"))
            s.mode = as_int(j["mode"], path + "/mode");
    } else if (type == "piecewise_riccati") {
        s.source = PolicySpec::Source::PiecewiseRiccati;
    } else {
        s.given = as_resolved_policy(j, path);
    }
    return s;
}

inline json policy_spec_json(const PolicySpec& s) {
    switch (s.source) {
    case PolicySpec::Source::Riccati: return {{"type", "riccati"}, {"mode", s.mode}};
    case PolicySpec::Source::PiecewiseRiccati: return {{"type", "piecewise_riccati"}};
    case PolicySpec::Source::Given: break;
    }
    return policy_json(s.given);
}

inline RecipeSpec as_recipe(const json& j, const std::string& path, Eigen::Index dim) {
    RecipeSpec r;
    r.kind = as_string(field(j, "kind", path), path + "/kind");
    if (has(j, "mode"))
        r.mode = as_int(j["mode"], path + "/mode");
    if (r.kind == "riccati")
        return r;
    if (r.kind == "trial_gain" || r.kind == "norm_lyapunov") {
        r.L = as_matrix(field(j, "L", path), path + "/L");
        if (r.L.cols() != dim)
            throw SchemaError(path + "/L", "gain must have one column per state");
        if (r.kind == "norm_lyapunov") {
            r.p = parse_norm(field(j, "p", path), path + "/p");
            if (r.p == CostKind::Quadratic)
                throw SchemaError(path + "/p", "norm_lyapunov needs p = 1 or \"inf\"");
            r.set = has(j, "set") ? as_string(j["set"], path + "/set") : "whole_space";
            if (r.set != "whole_space" && r.set != "invariant")
                throw SchemaError(path + "/set", "expected \"whole_space\" or \"invariant\"");
        } else {
            r.set = has(j, "set") ? as_string(j["set"], path + "/set") : "polytope";
            if (r.set != "polytope" && r.set != "sublevel" && r.set != "whole_space")
                throw SchemaError(path + "/set", "expected \"polytope\", \"sublevel\" or \"whole_space\"");
        }
        return r;
    }
    if (r.kind == "literal") {
        r.policy = as_policy_spec(field(j, "policy", path), path + "/policy");
        const json& t = field(j, "terminal", path);
        const std::string tp = path + "/terminal";
        r.value = as_terminal_value(field(t, "V", tp), tp + "/V");
        const Eigen::Index n = std::visit([](const auto& v) { return v.K.cols(); }, r.value);
        if (n != dim)
            throw SchemaError(tp + "/V/K", "K must have one column per state");
        if (has(t, "S") && t["S"].is_string() && t["S"].get<std::string>() == "invariant")
            r.invariant_set = true;
        else
            r.given_set = as_terminal_set(has(t, "S") ? t["S"] : json(), tp + "/S", dim);
        return r;
    }
    if (r.kind == "artifact") {
        r.path = as_string(field(j, "path", path), path + "/path");
        return r;
    }
    throw SchemaError(path + "/kind", "unknown recipe kind '" + r.kind + "'");
}

inline json recipe_json(const RecipeSpec& r) {
    json out{{"kind", r.kind}};
    if (r.kind == "riccati") {
        out["mode"] = r.mode;
    } else if (r.kind == "trial_gain" || r.kind == "norm_lyapunov") {
        out["L"] = matrix_json(r.L);
        if (r.kind == "norm_lyapunov")
            out["p"] = norm_json(r.p);
        out["set"] = r.set;
        out["mode"] = r.mode;
    } else if (r.kind == "literal") {
        out["policy"] = policy_spec_json(r.policy);
        out["terminal"] = {{"V", terminal_value_json(r.value)},
                           {"S", r.invariant_set ? json("invariant") : terminal_set_json(r.given_set)}};
    } else if (r.kind == "artifact") {
        out["path"] = r.path;
    }
    return out;
}

inline finite::FiniteModel as_graph(const json& j, const std::string& path) {
    finite::FiniteModel m;
    m.names = as_string_list(field(j, "states", path), path + "/states");
    m.edges.resize(m.names.size());
    const json& edges = field(j, "edges", path);
    if (!edges.is_array())
        throw SchemaError(path + "/edges", "expected a list of {from, to, cost}");
    for (size_t i = 0; i < edges.size(); ++i) {
        const std::string ep = child(path + "/edges", i);
        int from = 0, to = 0;
        try {
            from = m.index_of(as_string(field(edges[i], "from", ep), ep + "/from"));
            to = m.index_of(as_string(field(edges[i], "to", ep), ep + "/to"));
        } catch (const SchemaError&) {
            throw;
        } catch (const Error& e) {
            throw SchemaError(ep, e.what());
        }
        m.edges[static_cast<size_t>(from)].push_back({to, as_cost(field(edges[i], "cost", ep), ep + "/cost")});
    }
    try {
        m.validate();
    } catch (const Error& e) {
        throw SchemaError(path, e.what());
    }
    return m;
}

inline json graph_json(const finite::FiniteModel& m) {
    json edges = json::array();
    for (int x = 0; x < m.size(); ++x)
        for (int u = 0; u < m.control_count(x); ++u)
            edges.push_back({{"from", m.name(x)}, {"to", m.name(m.edge(x, u).next)}, {"cost", cost_json(m.edge(x, u).cost)}});
    return {{"dynamics", "finite"}, {"states", m.names}, {"edges", edges}};
}

inline int positive_int(const json& j, const std::string& path) {
    const int v = as_int(j, path);
    if (v < 1)
        throw SchemaError(path, "must be at least 1");
    return v;
}

} // namespace detail

inline Scenario as_scenario(const json& j) {
    Scenario s;
    s.name = as_string(field(j, "name", ""), "/name");
    if (has(j, "title"))
        s.title = as_string(j["title"], "/title");
    if (has(j, "notes"))
        s.notes = detail::as_string_list(j["notes"], "/notes");
    if (has(j, "assumptions"))
        s.assumptions = detail::as_string_list(j["assumptions"], "/assumptions");
    const json& model = field(j, "model", "");
    s.finite = has(model, "dynamics") && model["dynamics"] == "finite";
    const json& units = field(j, "units", "");
    if (!units.is_array() || units.empty())
        throw SchemaError("/units", "expected a nonempty list of units");

    if (s.finite) {
        s.graph = detail::as_graph(model, "/model");
        for (size_t i = 0; i < units.size(); ++i) {
            const std::string up = detail::child("/units", i);
            FiniteUnitEntry u;
            u.name = as_string(field(units[i], "name", up), up + "/name");
            u.lookahead = detail::positive_int(field(units[i], "lookahead", up), up + "/lookahead");
            if (has(units[i], "base_policy")) {
                for (const auto& [from, to] : units[i]["base_policy"].items()) {
                    const std::string bp = up + "/base_policy/" + from;
                    u.base_policy.emplace_back(from, as_string(to, bp));
                }
            } else if (has(units[i], "terminal")) {
                for (const auto& [state, v] : units[i]["terminal"].items())
                    u.terminal.emplace_back(state, as_cost(v, up + "/terminal/" + state));
            } else {
                throw SchemaError(up, "finite units need \"base_policy\" or \"terminal\"");
            }
            s.finite_units.push_back(std::move(u));
        }
        if (has(j, "start_states"))
            s.start_states = detail::as_string_list(j["start_states"], "/start_states");
    } else {
        s.model = as_control_model(model, "/model");
        for (size_t i = 0; i < units.size(); ++i) {
            const std::string up = detail::child("/units", i);
            UnitEntry u;
            u.name = as_string(field(units[i], "name", up), up + "/name");
            u.lookahead = detail::positive_int(field(units[i], "lookahead", up), up + "/lookahead");
            if (u.lookahead > 8)
                throw SchemaError(up + "/lookahead", "lookahead beyond 8 is not supported");
            u.recipe = detail::as_recipe(field(units[i], "recipe", up), up + "/recipe", s.model.state_dim());
            if (has(units[i], "iterate")) {
                const json& it = units[i]["iterate"];
                const std::string ip = up + "/iterate";
                u.iterate = std::make_pair(as_int(field(it, "mode", ip), ip + "/mode"),
                                           as_int(field(it, "count", ip), ip + "/count"));
                if (u.iterate->first < 0 || u.iterate->first >= s.model.mode_count())
                    throw SchemaError(ip + "/mode", "mode out of range");
                if (u.iterate->second < 0 || u.lookahead + u.iterate->second > 8)
                    throw SchemaError(ip + "/count", "iterate count must keep the horizon within 8");
            }
            if (has(units[i], "optional"))
                u.optional = units[i]["optional"].get<bool>();
            s.units.push_back(std::move(u));
        }
        if (has(j, "x0")) {
            const json& xs = j["x0"];
            if (!xs.is_array())
                throw SchemaError("/x0", "expected a list of states");
            for (size_t i = 0; i < xs.size(); ++i) {
                Vector x = as_vector(xs[i], detail::child("/x0", i));
                if (x.size() != s.model.state_dim())
                    throw SchemaError(detail::child("/x0", i), "state has the wrong dimension");
                s.x0.push_back(std::move(x));
            }
        }
        if (has(j, "scan")) {
            const json& sc = j["scan"];
            ScanSettings st{as_vector(field(sc, "lo", "/scan"), "/scan/lo"), as_vector(field(sc, "hi", "/scan"), "/scan/hi"),
                            as_number(field(sc, "spacing", "/scan"), "/scan/spacing")};
            if (st.lo.size() != 2 || st.hi.size() != 2)
                throw SchemaError("/scan", "scans are two-dimensional");
            if (!(st.spacing > 0.0))
                throw SchemaError("/scan/spacing", "spacing must be positive");
            s.scan = st;
        }
    }
    if (has(j, "lowerbound"))
        s.lowerbound_m = detail::positive_int(field(j["lowerbound"], "m", "/lowerbound"), "/lowerbound/m");
    if (has(j, "max_steps"))
        s.max_steps = detail::positive_int(j["max_steps"], "/max_steps");
    if (has(j, "reference"))
        s.reference = as_string(j["reference"], "/reference");
    return s;
}

inline json scenario_json(const Scenario& s) {
    json out;
    out["name"] = s.name;
    if (!s.title.empty())
        out["title"] = s.title;
    if (!s.notes.empty())
        out["notes"] = s.notes;
    if (!s.assumptions.empty())
        out["assumptions"] = s.assumptions;
    json units = json::array();
    if (s.finite) {
        out["model"] = detail::graph_json(s.graph);
        for (const auto& u : s.finite_units) {
            json e{{"name", u.name}, {"lookahead", u.lookahead}};
            if (!u.base_policy.empty()) {
                json bp = json::object();
                for (const auto& [a, b] : u.base_policy)
                    bp[a] = b;
                e["base_policy"] = bp;
            } else {
                json t = json::object();
                for (const auto& [a, c] : u.terminal)
                    t[a] = cost_json(c);
                e["terminal"] = t;
            }
            units.push_back(e);
        }
        out["units"] = units;
        if (!s.start_states.empty())
            out["start_states"] = s.start_states;
    } else {
        out["model"] = control_model_json(s.model);
        for (const auto& u : s.units) {
            json e{{"name", u.name}, {"lookahead", u.lookahead}, {"recipe", detail::recipe_json(u.recipe)}};
            if (u.iterate)
                e["iterate"] = {{"mode", u.iterate->first}, {"count", u.iterate->second}};
            if (u.optional)
                e["optional"] = true;
            units.push_back(e);
        }
        out["units"] = units;
        json xs = json::array();
        for (const auto& x : s.x0)
            xs.push_back(vector_json(x));
        out["x0"] = xs;
        if (s.scan)
            out["scan"] = {{"lo", vector_json(s.scan->lo)}, {"hi", vector_json(s.scan->hi)}, {"spacing", s.scan->spacing}};
    }
    if (s.lowerbound_m)
        out["lowerbound"] = {{"m", *s.lowerbound_m}};
    out["max_steps"] = s.max_steps;
    if (!s.reference.empty())
        out["reference"] = s.reference;
    return out;
}

inline Scenario load_scenario(const std::string& path) {
    Scenario s = decode_file(path, [](const json& doc) { return as_scenario(doc); });
    s.source_dir = std::filesystem::path(path).parent_path().string();
    return s;
}

// ---- turning a scenario into units --------------------------------------

/// A continuous scenario with every unit designed and certified. Holds the
/// model the returned configurations point to, so it must outlive them.
struct PreparedScenario {
    ControlModel model;
    std::vector<design::DesignArtifact> artifacts;
    std::vector<rollout::RolloutUnitSpec> units;
    std::vector<std::string> skipped; // optional units left out, with the reason

    PreparedScenario() = default;
    PreparedScenario(const PreparedScenario&) = delete;
    PreparedScenario& operator=(const PreparedScenario&) = delete;

    [[nodiscard]] rollout::RolloutConfig config() const { return {&model, units, 1}; }

    [[nodiscard]] int unit_index(const std::string& name) const {
        for (size_t i = 0; i < units.size(); ++i)
            if (units[i].name == name)
                return static_cast<int>(i);
        return -1;
    }
};

namespace detail {

inline Matrix riccati_gain_for(const ControlModel& m, int mode) {
    numerics::require(mode >= 0 && mode < m.mode_count(), "riccati policy: mode out of range");
    const auto i = static_cast<size_t>(mode);
    return numerics::riccati_gain(m.A[i], m.B[i], m.R, numerics::dare(m.A[i], m.B[i], m.Q, m.R));
}

inline Policy resolve_policy(const ControlModel& m, const PolicySpec& s) {
    switch (s.source) {
    case PolicySpec::Source::Riccati: {
        const Matrix L = riccati_gain_for(m, s.mode);
        return m.dynamics == DynamicsKind::Switched ? Policy(SwitchedGain{L, s.mode}) : Policy(LinearGain{L});
    }
    case PolicySpec::Source::PiecewiseRiccati:
        numerics::require(m.dynamics == DynamicsKind::PiecewiseAffine, "piecewise_riccati policy needs piecewise-affine dynamics");
        return PiecewiseGain{riccati_gain_for(m, 0), riccati_gain_for(m, 1)};
    case PolicySpec::Source::Given: break;
    }
    return s.given;
}

/// Maximal admissible invariant set for a linear (or fixed-mode) gain.
inline geometry::Polytope invariant_set_for(const ControlModel& m, const Policy& policy) {
    const Matrix* L = nullptr;
    int mode = 0;
    if (const auto* g = std::get_if<LinearGain>(&policy))
        L = &g->L;
    else if (const auto* s = std::get_if<SwitchedGain>(&policy)) {
        L = &s->L;
        mode = s->mode;
    }
    numerics::require(L != nullptr, "invariant terminal set needs a linear gain");
    const auto i = static_cast<size_t>(mode);
    auto inv = geometry::invariant_set(m.A[i] + m.B[i] * *L, design::admissible_region(m, *L));
    numerics::require(!geometry::is_empty(inv.set), "invariant terminal set is empty");
    return inv.set;
}

inline design::DesignArtifact design_unit(const Scenario& s, const UnitEntry& u) {
    const ControlModel& m = s.model;
    const RecipeSpec& r = u.recipe;
    design::DesignArtifact art;
    if (r.kind == "riccati") {
        art = design::design_riccati_terminal(m, r.mode);
    } else if (r.kind == "trial_gain") {
        const auto mode = r.set == "sublevel"   ? design::SetMode::Sublevel
                          : r.set == "polytope" ? design::SetMode::Polytope
                                                : design::SetMode::WholeSpace;
        art = design::design_trial_gain_terminal(m, r.L, mode, r.mode);
    } else if (r.kind == "norm_lyapunov") {
        const Policy pol = design::detail::gain_policy(m, r.L, r.mode);
        TerminalSet set = WholeSpace{};
        if (r.set == "invariant")
            set = invariant_set_for(m, pol);
        art = design::design_norm_lyapunov(m, r.L, r.p, std::move(set), r.mode);
    } else if (r.kind == "literal") {
        const Policy pol = resolve_policy(m, r.policy);
        TerminalIngredient t{r.value, r.given_set};
        if (r.invariant_set)
            t.set = invariant_set_for(m, pol);
        art = design::literal_artifact(m, u.name, pol, std::move(t));
    } else if (r.kind == "artifact") {
        art = load_artifact(s.resolve(r.path));
        art.certify(m);
    } else {
        throw Error("unknown recipe kind '" + r.kind + "'");
    }
    art.name = u.name;
    return art;
}

} // namespace detail

/// Designs every unit. Optional units whose artifact file is missing are
/// skipped and listed in `skipped`.
inline void prepare(const Scenario& s, PreparedScenario& out) {
    numerics::require(!s.finite, "prepare: finite scenarios have no continuous units");
    out.model = s.model;
    out.artifacts.clear();
    out.units.clear();
    out.skipped.clear();
    for (const auto& u : s.units) {
        if (u.optional && u.recipe.kind == "artifact" && !std::filesystem::exists(s.resolve(u.recipe.path))) {
            out.skipped.push_back(u.name + " (artifact " + u.recipe.path + " not supplied)");
            continue;
        }
        design::DesignArtifact art = detail::design_unit(s, u);
        rollout::RolloutUnitSpec spec;
        if (u.iterate)
            spec = design::design_simplified_iterate(art, u.lookahead, u.iterate->first, u.iterate->second);
        else
            spec = {u.name, u.lookahead, art.terminal, {}};
        spec.name = u.name;
        out.artifacts.push_back(std::move(art));
        out.units.push_back(std::move(spec));
    }
    numerics::require(!out.units.empty(), "prepare: no usable units");
}

/// Finite scenario units as (lookahead, J_i) tables.
inline std::vector<finite::FiniteUnit> finite_units(const Scenario& s) {
    numerics::require(s.finite, "finite_units: scenario is not finite");
    std::vector<finite::FiniteUnit> out;
    for (const auto& u : s.finite_units) {
        finite::FiniteUnit fu{u.lookahead, {}};
        if (!u.base_policy.empty()) {
            finite::FinitePolicy mu(static_cast<size_t>(s.graph.size()), 0);
            for (const auto& [from, to] : u.base_policy) {
                const int x = s.graph.index_of(from);
                const int y = s.graph.index_of(to);
                int found = -1;
                for (int c = 0; c < s.graph.control_count(x); ++c)
                    if (s.graph.edge(x, c).next == y)
                        found = c;
                numerics::require(found >= 0, "unit " + u.name + ": no street from " + from + " to " + to);
                mu[static_cast<size_t>(x)] = found;
            }
            fu.terminal = finite::exact_policy_cost(s.graph, mu);
        } else {
            fu.terminal.assign(static_cast<size_t>(s.graph.size()), ExtendedCost::infinity());
            for (const auto& [state, c] : u.terminal)
                fu.terminal[static_cast<size_t>(s.graph.index_of(state))] = c;
        }
        out.push_back(std::move(fu));
    }
    return out;
}

} // namespace prollout::io
