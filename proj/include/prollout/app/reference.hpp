#pragma once

#include <iomanip>
#include <map>
#include <ostream>

#include "../core/evaluation.hpp"
#include "../io/scenario.hpp"
#include "../rollout/analysis.hpp"

namespace prollout::app {

using io::json;
using io::SchemaError;

/// What a reference column measures at a row's initial state.
///   unit         J~_i(x0) of the named unit
///   policy_cost  closed-loop cost of the named unit's base policy
///   bound        min_i J~_i(x0)
///   rollout      cost of the parallel rollout policy from x0
///   lowerbound   (T^m J0)(x0)
///   gap          (J_mu~ - T^m J0) / J_mu~
///   selected     1-based index of the selected unit
///   optimal      J*(x0) (finite models)
struct ColumnSpec {
    std::string id;
    std::string label;
    std::string quantity;
    std::string unit;
    int m = 8;
    std::string requires_unit; // skipped when this unit is absent
};

/// Expected value with tolerance. `below` replaces value/tolerance with a
/// strict upper threshold.
struct CellSpec {
    std::optional<ExtendedCost> value;
    double abs_tol = 0.0;
    double rel_tol = 0.0;
    std::optional<double> below;
    std::string provenance;
    std::string note;

    [[nodiscard]] std::string expected_text() const {
        std::ostringstream os;
        if (below) {
            os << "< " << *below;
        } else if (value) {
            if (value->is_infinite()) {
                os << "inf";
            } else {
                os << value->value();
                if (abs_tol > 0)
                    os << " +- " << abs_tol;
                else if (rel_tol > 0)
                    os << " +- " << rel_tol * 100 << "%";
            }
        }
        return os.str();
    }

    [[nodiscard]] bool accepts(ExtendedCost c) const {
        if (below)
            return c.is_finite() && c.value() < *below;
        if (!value)
            return false;
        if (value->is_infinite() || c.is_infinite())
            return value->is_infinite() && c.is_infinite();
        const double err = std::abs(c.value() - value->value());
        return err <= abs_tol + rel_tol * std::abs(value->value()) + 1e-12;
    }
};

struct RowSpec {
    std::string label;
    Vector x0;
    std::string state;
    std::map<std::string, CellSpec> cells;
};

struct ReferenceTable {
    std::string example;
    std::string source;
    std::vector<std::string> notes;
    std::vector<ColumnSpec> columns;
    std::vector<RowSpec> rows;
};

inline ReferenceTable as_reference(const json& j) {
    using io::as_number;
    using io::as_string;
    using io::field;
    using io::has;
    ReferenceTable t;
    t.example = as_string(field(j, "example", ""), "/example");
    if (has(j, "source"))
        t.source = as_string(j["source"], "/source");
    if (has(j, "notes"))
        t.notes = io::detail::as_string_list(j["notes"], "/notes");
    const json& cols = field(j, "columns", "");
    for (size_t i = 0; i < cols.size(); ++i) {
        const std::string cp = "/columns/" + std::to_string(i);
        ColumnSpec c;
        c.id = as_string(field(cols[i], "id", cp), cp + "/id");
        c.label = has(cols[i], "label") ? as_string(cols[i]["label"], cp + "/label") : c.id;
        c.quantity = as_string(field(cols[i], "quantity", cp), cp + "/quantity");
        static const std::vector<std::string> known{"unit", "policy_cost", "bound", "rollout", "lowerbound",
                                                    "gap", "selected", "optimal"};
        if (std::find(known.begin(), known.end(), c.quantity) == known.end())
            throw SchemaError(cp + "/quantity", "unknown quantity '" + c.quantity + "'");
        if (has(cols[i], "unit"))
            c.unit = as_string(cols[i]["unit"], cp + "/unit");
        if ((c.quantity == "unit" || c.quantity == "policy_cost") && c.unit.empty())
            throw SchemaError(cp, "quantity '" + c.quantity + "' needs a unit");
        if (has(cols[i], "m"))
            c.m = io::detail::positive_int(cols[i]["m"], cp + "/m");
        if (has(cols[i], "requires_unit"))
            c.requires_unit = as_string(cols[i]["requires_unit"], cp + "/requires_unit");
        t.columns.push_back(c);
    }
    const json& rows = field(j, "rows", "");
    for (size_t i = 0; i < rows.size(); ++i) {
        const std::string rp = "/rows/" + std::to_string(i);
        RowSpec r;
        if (has(rows[i], "x0"))
            r.x0 = io::as_vector(rows[i]["x0"], rp + "/x0");
        if (has(rows[i], "state"))
            r.state = as_string(rows[i]["state"], rp + "/state");
        r.label = has(rows[i], "label") ? as_string(rows[i]["label"], rp + "/label") : r.state;
        const json& cells = field(rows[i], "cells", rp);
        for (const auto& [id, cj] : cells.items()) {
            const std::string cp = rp + "/cells/" + id;
            const bool known = std::any_of(t.columns.begin(), t.columns.end(), [&](const ColumnSpec& c) { return c.id == id; });
            if (!known)
                throw SchemaError(cp, "no column '" + id + "'");
            CellSpec c;
            if (has(cj, "below"))
                c.below = as_number(cj["below"], cp + "/below");
            else
                c.value = io::as_cost(field(cj, "value", cp), cp + "/value");
            if (has(cj, "abs_tol"))
                c.abs_tol = as_number(cj["abs_tol"], cp + "/abs_tol");
            if (has(cj, "rel_tol"))
                c.rel_tol = as_number(cj["rel_tol"], cp + "/rel_tol");
            c.provenance = as_string(field(cj, "provenance", cp), cp + "/provenance");
            if (has(cj, "note"))
                c.note = as_string(cj["note"], cp + "/note");
            r.cells[id] = c;
        }
        t.rows.push_back(std::move(r));
    }
    return t;
}

inline ReferenceTable load_reference(const std::string& path) {
    return io::decode_file(path, [](const json& doc) { return as_reference(doc); });
}

// ---- comparison ---------------------------------------------------------

enum class CellStatus { Pass, Fail, Skip };

struct CellOutcome {
    std::string row;
    std::string column;
    std::string expected;
    std::string computed;
    CellStatus status = CellStatus::Skip;
    std::string provenance;
    std::string note;
};

struct ExampleReport {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::string> rows;
    std::vector<CellOutcome> cells;
    std::vector<std::string> notes;

    [[nodiscard]] int count(CellStatus s) const {
        return static_cast<int>(std::count_if(cells.begin(), cells.end(), [&](const CellOutcome& c) { return c.status == s; }));
    }
    [[nodiscard]] bool pass() const { return count(CellStatus::Fail) == 0; }

    [[nodiscard]] const CellOutcome* find(const std::string& row, const std::string& column) const {
        for (const auto& c : cells)
            if (c.row == row && c.column == column)
                return &c;
        return nullptr;
    }

    void print(std::ostream& os) const {
        os << name << "\n";
        std::vector<size_t> width{3};
        for (const auto& r : rows)
            width[0] = std::max(width[0], r.size());
        auto text = [](const CellOutcome* c) -> std::string {
            if (c == nullptr)
                return "";
            const char* tag = c->status == CellStatus::Pass ? "ok" : c->status == CellStatus::Fail ? "FAIL" : "skip";
            if (c->status == CellStatus::Skip)
                return std::string(tag);
            return c->computed + " (" + c->expected + ") " + tag;
        };
        for (const auto& col : columns) {
            size_t w = col.size();
            for (const auto& r : rows)
                w = std::max(w, text(find(r, col)).size());
            width.push_back(w);
        }
        os << "  " << std::left << std::setw(static_cast<int>(width[0])) << "x0";
        for (size_t i = 0; i < columns.size(); ++i)
            os << " | " << std::setw(static_cast<int>(width[i + 1])) << columns[i];
        os << "\n";
        for (const auto& r : rows) {
            os << "  " << std::setw(static_cast<int>(width[0])) << r;
            for (size_t i = 0; i < columns.size(); ++i)
                os << " | " << std::setw(static_cast<int>(width[i + 1])) << text(find(r, columns[i]));
            os << "\n";
        }
        os << std::right;
        for (const auto& c : cells)
            if (c.status == CellStatus::Fail)
                os << "  mismatch at row " << c.row << ", column " << c.column << ": computed " << c.computed
                   << ", expected " << c.expected << (c.note.empty() ? "" : " (" + c.note + ")") << "\n";
        for (const auto& n : notes)
            os << "  note: " << n << "\n";
        os << "  " << count(CellStatus::Pass) << " ok, " << count(CellStatus::Fail) << " failed, "
           << count(CellStatus::Skip) << " skipped\n";
    }
};

inline std::string format_cost(ExtendedCost c, int digits = 6) {
    if (c.is_infinite())
        return "inf";
    std::ostringstream os;
    os << std::setprecision(digits) << c.value();
    return os.str();
}

inline std::string state_label(const Vector& x) {
    std::ostringstream os;
    os << "[";
    for (Eigen::Index i = 0; i < x.size(); ++i)
        os << (i ? " " : "") << x(i);
    os << "]";
    return os.str();
}

/// Per-row quantities, computed on first use.
class RowEvaluator {
public:
    RowEvaluator(const io::PreparedScenario& prep, const Vector& x0, int workers, int max_steps)
        : prep_(prep), x0_(x0), workers_(workers), max_steps_(max_steps) {}

    const rollout::StepRecord& step() {
        if (!step_)
            step_ = rollout::coordinator_step(prep_.config(), x0_, workers_);
        return *step_;
    }

    const rollout::Trajectory& trajectory() {
        if (!traj_) {
            rollout::SimulationOptions opt;
            opt.workers = workers_;
            opt.max_steps = max_steps_;
            traj_ = rollout::closed_loop_simulate(prep_.config(), x0_, opt);
        }
        return *traj_;
    }

    ExtendedCost rollout_cost() {
        const auto& t = trajectory();
        return t.reason == rollout::Termination::Converged ? t.cost() : ExtendedCost::infinity();
    }

    ExtendedCost lower_bound(int m) {
        auto it = lb_.find(m);
        if (it == lb_.end())
            it = lb_.emplace(m, rollout::value_iteration_bound(prep_.model, x0_, m).value).first;
        return it->second;
    }

    ExtendedCost policy_cost(const std::string& unit) {
        const int i = prep_.unit_index(unit);
        numerics::require(i >= 0, "no unit named '" + unit + "'");
        return evaluate_policy_cost(prep_.model, prep_.artifacts[static_cast<size_t>(i)].policy, x0_).cost;
    }

private:
    const io::PreparedScenario& prep_;
    Vector x0_;
    int workers_;
    int max_steps_;
    std::optional<rollout::StepRecord> step_;
    std::optional<rollout::Trajectory> traj_;
    std::map<int, ExtendedCost> lb_;
};

namespace detail {

inline void record(ExampleReport& rep, const std::string& row, const ColumnSpec& col, const CellSpec& spec,
                   const std::optional<ExtendedCost>& computed, const std::string& skip_reason = {}) {
    CellOutcome c{row, col.label, spec.expected_text(), "", CellStatus::Skip, spec.provenance, spec.note};
    if (!computed) {
        c.computed = "-";
        if (!skip_reason.empty())
            c.note = skip_reason;
    } else {
        c.computed = format_cost(*computed);
        c.status = spec.accepts(*computed) ? CellStatus::Pass : CellStatus::Fail;
    }
    rep.cells.push_back(std::move(c));
}

} // namespace detail

/// Evaluates every reference cell of a continuous scenario.
inline ExampleReport compare_continuous(const io::Scenario& s, const io::PreparedScenario& prep, const ReferenceTable& ref,
                                        int workers) {
    ExampleReport rep;
    rep.name = s.name + (ref.source.empty() ? "" : " against " + ref.source);
    for (const auto& c : ref.columns)
        rep.columns.push_back(c.label);
    for (const auto& sk : prep.skipped)
        rep.notes.push_back("unit skipped: " + sk);
    for (const auto& row : ref.rows) {
        const std::string label = row.label.empty() ? state_label(row.x0) : row.label;
        rep.rows.push_back(label);
        RowEvaluator ev(prep, row.x0, workers, s.max_steps);
        for (const auto& col : ref.columns) {
            const auto it = row.cells.find(col.id);
            if (it == row.cells.end())
                continue;
            const CellSpec& spec = it->second;
            if (!col.requires_unit.empty() && prep.unit_index(col.requires_unit) < 0) {
                detail::record(rep, label, col, spec, std::nullopt, "needs unit " + col.requires_unit);
                continue;
            }
            std::optional<ExtendedCost> v;
            if (col.quantity == "unit") {
                const int i = prep.unit_index(col.unit);
                if (i < 0) {
                    detail::record(rep, label, col, spec, std::nullopt, "unit " + col.unit + " not present");
                    continue;
                }
                v = ev.step().values[static_cast<size_t>(i)];
            } else if (col.quantity == "policy_cost") {
                v = ev.policy_cost(col.unit);
            } else if (col.quantity == "bound") {
                v = ev.step().bound;
            } else if (col.quantity == "rollout") {
                v = ev.rollout_cost();
            } else if (col.quantity == "lowerbound") {
                v = ev.lower_bound(col.m);
            } else if (col.quantity == "gap") {
                const ExtendedCost j = ev.rollout_cost();
                const ExtendedCost lb = ev.lower_bound(col.m);
                if (j.is_finite() && lb.is_finite() && j.value() > 0)
                    v = ExtendedCost::from_numeric((j.value() - lb.value()) / j.value(), 1e-6);
                else
                    v = ExtendedCost::infinity();
            } else if (col.quantity == "selected") {
                v = ExtendedCost(static_cast<double>(ev.step().selected + 1));
            } else {
                throw SchemaError("", "quantity '" + col.quantity + "' is not defined for continuous scenarios");
            }
            detail::record(rep, label, col, spec, v);
        }
    }
    return rep;
}

/// Evaluates every reference cell of a finite scenario.
inline ExampleReport compare_finite(const io::Scenario& s, const ReferenceTable& ref) {
    ExampleReport rep;
    rep.name = s.name + (ref.source.empty() ? "" : " against " + ref.source);
    for (const auto& c : ref.columns)
        rep.columns.push_back(c.label);
    const auto units = io::finite_units(s);
    const auto jstar = finite::optimal_cost(s.graph);
    for (const auto& row : ref.rows) {
        rep.rows.push_back(row.label);
        const int x = s.graph.index_of(row.state);
        const auto step = finite::parallel_rollout_finite(s.graph, units, x);
        for (const auto& col : ref.columns) {
            const auto it = row.cells.find(col.id);
            if (it == row.cells.end())
                continue;
            std::optional<ExtendedCost> v;
            if (col.quantity == "unit") {
                for (size_t i = 0; i < s.finite_units.size(); ++i)
                    if (s.finite_units[i].name == col.unit)
                        v = step.values[i];
                if (!v)
                    throw SchemaError("", "no finite unit named '" + col.unit + "'");
            } else if (col.quantity == "bound") {
                v = step.values[static_cast<size_t>(step.selected)];
            } else if (col.quantity == "selected") {
                v = ExtendedCost(static_cast<double>(step.selected + 1));
            } else if (col.quantity == "optimal") {
                v = jstar[static_cast<size_t>(x)];
            } else if (col.quantity == "rollout") {
                v = finite::exact_policy_cost(s.graph, finite::rollout_policy(s.graph, units))[static_cast<size_t>(x)];
            } else {
                throw SchemaError("", "quantity '" + col.quantity + "' is not defined for finite scenarios");
            }
            detail::record(rep, row.label, col, it->second, v);
        }
    }
    return rep;
}

} // namespace prollout::app
