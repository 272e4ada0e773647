#pragma once

#include <ostream>
#include <random>

#include "../finite/properties.hpp"
#include "../planners/grid_oracle.hpp"
#include "reference.hpp"

namespace prollout::app {

struct CheckLine {
    std::string label;
    bool pass = true;
    std::string detail;
};

struct SuiteReport {
    std::string name;
    std::vector<CheckLine> lines;

    [[nodiscard]] bool pass() const {
        return std::all_of(lines.begin(), lines.end(), [](const CheckLine& l) { return l.pass; });
    }
    void add(std::string label, bool ok, std::string detail = {}) {
        lines.push_back({std::move(label), ok, std::move(detail)});
    }
    void print(std::ostream& os) const {
        os << name << "\n";
        for (const auto& l : lines)
            os << "  " << (l.pass ? "ok   " : "FAIL ") << l.label << (l.detail.empty() ? "" : ": " + l.detail) << "\n";
    }
};

inline std::string data_path(const std::string& data_dir, const std::string& rel) {
    return (std::filesystem::path(data_dir) / rel).string();
}

// ---- finite-model properties --------------------------------------------

inline SuiteReport finite_suite(std::uint64_t seed, int instances = 100) {
    SuiteReport rep;
    rep.name = "finite-model properties (" + std::to_string(instances) + " random models, seed " + std::to_string(seed) + ")";
    for (const auto& r : finite::finite_property_suite(seed, instances))
        rep.add(r.name, r.pass, std::to_string(r.checks) + " checks" + (r.pass ? "" : "; " + r.detail));
    return rep;
}

// ---- planner against grid oracle ----------------------------------------

struct OracleInstance {
    ControlModel model;
    planners::LookaheadProblem problem; // points at `model`; do not copy
};

/// Random two-state, scalar-input instance. Quadratic instances draw a
/// terminal set among none, a box and a sublevel set; norm instances among
/// none and a box.
inline std::unique_ptr<OracleInstance> random_oracle_instance(std::mt19937_64& rng, CostKind cost) {
    std::uniform_real_distribution<double> entry(-1.2, 1.2);
    std::uniform_real_distribution<double> pos(0.2, 2.0);
    std::uniform_real_distribution<double> coord(-2.0, 2.0);
    std::uniform_int_distribution<int> pick(0, 2);
    auto inst = std::make_unique<OracleInstance>();
    ControlModel& m = inst->model;
    m.A = {Matrix(2, 2)};
    m.A[0] << entry(rng), entry(rng), entry(rng), entry(rng);
    m.B = {Matrix(2, 1)};
    m.B[0] << entry(rng), entry(rng);
    m.cost = cost;
    m.Q = Matrix::Identity(2, 2) * pos(rng);
    m.R = Matrix::Constant(1, 1, pos(rng));
    m.input_bound = 1.0;
    m.state_constraints = geometry::Polytope::box(2, 3.0);
    Matrix M(2, 2);
    M << entry(rng), entry(rng), entry(rng), entry(rng);
    TerminalIngredient t;
    const int set_kind = pick(rng);
    if (cost == CostKind::Quadratic) {
        const Matrix K = M.transpose() * M + 0.2 * Matrix::Identity(2, 2);
        t.value = QuadraticValue{K};
        if (set_kind == 1)
            t.set = geometry::Polytope::box(2, 0.5 + pos(rng));
        else if (set_kind == 2)
            t.set = SublevelSet{K, 0.5 + 2.0 * pos(rng)};
    } else {
        t.value = NormValue{M + Matrix::Identity(2, 2), cost};
        if (set_kind != 0)
            t.set = geometry::Polytope::box(2, 0.5 + pos(rng));
    }
    const int horizon = 1 + pick(rng) % 2;
    Vector x0(2);
    x0 << coord(rng), coord(rng);
    inst->problem = {&inst->model, horizon, t, {}, x0};
    return inst;
}

inline bool oracle_agrees(ExtendedCost exact, ExtendedCost grid, double rel) {
    if (exact.is_infinite() || grid.is_infinite())
        return exact.is_infinite() && grid.is_infinite();
    return std::abs(exact.value() - grid.value()) <= rel * std::max(1.0, std::abs(grid.value()));
}

inline SuiteReport planner_oracle_suite(std::uint64_t seed, int quadratic = 50, int norm = 25, double resolution = 1e-3) {
    SuiteReport rep;
    rep.name = "planner against grid oracle (seed " + std::to_string(seed) + ", resolution " + std::to_string(resolution) + ")";
    std::mt19937_64 rng(seed);
    struct Batch {
        std::string label;
        int count;
    };
    for (const Batch& b : {Batch{"quadratic", quadratic}, Batch{"norm", norm}}) {
        int agree = 0, infeasible = 0;
        std::string first_bad;
        for (int i = 0; i < b.count; ++i) {
            const CostKind cost = b.label == "quadratic" ? CostKind::Quadratic : (i % 2 ? CostKind::NormInf : CostKind::Norm1);
            const auto inst = random_oracle_instance(rng, cost);
            const auto exact = planners::solve_unit(inst->problem);
            const auto grid = planners::grid_oracle(inst->problem, resolution);
            const bool ok = oracle_agrees(exact.value, grid.value, 1e-2);
            agree += ok ? 1 : 0;
            infeasible += exact.value.is_infinite() && grid.value.is_infinite() ? 1 : 0;
            if (!ok && first_bad.empty())
                first_bad = "instance " + std::to_string(i) + ": planner " + format_cost(exact.value, 10) + ", grid " +
                            format_cost(grid.value, 10);
        }
        rep.add(b.label + " instances within 1e-2 relative or both infeasible", agree == b.count,
                std::to_string(agree) + "/" + std::to_string(b.count) + " agree (" + std::to_string(infeasible) +
                    " both infeasible)" + (first_bad.empty() ? "" : "; " + first_bad));
    }
    return rep;
}

// ---- design certificates ------------------------------------------------

inline Matrix policy_gain(const Policy& p) {
    if (const auto* g = std::get_if<LinearGain>(&p))
        return g->L;
    if (const auto* s = std::get_if<SwitchedGain>(&p))
        return s->L;
    throw Error("policy_gain: piecewise policy has no single gain");
}

/// Every artifact of the shipped continuous scenarios, the relaxed-slack
/// check of the printed open-loop K4, the recomputed K4 artifact, and the
/// direction check of the printed norm matrices.
inline SuiteReport certificate_suite(const std::string& data_dir) {
    SuiteReport rep;
    rep.name = "design certificates (10^4 samples, slack >= -1e-8)";
    for (const char* ex : {"ex2", "ex3", "ex4", "ex5", "ex6", "ex7"}) {
        const io::Scenario s = io::load_scenario(data_path(data_dir, std::string("scenarios/") + ex + ".json"));
        io::PreparedScenario prep;
        io::prepare(s, prep);
        for (const auto& a : prep.artifacts)
            rep.add(std::string(ex) + " " + a.name + " (" + design::to_string(a.kind) + ")", a.certified, a.certificate.summary());

        if (std::string(ex) == "ex6") {
            const int i = prep.unit_index("open_loop");
            if (i >= 0) {
                const auto& a = prep.artifacts[static_cast<size_t>(i)];
                design::CertificateOptions relaxed;
                relaxed.slack = -1e-2 * Eigen::JacobiSVD<Matrix>(prep.model.Q).singularValues()(0);
                relaxed.sample_region = prep.model.state_constraints;
                const auto r = design::certify_terminal(prep.model, a.policy, a.terminal, relaxed);
                rep.add("ex6 printed K4 with relaxed slack -1e-2 ||Q||", r.pass, r.summary());
            }
            const std::string alt = data_path(data_dir, "artifacts/ex6_unit4_recomputed.json");
            auto art = io::load_artifact(alt);
            art.certify(prep.model);
            rep.add("ex6 recomputed K4 artifact", art.certified, art.certificate.summary());
            const Matrix K4 = numerics::dlyap(prep.model.A[0], prep.model.Q);
            const Matrix K4b = numerics::dlyap(prep.model.A[1], prep.model.Q);
            std::ostringstream os;
            os << "dlyap for the shipped dynamics gives " << std::setprecision(6) << K4(0, 0) << " I and " << K4b(0, 0)
               << " I";
            rep.add("ex6 K4 recomputed by dlyap", std::abs(K4(0, 0) - K4(1, 1)) < 1e-9, os.str());
        }
        if (std::string(ex) == "ex4" || std::string(ex) == "ex5") {
            for (size_t i = 0; i < prep.artifacts.size(); ++i) {
                const auto& a = prep.artifacts[i];
                const auto* v = std::get_if<NormValue>(&a.terminal.value);
                if (v == nullptr)
                    continue;
                const auto d = design::check_norm_decrease(prep.model.A[0], prep.model.B[0], prep.model.Q, prep.model.R,
                                                           policy_gain(a.policy), v->K, v->norm);
                std::ostringstream os;
                os << "360 directions, min slack " << d.min_slack << "; matrix-norm inequality " << d.lemma_lhs
                   << " <= " << d.lemma_rhs << (d.lemma_holds() ? " holds" : " fails");
                rep.add(std::string(ex) + " " + a.name + " printed norm matrix decreases", d.pass, os.str());
            }
        }
    }
    return rep;
}

} // namespace prollout::app
