// prollout: parallel rollout command-line front end.
//
//   prollout design     --scenario S [--out artifacts.json]
//   prollout rollout    --scenario S [--x0 "a,b"] [--steps N] [--out traj.csv] [--workers N]
//   prollout scan       --scenario S [--spacing F] [--out scan.csv] [--workers N]
//   prollout lowerbound --scenario S [--m N] [--x0 "a,b"]...
//   prollout verify     finite|planner-oracle|certificates [--seed N]
//   prollout examples   ex1..ex7|all [--workers N] [--out DIR]
//
// Exit codes: 0 success, 1 tolerance failure, 2 schema error, 3 solver or
// certificate failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "prollout/app/suites.hpp"

using namespace prollout;

namespace {

constexpr int kOk = 0;
constexpr int kTolerance = 1;
constexpr int kSchema = 2;
constexpr int kSolver = 3;

struct Options {
    std::string scenario;
    std::vector<std::string> x0;
    int steps = 200;
    double spacing = 0.0;
    int m = 0;
    std::string out;
    int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    std::uint64_t seed = 20240601;
    std::string target;
};

std::string data_dir() {
    if (const char* env = std::getenv("PROLLOUT_DATA"))
        return env;
    return PROLLOUT_DATA_DIR;
}

Vector parse_state(const std::string& text, Eigen::Index dim) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ','))
        try {
            v.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw io::SchemaError("--x0", "'" + text + "' is not a comma-separated list of numbers");
        }
    if (static_cast<Eigen::Index>(v.size()) != dim)
        throw io::SchemaError("--x0", "expected " + std::to_string(dim) + " components, got " + std::to_string(v.size()));
    return Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<Vector> initial_states(const Options& o, const io::Scenario& s) {
    std::vector<Vector> xs;
    for (const auto& t : o.x0)
        xs.push_back(parse_state(t, s.model.state_dim()));
    if (xs.empty())
        xs = s.x0;
    if (xs.empty())
        throw io::SchemaError("/x0", "scenario has no initial states; pass --x0");
    return xs;
}

/// Output goes to --out when given, otherwise to stdout.
class Sink {
public:
    explicit Sink(const std::string& path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_)
                throw Error("cannot write " + path);
        }
    }
    std::ostream& get() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

// ---- commands -----------------------------------------------------------

int cmd_design(const Options& o) {
    const io::Scenario s = io::load_scenario(o.scenario);
    if (s.finite) {
        std::cout << s.name << ": finite scenario, units use exact policy costs; nothing to design\n";
        return kOk;
    }
    io::PreparedScenario prep;
    io::prepare(s, prep);
    io::json doc{{"scenario", s.name}, {"artifacts", io::json::array()}};
    bool all = true;
    for (const auto& a : prep.artifacts) {
        doc["artifacts"].push_back(io::artifact_json(a));
        std::cout << a.name << " [" << design::to_string(a.kind) << "] " << (a.certified ? "certified" : "NOT CERTIFIED")
                  << ": " << a.certificate.summary() << "\n";
        if (!a.note.empty())
            std::cout << "  note: " << a.note << "\n";
        all = all && a.certified;
    }
    for (const auto& sk : prep.skipped)
        std::cout << "skipped " << sk << "\n";
    if (!o.out.empty()) {
        Sink sink(o.out);
        sink.get() << doc.dump(2) << "\n";
    }
    return all ? kOk : kSolver;
}

int finite_rollout(const io::Scenario& s, const Options& o) {
    const auto units = io::finite_units(s);
    const auto mu = finite::rollout_policy(s.graph, units);
    const auto cost = finite::exact_policy_cost(s.graph, mu);
    std::vector<std::string> starts = s.start_states;
    if (starts.empty())
        starts = s.graph.names;
    Sink sink(o.out);
    std::ostream& os = sink.get();
    os << "k,state,selected_unit,next,stage_cost";
    for (size_t i = 0; i < units.size(); ++i)
        os << ",J" << i + 1;
    os << "\n";
    for (const auto& name : starts) {
        int x = s.graph.index_of(name);
        for (int k = 0; k < std::min(o.steps, s.graph.size() + 1); ++k) {
            const auto step = finite::parallel_rollout_finite(s.graph, units, x);
            const auto& e = s.graph.edge(x, step.first_control);
            os << k << ',' << s.graph.name(x) << ',' << step.selected + 1 << ',' << s.graph.name(e.next) << ','
               << to_string(e.cost);
            for (const auto& v : step.values)
                os << ',' << to_string(v);
            os << "\n";
            if (e.next == x)
                break;
            x = e.next;
        }
        std::cerr << "rollout cost from " << name << ": " << to_string(cost[static_cast<size_t>(s.graph.index_of(name))])
                  << "\n";
    }
    return kOk;
}

int cmd_rollout(const Options& o) {
    const io::Scenario s = io::load_scenario(o.scenario);
    if (s.finite)
        return finite_rollout(s, o);
    io::PreparedScenario prep;
    io::prepare(s, prep);
    const auto xs = initial_states(o, s);
    rollout::SimulationOptions sim;
    sim.max_steps = o.steps;
    sim.workers = o.workers;
    const auto traj = rollout::closed_loop_simulate(prep.config(), xs.front(), sim);
    Sink sink(o.out);
    rollout::write_trajectory_csv(sink.get(), traj, prep.model);
    std::cerr << s.name << " from " << app::state_label(xs.front()) << ": " << rollout::to_string(traj.reason) << " after "
              << traj.steps.size() << " steps, cost " << app::format_cost(traj.cost(), 10) << ", initial bound "
              << app::format_cost(traj.initial_bound(), 10) << (traj.bound_respected ? "" : ", BOUND EXCEEDED")
              << (traj.bound_decreasing ? "" : ", BOUND INCREASED") << "\n";
    bool certified = true;
    for (const auto& r : traj.steps)
        certified = certified && r.certified;
    if (!certified)
        std::cerr << "warning: some planner solutions were not certified\n";
    return certified ? kOk : kSolver;
}

int cmd_scan(const Options& o) {
    const io::Scenario s = io::load_scenario(o.scenario);
    if (s.finite || s.model.state_dim() != 2)
        throw io::SchemaError("/model", "scans need a two-state continuous model");
    io::PreparedScenario prep;
    io::prepare(s, prep);
    Vector lo = Vector::Constant(2, -5.0), hi = Vector::Constant(2, 5.0);
    double spacing = 0.1;
    if (s.scan) {
        lo = s.scan->lo;
        hi = s.scan->hi;
        spacing = s.scan->spacing;
    }
    if (o.spacing > 0)
        spacing = o.spacing;
    rollout::SimulationOptions sim;
    sim.max_steps = s.max_steps;
    const auto scans = rollout::support_scan_rollout(prep.config(), lo, hi, spacing, static_cast<unsigned>(o.workers), sim);
    Sink sink(o.out);
    std::ostream& os = sink.get();
    os << "x1,x2,jbar_unit,rollout_unit\n" << std::setprecision(10);
    for (int iy = 0; iy < scans.jbar.ny; ++iy)
        for (int ix = 0; ix < scans.jbar.nx; ++ix) {
            const Vector x = scans.jbar.point(ix, iy);
            const auto& a = scans.jbar.label(ix, iy);
            const auto& b = scans.rollout.label(ix, iy);
            os << x(0) << ',' << x(1) << ',' << (a ? std::to_string(*a) : "inf") << ',' << (b ? std::to_string(*b) : "inf")
               << "\n";
        }
    size_t margin = 0, outside = 0;
    for (size_t i = 0; i < scans.jbar.labels.size(); ++i) {
        margin += !scans.jbar.labels[i] && scans.rollout.labels[i] ? 1 : 0;
        outside += scans.jbar.labels[i] && !scans.rollout.labels[i] ? 1 : 0;
    }
    std::cerr << s.name << " scan " << scans.jbar.nx << " x " << scans.jbar.ny << " at spacing " << spacing
              << ": support(Jbar) " << scans.jbar.finite_count() << " points, support(J_mu~) "
              << scans.rollout.finite_count() << " points, " << margin << " only in support(J_mu~), " << outside
              << " only in support(Jbar)\n";
    return kOk;
}

int cmd_lowerbound(const Options& o) {
    const io::Scenario s = io::load_scenario(o.scenario);
    const int m = o.m > 0 ? o.m : s.lowerbound_m.value_or(8);
    if (s.finite) {
        const auto seq = finite::value_iteration_sequence(s.graph, m);
        const auto jstar = finite::optimal_cost(s.graph);
        bool ok = true;
        for (int x = 0; x < s.graph.size(); ++x) {
            std::cout << s.graph.name(x) << ":";
            for (size_t k = 1; k < seq.size(); ++k) {
                std::cout << ' ' << to_string(seq[k][static_cast<size_t>(x)]);
                ok = ok && seq[k - 1][static_cast<size_t>(x)] <= seq[k][static_cast<size_t>(x)] &&
                     seq[k][static_cast<size_t>(x)] <= jstar[static_cast<size_t>(x)];
            }
            std::cout << " | J* " << to_string(jstar[static_cast<size_t>(x)]) << "\n";
        }
        const bool fixed = finite::bellman(s.graph, jstar).values == jstar;
        std::cout << "monotone and below J*: " << (ok ? "yes" : "NO") << "; T J* = J*: " << (fixed ? "yes" : "NO") << "\n";
        return ok && fixed ? kOk : kTolerance;
    }
    io::PreparedScenario prep;
    io::prepare(s, prep);
    bool ok = true;
    for (const Vector& x : initial_states(o, s)) {
        const auto seq = rollout::lower_bound_sequence(prep.model, x, m);
        std::cout << app::state_label(x) << ": T^k J0 for k = 1.." << m << ":";
        for (const auto& v : seq.values)
            std::cout << ' ' << app::format_cost(v, 8);
        std::cout << " (" << seq.programs << " programs) " << (seq.monotone() ? "non-decreasing" : "DECREASES")
                  << "\n";
        ok = ok && seq.monotone();
        rollout::SimulationOptions sim;
        sim.workers = o.workers;
        sim.max_steps = s.max_steps;
        const auto traj = rollout::closed_loop_simulate(prep.config(), x, sim);
        const ExtendedCost j = traj.reason == rollout::Termination::Converged ? traj.cost() : ExtendedCost::infinity();
        std::cout << "  J_mu~ = " << app::format_cost(j, 10);
        if (j.is_finite() && seq.values.back().is_finite() && j.value() > 0)
            std::cout << ", (J_mu~ - T^" << m << " J0) / J_mu~ = " << (j.value() - seq.values.back().value()) / j.value();
        std::cout << "\n";
    }
    return ok ? kOk : kTolerance;
}

int cmd_verify(const Options& o) {
    app::SuiteReport rep;
    if (o.target == "finite")
        rep = app::finite_suite(o.seed);
    else if (o.target == "planner-oracle")
        rep = app::planner_oracle_suite(o.seed);
    else if (o.target == "certificates")
        rep = app::certificate_suite(data_dir());
    else
        throw io::SchemaError("suite", "unknown suite '" + o.target + "' (finite, planner-oracle, certificates)");
    rep.print(std::cout);
    if (rep.pass())
        return kOk;
    return o.target == "certificates" ? kSolver : kTolerance;
}

int run_example(const std::string& name, const Options& o) {
    const std::string path = app::data_path(data_dir(), "scenarios/" + name + ".json");
    const io::Scenario s = io::load_scenario(path);
    if (s.reference.empty())
        throw io::SchemaError("/reference", "scenario " + name + " has no reference table");
    const app::ReferenceTable ref = app::load_reference(s.resolve(s.reference));
    app::ExampleReport rep;
    if (s.finite) {
        rep = app::compare_finite(s, ref);
    } else {
        io::PreparedScenario prep;
        io::prepare(s, prep);
        rep = app::compare_continuous(s, prep, ref, o.workers);
        if (!o.out.empty()) {
            std::filesystem::create_directories(o.out);
            for (size_t i = 0; i < s.x0.size(); ++i) {
                rollout::SimulationOptions sim;
                sim.workers = o.workers;
                sim.max_steps = s.max_steps;
                const auto traj = rollout::closed_loop_simulate(prep.config(), s.x0[i], sim);
                std::ofstream out(std::filesystem::path(o.out) / (name + "_x0_" + std::to_string(i + 1) + ".csv"));
                rollout::write_trajectory_csv(out, traj, prep.model);
            }
        }
    }
    rep.print(std::cout);
    return rep.pass() ? kOk : kTolerance;
}

int cmd_examples(const Options& o) {
    if (o.target != "all")
        return run_example(o.target, o);
    int code = kOk;
    for (const char* ex : {"ex1", "ex2", "ex3", "ex4", "ex5", "ex6", "ex7"})
        code = std::max(code, run_example(ex, o));
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App cli{"Parallel rollout with multiple terminal ingredients"};
    cli.require_subcommand(1);
    Options o;

    auto scenario_opt = [&](CLI::App* c) { c->add_option("--scenario", o.scenario, "scenario JSON file")->required(); };
    auto workers_opt = [&](CLI::App* c) {
        c->add_option("--workers", o.workers, "worker threads (default: available parallelism)")->check(CLI::PositiveNumber);
    };

    auto* design = cli.add_subcommand("design", "design and certify every unit's terminal ingredient");
    scenario_opt(design);
    design->add_option("--out", o.out, "write the artifacts as JSON");

    auto* roll = cli.add_subcommand("rollout", "closed-loop simulation under the parallel rollout policy");
    scenario_opt(roll);
    roll->add_option("--x0", o.x0, "initial state \"a,b\" (default: the scenario's first)");
    roll->add_option("--steps", o.steps, "step cap")->check(CLI::PositiveNumber);
    roll->add_option("--out", o.out, "trajectory CSV (default: stdout)");
    workers_opt(roll);

    auto* scan = cli.add_subcommand("scan", "supports of Jbar and J_mu~ on a grid");
    scenario_opt(scan);
    scan->add_option("--spacing", o.spacing, "grid spacing (default: the scenario's)")->check(CLI::PositiveNumber);
    scan->add_option("--out", o.out, "scan CSV (default: stdout)");
    workers_opt(scan);

    auto* lb = cli.add_subcommand("lowerbound", "value-iteration lower bound T^m J0");
    scenario_opt(lb);
    lb->add_option("--m", o.m, "iterations (default: the scenario's, else 8)")->check(CLI::Range(1, 8));
    lb->add_option("--x0", o.x0, "initial states \"a,b\" (default: the scenario's)");
    workers_opt(lb);

    auto* verify = cli.add_subcommand("verify", "property suites");
    verify->add_option("suite", o.target, "finite | planner-oracle | certificates")->required();
    verify->add_option("--seed", o.seed, "random seed");

    auto* examples = cli.add_subcommand("examples", "reproduce a shipped example against its reference table");
    examples->add_option("name", o.target, "ex1..ex7 or all")->required();
    examples->add_option("--out", o.out, "directory for trajectory CSVs");
    workers_opt(examples);

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? kOk : kSchema;
    }

    try {
        if (design->parsed())
            return cmd_design(o);
        if (roll->parsed())
            return cmd_rollout(o);
        if (scan->parsed())
            return cmd_scan(o);
        if (lb->parsed())
            return cmd_lowerbound(o);
        if (verify->parsed())
            return cmd_verify(o);
        if (examples->parsed())
            return cmd_examples(o);
    } catch (const io::SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return kSchema;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kSolver;
    }
    return kOk;
}
