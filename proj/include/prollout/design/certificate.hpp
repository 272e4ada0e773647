#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../core/policy.hpp"
#include "../core/terminal.hpp"
#include "../geometry/scan.hpp"

namespace prollout::design {

using numerics::require;

struct CertificateOptions {
    int samples = 10000;
    std::uint64_t seed = 1;
    double slack = -1e-8;        // minimum admissible V(x) - g(x, mu(x)) - V(f(x, mu(x)))
    double set_tolerance = 1e-9; // invariance and admissibility
    std::optional<geometry::Polytope> sample_region; // used when S is the whole space
};

/// Sampled check of the two terminal-ingredient premises on S: invariance
/// f(x, mu(x)) in S (with (x, mu(x)) admissible), and the decrease
/// g(x, mu(x)) + V(f(x, mu(x))) <= V(x).
struct CertificateReport {
    int samples = 0;
    double max_invariance_violation = -std::numeric_limits<double>::infinity();
    double max_admissibility_violation = -std::numeric_limits<double>::infinity();
    double min_decrease_slack = std::numeric_limits<double>::infinity();
    double slack_threshold = -1e-8;
    bool pass = false;
    int vertices = 0;                 // 2-D polytopic S only; not part of the pass decision
    double vertex_violation = -std::numeric_limits<double>::infinity();

    [[nodiscard]] double max_violation() const {
        return std::max({max_invariance_violation, max_admissibility_violation, -min_decrease_slack});
    }
    [[nodiscard]] std::string summary() const {
        std::ostringstream os;
        os << (pass ? "pass" : "FAIL") << " on " << samples << " samples: invariance " << max_invariance_violation
           << ", admissibility " << max_admissibility_violation << ", decrease slack " << min_decrease_slack
           << " (threshold " << slack_threshold << ")";
        if (vertices > 0)
            os << "; worst premise violation over " << vertices << " vertices " << vertex_violation;
        return os.str();
    }
};

namespace detail {

inline double set_violation(const TerminalSet& set, const Vector& x) {
    return std::visit(
        [&](const auto& s) -> double {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, WholeSpace>)
                return -std::numeric_limits<double>::infinity();
            else if constexpr (std::is_same_v<S, geometry::Polytope>)
                return s.num_rows() == 0 ? -std::numeric_limits<double>::infinity() : (s.H * x - s.h).maxCoeff();
            else
                return x.dot(s.K * x) - s.alpha;
        },
        set);
}

inline double admissibility_violation(const ControlModel& m, const Vector& x, const Vector& u) {
    double v = -std::numeric_limits<double>::infinity();
    if (m.state_constraints && m.state_constraints->num_rows() > 0)
        v = (m.state_constraints->H * x - m.state_constraints->h).maxCoeff();
    if (m.input_bound && u.size() > 0)
        v = std::max(v, u.cwiseAbs().maxCoeff() - *m.input_bound);
    return v;
}

// Axis-aligned bounding box of S (or of the fallback region).
inline std::pair<Vector, Vector> bounding_box(const TerminalSet& set, const std::optional<geometry::Polytope>& fallback,
                                              Eigen::Index n) {
    auto poly_box = [&](const geometry::Polytope& p) {
        Vector lo(n), hi(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            Vector e = Vector::Zero(n);
            e(i) = 1.0;
            hi(i) = geometry::support_value(p, e);
            lo(i) = -geometry::support_value(p, -e);
        }
        return std::make_pair(lo, hi);
    };
    if (const auto* p = std::get_if<geometry::Polytope>(&set))
        return poly_box(*p);
    if (const auto* s = std::get_if<SublevelSet>(&set)) {
        const Matrix kinv = s->K.inverse();
        Vector r(n);
        for (Eigen::Index i = 0; i < n; ++i)
            r(i) = std::sqrt(s->alpha * kinv(i, i));
        return {-r, r};
    }
    require(fallback.has_value(), "certificate: S is the whole space and no sample region was given");
    return poly_box(*fallback);
}

} // namespace detail

/// Checks both premises on `samples` uniformly drawn points of S (rejection
/// sampling from its bounding box). The vertices of a 2-D polytopic S are
/// checked as well and reported separately.
inline CertificateReport certify_terminal(const ControlModel& model, const Policy& policy,
                                          const TerminalIngredient& ingredient, const CertificateOptions& opt = {}) {
    const Eigen::Index n = model.state_dim();
    require(ingredient.dim() == n, "certify_terminal: dimension mismatch");
    const auto [lo, hi] = detail::bounding_box(ingredient.set, opt.sample_region, n);

    std::vector<Vector> probes;
    std::mt19937_64 rng(opt.seed);
    std::vector<std::uniform_real_distribution<double>> coord;
    for (Eigen::Index i = 0; i < n; ++i)
        coord.emplace_back(lo(i), hi(i));
    const auto in_region = [&](const Vector& x) {
        if (detail::set_violation(ingredient.set, x) > 0.0)
            return false;
        return !std::holds_alternative<WholeSpace>(ingredient.set) || !opt.sample_region ||
               geometry::contains(*opt.sample_region, x, 0.0);
    };
    const long max_draws = 1000L * opt.samples;
    long draws = 0;
    const auto target = static_cast<size_t>(opt.samples);
    while (probes.size() < target && draws < max_draws) {
        ++draws;
        Vector x(n);
        for (Eigen::Index i = 0; i < n; ++i)
            x(i) = coord[static_cast<size_t>(i)](rng);
        if (in_region(x))
            probes.push_back(std::move(x));
    }
    require(!probes.empty(), "certify_terminal: could not sample S");

    struct Premises {
        double admissibility, invariance, slack;
    };
    const auto premises = [&](const Vector& x) {
        const Control u = apply_policy(policy, model, x);
        const Vector next = model.step(x, u);
        return Premises{detail::admissibility_violation(model, x, u.v), detail::set_violation(ingredient.set, next),
                        terminal_value(ingredient, x) - model.stage_value(x, u.v) - terminal_value(ingredient, next)};
    };

    CertificateReport rep;
    rep.slack_threshold = opt.slack;
    for (const Vector& x : probes) {
        const Premises pr = premises(x);
        rep.max_admissibility_violation = std::max(rep.max_admissibility_violation, pr.admissibility);
        rep.max_invariance_violation = std::max(rep.max_invariance_violation, pr.invariance);
        rep.min_decrease_slack = std::min(rep.min_decrease_slack, pr.slack);
        ++rep.samples;
    }
    if (n == 2)
        if (const auto* p = std::get_if<geometry::Polytope>(&ingredient.set))
            for (const Vector& v : geometry::vertices_2d(*p)) {
                const Premises pr = premises(v);
                rep.vertex_violation = std::max({rep.vertex_violation, pr.admissibility, pr.invariance, -pr.slack});
                ++rep.vertices;
            }
    rep.pass = rep.max_invariance_violation <= opt.set_tolerance && rep.max_admissibility_violation <= opt.set_tolerance &&
               rep.min_decrease_slack >= opt.slack;
    return rep;
}

/// Induced matrix norm for p in {1, inf}.
inline double induced_norm(const Matrix& m, CostKind p) {
    if (m.size() == 0)
        return 0.0;
    return p == CostKind::Norm1 ? m.cwiseAbs().colwise().sum().maxCoeff() : m.cwiseAbs().rowwise().sum().maxCoeff();
}

struct NormDecreaseReport {
    int directions = 0;
    double min_slack = std::numeric_limits<double>::infinity(); // ||Kx|| - ||Qx|| - ||RLx|| - ||K A_cl x|| on |x|_2 = 1
    double lemma_lhs = 0.0; // ||K A_cl|| + ||Q|| + ||RL|| (induced)
    double lemma_rhs = 0.0; // ||K||
    bool pass = false;      // pointwise decrease on every direction, slack >= -1e-8
    [[nodiscard]] bool lemma_holds() const { return lemma_lhs <= lemma_rhs; }
};

/// Pointwise decrease of V(x) = ||Kx||_p for the linear policy u = Lx on
/// equally spaced unit-circle directions, plus the induced-norm inequality.
inline NormDecreaseReport check_norm_decrease(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                                              const Matrix& L, const Matrix& K, CostKind p, int directions = 360) {
    require(A.rows() == 2, "check_norm_decrease: direction sampling is two-dimensional");
    const Matrix acl = A + B * L;
    NormDecreaseReport rep;
    rep.directions = directions;
    for (int d = 0; d < directions; ++d) {
        const double th = 2.0 * M_PI * d / directions;
        Vector x(2);
        x << std::cos(th), std::sin(th);
        const double slack =
            vector_norm(K * x, p) - vector_norm(Q * x, p) - vector_norm(R * L * x, p) - vector_norm(K * acl * x, p);
        rep.min_slack = std::min(rep.min_slack, slack);
    }
    rep.lemma_lhs = induced_norm(K * acl, p) + induced_norm(Q, p) + induced_norm(R * L, p);
    rep.lemma_rhs = induced_norm(K, p);
    rep.pass = rep.min_slack >= -1e-8;
    return rep;
}

} // namespace prollout::design
