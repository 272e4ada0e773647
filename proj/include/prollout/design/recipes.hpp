#pragma once

#include <complex>
#include <map>
#include <string>

#include "../geometry/invariant_set.hpp"
#include "../numerics/riccati.hpp"
#include "../rollout/unit_spec.hpp"
#include "certificate.hpp"

namespace prollout::design {

enum class RecipeKind { RiccatiTerminal, TrialGainTerminal, SublevelTerminal, NormLyapunovTerminal, LiteralTerminal };

inline const char* to_string(RecipeKind k) {
    switch (k) {
    case RecipeKind::RiccatiTerminal: return "riccati";
    case RecipeKind::TrialGainTerminal: return "trial_gain";
    case RecipeKind::SublevelTerminal: return "sublevel";
    case RecipeKind::NormLyapunovTerminal: return "norm_lyapunov";
    case RecipeKind::LiteralTerminal: return "literal";
    }
    return "?";
}

inline RecipeKind parse_recipe_kind(const std::string& s) {
    for (RecipeKind k : {RecipeKind::RiccatiTerminal, RecipeKind::TrialGainTerminal, RecipeKind::SublevelTerminal,
                         RecipeKind::NormLyapunovTerminal, RecipeKind::LiteralTerminal})
        if (s == to_string(k))
            return k;
    throw Error("unknown recipe kind '" + s + "'");
}

/// A terminal ingredient with its base policy, the recipe inputs that
/// produced it, and the sampled certificate.
struct DesignArtifact {
    std::string name;
    RecipeKind kind = RecipeKind::LiteralTerminal;
    std::map<std::string, Matrix> inputs;
    Policy policy = LinearGain{};
    TerminalIngredient terminal;
    CertificateReport certificate;
    bool certified = false;
    std::string note;

    /// Without constraints or an explicit region, an unbounded S is sampled
    /// on the box |x|_inf <= 5.
    void certify(const ControlModel& model, const CertificateOptions& opt = {}) {
        CertificateOptions o = opt;
        if (!o.sample_region)
            o.sample_region = model.state_constraints.value_or(geometry::Polytope::box(model.state_dim(), 5.0));
        certificate = certify_terminal(model, policy, terminal, o);
        certified = certificate.pass;
    }
};

/// Input-admissible region {x in X_c : |Lx|_inf <= b}.
inline geometry::Polytope admissible_region(const ControlModel& m, const Matrix& L) {
    require(m.state_constraints.has_value(), "admissible_region: model has no state constraints");
    geometry::Polytope out = *m.state_constraints;
    if (m.input_bound) {
        Matrix H(2 * L.rows(), L.cols());
        H << L, -L;
        out = geometry::stack(out, {H, Vector::Constant(2 * L.rows(), *m.input_bound)});
    }
    return out;
}

namespace detail {

inline Policy gain_policy(const ControlModel& m, const Matrix& L, int mode) {
    if (m.dynamics == DynamicsKind::Switched)
        return SwitchedGain{L, mode};
    return LinearGain{L};
}

inline std::pair<Matrix, Matrix> mode_pair(const ControlModel& m, int mode) {
    require(mode >= 0 && mode < m.mode_count(), "design: mode out of range");
    require(m.dynamics != DynamicsKind::PiecewiseAffine, "design: piecewise-affine models take literal artifacts");
    return {m.A[static_cast<size_t>(mode)], m.B[static_cast<size_t>(mode)]};
}

} // namespace detail

/// K from the Riccati equation, L = -(B'KB + R)^-1 B'KA, S the maximal
/// admissible invariant set of A + BL (the whole space without constraints).
inline DesignArtifact design_riccati_terminal(const ControlModel& m, int mode = 0, const CertificateOptions& opt = {}) {
    require(m.cost == CostKind::Quadratic, "design_riccati_terminal: quadratic cost required");
    const auto [A, B] = detail::mode_pair(m, mode);
    DesignArtifact art;
    art.kind = RecipeKind::RiccatiTerminal;
    const Matrix K = numerics::dare(A, B, m.Q, m.R);
    const Matrix L = numerics::riccati_gain(A, B, m.R, K);
    art.inputs = {{"A", A}, {"B", B}, {"Q", m.Q}, {"R", m.R}, {"L", L}};
    art.policy = detail::gain_policy(m, L, mode);
    art.terminal.value = QuadraticValue{K};
    if (m.state_constraints) {
        auto inv = geometry::invariant_set(A + B * L, admissible_region(m, L));
        if (geometry::is_empty(inv.set))
            throw Error("design_riccati_terminal: empty invariant set");
        if (!inv.certified)
            art.note = "invariant-set iteration hit its cap";
        art.terminal.set = std::move(inv.set);
    }
    art.certify(m, opt);
    return art;
}

enum class SetMode { Polytope, Sublevel, WholeSpace };

/// K from K = A_cl'K A_cl + Q + L'RL for a given stabilizing gain; S by the
/// invariant-set iteration, the inscribed sublevel set, or no set.
inline DesignArtifact design_trial_gain_terminal(const ControlModel& m, const Matrix& L, SetMode set_mode,
                                                 int mode = 0, const CertificateOptions& opt = {}) {
    require(m.cost == CostKind::Quadratic, "design_trial_gain_terminal: quadratic cost required");
    const auto [A, B] = detail::mode_pair(m, mode);
    const Matrix acl = A + B * L;
    const double rho = numerics::spectral_radius(acl);
    if (rho >= 1.0)
        throw Error("design_trial_gain_terminal: closed loop is not stable (spectral radius " + std::to_string(rho) + ")");
    DesignArtifact art;
    art.kind = set_mode == SetMode::Sublevel ? RecipeKind::SublevelTerminal : RecipeKind::TrialGainTerminal;
    art.inputs = {{"A", A}, {"B", B}, {"Q", m.Q}, {"R", m.R}, {"L", L}};
    art.policy = detail::gain_policy(m, L, mode);
    const Matrix K = numerics::dlyap(acl, m.Q + L.transpose() * m.R * L);
    art.terminal.value = QuadraticValue{K};
    switch (set_mode) {
    case SetMode::WholeSpace: break;
    case SetMode::Polytope: {
        auto inv = geometry::invariant_set(acl, admissible_region(m, L));
        if (!inv.certified)
            art.note = "invariant-set iteration hit its cap";
        art.terminal.set = std::move(inv.set);
        break;
    }
    case SetMode::Sublevel: {
        const double alpha = geometry::sublevel_alpha(K, admissible_region(m, L));
        art.inputs["alpha"] = Matrix::Constant(1, 1, alpha);
        art.terminal.set = SublevelSet{K, alpha};
        break;
    }
    }
    art.certify(m, opt);
    return art;
}

/// Real modal transform W with W A_cl = M W, where M is block diagonal with
/// blocks [a b; -b a] for complex pairs a +- jb and lambda for real
/// eigenvalues. Returns W and the induced p-norm of M.
inline std::pair<Matrix, double> modal_transform(const Matrix& acl, CostKind p) {
    const Eigen::Index n = acl.rows();
    if ((acl - acl(0, 0) * Matrix::Identity(n, n)).cwiseAbs().maxCoeff() == 0.0)
        return {Matrix::Identity(n, n), std::abs(acl(0, 0))};
    Eigen::EigenSolver<Matrix> es(acl.transpose());
    if (es.info() != Eigen::Success)
        throw Error("modal_transform: eigen decomposition failed");
    const auto vals = es.eigenvalues();
    const auto vecs = es.eigenvectors(); // columns: left eigenvectors of acl
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            if (std::abs(vals(i) - vals(j)) < 1e-9)
                throw Error("modal_transform: repeated eigenvalues");
    Matrix W(n, n);
    Matrix M = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n;) {
        const std::complex<double> lam = vals(i);
        if (std::abs(lam.imag()) < 1e-12) {
            W.row(i) = vecs.col(i).real().transpose();
            M(i, i) = lam.real();
            ++i;
        } else {
            // w'(A) = lam w' with w = u + jv gives u'A = a u' - b v', v'A = b u' + a v'.
            require(i + 1 < n, "modal_transform: unpaired complex eigenvalue");
            W.row(i) = vecs.col(i).real().transpose();
            W.row(i + 1) = vecs.col(i).imag().transpose();
            const double a = lam.real(), b = lam.imag();
            M(i, i) = a;
            M(i, i + 1) = -b;
            M(i + 1, i) = b;
            M(i + 1, i + 1) = a;
            i += 2;
        }
    }
    return {W, induced_norm(M, p)};
}

/// V(x) = ||Kx||_p with K = c W, where W is the modal transform of A + BL
/// (contraction factor gamma < 1) and c is the smallest multiple of the
/// bound (||Q W^-1|| + ||RL W^-1||) / (1 - gamma) that passes the
/// direction check, starting at 1.01 times the bound.
inline DesignArtifact design_norm_lyapunov(const ControlModel& m, const Matrix& L, CostKind p, TerminalSet set = WholeSpace{},
                                           int mode = 0, const CertificateOptions& opt = {}) {
    require(p == CostKind::Norm1 || p == CostKind::NormInf, "design_norm_lyapunov: p must be 1 or inf");
    const auto [A, B] = detail::mode_pair(m, mode);
    const Matrix acl = A + B * L;
    const auto [W, gamma] = modal_transform(acl, p);
    if (gamma >= 1.0)
        throw Error("design_norm_lyapunov: modal contraction factor " + std::to_string(gamma) + " is not below 1");
    const Matrix Winv = W.inverse();
    const double beta = induced_norm(m.Q * Winv, p) + induced_norm(m.R * L * Winv, p);
    double c = 1.01 * beta / (1.0 - gamma);
    NormDecreaseReport check;
    for (int attempt = 0; attempt < 20; ++attempt, c *= 1.5) {
        check = check_norm_decrease(A, B, m.Q, m.R, L, c * W, p);
        if (check.pass)
            break;
    }
    if (!check.pass)
        throw Error("design_norm_lyapunov: decrease check failed after scaling");
    DesignArtifact art;
    art.kind = RecipeKind::NormLyapunovTerminal;
    art.inputs = {{"A", A}, {"B", B}, {"Q", m.Q}, {"R", m.R}, {"L", L}, {"W", W}};
    art.policy = detail::gain_policy(m, L, mode);
    art.terminal = {NormValue{c * W, p}, std::move(set)};
    art.certify(m, opt);
    return art;
}

/// An ingredient supplied as data (printed matrices), certified as given.
inline DesignArtifact literal_artifact(const ControlModel& m, std::string name, Policy policy, TerminalIngredient terminal,
                                       const CertificateOptions& opt = {}) {
    DesignArtifact art;
    art.name = std::move(name);
    art.kind = RecipeKind::LiteralTerminal;
    art.policy = std::move(policy);
    art.terminal = std::move(terminal);
    art.certify(m, opt);
    return art;
}

/// Unit whose terminal function is the j-fold restricted operator (fixed
/// mode i) applied to the base ingredient: realized as a horizon-(l + j)
/// program whose first l stages are free and last j stages use mode i.
inline rollout::RolloutUnitSpec design_simplified_iterate(const DesignArtifact& base, int lookahead, int mode, int iterations) {
    require(lookahead >= 1 && iterations >= 0, "design_simplified_iterate: bad horizon");
    rollout::RolloutUnitSpec unit;
    unit.name = base.name;
    unit.lookahead = lookahead + iterations;
    unit.terminal = base.terminal;
    if (iterations > 0) {
        unit.schedule.assign(static_cast<size_t>(lookahead), std::nullopt);
        unit.schedule.insert(unit.schedule.end(), static_cast<size_t>(iterations), mode);
    }
    return unit;
}

} // namespace prollout::design
