#include <algorithm>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "prollout/numerics/eigen_values.hpp"
#include "prollout/numerics/literals.hpp"
#include "prollout/numerics/lp.hpp"
#include "prollout/numerics/qp.hpp"
#include "prollout/numerics/riccati.hpp"

using namespace prollout;
using namespace prollout::numerics;

namespace {

// Exhaustive vertex enumeration: every n-subset of rows that is nonsingular
// defines a candidate vertex; keep the feasible ones.
double vertex_enumeration_min(const Vector& c, const Matrix& G, const Vector& h) {
    const auto n = c.size();
    const auto m = G.rows();
    std::vector<int> pick(static_cast<size_t>(m), 0);
    std::fill(pick.begin(), pick.begin() + n, 1);
    double best = std::numeric_limits<double>::infinity();
    std::sort(pick.begin(), pick.end());
    do {
        Matrix A(n, n);
        Vector b(n);
        Eigen::Index r = 0;
        for (Eigen::Index i = 0; i < m; ++i)
            if (pick[static_cast<size_t>(i)]) {
                A.row(r) = G.row(i);
                b(r++) = h(i);
            }
        Eigen::FullPivLU<Matrix> lu(A);
        if (!lu.isInvertible())
            continue;
        const Vector x = lu.solve(b);
        if ((G * x - h).maxCoeff() <= 1e-9)
            best = std::min(best, c.dot(x));
    } while (std::next_permutation(pick.begin(), pick.end()));
    return best;
}

} // namespace

TEST(Eig, IdentityHasUnitEigenvalues) {
    const auto r = eig(Matrix::Identity(2, 2));
    ASSERT_EQ(r.values.size(), 2u);
    for (const auto& v : r.values)
        EXPECT_NEAR(std::abs(v - std::complex<double>(1.0, 0.0)), 0.0, 1e-12);
}

TEST(Eig, RotationScalingPair) {
    const auto r = eig(make_matrix({{0.35, -0.61}, {0.61, 0.35}}));
    ASSERT_EQ(r.values.size(), 2u);
    EXPECT_NEAR(r.values[0].real(), 0.35, 1e-12);
    EXPECT_NEAR(std::abs(r.values[0].imag()), 0.61, 1e-12);
    EXPECT_NEAR(r.values[0].imag(), -r.values[1].imag(), 1e-12);
}

TEST(Eig, TrialGainClosedLoopIsStable) {
    const Matrix A = make_matrix({{1.0, 1.0}, {0.0, 1.0}});
    const Matrix B = make_matrix({{1.0}, {0.5}});
    const Matrix L = make_matrix({{-1.5, -0.2}});
    const Matrix acl = A + B * L;
    // Characteristic polynomial roots directly.
    const double tr = acl.trace();
    const double det = acl.determinant();
    const std::complex<double> disc = std::sqrt(std::complex<double>(tr * tr / 4 - det));
    const double oracle = std::max(std::abs(tr / 2 + disc), std::abs(tr / 2 - disc));
    EXPECT_NEAR(spectral_radius(acl), oracle, 1e-12);
    EXPECT_LT(spectral_radius(acl), 1.0);
}

TEST(Eig, LargerMatricesSatisfyResidualAndConjugateSymmetry) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix M(5, 5);
        for (Eigen::Index i = 0; i < M.size(); ++i)
            M.data()[i] = u(rng);
        const auto r = eig(M);
        ASSERT_TRUE(r.converged);
        ASSERT_EQ(r.values.size(), 5u);
        for (const auto& lam : r.values) {
            // lambda is an eigenvalue iff M - lambda I is singular.
            Eigen::MatrixXcd S = M.cast<std::complex<double>>();
            S -= lam * Eigen::MatrixXcd::Identity(5, 5);
            Eigen::JacobiSVD<Eigen::MatrixXcd> svd(S);
            EXPECT_LE(svd.singularValues().minCoeff(), 1e-9 * M.norm());
            if (std::abs(lam.imag()) > 1e-12) {
                const bool has_conj = std::any_of(r.values.begin(), r.values.end(),
                                                  [&](const auto& o) { return std::abs(o - std::conj(lam)) < 1e-9; });
                EXPECT_TRUE(has_conj);
            }
        }
    }
}

TEST(Eig, RejectsNonSquare) { EXPECT_THROW(eig(Matrix::Zero(2, 3)), Error); }

TEST(Lp, SimpleLowerBound) {
    LpProblem p{make_vector({1.0}), make_matrix({{-1.0}}), make_vector({-1.0}), Matrix(0, 1), Vector(0)};
    const auto r = lp_solve(p);
    ASSERT_EQ(r.status, SolveStatus::Optimal);
    EXPECT_NEAR(r.value, 1.0, 1e-10);
    EXPECT_NEAR(r.x(0), 1.0, 1e-10);
}

TEST(Lp, DetectsInfeasibility) {
    LpProblem p{make_vector({0.0}), make_matrix({{1.0}, {-1.0}}), make_vector({-1.0, -1.0}), Matrix(0, 1), Vector(0)};
    EXPECT_EQ(lp_solve(p).status, SolveStatus::Infeasible);
}

TEST(Lp, DetectsUnboundedness) {
    LpProblem p{make_vector({-1.0}), make_matrix({{-1.0}}), make_vector({0.0}), Matrix(0, 1), Vector(0)};
    EXPECT_EQ(lp_solve(p).status, SolveStatus::Unbounded);
}

TEST(Lp, EqualityConstraints) {
    // min x + y  s.t. x - y = 1, x >= 0, y >= 0  ->  (1, 0), value 1
    LpProblem p{make_vector({1.0, 1.0}), make_matrix({{-1.0, 0.0}, {0.0, -1.0}}), make_vector({0.0, 0.0}),
                make_matrix({{1.0, -1.0}}), make_vector({1.0})};
    const auto r = lp_solve(p);
    ASSERT_EQ(r.status, SolveStatus::Optimal);
    EXPECT_NEAR(r.value, 1.0, 1e-10);
    EXPECT_LE(lp_feasibility_residual(p, r.x), 1e-8);
}

TEST(Lp, RandomInstancesMatchVertexEnumeration) {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> pos(0.1, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        Matrix G(8, 5);
        for (Eigen::Index i = 0; i < G.size(); ++i)
            G.data()[i] = u(rng);
        Vector z0(5), lambda(8), slack(8);
        for (int i = 0; i < 5; ++i)
            z0(i) = u(rng);
        for (int i = 0; i < 8; ++i) {
            lambda(i) = pos(rng);
            slack(i) = pos(rng);
        }
        const Vector h = G * z0 + slack;
        const Vector c = -G.transpose() * lambda; // dual feasible, so bounded below
        LpProblem p{c, G, h, Matrix(0, 5), Vector(0)};
        const auto r = lp_solve(p);
        ASSERT_EQ(r.status, SolveStatus::Optimal) << "trial " << trial;
        EXPECT_NEAR(r.value, vertex_enumeration_min(c, G, h), 1e-8) << "trial " << trial;
        EXPECT_LE(lp_feasibility_residual(p, r.x), 1e-8);

        // Row permutation leaves the optimum unchanged.
        std::vector<int> perm(8);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Matrix Gp(8, 5);
        Vector hp(8);
        for (int i = 0; i < 8; ++i) {
            Gp.row(i) = G.row(perm[static_cast<size_t>(i)]);
            hp(i) = h(perm[static_cast<size_t>(i)]);
        }
        const auto rp = lp_solve(LpProblem{c, Gp, hp, Matrix(0, 5), Vector(0)});
        ASSERT_EQ(rp.status, SolveStatus::Optimal);
        EXPECT_NEAR(rp.value, r.value, 1e-8);
    }
}

TEST(Qp, BoundActive) {
    QpProblem p{make_matrix({{2.0}}), make_vector({0.0}), make_matrix({{-1.0}}), make_vector({-1.0}), Matrix(0, 1),
                Vector(0)};
    const auto r = qp_solve(p);
    ASSERT_EQ(r.status, SolveStatus::Optimal);
    EXPECT_NEAR(r.x(0), 1.0, 1e-10);
    EXPECT_NEAR(r.value, 1.0, 1e-10);
}

TEST(Qp, UnconstrainedMinimizer) {
    const Matrix H = make_matrix({{3.0, 1.0}, {1.0, 2.0}});
    const Vector f = make_vector({1.0, -2.0});
    QpProblem p{H, f, Matrix(0, 2), Vector(0), Matrix(0, 2), Vector(0)};
    const auto r = qp_solve(p);
    ASSERT_EQ(r.status, SolveStatus::Optimal);
    EXPECT_LE((r.x + H.ldlt().solve(f)).norm(), 1e-10);
}

TEST(Qp, InfeasibleReported) {
    QpProblem p{make_matrix({{1.0}}), make_vector({0.0}), make_matrix({{1.0}, {-1.0}}), make_vector({-1.0, -1.0}),
                Matrix(0, 1), Vector(0)};
    EXPECT_EQ(qp_solve(p).status, SolveStatus::Infeasible);
}

TEST(Qp, RandomBoxQpMatchesGridOracle) {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 10; ++trial) {
        Matrix M(2, 2);
        for (Eigen::Index i = 0; i < 4; ++i)
            M.data()[i] = u(rng);
        const Matrix H = M.transpose() * M + 0.2 * Matrix::Identity(2, 2);
        const Vector f = make_vector({u(rng), u(rng)}) * 2.0;
        QpProblem p{H, f, Matrix(4, 2), Vector::Ones(4), Matrix(0, 2), Vector(0)};
        p.G << 1, 0, 0, 1, -1, 0, 0, -1;
        const auto r = qp_solve(p);
        ASSERT_EQ(r.status, SolveStatus::Optimal);
        EXPECT_LE(qp_stationarity_residual(p, r), 1e-8);
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= 2000; ++i)
            for (int j = 0; j <= 2000; ++j) {
                const double a = -1.0 + 1e-3 * i, b = -1.0 + 1e-3 * j;
                best = std::min(best, 0.5 * (H(0, 0) * a * a + 2 * H(0, 1) * a * b + H(1, 1) * b * b) +
                                          f(0) * a + f(1) * b);
            }
        EXPECT_LE(std::abs(r.value - best), 1e-2 * std::max(1.0, std::abs(best))) << "trial " << trial;
        EXPECT_LE(r.value, best + 1e-9);
    }
}

TEST(Qp, BeatsRandomFeasiblePointsAndIsPermutationInvariant) {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix M(4, 4);
        for (Eigen::Index i = 0; i < M.size(); ++i)
            M.data()[i] = u(rng);
        const Matrix H = M.transpose() * M + 0.1 * Matrix::Identity(4, 4);
        Vector f(4);
        for (int i = 0; i < 4; ++i)
            f(i) = 3.0 * u(rng);
        Matrix G(10, 4);
        for (Eigen::Index i = 0; i < G.size(); ++i)
            G.data()[i] = u(rng);
        const Vector h = Vector::Constant(10, 0.5);
        QpProblem p{H, f, G, h, Matrix(0, 4), Vector(0)};
        const auto r = qp_solve(p);
        ASSERT_EQ(r.status, SolveStatus::Optimal);
        EXPECT_LE(qp_stationarity_residual(p, r), 1e-8);
        EXPECT_LE((G * r.x - h).maxCoeff(), 1e-8);
        int checked = 0;
        while (checked < 100) {
            Vector z(4);
            for (int i = 0; i < 4; ++i)
                z(i) = u(rng);
            if ((G * z - h).maxCoeff() > 0.0)
                continue;
            ++checked;
            EXPECT_LE(r.value, p.objective(z) + 1e-10);
        }
        const Matrix Gr = G.colwise().reverse();
        const auto rr = qp_solve(QpProblem{H, f, Gr, h, Matrix(0, 4), Vector(0)});
        ASSERT_EQ(rr.status, SolveStatus::Optimal);
        EXPECT_NEAR(rr.value, r.value, 1e-8);
    }
}

TEST(Dlyap, ZeroClosedLoopReturnsWeight) {
    const Matrix Q = make_matrix({{2.0, 0.5}, {0.5, 1.0}});
    EXPECT_LE((dlyap(Matrix::Zero(2, 2), Q) - Q).norm(), 1e-14);
}

TEST(Dlyap, ScaledOrthogonalClosedLoop) {
    const Matrix A = make_matrix({{0.35, -0.61}, {0.61, 0.35}});
    const double s = 0.35 * 0.35 + 0.61 * 0.61;
    const Matrix K = dlyap(A, Matrix::Identity(2, 2));
    EXPECT_NEAR(K(0, 0), 1.0 / (1.0 - s), 1e-10);
    EXPECT_NEAR(K(1, 1), 1.0 / (1.0 - s), 1e-10);
    EXPECT_NEAR(K(0, 1), 0.0, 1e-12);
}

TEST(Dlyap, TrialGainTerminalsMeetResidual) {
    const Matrix A = make_matrix({{1.0, 1.0}, {0.0, 1.0}});
    const Matrix B = make_matrix({{1.0}, {0.5}});
    for (const Matrix& L : {make_matrix({{-0.3, -0.4}}), make_matrix({{-1.5, -0.2}})}) {
        const Matrix acl = A + B * L;
        ASSERT_LT(spectral_radius(acl), 1.0);
        const Matrix W = Matrix::Identity(2, 2) + L.transpose() * L;
        const Matrix K = dlyap(acl, W);
        EXPECT_LE(dlyap_residual(acl, W, K), 1e-10 * inf_norm(W));
        EXPECT_LE((K - K.transpose()).norm(), 1e-12);
        EXPECT_EQ(K.llt().info(), Eigen::Success);
    }
}

TEST(Dlyap, RejectsUnstableClosedLoop) {
    EXPECT_THROW(dlyap(make_matrix({{1.1, 0.0}, {0.0, 0.5}}), Matrix::Identity(2, 2)), Error);
}

TEST(Dare, NoInputReducesToLyapunov) {
    const Matrix A = make_matrix({{0.5, 0.2}, {0.0, 0.7}});
    const Matrix K = dare(A, Matrix::Zero(2, 1), Matrix::Identity(2, 2), make_matrix({{1.0}}));
    EXPECT_LE((K - dlyap(A, Matrix::Identity(2, 2))).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Dare, ScalarClosedForm) {
    // k = q + a^2 r k / (r + k)  ->  k^2 + (r - q - a^2 r) k - q r = 0
    const double a = 0.5, q = 1.0, r = 1.0;
    const double bq = r - q - a * a * r;
    const double k_exact = 0.5 * (-bq + std::sqrt(bq * bq + 4 * q * r));
    const Matrix K = dare(make_matrix({{a}}), make_matrix({{1.0}}), make_matrix({{q}}), make_matrix({{r}}));
    EXPECT_NEAR(K(0, 0), k_exact, 1e-10);
}

TEST(Dare, SwitchedModeOneGain) {
    const Matrix A = make_matrix({{2.0, 1.0}, {0.0, 1.0}});
    const Matrix B = make_matrix({{1.0}, {0.5}});
    const Matrix Q = Matrix::Identity(2, 2);
    const Matrix R = make_matrix({{1.0}});
    const Matrix K = dare(A, B, Q, R);
    EXPECT_LE(dare_residual(A, B, Q, R, K), 1e-9);
    const Matrix L = riccati_gain(A, B, R, K);
    EXPECT_LT(spectral_radius(A + B * L), 1.0);
    EXPECT_EQ(K.llt().info(), Eigen::Success);
}
