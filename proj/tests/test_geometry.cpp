#include <random>

#include <gtest/gtest.h>

#include "prollout/geometry/invariant_set.hpp"
#include "prollout/geometry/polytope.hpp"
#include "prollout/geometry/scan.hpp"
#include "prollout/numerics/literals.hpp"
#include "prollout/numerics/riccati.hpp"

using namespace prollout;
using namespace prollout::geometry;

namespace {

// Rejection sampling inside a polytope contained in the given box.
std::vector<Vector> sample_inside(const Polytope& p, double box, int count, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-box, box);
    std::vector<Vector> out;
    while (static_cast<int>(out.size()) < count) {
        Vector x(p.dim());
        for (Eigen::Index i = 0; i < x.size(); ++i)
            x(i) = u(rng);
        if (contains(p, x))
            out.push_back(x);
    }
    return out;
}

Polytope example6_s2() {
    const Matrix P2t = make_matrix({{-0.4452, 0.4452, 0.4452, -0.4452}, {-0.3354, 0.3354, -0.3354, 0.3354}});
    return {P2t.transpose(), Vector::Ones(4)};
}

} // namespace

TEST(Polytope, ContainsWithTolerance) {
    const auto box = Polytope::box(2, 1.0);
    EXPECT_TRUE(contains(box, Vector::Zero(2)));
    EXPECT_FALSE(contains(box, make_vector({1.0 + 1e-6, 0.0})));
    EXPECT_TRUE(contains(box, make_vector({1.0 + 1e-10, 0.0})));
    EXPECT_THROW(contains(box, Vector::Zero(3)), Error);
}

TEST(Polytope, UnitBoxFromFacetMatrix) {
    const Matrix P4t = make_matrix({{1, 0, -1, 0}, {0, 1, 0, -1}});
    const Polytope s4{P4t.transpose(), Vector::Ones(4)};
    EXPECT_TRUE(contains(s4, make_vector({0.99, -0.99})));
    EXPECT_TRUE(set_equal(s4, Polytope::box(2, 1.0)));
}

TEST(Polytope, IntersectRemovesRedundantRows) {
    const auto box = Polytope::box(2, 1.0);
    const Polytope half{make_matrix({{1.0, 0.0}}), make_vector({2.0})};
    const auto a = intersect(box, half);
    EXPECT_EQ(a.num_rows(), 4);
    EXPECT_TRUE(set_equal(a, box));

    const Polytope clip{make_matrix({{1.0, 0.0}}), make_vector({0.5})};
    const auto b = intersect(box, clip);
    EXPECT_EQ(b.num_rows(), 4);
    EXPECT_TRUE(contains(b, make_vector({0.5, 1.0})));
    EXPECT_FALSE(contains(b, make_vector({0.6, 0.0})));
}

TEST(Polytope, DuplicatedRowsCollapse) {
    const auto s2 = example6_s2();
    const auto doubled = stack(s2, s2);
    EXPECT_EQ(doubled.num_rows(), 8);
    const auto reduced = remove_redundancy(doubled);
    EXPECT_EQ(reduced.num_rows(), 4);
    EXPECT_TRUE(set_equal(reduced, s2));
}

TEST(Polytope, RedundancyRemovalPreservesSet) {
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        Matrix H(12, 2);
        for (Eigen::Index i = 0; i < H.size(); ++i)
            H.data()[i] = u(rng);
        Polytope p = stack(Polytope::box(2, 3.0), Polytope{H, Vector::Ones(12)});
        const auto r = remove_redundancy(p);
        EXPECT_LE(r.num_rows(), p.num_rows());
        EXPECT_TRUE(is_subset(r, p));
        EXPECT_TRUE(is_subset(p, r));
    }
}

TEST(Polytope, EmptyAndUnboundedDetection) {
    const Polytope empty{make_matrix({{1.0}, {-1.0}}), make_vector({-1.0, -1.0})};
    EXPECT_TRUE(is_empty(empty));
    EXPECT_THROW(remove_redundancy(empty), Error);
    const Polytope halfplane{make_matrix({{1.0, 0.0}}), make_vector({1.0})};
    EXPECT_FALSE(is_bounded(halfplane));
    EXPECT_THROW(vertices_2d(halfplane), Error);
}

TEST(InvariantSet, ContractiveClosedLoopKeepsBox) {
    const auto box = Polytope::box(2, 1.0);
    const auto r = invariant_set(0.5 * Matrix::Identity(2, 2), box);
    EXPECT_TRUE(r.certified);
    EXPECT_TRUE(set_equal(r.set, box));
}

TEST(InvariantSet, RejectsUnstableClosedLoop) {
    EXPECT_THROW(invariant_set(make_matrix({{2.0, 0.0}, {0.0, 0.5}}), Polytope::box(2, 1.0)), Error);
}

TEST(InvariantSet, RiccatiUnitIsInvariantOnSamples) {
    const Matrix A = make_matrix({{1.0, 1.0}, {0.0, 1.0}});
    const Matrix B = make_matrix({{1.0}, {0.5}});
    const Matrix R = make_matrix({{1.0}});
    const Matrix K = numerics::dare(A, B, Matrix::Identity(2, 2), R);
    const Matrix L = numerics::riccati_gain(A, B, R, K);
    const Matrix acl = A + B * L;
    Matrix HL(2, 2);
    HL << L, -L;
    const Polytope xc = stack(Polytope::box(2, 5.0), Polytope{HL, Vector::Ones(2)});
    const auto r = invariant_set(acl, xc);
    ASSERT_TRUE(r.certified);
    EXPECT_LT(r.iterations, 200);
    EXPECT_TRUE(set_equal(r.set, intersect(r.set, preimage(r.set, acl))));
    for (const auto& x : sample_inside(r.set, 5.0, 10000, 17)) {
        ASSERT_TRUE(contains(r.set, acl * x));
        ASSERT_TRUE(contains(xc, x));
    }
}

TEST(SublevelAlpha, InscribedBall) {
    EXPECT_NEAR(sublevel_alpha(Matrix::Identity(2, 2), Polytope::box(2, 1.0)), 1.0, 1e-14);
}

TEST(SublevelAlpha, AnisotropicWeight) {
    // Facets x1 = +-1 give 4, facets x2 = +-1 give 1.
    EXPECT_NEAR(sublevel_alpha(make_matrix({{4.0, 0.0}, {0.0, 1.0}}), Polytope::box(2, 1.0)), 1.0, 1e-14);
}

TEST(SublevelAlpha, TouchesAFacetAndViolatesNone) {
    const Matrix K = make_matrix({{2.0, 0.3}, {0.3, 1.0}});
    const Polytope box = Polytope::box(2, 2.0);
    const double alpha = sublevel_alpha(K, box);
    const Eigen::LLT<Matrix> llt(K);
    double tightest = -1e9;
    for (Eigen::Index i = 0; i < box.num_rows(); ++i) {
        const Vector hi = box.H.row(i).transpose();
        // max h_i'x over the ellipse is sqrt(alpha h_i'K^-1 h_i).
        const double reach = std::sqrt(alpha * hi.dot(llt.solve(hi)));
        EXPECT_LE(reach, box.h(i) + 1e-8);
        tightest = std::max(tightest, reach - box.h(i));
    }
    EXPECT_NEAR(tightest, 0.0, 1e-8);
    EXPECT_THROW(sublevel_alpha(make_matrix({{1.0, 0.0}, {0.0, -1.0}}), box), Error);
}

TEST(Vertices, UnitBox) {
    const auto v = vertices_2d(Polytope::box(2, 1.0));
    ASSERT_EQ(v.size(), 4u);
    for (const auto& p : v)
        EXPECT_NEAR(p.cwiseAbs().minCoeff(), 1.0, 1e-12);
}

TEST(Vertices, ParallelogramFacetIntersections) {
    const auto v = vertices_2d(example6_s2());
    ASSERT_EQ(v.size(), 4u);
    const auto s2 = example6_s2();
    for (const auto& p : v) {
        // Each vertex lies on exactly two facets.
        int active = 0;
        for (Eigen::Index i = 0; i < s2.num_rows(); ++i)
            active += std::abs(s2.H.row(i).dot(p) - 1.0) < 1e-9;
        EXPECT_EQ(active, 2);
    }
}

TEST(SupportScan, LabelsEveryGridPointDeterministically) {
    ScanEvaluator eval = [](const Vector& x) -> std::optional<int> {
        if (x.cwiseAbs().maxCoeff() > 1.0)
            return std::nullopt;
        return x(0) >= 0.0 ? 1 : 2;
    };
    const auto one = support_scan(eval, make_vector({-2, -2}), make_vector({2, 2}), 0.5, 1);
    const auto many = support_scan(eval, make_vector({-2, -2}), make_vector({2, 2}), 0.5, 4);
    EXPECT_EQ(one.nx, 9);
    EXPECT_EQ(one.ny, 9);
    EXPECT_EQ(one.labels, many.labels);
    EXPECT_EQ(one.finite_count(), 25u);
    EXPECT_THROW(support_scan(eval, make_vector({0, 0}), make_vector({1, 1}), 0.0), Error);
}
