#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "vfp/evaluation.hpp"
#include "vfp/mdp.hpp"

namespace vfp {
namespace {

using testing::brute_force_optimal;
using testing::iterate_value;
using testing::max_diff;

Policy example1_mix(double mu) {
    Matrix p(2, 2);
    p << 1.0 - mu, mu, 0.5, 0.5;
    return Policy(p);
}

TEST(ValueFunction, Example1ClosedForm) {
    const Mdp mdp = example1_mdp(0.9);
    for (double mu : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const ValueVector v = value_function(mdp, example1_mix(mu));
        EXPECT_NEAR(v(0), mu / (1.0 - 0.9 * (1.0 - mu)), 1e-12) << mu;
        EXPECT_NEAR(v(1), 0.0, 1e-12);
    }
}

TEST(ValueFunction, MatchesFixedPointIteration) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Mdp mdp = random_mdp(2 + seed % 3, 2 + seed % 2, 0.5 + 0.02 * static_cast<double>(seed), seed);
        const Policy pi = random_policy(mdp, seed + 100);
        EXPECT_LT(max_diff(value_function(mdp, pi), iterate_value(mdp, pi)), 1e-12) << seed;
    }
}

TEST(ValueFunction, FixtureUniformPolicies) {
    for (FixtureId id : all_fixtures()) {
        const Mdp mdp = builtin_fixture(id);
        const Policy u = Policy::uniform(mdp.n_states(), mdp.n_actions());
        EXPECT_LT(max_diff(value_function(mdp, u), iterate_value(mdp, u)), 1e-12) << fixture_name(id);
    }
}

TEST(ValueFunction, IsFixedPointOfBellmanOperator) {
    const Mdp mdp = random_mdp(4, 3, 0.95, 3);
    const Policy pi = random_policy(mdp, 4);
    const ValueVector v = value_function(mdp, pi);
    EXPECT_LT((bellman_apply(mdp, pi, v) - v).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ValueFunction, ConstantRewardGivesGeometricSum) {
    Matrix p(2, 2);
    p << 0.3, 0.7, 0.6, 0.4;
    const Mdp mdp(2, 1, Vector::Constant(2, 1.0), p, 0.8);
    const ValueVector v = value_function(mdp, Policy::uniform(2, 1));
    EXPECT_NEAR(v(0), 5.0, 1e-12);
    EXPECT_NEAR(v(1), 5.0, 1e-12);
}

TEST(ValueFunction, ShapeMismatchThrows) {
    EXPECT_VFP_ERROR(value_function(builtin_fixture(FixtureId::Dyn2), Policy::uniform(2, 3)), ErrorCode::ShapeMismatch);
}

TEST(InducedChain, ResolventInvertsSystem) {
    const Mdp mdp = random_mdp(3, 2, 0.9, 8);
    const InducedChain c = induce(mdp, random_policy(mdp, 9));
    const Matrix lhs = (Matrix::Identity(3, 3) - mdp.gamma() * c.p_pi) * c.resolvent;
    EXPECT_LT((lhs - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
    for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(c.p_pi.row(i).sum(), 1.0, 1e-14);
}

TEST(QValues, HandComputed) {
    const Mdp mdp = example1_mdp(0.9);
    ValueVector v(2);
    v << 2.0, 1.0;
    const Matrix q = q_values(mdp, v);
    // (s0,a0) self-loops; (s0,a1) pays 1 and moves to s1; s1 is absorbing.
    EXPECT_DOUBLE_EQ(q(0, 0), 1.8);
    EXPECT_DOUBLE_EQ(q(0, 1), 1.9);
    EXPECT_DOUBLE_EQ(q(1, 0), 0.9);
    EXPECT_DOUBLE_EQ(q(1, 1), 0.9);
}

TEST(Greedy, TiesGoToLowestAction) {
    const Mdp mdp = example1_mdp(0.9);
    const Policy g = greedy_policy(mdp, ValueVector::Zero(2));
    EXPECT_EQ(g, Policy::deterministic(2, {1, 0}));
    const GreedyResult r = optimality_bellman_apply(mdp, ValueVector::Zero(2));
    EXPECT_DOUBLE_EQ(r.values(0), 1.0);
    EXPECT_DOUBLE_EQ(r.values(1), 0.0);
}

TEST(OptimalValue, MatchesBruteForceOnFixtures) {
    for (FixtureId id : all_fixtures()) {
        const Mdp mdp = builtin_fixture(id);
        EXPECT_LT(max_diff(optimal_value(mdp).values, brute_force_optimal(mdp)), 1e-10) << fixture_name(id);
    }
}

TEST(OptimalValue, MatchesBruteForceOnRandomMdps) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const Mdp mdp = random_mdp(2 + seed % 3, 2 + seed % 2, 0.9, seed);
        const GreedyResult r = optimal_value(mdp);
        EXPECT_LT(max_diff(r.values, brute_force_optimal(mdp)), 1e-10) << seed;
        EXPECT_TRUE(r.policy.is_deterministic());
    }
}

TEST(OptimalValue, Dyn2Reference) {
    const GreedyResult r = optimal_value(builtin_fixture(FixtureId::Dyn2));
    EXPECT_NEAR(r.values(0), 0.163636363636, 1e-9);
    EXPECT_NEAR(r.values(1), 1.890909090909, 1e-9);
}

}  // namespace
}  // namespace vfp
