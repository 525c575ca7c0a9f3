#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "vfp/evaluation.hpp"
#include "vfp/mdp.hpp"

namespace vfp {
namespace {

constexpr const char* kDyn2Doc = R"({"n_states": 2, "n_actions": 2, "gamma": 0.9,
  "rewards": [-0.45, -0.1, 0.5, 0.5],
  "transitions": [[0.7, 0.3], [0.99, 0.01], [0.2, 0.8], [0.99, 0.01]]})";

TEST(Fixtures, Fig2aDocumentUsesFlatIndexing) {
    const Mdp mdp = load_mdp(dump_mdp(builtin_fixture(FixtureId::Fig2a)));
    EXPECT_EQ(mdp.reward(0, 1), 0.38);
    EXPECT_EQ(mdp.transition(0, 0, 1), 0.99);
}

TEST(Fixtures, Dyn2Document) {
    const Mdp mdp = load_mdp(kDyn2Doc);
    EXPECT_EQ(mdp.gamma(), 0.9);
    EXPECT_EQ(mdp.reward(0, 0), -0.45);
    EXPECT_EQ(mdp, builtin_fixture(FixtureId::Dyn2));
}

TEST(Fixtures, Fig2cRewards) {
    const Mdp mdp = builtin_fixture(FixtureId::Fig2c);
    EXPECT_EQ(mdp.n_actions(), 3u);
    EXPECT_EQ(mdp.gamma(), 0.9);
    const std::vector<double> expected{-0.93, -0.49, 0.63, 0.78, 0.14, 0.41};
    for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_EQ(mdp.rewards()(static_cast<Eigen::Index>(i)), expected[i]);
}

TEST(Fixtures, ThreeActionShape) {
    const Mdp mdp = builtin_fixture(FixtureId::ThreeAction);
    EXPECT_EQ(mdp.n_actions(), 3u);
    EXPECT_EQ(mdp.gamma(), 0.8);
}

TEST(Fixtures, Dyn2FirstRow) {
    const Mdp mdp = builtin_fixture(FixtureId::Dyn2);
    EXPECT_EQ(mdp.transition(0, 0, 0), 0.7);
    EXPECT_EQ(mdp.transition(0, 0, 1), 0.3);
}

TEST(Fixtures, CatalogHasSixEntriesAndRoundTripsNames) {
    ASSERT_EQ(all_fixtures().size(), 6u);
    for (FixtureId id : all_fixtures()) EXPECT_EQ(parse_fixture(fixture_name(id)), id);
    EXPECT_VFP_ERROR(parse_fixture("bogus"), ErrorCode::UnknownFixture);
}

TEST(Fixtures, AllRoundTripBitExactly) {
    for (FixtureId id : all_fixtures()) {
        const Mdp mdp = builtin_fixture(id);
        EXPECT_EQ(load_mdp(dump_mdp(mdp)), mdp) << fixture_name(id);
    }
}

TEST(LoadMdp, RejectsRowSummingAboveOne) {
    EXPECT_VFP_ERROR(load_mdp(R"({"n_states": 2, "n_actions": 1, "gamma": 0.5, "rewards": [0, 0],
        "transitions": [[0.5, 0.6], [1, 0]]})"),
                     ErrorCode::InvalidStochasticRow);
}

TEST(LoadMdp, AcceptsAndRenormalizesNearStochasticRows) {
    const Mdp mdp = load_mdp(R"({"n_states": 2, "n_actions": 1, "gamma": 0.5, "rewards": [0, 0],
        "transitions": [[0.3333333333, 0.6666666667], [1, 0]]})");
    EXPECT_NEAR(mdp.transitions().row(0).sum(), 1.0, 1e-15);
}

TEST(LoadMdp, RejectsGammaOutOfRange) {
    EXPECT_VFP_ERROR(load_mdp(R"({"n_states": 1, "n_actions": 1, "gamma": 1.0, "rewards": [0],
        "transitions": [[1]]})"),
                     ErrorCode::InvalidGamma);
    EXPECT_VFP_ERROR(load_mdp(R"({"n_states": 1, "n_actions": 1, "gamma": -0.1, "rewards": [0],
        "transitions": [[1]]})"),
                     ErrorCode::InvalidGamma);
}

TEST(LoadMdp, RejectsMissingExtraAndMisshapenFields) {
    EXPECT_VFP_ERROR(load_mdp(R"({"n_states": 1, "n_actions": 1, "rewards": [0], "transitions": [[1]]})"),
                     ErrorCode::MalformedDocument);
    EXPECT_VFP_ERROR(load_mdp(R"({"n_states": 1, "n_actions": 1, "gamma": 0.5, "rewards": [0],
        "transitions": [[1]], "note": 1})"),
                     ErrorCode::MalformedDocument);
    EXPECT_VFP_ERROR(load_mdp(R"({"n_states": 1, "n_actions": 1, "gamma": 0.5, "rewards": [0, 1],
        "transitions": [[1]]})"),
                     ErrorCode::MalformedDocument);
    EXPECT_VFP_ERROR(load_mdp("not json"), ErrorCode::MalformedDocument);
}

TEST(Example1, DefaultStructure) {
    const Mdp mdp = example1_mdp();
    EXPECT_EQ(mdp.gamma(), 0.9);
    const std::vector<double> r{0, 1, 0, 0};
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(mdp.rewards()(static_cast<Eigen::Index>(i)), r[i]);
    EXPECT_EQ(mdp.transition(0, 0, 0), 1.0);
    EXPECT_EQ(mdp.transition(0, 1, 1), 1.0);
    EXPECT_EQ(mdp.transition(1, 0, 1), 1.0);
    EXPECT_EQ(mdp.transition(1, 1, 1), 1.0);
}

TEST(Example1, GammaPassthroughAndRoundTrip) {
    const Mdp mdp = example1_mdp(0.5);
    EXPECT_EQ(mdp.gamma(), 0.5);
    EXPECT_EQ(mdp.rewards(), example1_mdp().rewards());
    EXPECT_EQ(load_mdp(dump_mdp(mdp)), mdp);
}

TEST(RandomMdp, SeededDeterminism) { EXPECT_EQ(random_mdp(2, 2, 0.9, 7), random_mdp(2, 2, 0.9, 7)); }

TEST(RandomMdp, SingleActionHasOnePolicy) {
    const Mdp mdp = random_mdp(3, 1, 0.5, 1);
    EXPECT_EQ(deterministic_policies(mdp).size(), 1u);
    EXPECT_EQ(random_policy(mdp, 3), random_policy(mdp, 4));
}

TEST(RandomMdp, RowsOnSimplexAndRewardsInRange) {
    const Mdp mdp = random_mdp(4, 3, 0.9, 2);
    for (Eigen::Index i = 0; i < mdp.transitions().rows(); ++i) {
        EXPECT_NEAR(mdp.transitions().row(i).sum(), 1.0, 1e-12);
        EXPECT_GE(mdp.transitions().row(i).minCoeff(), 0.0);
    }
    EXPECT_LE(mdp.rewards().cwiseAbs().maxCoeff(), 1.0);
    EXPECT_VFP_ERROR(random_mdp(2, 2, 1.0, 0), ErrorCode::InvalidGamma);
}

TEST(RandomPolicy, SingleActionIsAllOnes) {
    const Policy p = random_policy(3, 1, 9);
    EXPECT_EQ(p.probs(), Matrix::Ones(3, 1));
}

TEST(RandomPolicy, SeededDeterminism) {
    const Mdp mdp = builtin_fixture(FixtureId::Dyn2);
    EXPECT_EQ(random_policy(mdp, 5), random_policy(mdp, 5));
    EXPECT_FALSE(random_policy(mdp, 5) == random_policy(mdp, 6));
}

TEST(RandomPolicy, FlatDirichletMean) {
    // Dirichlet(1, 1) has mean (1/2, 1/2) and per-entry sd 1/sqrt(12).
    const Mdp mdp = builtin_fixture(FixtureId::Dyn2);
    Matrix sum = Matrix::Zero(2, 2);
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const Policy p = random_policy(mdp, static_cast<std::uint64_t>(i));
        for (Eigen::Index r = 0; r < 2; ++r) {
            EXPECT_GE(p.probs().row(r).minCoeff(), 0.0);
            EXPECT_NEAR(p.probs().row(r).sum(), 1.0, 1e-12);
        }
        sum += p.probs();
    }
    sum /= n;
    EXPECT_LT((sum.array() - 0.5).abs().maxCoeff(), 0.02);
}

TEST(DeterministicPolicies, CountsOrderAndUniqueness) {
    const auto dyn2 = deterministic_policies(builtin_fixture(FixtureId::Dyn2));
    ASSERT_EQ(dyn2.size(), 4u);
    // Lexicographic in (s0 action, s1 action).
    EXPECT_EQ(dyn2[1], Policy::deterministic(2, {0, 1}));
    EXPECT_EQ(dyn2[2], Policy::deterministic(2, {1, 0}));

    const auto three = deterministic_policies(builtin_fixture(FixtureId::ThreeAction));
    ASSERT_EQ(three.size(), 9u);
    std::set<std::vector<double>> seen;
    for (const auto& p : three) {
        EXPECT_TRUE(p.is_deterministic());
        for (Eigen::Index r = 0; r < p.probs().rows(); ++r) EXPECT_EQ(p.probs().row(r).sum(), 1.0);
        seen.insert(std::vector<double>(p.probs().data(), p.probs().data() + p.probs().size()));
    }
    EXPECT_EQ(seen.size(), 9u);
}

TEST(DeterministicPolicies, CapIsEnforced) {
    EXPECT_VFP_ERROR(deterministic_policies(random_mdp(5, 3, 0.5, 1), 100), ErrorCode::EnumerationTooLarge);
}

TEST(PolicyMatrix, UniformTwoByTwo) {
    Matrix expected(2, 4);
    expected << 0.5, 0.5, 0, 0, 0, 0, 0.5, 0.5;
    EXPECT_EQ(policy_matrix(Policy::uniform(2, 2)), expected);
}

TEST(PolicyMatrix, DeterministicIsZeroOne) {
    const Matrix m = policy_matrix(Policy::deterministic(3, {2, 0}));
    EXPECT_EQ(m.sum(), 2.0);
    EXPECT_EQ(m(0, 2), 1.0);
    EXPECT_EQ(m(1, 3), 1.0);
}

TEST(PolicyMatrix, MatchesInducedTransitions) {
    const Mdp mdp = random_mdp(3, 2, 0.7, 11);
    const Policy p = random_policy(mdp, 12);
    const InducedChain chain = induce(mdp, p);
    EXPECT_LT((policy_matrix(p) * mdp.transitions() - chain.p_pi).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PolicyDocument, RoundTripAndValidation) {
    const Policy p = random_policy(3, 2, 4);
    EXPECT_EQ(load_policy(dump_policy(p)), p);
    EXPECT_VFP_ERROR(load_policy(R"({"probs": [[0.5, 0.6]]})"), ErrorCode::InvalidStochasticRow);
    EXPECT_VFP_ERROR(load_policy(R"({"p": [[1]]})"), ErrorCode::MalformedDocument);
    EXPECT_VFP_ERROR(Policy(Matrix::Constant(1, 2, -0.5)), ErrorCode::InvalidStochasticRow);
}

TEST(PolicyEdits, WithActionAndRow) {
    const Policy u = Policy::uniform(2, 3);
    const Policy d = u.with_action(1, 2);
    EXPECT_TRUE(d.is_deterministic_at(1));
    EXPECT_FALSE(d.is_deterministic_at(0));
    EXPECT_EQ(d(1, 2), 1.0);
    EXPECT_VFP_ERROR(require_shape(builtin_fixture(FixtureId::Dyn2), u), ErrorCode::ShapeMismatch);
}

}  // namespace
}  // namespace vfp
