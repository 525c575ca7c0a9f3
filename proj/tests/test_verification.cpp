#include <cmath>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "vfp/evaluation.hpp"
#include "vfp/mdp.hpp"
#include "vfp/verification.hpp"

namespace vfp {
namespace {

TEST(NeumannOracle, ErrorWithinTailBound) {
    const Mdp mdp = builtin_fixture(FixtureId::Dyn2);
    OracleConfig cfg;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Policy pi = random_policy(mdp, seed);
        const double err = (neumann_value_oracle(mdp, pi, cfg) - value_function(mdp, pi)).cwiseAbs().maxCoeff();
        EXPECT_LE(err, neumann_tail_bound(mdp, cfg.neumann_terms) + 1e-14);
    }
    // 0.9^200 * 0.5 / 0.1
    EXPECT_NEAR(neumann_tail_bound(mdp, 200), std::pow(0.9, 200) * 5.0, 1e-20);
}

TEST(NeumannOracle, FewTermsAreVisiblyTruncated) {
    const Mdp mdp = example1_mdp(0.9);
    OracleConfig cfg;
    cfg.neumann_terms = 1;
    const ValueVector v = neumann_value_oracle(mdp, Policy::deterministic(2, {0, 0}), cfg);
    EXPECT_EQ(v(0), 0.0);
    cfg.neumann_terms = 3;
    Matrix p(2, 2);
    p << 0.5, 0.5, 1, 0;
    // r_pi(0) = 0.5 and state 0 is revisited with probability 0.5.
    const ValueVector w = neumann_value_oracle(mdp, Policy(p), cfg);
    EXPECT_NEAR(w(0), 0.5 * (1 + 0.45 + 0.45 * 0.45), 1e-15);
}

TEST(McOracle, AgreesWithinThreeSigmaPlusTruncation) {
    const Mdp mdp = builtin_fixture(FixtureId::Fig2b);
    OracleConfig cfg;
    cfg.mc_episodes = 20000;
    cfg.seed = 3;
    const Policy pi = random_policy(mdp, 4);
    const McEstimate est = mc_value_oracle(mdp, pi, cfg);
    const ValueVector exact = value_function(mdp, pi);
    for (Eigen::Index s = 0; s < exact.size(); ++s) {
        EXPECT_GT(est.standard_error(s), 0.0);
        EXPECT_LE(std::abs(est.estimate(s) - exact(s)), 3.0 * est.standard_error(s) + est.truncation_bound);
    }
    EXPECT_EQ(est.estimate, mc_value_oracle(mdp, pi, cfg).estimate);
}

TEST(OracleConfig, Validation) {
    OracleConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.mc_episodes = 0;
    EXPECT_VFP_ERROR(cfg.validate(), ErrorCode::InvalidArgument);
    cfg = OracleConfig{};
    cfg.fd_step = 0.0;
    EXPECT_VFP_ERROR(cfg.validate(), ErrorCode::InvalidArgument);
}

TEST(CompareOracles, PassesOnFixture) {
    const Mdp mdp = builtin_fixture(FixtureId::Dyn2);
    OracleConfig cfg;
    cfg.mc_episodes = 20000;
    const CheckReport r = compare_oracles(mdp, Policy::uniform(2, 2), cfg);
    EXPECT_TRUE(r.passed) << r.to_json();
    EXPECT_EQ(r.instances_run, 5u);
}

TEST(CheckReport, RecordFailAndMerge) {
    CheckReport a;
    a.check_name = "x";
    a.record("i1", 0.5, 1.0);
    EXPECT_TRUE(a.passed);
    a.record("i2", 2.0, 1.0);
    EXPECT_FALSE(a.passed);
    a.record("i3", std::nan(""), 1.0);
    EXPECT_EQ(a.failures.size(), 2u);
    EXPECT_EQ(a.instances_run, 3u);

    CheckReport b;
    b.record("j", 3.0, 10.0);
    CheckReport c = b;
    c.merge(a);
    EXPECT_EQ(c.instances_run, 4u);
    EXPECT_FALSE(c.passed);
    EXPECT_TRUE(std::isinf(c.max_deviation));  // the NaN instance counts as worst

    const auto doc = nlohmann::json::parse(a.to_json());
    EXPECT_EQ(doc.at("check_name"), "x");
    EXPECT_EQ(doc.at("failure_count"), 2);
    EXPECT_TRUE(doc.at("max_deviation").is_null());
    EXPECT_EQ(doc.at("passed"), false);
    EXPECT_EQ(doc.at("failures")[0].at("instance"), "i2");
}

TEST(Suites, NamesAndTolerances) {
    const auto& names = suite_names();
    EXPECT_EQ(names.size(), 13u);
    for (const auto& n : names) EXPECT_GE(suite_tolerance(n), 0.0);
    EXPECT_VFP_ERROR(suite_tolerance("nope"), ErrorCode::UnknownSuite);
    EXPECT_VFP_ERROR(run_suite("nope"), ErrorCode::UnknownSuite);
}

TEST(Suites, AllPassOnSmallRuns) {
    SuiteOptions opt;
    opt.trials = 8;
    opt.samples = 300;
    for (const auto& n : suite_names()) {
        if (n == "boundary") continue;
        const CheckReport r = run_suite(n, opt);
        EXPECT_TRUE(r.passed) << n << " " << r.to_json();
        EXPECT_GE(r.instances_run, 8u) << n;
    }
}

TEST(Suites, TwoStateSuitesRejectLargerMdp) {
    SuiteOptions opt;
    opt.mdp = builtin_fixture(FixtureId::ThreeAction);
    if (opt.mdp->n_states() == 2) opt.mdp = random_mdp(3, 2, 0.9, 1);
    EXPECT_VFP_ERROR(run_suite("hull", opt), ErrorCode::DimensionUnsupported);
}

TEST(Suites, GivenMdpRunsRequestedTrials) {
    SuiteOptions opt;
    opt.mdp = builtin_fixture(FixtureId::Fig2c);
    opt.trials = 3;
    const CheckReport r = run_suite("line", opt);
    EXPECT_EQ(r.instances_run, 3u);
    EXPECT_TRUE(r.passed);
}

TEST(Suites, ToleranceOverrideCanForceFailure) {
    SuiteOptions opt;
    opt.trials = 2;
    opt.tolerance = -1.0;
    EXPECT_FALSE(run_suite("order", opt).passed);
}

TEST(Suites, SeededRunsAreReproducible) {
    SuiteOptions opt;
    opt.trials = 5;
    opt.seed = 42;
    EXPECT_EQ(run_suite("rho", opt).to_json(), run_suite("rho", opt).to_json());
}

TEST(Boundary, Dyn2CloudBoundaryOnSemiDeterministicFamilies) {
    EXPECT_LT(boundary_deviation(builtin_fixture(FixtureId::Dyn2), 200, 1000, 1), 1e-3);
}

}  // namespace
}  // namespace vfp
