#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "vfp/dynamics.hpp"
#include "vfp/evaluation.hpp"
#include "vfp/geometry.hpp"
#include "vfp/mdp.hpp"
#include "vfp/random.hpp"

namespace vfp {
namespace {

using testing::brute_force_optimal;
using testing::max_diff;

SoftmaxParams random_logits(const Mdp& mdp, std::uint64_t seed, double scale = 2.0) {
    Rng rng(seed);
    Matrix theta(static_cast<Eigen::Index>(mdp.n_states()), static_cast<Eigen::Index>(mdp.n_actions()));
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = scale * rng.normal();
    return {theta};
}

double entropy_sum(const Policy& pi, const Vector& weights) {
    double out = 0.0;
    for (Eigen::Index s = 0; s < pi.probs().rows(); ++s) {
        for (Eigen::Index a = 0; a < pi.probs().cols(); ++a) {
            const double p = pi.probs()(s, a);
            if (p > 0.0) out -= weights(s) * p * std::log(p);
        }
    }
    return out;
}

// Central difference of f over every logit.
template <class F>
Matrix finite_difference(const SoftmaxParams& at, F f, double h = 1e-5) {
    Matrix g(at.theta.rows(), at.theta.cols());
    for (Eigen::Index i = 0; i < at.theta.size(); ++i) {
        SoftmaxParams plus = at, minus = at;
        plus.theta(i) += h;
        minus.theta(i) -= h;
        g(i) = (f(plus) - f(minus)) / (2.0 * h);
    }
    return g;
}

double relative_error(const Matrix& a, const Matrix& b) {
    return (a - b).cwiseAbs().maxCoeff() / std::max(b.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Softmax, RowsAreStochasticAndShiftInvariant) {
    const Mdp mdp = random_mdp(3, 3, 0.9, 1);
    SoftmaxParams p = random_logits(mdp, 2);
    const Policy a = softmax_policy(p);
    p.theta.array() += 1000.0;
    const Policy b = softmax_policy(p);
    EXPECT_LT((a.probs() - b.probs()).cwiseAbs().maxCoeff(), 1e-12);
    for (Eigen::Index s = 0; s < 3; ++s) EXPECT_NEAR(a.probs().row(s).sum(), 1.0, 1e-15);
    p.theta(0, 0) = std::nan("");
    EXPECT_VFP_ERROR(softmax_policy(p), ErrorCode::NonFiniteLogits);
}

TEST(Softmax, FromPolicyRoundTrips) {
    const Policy pi = random_policy(4, 3, 5);
    const Policy back = softmax_policy(SoftmaxParams::from_policy(pi));
    EXPECT_LT((back.probs() - pi.probs()).cwiseAbs().maxCoeff(), 1e-14);
    const Policy det = softmax_policy(SoftmaxParams::from_policy(Policy::deterministic(2, {1, 0})));
    EXPECT_EQ(det(0, 1), 1.0);
}

TEST(DiscountedDistribution, MatchesTruncatedSeries) {
    const Mdp mdp = random_mdp(3, 2, 0.8, 3);
    const Policy pi = random_policy(mdp, 4);
    const Vector rho0 = Vector::Constant(3, 1.0 / 3.0);
    const Matrix p = policy_matrix(pi) * mdp.transitions();
    Vector acc = Vector::Zero(3), term = rho0;
    for (int t = 0; t < 400; ++t) {
        acc += term;
        term = mdp.gamma() * p.transpose() * term;
    }
    acc *= 1.0 - mdp.gamma();
    const Vector d = discounted_distribution(mdp, pi, rho0);
    EXPECT_LT((d - acc).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_NEAR(d.sum(), 1.0, 1e-13);
    EXPECT_VFP_ERROR(discounted_distribution(mdp, pi, Vector::Constant(3, 0.5)), ErrorCode::InvalidArgument);
}

TEST(PolicyGradient, MatchesFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Mdp mdp = random_mdp(2 + seed % 3, 2 + seed % 2, 0.5 + 0.008 * static_cast<double>(seed), seed);
        const SoftmaxParams at = random_logits(mdp, seed + 1000);
        const Matrix fd = finite_difference(at, [&](const SoftmaxParams& p) { return objective(mdp, softmax_policy(p)); });
        EXPECT_LT(relative_error(policy_gradient(mdp, at), fd), 1e-4) << seed;
    }
}

TEST(PolicyGradient, EntropyTermMatchesFiniteDifferences) {
    const double coeff = 0.1;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Mdp mdp = random_mdp(3, 3, 0.9, seed);
        const SoftmaxParams at = random_logits(mdp, seed + 7, 1.0);
        const Vector d = discounted_distribution(mdp, softmax_policy(at), Vector::Constant(3, 1.0 / 3.0));
        const double weight = coeff / (1.0 - mdp.gamma());
        const Matrix fd = finite_difference(at, [&](const SoftmaxParams& p) {
            const Policy pi = softmax_policy(p);
            return objective(mdp, pi) + weight * entropy_sum(pi, d);
        });
        EXPECT_LT(relative_error(policy_gradient(mdp, at, coeff), fd), 1e-4) << seed;
    }
}

TEST(PolicyGradient, VanishesAtSaturatedPolicies) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Mdp mdp = random_mdp(3, 2, 0.9, seed);
        Matrix theta = Matrix::Zero(3, 2);
        for (Eigen::Index s = 0; s < 3; ++s) theta(s, static_cast<Eigen::Index>(seed + s) % 2) = 30.0;
        EXPECT_LT(policy_gradient(mdp, {theta}).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(Fisher, MatchesOuterProductDefinition) {
    const Mdp mdp = random_mdp(3, 3, 0.9, 11);
    const SoftmaxParams at = random_logits(mdp, 12);
    const Policy pi = softmax_policy(at);
    const Vector d = discounted_distribution(mdp, pi, Vector::Constant(3, 1.0 / 3.0));
    Matrix expected = Matrix::Zero(9, 9);
    for (int s = 0; s < 3; ++s) {
        for (int a = 0; a < 3; ++a) {
            Vector score = Vector::Zero(9);  // grad log pi(a|s)
            for (int b = 0; b < 3; ++b) score(s * 3 + b) = (a == b ? 1.0 : 0.0) - pi(s, b);
            expected += d(s) * pi(s, a) * score * score.transpose();
        }
    }
    EXPECT_LT((fisher_information(mdp, at) - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(NaturalGradient, SolvesDampedSystem) {
    const Mdp mdp = random_mdp(2, 3, 0.9, 13);
    const SoftmaxParams at = random_logits(mdp, 14);
    const Matrix g = natural_policy_gradient(mdp, at, 1e-3);
    Matrix f = fisher_information(mdp, at);
    f.diagonal().array() += 1e-3;
    const Matrix grad = policy_gradient(mdp, at);
    const Vector flat = Eigen::Map<const Vector>(Matrix(g.transpose()).data(), g.size());
    const Vector rhs = Eigen::Map<const Vector>(Matrix(grad.transpose()).data(), grad.size());
    EXPECT_LT((f * flat - rhs).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_VFP_ERROR(natural_policy_gradient(mdp, at, 0.0), ErrorCode::InvalidArgument);
}

TEST(Init, KindsAndValidation) {
    const Mdp mdp = builtin_fixture(FixtureId::Dyn2);
    const Policy opt = optimal_value(mdp).policy;
    InitSpec spec;
    EXPECT_EQ(resolve_init(mdp, spec), Policy::uniform(2, 2));
    spec.kind = InitKind::NearVertex;
    spec.epsilon = 0.1;
    const Policy nv = resolve_init(mdp, spec);
    for (std::size_t s = 0; s < 2; ++s) {
        Eigen::Index a = 0;
        opt.probs().row(static_cast<Eigen::Index>(s)).maxCoeff(&a);
        EXPECT_NEAR(nv.probs()(static_cast<Eigen::Index>(s), a), 0.95, 1e-15);
    }
    spec.vertex = 4;
    EXPECT_VFP_ERROR(resolve_init(mdp, spec), ErrorCode::InvalidArgument);
    spec.kind = InitKind::NearBoundary;
    spec.boundary_state = 1;
    const Policy nb = resolve_init(mdp, spec);
    EXPECT_EQ(nb.probs().row(0), Policy::uniform(2, 2).probs().row(0));
    EXPECT_NEAR(nb.probs().row(1).maxCoeff(), 0.95, 1e-15);
    spec.epsilon = 0.7;
    EXPECT_VFP_ERROR(resolve_init(mdp, spec), ErrorCode::InvalidArgument);
    spec.kind = InitKind::ExplicitPolicy;
    EXPECT_VFP_ERROR(resolve_init(mdp, spec), ErrorCode::MissingPolicy);
}

TEST(ValueIteration, ContractsTowardsOptimum) {
    for (FixtureId id : all_fixtures()) {
        const Mdp mdp = builtin_fixture(id);
        const testing::Vec star = brute_force_optimal(mdp);
        const Trajectory t = run_value_iteration(mdp, ValueVector::Zero(static_cast<Eigen::Index>(mdp.n_states())), 200, 0.0);
        ASSERT_EQ(t.points.size(), 201u);
        for (std::size_t k = 1; k < t.points.size(); ++k) {
            const double prev = max_diff(t.points[k - 1], star);
            EXPECT_LE(max_diff(t.points[k], star), mdp.gamma() * prev + 1e-12) << fixture_name(id) << " k=" << k;
        }
    }
}

TEST(ValueIteration, StopsOnTolerance) {
    const Mdp mdp = builtin_fixture(FixtureId::Dyn2);
    const Trajectory t = run_value_iteration(mdp, ValueVector::Zero(2), 10000, 1e-6);
    EXPECT_LT(t.points.size(), 10000u);
    EXPECT_LT(t.meta.back().step_norm, 1e-6);
    EXPECT_FALSE(t.final_policy.has_value());
    EXPECT_VFP_ERROR(run_value_iteration(mdp, ValueVector::Zero(3), 5, 0.0), ErrorCode::ShapeMismatch);
}

TEST(ValueIteration, Dyn2IterateLeavesValueHull) {
    const Mdp mdp = builtin_fixture(FixtureId::Dyn2);
    std::vector<ValueVector> corners;
    for (const auto& v : polytope_vertices_det(mdp)) corners.push_back(v.value);
    const auto hull = hull_2d(corners);
    InitSpec spec;
    spec.kind = InitKind::NearVertex;
    spec.vertex = 1;
    const Trajectory t = run_value_iteration(mdp, value_function(mdp, resolve_init(mdp, spec)), 100, 0.0);
    std::size_t outside = 0;
    for (const auto& v : t.points) outside += point_in_hull(v, hull) ? 0 : 1;
    EXPECT_GE(outside, 1u);
}

TEST(PolicyIteration, MonotoneBoundedAndOptimal) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const Mdp mdp = random_mdp(2 + seed % 3, 2 + seed % 2, 0.9, seed);
        const Trajectory t = run_policy_iteration(mdp, value_function(mdp, random_policy(mdp, seed)));
        const auto n_det = static_cast<std::size_t>(std::pow(mdp.n_actions(), mdp.n_states()));
        EXPECT_LE(t.points.size() - 1, n_det);
        for (std::size_t k = 2; k < t.points.size(); ++k) {
            EXPECT_TRUE(((t.points[k] - t.points[k - 1]).array() >= -1e-12).all()) << seed;
        }
        EXPECT_LT(max_diff(t.points.back(), brute_force_optimal(mdp)), 1e-8) << seed;
        // Every point after the start is the value of some deterministic policy.
        const auto verts = polytope_vertices_det(mdp);
        for (std::size_t k = 1; k < t.points.size(); ++k) {
            double best = INFINITY;
            for (const auto& v : verts) best = std::min(best, (v.value - t.points[k]).cwiseAbs().maxCoeff());
            EXPECT_LT(best, 1e-12);
        }
    }
}

TEST(PolicyGradientRun, ImprovesObjectiveAndApproachesOptimum) {
    const Mdp mdp = builtin_fixture(FixtureId::Dyn2);
    const Trajectory t = run_policy_gradient(mdp, InitSpec{}, 0.1, 10000);
    ASSERT_EQ(t.points.size(), 10001u);
    EXPECT_GT(t.points.back().mean(), t.points.front().mean());
    EXPECT_LT((t.points.back() - optimal_value(mdp).values).cwiseAbs().maxCoeff(), 5e-3);
    EXPECT_TRUE(t.final_policy.has_value());
    EXPECT_EQ(t.meta.back().scalars.count("gradient_norm"), 1u);
    EXPECT_VFP_ERROR(run_policy_gradient(mdp, InitSpec{}, 0.0, 10), ErrorCode::InvalidArgument);
}

TEST(PolicyGradientRun, NaturalGradientIsFaster) {
    const Mdp mdp = builtin_fixture(FixtureId::Dyn2);
    const ValueVector star = optimal_value(mdp).values;
    const Trajectory pg = run_policy_gradient(mdp, InitSpec{}, 0.05, 300);
    const Trajectory npg = run_npg(mdp, InitSpec{}, 0.05, 300);
    EXPECT_LT((npg.points.back() - star).cwiseAbs().maxCoeff(), (pg.points.back() - star).cwiseAbs().maxCoeff());
}

TEST(PolicyGradientRun, EntropyKeepsPolicyInterior) {
    const Mdp mdp = builtin_fixture(FixtureId::Dyn2);
    const Trajectory t = run_policy_gradient(mdp, InitSpec{}, 0.05, 2000, 0.1);
    EXPECT_GT(t.final_policy->probs().minCoeff(), 1e-3);
    EXPECT_GT((t.points.back() - optimal_value(mdp).values).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Cem, EncodeDecodeRemovesRowShift) {
    const Mdp mdp = random_mdp(3, 3, 0.9, 2);
    EXPECT_EQ(cem_dimension(mdp), 6u);
    SoftmaxParams p = random_logits(mdp, 3);
    const Policy a = softmax_policy(p);
    const Policy b = softmax_policy(cem_decode(cem_encode(p), 3, 3));
    EXPECT_LT((a.probs() - b.probs()).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_VFP_ERROR(cem_decode(Vector::Zero(5), 3, 3), ErrorCode::ShapeMismatch);
}

TEST(Cem, ConfigValidation) {
    CemConfig c;
    EXPECT_NO_THROW(c.validate());
    c.elites = 0;
    EXPECT_VFP_ERROR(c.validate(), ErrorCode::InvalidArgument);
    c = CemConfig{};
    c.elites = c.population + 1;
    EXPECT_VFP_ERROR(c.validate(), ErrorCode::InvalidArgument);
    c = CemConfig{};
    c.noise_scale = -1.0;
    EXPECT_VFP_ERROR(c.validate(), ErrorCode::InvalidArgument);
}

TEST(Cem, SeededRunsAreIdentical) {
    const Mdp mdp = builtin_fixture(FixtureId::Dyn2);
    CemConfig c;
    c.population = 100;
    c.elites = 10;
    c.iterations = 20;
    c.seed = 5;
    const SoftmaxParams init = SoftmaxParams::from_policy(Policy::uniform(2, 2));
    const Trajectory a = run_cem(mdp, init, c);
    const Trajectory b = run_cem(mdp, init, c);
    ASSERT_EQ(a.points.size(), 21u);
    for (std::size_t i = 0; i < a.points.size(); ++i) EXPECT_EQ(a.points[i], b.points[i]);
}

TEST(Cem, NoiseFreeCollapsesAndNoisyConverges) {
    const Mdp mdp = builtin_fixture(FixtureId::Dyn2);
    InitSpec spec;
    spec.kind = InitKind::NearVertex;
    const SoftmaxParams init = SoftmaxParams::from_policy(resolve_init(mdp, spec));
    CemConfig c;
    c.seed = 1;
    const Trajectory plain = run_cem(mdp, init, c);
    EXPECT_LT(plain.meta.back().scalars.at("cov_trace"), 1e-3);
    c.noise_scale = 0.05;
    const Trajectory noisy = run_cem(mdp, init, c);
    EXPECT_LT((noisy.points.back() - optimal_value(mdp).values).cwiseAbs().maxCoeff(), 0.05);
    EXPECT_GT(noisy.meta.back().scalars.at("cov_trace"), 0.05);
}

}  // namespace
}  // namespace vfp
