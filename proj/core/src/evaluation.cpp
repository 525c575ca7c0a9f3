#include "vfp/evaluation.hpp"

#include <cmath>

#include "vfp/error.hpp"

namespace vfp {

namespace {

void require_values(const Mdp& mdp, const ValueVector& v) {
    if (static_cast<std::size_t>(v.size()) != mdp.n_states()) {
        throw Error(ErrorCode::ShapeMismatch, "value vector has " + std::to_string(v.size()) + " entries, MDP has " +
                                                  std::to_string(mdp.n_states()) + " states");
    }
}

Matrix induced_transitions(const Mdp& mdp, const Policy& policy) {
    return policy_matrix(policy) * mdp.transitions();
}

Vector induced_rewards(const Mdp& mdp, const Policy& policy) { return policy_matrix(policy) * mdp.rewards(); }

Matrix system_matrix(const Mdp& mdp, const Matrix& p_pi) {
    const auto n = static_cast<Eigen::Index>(mdp.n_states());
    return Matrix::Identity(n, n) - mdp.gamma() * p_pi;
}

}  // namespace

InducedChain induce(const Mdp& mdp, const Policy& policy) {
    require_shape(mdp, policy);
    InducedChain chain;
    chain.p_pi = induced_transitions(mdp, policy);
    chain.r_pi = induced_rewards(mdp, policy);
    const auto n = static_cast<Eigen::Index>(mdp.n_states());
    chain.resolvent = dense_solve(system_matrix(mdp, chain.p_pi), Matrix::Identity(n, n));
    return chain;
}

ValueVector value_function(const Mdp& mdp, const Policy& policy) {
    require_shape(mdp, policy);
    const Matrix p_pi = induced_transitions(mdp, policy);
    return dense_solve(system_matrix(mdp, p_pi), induced_rewards(mdp, policy));
}

ValueVector bellman_apply(const Mdp& mdp, const Policy& policy, const ValueVector& v) {
    require_shape(mdp, policy);
    require_values(mdp, v);
    return induced_rewards(mdp, policy) + mdp.gamma() * (induced_transitions(mdp, policy) * v);
}

Matrix q_values(const Mdp& mdp, const ValueVector& v) {
    require_values(mdp, v);
    const Vector flat = mdp.rewards() + mdp.gamma() * (mdp.transitions() * v);
    // flat is indexed s * |A| + a, i.e. row-major |S| x |A|.
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        flat.data(), static_cast<Eigen::Index>(mdp.n_states()), static_cast<Eigen::Index>(mdp.n_actions()));
}

GreedyResult optimality_bellman_apply(const Mdp& mdp, const ValueVector& v) {
    const Matrix q = q_values(mdp, v);
    ValueVector best(q.rows());
    std::vector<std::size_t> actions(static_cast<std::size_t>(q.rows()));
    for (Eigen::Index s = 0; s < q.rows(); ++s) {
        Eigen::Index arg = 0;
        for (Eigen::Index a = 1; a < q.cols(); ++a) {
            if (q(s, a) > q(s, arg)) arg = a;  // strict: ties keep the lower index
        }
        best(s) = q(s, arg);
        actions[static_cast<std::size_t>(s)] = static_cast<std::size_t>(arg);
    }
    return {std::move(best), Policy::deterministic(mdp.n_actions(), actions)};
}

Policy greedy_policy(const Mdp& mdp, const ValueVector& v) { return optimality_bellman_apply(mdp, v).policy; }

GreedyResult optimal_value(const Mdp& mdp, double tolerance) {
    if (!(tolerance > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "optimal_value tolerance must be positive");
    }
    const double gamma = mdp.gamma();
    ValueVector v = ValueVector::Zero(static_cast<Eigen::Index>(mdp.n_states()));
    if (gamma > 0.0) {
        const double threshold = tolerance * (1.0 - gamma) / gamma;
        // Contraction guarantees termination; the cap only guards against a
        // threshold below floating-point resolution.
        const std::size_t cap =
            100 + static_cast<std::size_t>(std::ceil(std::log(threshold / (1.0 + mdp.value_bound())) / std::log(gamma)));
        for (std::size_t k = 0; k < cap; ++k) {
            ValueVector next = optimality_bellman_apply(mdp, v).values;
            const double delta = max_abs(next - v);
            v = std::move(next);
            if (delta < threshold) break;
        }
    }
    Policy greedy = greedy_policy(mdp, v);
    ValueVector exact = value_function(mdp, greedy);
    // Near-ties can leave the extracted policy improvable; finish with policy
    // improvement steps, which only move on a strict gain.
    for (std::size_t k = 0; k < 1000; ++k) {
        const GreedyResult improved = optimality_bellman_apply(mdp, exact);
        if (max_abs(improved.values - exact) <= 1e-13 * (1.0 + max_abs(exact)) || improved.policy == greedy) break;
        greedy = improved.policy;
        exact = value_function(mdp, greedy);
    }
    return {std::move(exact), std::move(greedy)};
}

}  // namespace vfp
