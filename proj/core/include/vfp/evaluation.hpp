#pragma once

#include "vfp/linalg.hpp"
#include "vfp/mdp.hpp"

namespace vfp {

/// Markov chain induced by a fixed policy. Column i of the resolvent
/// (I - gamma P^pi)^{-1} is the direction along which V^pi moves when the
/// policy changes only at state i.
struct InducedChain {
    Matrix p_pi;
    Vector r_pi;
    Matrix resolvent;
};

InducedChain induce(const Mdp& mdp, const Policy& policy);

/// Exact V^pi = (I - gamma P^pi)^{-1} r_pi.
ValueVector value_function(const Mdp& mdp, const Policy& policy);

/// T^pi v = r_pi + gamma P^pi v
ValueVector bellman_apply(const Mdp& mdp, const Policy& policy, const ValueVector& v);

/// Q(s,a) = r(s,a) + gamma sum_s' P(s'|s,a) v(s'), as an |S| x |A| matrix.
Matrix q_values(const Mdp& mdp, const ValueVector& v);

struct GreedyResult {
    ValueVector values;
    Policy policy;
};

/// T* v together with the greedy deterministic policy. Ties go to the
/// lowest action index.
GreedyResult optimality_bellman_apply(const Mdp& mdp, const ValueVector& v);

/// Greedy deterministic policy with respect to v.
Policy greedy_policy(const Mdp& mdp, const ValueVector& v);

/// Value iteration from zero until successive iterates differ by less than
/// tolerance (1 - gamma) / gamma, followed by greedy extraction. The
/// returned values are the exact value of the extracted policy.
GreedyResult optimal_value(const Mdp& mdp, double tolerance = 1e-12);

}  // namespace vfp
