#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vfp/linalg.hpp"
#include "vfp/mdp.hpp"

namespace vfp {

/// Softmax logits, one row per state.
struct SoftmaxParams {
    Matrix theta;

    /// Logits log(pi); zero probabilities are clamped to a floor of 1e-300.
    static SoftmaxParams from_policy(const Policy& policy);
};

/// Rowwise softmax with max subtraction. Throws NonFiniteLogits.
Policy softmax_policy(const SoftmaxParams& params);

/// One recorded step of a learning run. `scalars` holds the algorithm
/// specific diagnostics (gradient norm, covariance trace, entropy, ...).
struct StepRecord {
    std::size_t iteration = 0;
    double step_norm = 0.0;
    std::map<std::string, double> scalars;
};

struct Trajectory {
    std::vector<ValueVector> points;
    std::vector<StepRecord> meta;
    /// Final policy when the algorithm has one (empty for value iteration).
    std::optional<Policy> final_policy;
};

enum class InitKind { NearVertex, NearBoundary, Interior, ExplicitPolicy };

struct InitSpec {
    InitKind kind = InitKind::Interior;
    double epsilon = 0.01;
    std::optional<Policy> policy;
    /// near_vertex: index into deterministic_policies(); defaults to the
    /// optimal greedy policy.
    std::optional<std::size_t> vertex;
    /// near_boundary: the state made (nearly) deterministic.
    std::size_t boundary_state = 0;
};

/// Starting policy for a run. Smoothed rows are (1 - eps) one-hot + eps uniform.
Policy resolve_init(const Mdp& mdp, const InitSpec& spec, std::uint64_t seed = 0);

Trajectory run_value_iteration(const Mdp& mdp, const ValueVector& v0, std::size_t iterations, double stop_tol);

Trajectory run_policy_iteration(const Mdp& mdp, const ValueVector& v0);

/// d = (1 - gamma) (I - gamma P^T)^{-1} rho0
Vector discounted_distribution(const Mdp& mdp, const Policy& policy, const Vector& rho0);

/// J = mean_s V^pi(s), i.e. the return under a uniform start distribution.
double objective(const Mdp& mdp, const Policy& policy);

/// Exact gradient of J under softmax, plus entropy_coeff / (1 - gamma) times
/// the gradient of sum_s d(s) H(pi(.|s)) with d held fixed. The entropy bonus
/// is thereby scaled like a per-step reward.
Matrix policy_gradient(const Mdp& mdp, const SoftmaxParams& params, double entropy_coeff = 0.0);

/// Exact Fisher information over the flattened (s * |A| + a) parameters.
Matrix fisher_information(const Mdp& mdp, const SoftmaxParams& params);

/// Solves (F + damping I) g = grad J.
Matrix natural_policy_gradient(const Mdp& mdp, const SoftmaxParams& params, double damping = 1e-6);

Trajectory run_policy_gradient(const Mdp& mdp, const InitSpec& init, double eta, std::size_t iterations,
                               double entropy_coeff = 0.0, std::uint64_t seed = 0);

Trajectory run_npg(const Mdp& mdp, const InitSpec& init, double eta, std::size_t iterations, double damping = 1e-6,
                   std::uint64_t seed = 0);

struct CemConfig {
    std::size_t population = 500;
    std::size_t elites = 50;
    double init_cov_scale = 0.1;
    double noise_scale = 0.0;
    std::size_t iterations = 100;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Number of free CEM coordinates: |S| (|A| - 1). The last logit of every
/// state is pinned to zero, which removes the directions along which the
/// softmax is flat.
std::size_t cem_dimension(const Mdp& mdp);
Vector cem_encode(const SoftmaxParams& params);
SoftmaxParams cem_decode(const Vector& x, std::size_t n_states, std::size_t n_actions);

/// Cross-entropy method over softmax logits. Records the value of the mean's
/// policy each iteration; meta carries the covariance trace.
Trajectory run_cem(const Mdp& mdp, const SoftmaxParams& init_mean, const CemConfig& config);

}  // namespace vfp
