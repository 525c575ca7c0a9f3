#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vfp/linalg.hpp"

namespace vfp {

/// Finite discounted MDP in flat-index layout: row s*|A|+a of the reward
/// vector and of the transition matrix belongs to the pair (s, a).
class Mdp {
public:
    /// Validates and takes ownership of the arrays. Rows whose sum is within
    /// 1e-9 of one are accepted; rows off by more than 1e-12 are
    /// renormalised, all others are kept bit-for-bit.
    Mdp(std::size_t n_states, std::size_t n_actions, Vector rewards, Matrix transitions, double gamma);

    std::size_t n_states() const noexcept { return n_states_; }
    std::size_t n_actions() const noexcept { return n_actions_; }
    double gamma() const noexcept { return gamma_; }

    const Vector& rewards() const noexcept { return rewards_; }
    const Matrix& transitions() const noexcept { return transitions_; }

    std::size_t index(std::size_t s, std::size_t a) const noexcept { return s * n_actions_ + a; }
    double reward(std::size_t s, std::size_t a) const { return rewards_(index(s, a)); }
    double transition(std::size_t s, std::size_t a, std::size_t next) const {
        return transitions_(index(s, a), next);
    }

    /// max |r(s,a)|
    double reward_bound() const noexcept;

    /// r_max / (1 - gamma), the max-norm bound on every value function.
    double value_bound() const noexcept { return reward_bound() / (1.0 - gamma_); }

    friend bool operator==(const Mdp& a, const Mdp& b);

private:
    std::size_t n_states_;
    std::size_t n_actions_;
    Vector rewards_;
    Matrix transitions_;
    double gamma_;
};

/// Stationary stochastic policy, |S| x |A| row-stochastic.
class Policy {
public:
    /// Same acceptance rule as Mdp transition rows.
    explicit Policy(Matrix probs);

    static Policy uniform(std::size_t n_states, std::size_t n_actions);
    /// One-hot rows; actions[s] is the action taken in state s.
    static Policy deterministic(std::size_t n_actions, const std::vector<std::size_t>& actions);

    std::size_t n_states() const noexcept { return static_cast<std::size_t>(probs_.rows()); }
    std::size_t n_actions() const noexcept { return static_cast<std::size_t>(probs_.cols()); }

    const Matrix& probs() const noexcept { return probs_; }
    double operator()(std::size_t s, std::size_t a) const { return probs_(s, a); }

    /// Copy with row s replaced (validated).
    Policy with_row(std::size_t s, const Eigen::Ref<const Vector>& row) const;
    /// Copy with row s replaced by the one-hot of action a.
    Policy with_action(std::size_t s, std::size_t a) const;

    /// True when row s is a one-hot vector.
    bool is_deterministic_at(std::size_t s) const;
    bool is_deterministic() const;

    friend bool operator==(const Policy& a, const Policy& b) { return a.probs_ == b.probs_; }

private:
    Matrix probs_;
};

/// Throws ShapeMismatch unless the policy has the MDP's |S| x |A| shape.
void require_shape(const Mdp& mdp, const Policy& policy);

enum class FixtureId { Fig2a, Fig2b, Fig2c, Fig2d, ThreeAction, Dyn2 };

std::string_view fixture_name(FixtureId id) noexcept;
/// Throws UnknownFixture.
FixtureId parse_fixture(std::string_view name);
const std::vector<FixtureId>& all_fixtures() noexcept;
Mdp builtin_fixture(FixtureId id);

/// Two states, two actions; s1 loops on a1 with reward 0 and moves to the
/// absorbing zero-reward state s2 on a2 with reward 1.
Mdp example1_mdp(double gamma = 0.9);

/// Rewards uniform on [-1, 1]; transition rows from the flat Dirichlet.
Mdp random_mdp(std::size_t n_states, std::size_t n_actions, double gamma, std::uint64_t seed);

/// Each row drawn from the flat Dirichlet over actions.
Policy random_policy(const Mdp& mdp, std::uint64_t seed);
Policy random_policy(std::size_t n_states, std::size_t n_actions, std::uint64_t seed);

inline constexpr std::size_t kDefaultEnumerationCap = 1'000'000;

/// All |A|^|S| deterministic policies, lexicographic in (a(s0), a(s1), ...).
std::vector<Policy> deterministic_policies(const Mdp& mdp, std::size_t cap = kDefaultEnumerationCap);

/// Block-diagonal |S| x |S||A| matrix with M(i, i|A|+j) = pi(a_j|s_i).
Matrix policy_matrix(const Policy& policy);

/// JSON document: n_states, n_actions, gamma, rewards, transitions.
Mdp load_mdp(std::string_view text);
std::string dump_mdp(const Mdp& mdp);

/// JSON document {"probs": [[...], ...]}.
Policy load_policy(std::string_view text);
std::string dump_policy(const Policy& policy);

}  // namespace vfp
