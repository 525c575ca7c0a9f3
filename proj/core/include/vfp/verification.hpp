#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vfp/linalg.hpp"
#include "vfp/mdp.hpp"

namespace vfp {

struct OracleConfig {
    std::size_t neumann_terms = 200;
    std::size_t mc_horizon = 300;
    std::size_t mc_episodes = 100'000;
    double fd_step = 1e-5;
    std::uint64_t seed = 0;

    void validate() const;
};

struct McEstimate {
    ValueVector estimate;
    Vector standard_error;
    /// gamma^H r_max / (1 - gamma)
    double truncation_bound = 0.0;
};

/// Averages truncated discounted returns of simulated rollouts from every
/// start state.
McEstimate mc_value_oracle(const Mdp& mdp, const Policy& policy, const OracleConfig& config);

/// sum_{i < n} (gamma P^pi)^i r_pi
ValueVector neumann_value_oracle(const Mdp& mdp, const Policy& policy, const OracleConfig& config);

/// gamma^n r_max / (1 - gamma)
double neumann_tail_bound(const Mdp& mdp, std::size_t terms);

struct CheckFailure {
    std::string instance;
    double deviation = 0.0;
};

struct CheckReport {
    std::string check_name;
    std::size_t instances_run = 0;
    std::vector<CheckFailure> failures;
    double max_deviation = 0.0;
    bool passed = true;

    /// Records one instance; fails it when deviation > tolerance (or NaN).
    void record(const std::string& instance, double deviation, double tolerance);
    void fail(const std::string& instance, double deviation);
    /// Folds another report into this one (associative).
    void merge(const CheckReport& other);

    std::string to_json() const;
};

struct SuiteOptions {
    std::size_t trials = 100;
    std::uint64_t seed = 1;
    /// Sample counts for the sampling-based suites.
    std::size_t samples = 2'000;
    bool include_fixtures = true;
    /// Overrides the suite's default tolerance.
    std::optional<double> tolerance;
    /// When set, the suite runs on this MDP only, `trials` times with
    /// independent seeds (at least once), instead of fixtures plus random MDPs.
    std::optional<Mdp> mdp;
};

/// Default pass threshold of a suite. Throws UnknownSuite.
double suite_tolerance(std::string_view suite_name);

const std::vector<std::string>& suite_names();

/// Runs one named property suite over the built-in fixtures plus `trials`
/// seeded random MDPs. Throws UnknownSuite, and DimensionUnsupported when a
/// two-state suite (hull, boundary) is pointed at a larger MDP.
CheckReport run_suite(std::string_view suite_name, const SuiteOptions& options = {});

/// Exact solve vs Neumann series vs Monte Carlo.
CheckReport compare_oracles(const Mdp& mdp, const Policy& policy, const OracleConfig& config);

/// Sampled boundary of the 2-D cloud (policy lattice refined locally)
/// checked against the union of the semi-deterministic families.
/// Returns the largest distance observed.
double boundary_deviation(const Mdp& mdp, std::size_t grid, std::size_t family_samples, std::uint64_t seed);

}  // namespace vfp
