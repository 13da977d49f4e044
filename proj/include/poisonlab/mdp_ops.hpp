#pragma once

#include "poisonlab/types.hpp"

namespace poisonlab {

/// Normalized distance between two actions, in [0, 1].
/// Discrete: inequality indicator. Box: ||a1 - a2||_2 / diameter.
/// Throws std::invalid_argument when actions do not belong to the space.
double action_distance(const Action& a1, const Action& a2, const ActionSpace& space);
double action_distance(int a1, int a2, const ActionSpace& space);
double action_distance(const Vec& a1, const Vec& a2, const ActionSpace& space);

/// State-visitation measure of a tabular policy by forward recursion over
/// the horizon: mass on terminal states is retired immediately and never
/// accumulated. Throws UnsupportedError for parametric policies.
OccupancyResult occupancy(const TabularMdp& mdp, const Policy& pi);

/// Exact undiscounted expected episodic return over the horizon cap,
/// computed by backward dynamic programming. The forward route
/// (occupancy-weighted expected rewards) agrees within 1e-9.
double policy_value(const TabularMdp& mdp, const Policy& pi);

/// r-distance between two deterministic tabular policies: occupancy mass
/// (under pi1) of states where their actions differ by more than r.
/// Range [0, L^pi1]. Throws UnsupportedError for non-deterministic input.
double policy_distance(const TabularMdp& mdp, const Policy& pi1, const Policy& pi2, double r);

struct OptimalPolicyResult {
    Policy policy;            // deterministic, lowest-index tie break
    double value = 0.0;       // stationary value of `policy`
    bool stationary_exact = true;  // false when only the t=0 greedy policy is
                                   // returned without verifying it is the best
                                   // stationary policy
};

/// Best stationary deterministic policy of a finite-horizon MDP.
///
/// Backward value iteration gives the (possibly time-dependent) optimum; when
/// a greedy snapshot achieves it as a stationary policy the result is exact.
/// Otherwise falls back to exhaustive enumeration while the policy count is
/// at most `enumeration_guard`, and past that returns the t=0 greedy policy
/// flagged stationary_exact = false.
OptimalPolicyResult optimal_policy(const TabularMdp& mdp,
                                   long long enumeration_guard = 1000000);

/// Value of the best policy subject to a per-state forbidden-action mask
/// (mask[s][a] == true means action a is unavailable in state s), by the
/// same scheme as optimal_policy. Throws ConfigError if some non-terminal
/// state has every action masked.
OptimalPolicyResult optimal_policy_masked(const TabularMdp& mdp,
                                          const std::vector<std::vector<bool>>& forbidden,
                                          long long enumeration_guard = 1000000);

} // namespace poisonlab
