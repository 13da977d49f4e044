#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "poisonlab/attacks.hpp"
#include "poisonlab/types.hpp"

namespace poisonlab {

// ---------------------------------------------------------------------------
// Exhaustive policy enumeration
// ---------------------------------------------------------------------------

/// All n_actions^n_states deterministic tabular policies of an MDP, with
/// exact values in the true MDP and (optionally) in an adversarial one.
struct PolicySet {
    std::vector<std::vector<int>> policies;
    Vec values_true;
    Vec values_adv;  // empty unless an adversarial MDP was supplied
};

constexpr long long kEnumerationGuard = 1000000;

/// Throws SizeError past the guard.
PolicySet enumerate_policies(const TabularMdp& mdp, const TabularMdp* adversarial = nullptr,
                             long long guard = kEnumerationGuard);

enum class ValueSide { True, Adversarial };

/// Indices whose value is within eps of the best, on the chosen side.
std::vector<std::size_t> epsilon_optimal_set(const PolicySet& pset, double eps, ValueSide which);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct TrivialUrReport {
    bool trivial = false;            // every eps-optimal policy of the UR adversary
                                     // keeps true value >= V* - eps
    bool fixed_horizon_case = false; // all policies share L^pi
    bool monotone_case = false;      // value monotone in L^pi with the matching delta sign
    int monotone_direction = 0;      // +1 increasing, -1 decreasing, 0 neither
    double v_star = 0.0;
    std::size_t violating_policies = 0;
};

TrivialUrReport check_trivial_ur(const TabularMdp& mdp, double p, double delta, double eps,
                                 long long guard = kEnumerationGuard);

struct TheoremReport {
    bool degenerate = false;  // required policy class is empty
    std::string degenerate_reason;

    bool premise_holds = false;
    bool exact = true;  // false: premise was only sampled (with deterministic
                        // witness candidates), not enumerated

    Policy predicted_target;        // adversarial optimal policy pi-hat-star,
                                    // off-support actions canonicalized
    double predicted_v_bound = 0.0; // its true value; the attack's V bound
    std::vector<std::vector<int>> witnesses;  // premise violations found

    bool conclusion_checked = false;
    bool conclusion_holds = false;

    // C-bound margins min_s(d(pi-hat-star(s), target(s)) - r) for AE and
    // min_s(r - d) for AI, over all states and over the support of
    // pi-hat-star. Not positive => the corresponding bound is undefined.
    double margin_all_states = 0.0;
    double margin_support = 0.0;
};

/// Action-evasion theorem check. Exact (full enumeration, conclusion
/// verified) while n_actions^n_states fits the guard; otherwise the far-class
/// optimum is still exact (masked value iteration) but the premise is tested
/// against sampled policies plus deterministic witness candidates and the
/// report is flagged exact = false.
TheoremReport check_ae_theorem(const TabularMdp& mdp, const Policy& target, double delta,
                               double r, double eps, long long guard = kEnumerationGuard,
                               int premise_samples = 100000);

/// Action-inducing counterpart; the neighborhood class {D_r(pi, target) = 0}.
TheoremReport check_ai_theorem(const TabularMdp& mdp, const Policy& target, double delta,
                               double r, double eps, long long guard = kEnumerationGuard,
                               int premise_samples = 100000);

/// Corruption-count bound (delta_measured / margin) * T.
/// Throws BoundUndefinedError when margin <= 0.
double c_bound(double delta_measured, long long T, double margin);

/// The theorem's predicted adversarial optimum as a concrete policy: for AE
/// the best policy that avoids the target everywhere (masked value
/// iteration), for AI the target itself. Off-support actions are pinned so
/// the distance margin to the target is uniform across states.
Policy predicted_class_optimum(const TabularMdp& mdp, const Policy& target, double r,
                               bool action_evasion);

} // namespace poisonlab
