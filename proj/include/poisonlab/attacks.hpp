#pragma once

#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "poisonlab/rng.hpp"
#include "poisonlab/types.hpp"

namespace poisonlab {

// ---------------------------------------------------------------------------
// Strategies
// ---------------------------------------------------------------------------

/// Reward-poisoning strategies. All perturbations are penalties added to the
/// observed reward:
///   UR    subtract `delta` with probability p at every step, independent of
///         (s, a). `delta` is signed; both signs are worth sweeping.
///   AE    subtract `delta` (> 0) whenever d(a, target(s)) <= radius:
///         discourage actions near the target policy.
///   AI    subtract `delta` (> 0) whenever d(a, target(s)) > radius:
///         discourage actions away from the target policy.
///   Flip  subtract 2 r so the observed reward is exactly -r.
struct AttackStrategy {
    enum class Kind { UR, AE, AI, Flip };

    Kind kind = Kind::UR;
    double p = 0.0;        // UR
    double delta = 0.0;    // UR: signed; AE/AI: positive magnitude
    double radius = 0.5;   // AE/AI
    Policy target;         // AE/AI

    static AttackStrategy ur(double p, double delta);
    static AttackStrategy ae(Policy target, double delta, double radius = 0.5);
    static AttackStrategy ai(Policy target, double delta, double radius = 0.5);
    static AttackStrategy flip();

    bool needs_target() const { return kind == Kind::AE || kind == Kind::AI; }
    std::string name() const;
};

/// The perturbation the strategy wants to apply at one step, before budget
/// enforcement. Deterministic except for UR's Bernoulli draw.
double propose_perturbation(const AttackStrategy& strategy, const Observation& s,
                            const Action& a, double r, Rng& rng, const ActionSpace& space);

// ---------------------------------------------------------------------------
// Budgets
// ---------------------------------------------------------------------------

/// Live hard-limit counters: at most `C_limit` corrupted steps overall, at
/// most `E_limit` total |perturbation| per episode, every applied
/// |perturbation| at most B. A perturbation that would break a limit is
/// dropped entirely and consumes nothing.
struct BudgetAccountant {
    double B = std::numeric_limits<double>::infinity();
    long long C_limit = std::numeric_limits<long long>::max();
    double E_limit = std::numeric_limits<double>::infinity();

    long long c_spent = 0;
    double e_spent_this_episode = 0.0;

    void begin_episode() { e_spent_this_episode = 0.0; }

    /// Returns the perturbation actually applied (proposed or 0) and updates
    /// the counters. Zero proposals never consume budget. Throws
    /// std::invalid_argument when |proposed| > B: strategies are meant to be
    /// built with their magnitude clamped to B.
    double apply(double proposed);
};

// ---------------------------------------------------------------------------
// Sessions
// ---------------------------------------------------------------------------

struct SessionRecord {
    long long t = 0;
    long long episode = 0;
    double r_true = 0.0;
    double delta_proposed = 0.0;
    double delta_applied = 0.0;
    long long c_spent = 0;   // after this step
    double e_spent = 0.0;    // after this step, within the episode
};

/// Middleware between one training run and its environment: owns the
/// strategy, the budget counters, the attack RNG, and the full step log.
/// Bound to a single run; not shareable.
class AttackSession {
  public:
    AttackSession(AttackStrategy strategy, BudgetAccountant accountant,
                  ActionSpace space, std::uint64_t seed);

    /// Marks an episode boundary (resets the per-episode spend).
    void begin_episode();

    /// Computes and applies this step's perturbation; returns the applied
    /// amount (to be added to the true reward before the agent sees it).
    double perturb(const Observation& s, const Action& a, double r_true);

    const AttackStrategy& strategy() const { return strategy_; }
    const BudgetAccountant& accountant() const { return accountant_; }
    const std::vector<SessionRecord>& log() const { return log_; }
    long long steps_observed() const { return t_; }

    /// One JSON object per line: {"t", "episode", "delta_applied", "c_spent", "e_spent"}.
    void write_jsonl(std::ostream& out) const;

  private:
    AttackStrategy strategy_;
    BudgetAccountant accountant_;
    ActionSpace space_;
    Rng rng_;
    std::vector<SessionRecord> log_;
    long long t_ = 0;
    long long episode_ = -1;
};

/// Builds a session with the strategy's |delta| clamped to B so that
/// BudgetAccountant::apply's precondition always holds. Flip has no fixed
/// magnitude and therefore requires an unbounded B.
AttackSession make_session(AttackStrategy strategy, double B, long long C_limit,
                           double E_limit, ActionSpace space, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Idealized stationary adversary
// ---------------------------------------------------------------------------

/// The adversarial MDP induced by a strategy: same dynamics, perturbed
/// expected rewards, no budget limits. AE/AI need a deterministic tabular
/// target. Terminal states keep their zero rewards.
TabularMdp adversarial_mdp(const TabularMdp& mdp, const AttackStrategy& strategy);

/// Predicted policy value under the UR adversary:
/// policy_value(mdp, pi) - delta * p * L^pi.
double ur_predicted_value(const TabularMdp& mdp, const Policy& pi, double p, double delta);

/// Measured efficiency of one attacked training run: the (V, B, C) triple of
/// the attack problem, plus the per-episode spend actually reached.
struct EfficiencyTuple {
    double V = 0.0;                // best clean value learned under attack
    double B_used = 0.0;           // max |applied perturbation|
    long long C_used = 0;          // corrupted steps
    double E_max_episode = 0.0;    // largest per-episode spend
};

EfficiencyTuple measure_efficiency(const std::vector<SessionRecord>& log, double best_value);

} // namespace poisonlab
