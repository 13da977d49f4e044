#pragma once

#include <string>
#include <vector>

#include "poisonlab/errors.hpp"

namespace poisonlab {

using Vec = std::vector<double>;
using Mat = std::vector<std::vector<double>>;

// ---------------------------------------------------------------------------
// Action spaces and actions
// ---------------------------------------------------------------------------

/// Discrete(n) or Box(low, high). A Box space caches its diameter: the
/// largest Euclidean distance between two member actions, used to normalize
/// action distances into [0, 1].
struct ActionSpace {
    enum class Kind { Discrete, Box };

    Kind kind = Kind::Discrete;
    int n = 0;   // Discrete only
    Vec low;     // Box only
    Vec high;    // Box only

    static ActionSpace discrete(int n_actions);
    static ActionSpace box(Vec low, Vec high);

    int dim() const { return static_cast<int>(low.size()); }
    /// Euclidean norm of (high - low); 1.0 for discrete spaces.
    double diameter() const { return diameter_; }

  private:
    double diameter_ = 1.0;
};

/// A single action: either a discrete index or a Box vector.
struct Action {
    int index = -1;
    Vec box;

    static Action from_index(int i) {
        Action a;
        a.index = i;
        return a;
    }
    static Action from_vec(Vec v) {
        Action a;
        a.box = std::move(v);
        return a;
    }
    bool is_discrete() const { return box.empty(); }
};

/// What an environment shows the agent each step. Tabular environments set
/// `index` (and leave `features` empty); continuous-state environments fill
/// `features` and leave index at -1.
struct Observation {
    int index = -1;
    Vec features;

    bool is_tabular() const { return index >= 0; }
};

// ---------------------------------------------------------------------------
// Tabular MDP
// ---------------------------------------------------------------------------

/// Exact finite MDP with undiscounted episodic semantics and a hard
/// horizon cap. Terminal states are absorbing with zero reward under every
/// action; episodes that have not terminated after `horizon_cap` steps are
/// truncated.
struct TabularMdp {
    int n_states = 0;
    int n_actions = 0;
    std::vector<Mat> transition;  // transition[s][a] = distribution over next states
    Mat expected_reward;          // expected_reward[s][a]
    Mat reward_noise_std;         // gaussian width per (s, a); oracles ignore it
    Vec initial_dist;
    std::vector<bool> terminal;
    int horizon_cap = 1;

    /// Throws ValidationError if any structural invariant fails
    /// (rows stochastic within 1e-9, terminal states absorbing and
    /// zero-reward, horizon_cap >= 1).
    void validate() const;
};

// ---------------------------------------------------------------------------
// Policies
// ---------------------------------------------------------------------------

/// Tabular deterministic / tabular stochastic / parametric.
///
/// Parametric policies map a feature vector to an action. `feature_map`
/// selects the functional form:
///   "linear"               scores = W * [phi; 1], one row per output
///   "mlp2:<in>:<hid>:<out>" two hidden layers of <hid> ReLU units
/// Weights are stored flat, row-major, biases appended per layer.
struct Policy {
    enum class Kind { TabularDeterministic, TabularStochastic, Parametric };

    Kind kind = Kind::TabularDeterministic;
    std::vector<int> actions;  // deterministic: one action per state
    Mat dist;                  // stochastic: one row per state
    Vec weights;               // parametric
    std::string feature_map;   // parametric

    static Policy deterministic(std::vector<int> actions_per_state);
    static Policy stochastic(Mat dist_per_state);
    static Policy parametric(Vec weights, std::string feature_map);

    bool is_tabular() const { return kind != Kind::Parametric; }
    bool is_deterministic() const { return kind == Kind::TabularDeterministic; }

    /// Probability of `a` in `s` (tabular kinds only).
    double prob(int state, int a) const;

    /// Deterministic tabular action (throws UnsupportedError otherwise).
    int action_at(int state) const;

    /// Throws ValidationError on malformed contents, or on mismatch with the
    /// given state/action counts.
    void validate(int n_states, int n_actions) const;

    /// Greedy discrete action from features (parametric only, lowest-index
    /// tie break).
    int act_discrete(const Vec& features, int n_actions) const;
    /// Clipped Box action from features (parametric "linear" only).
    Vec act_box(const Vec& features, const ActionSpace& space) const;
};

/// Evaluate a policy as a concrete action for an observation. Used by attack
/// strategies to query their target policy on whatever the environment
/// exposes. Throws ConfigError when the policy cannot act on the
/// observation (e.g. tabular policy, continuous observation).
Action policy_action(const Policy& pi, const Observation& obs, const ActionSpace& space);

// ---------------------------------------------------------------------------
// Occupancy
// ---------------------------------------------------------------------------

/// Expected per-episode visitation of each non-terminal state, within the
/// horizon cap. episode_length is the sum of mu (the expected number of
/// steps taken); truncation_mass is the probability of still running at the
/// cap.
struct OccupancyResult {
    Vec mu;
    double episode_length = 0.0;
    double truncation_mass = 0.0;
};

} // namespace poisonlab
