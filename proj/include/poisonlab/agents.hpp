#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "poisonlab/attacks.hpp"
#include "poisonlab/envs.hpp"
#include "poisonlab/types.hpp"

namespace poisonlab {

struct AgentConfig {
    enum class Kind { TabularQ, Dqn, CemContinuous };

    Kind kind = Kind::TabularQ;
    double learning_rate = 0.3;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    long long decay_steps = 10000;
    long long train_steps = 20000;
    long long epoch_length = 500;
    int eval_episodes = 10;
    double discount = 1.0;

    // Dqn
    int replay_capacity = 20000;
    int batch_size = 32;
    int target_sync = 250;
    int hidden = 64;
    double momentum = 0.9;
    long long learn_start = 500;

    // CemContinuous
    int population = 30;
    double elite_frac = 0.2;
    double sigma = 0.5;

    void validate() const;
};

/// Per-run record: clean evaluation after every epoch, fraction of steps the
/// attack perturbed (and would have perturbed, pre-budget), and the measured
/// rate of actions far from a supplied reference policy.
struct TrainingTrace {
    std::vector<std::pair<long long, double>> per_epoch_eval;          // (epoch, clean value)
    double best_value = 0.0;                                           // max of per_epoch_eval
    std::vector<std::pair<long long, double>> per_epoch_attack_rate;   // applied fraction
    std::vector<std::pair<long long, double>> per_epoch_proposed_rate; // pre-budget fraction
    std::vector<std::pair<long long, double>> suboptimal_action_rate;  // mean d(a_t, ref(s_t))
    double overall_attack_rate = 0.0;
    double overall_proposed_rate = 0.0;
    double overall_suboptimal_rate = 0.0;
    long long steps_run = 0;
};

class Agent {
  public:
    virtual ~Agent() = default;

    /// Runs exactly cfg.train_steps environment steps. Every observed reward
    /// passes through `attack` (when given); rewards are the only channel the
    /// attack touches. After each epoch the greedy snapshot is evaluated on a
    /// fresh, attack-free clone of the environment. Deterministic per seed.
    /// `snapshots`, when given, receives the greedy policy at every epoch
    /// evaluation (aligned with per_epoch_eval).
    virtual TrainingTrace train(SimEnv& env, AttackSession* attack, std::uint64_t seed,
                                const Policy* reference = nullptr,
                                std::vector<Policy>* snapshots = nullptr) = 0;

    /// Current deterministic snapshot (argmax with lowest-index tie break for
    /// value-based agents, mean parameters for CEM).
    virtual Policy greedy_policy() const = 0;
};

/// Checks agent/environment compatibility (value-based agents need discrete
/// actions, CEM needs a Box space, TabularQ needs tabular observations).
std::unique_ptr<Agent> make_agent(const AgentConfig& cfg, const SimEnv& env);

/// Mean return of `pi` over `episodes` greedy episodes on a fresh clone of
/// `env_proto`, attack-free.
double evaluate_policy(const SimEnv& env_proto, const Policy& pi, int episodes,
                       std::uint64_t seed);

} // namespace poisonlab
