#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "poisonlab/rng.hpp"
#include "poisonlab/types.hpp"

namespace poisonlab {

struct StepOutcome {
    Observation next_observation;
    double reward = 0.0;
    bool done = false;       // episode over (terminal or cap)
    bool truncated = false;  // over only because the cap was hit
    int step_index = 0;      // steps taken so far in this episode
};

/// Episodic simulation environment. One instance serves one sequential run;
/// clone() hands out an independent copy (fresh counters, same parameters)
/// for attack-free evaluation. Identical seed and action sequence give a
/// bit-identical trajectory.
class SimEnv {
  public:
    virtual ~SimEnv() = default;

    virtual Observation reset() = 0;
    virtual StepOutcome step(const Action& a) = 0;

    virtual std::string id() const = 0;
    virtual const ActionSpace& action_space() const = 0;
    virtual int horizon_cap() const = 0;
    /// Feature dimension, or the state count for tabular environments.
    virtual int observation_dim() const = 0;
    /// Number of discrete states; -1 for continuous-state environments.
    virtual int n_states() const { return -1; }

    virtual void seed(std::uint64_t s) = 0;
    virtual std::unique_ptr<SimEnv> clone() const = 0;
};

/// Environment description as it appears in experiment configs:
///   {"id": "gridworld", "map": ["S....", "....."], "horizon": 50}
///   {"id": "chain", "n": 5}
///   {"id": "cartpole"} | {"id": "mountaincar"} | {"id": "pointmass"}
struct EnvSpec {
    std::string id;
    nlohmann::json params;

    static EnvSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Throws ConfigError for unknown ids or malformed parameters.
std::unique_ptr<SimEnv> make_env(const EnvSpec& spec, std::uint64_t seed = 0);

/// Exact TabularMdp for a discrete-state env (gridworld, chain, tabular).
/// Throws UnsupportedError for continuous-state environments.
TabularMdp to_tabular(const SimEnv& env);

/// Wraps any TabularMdp as a SimEnv, sampling transitions and gaussian
/// reward noise. State indices match the MDP's.
std::unique_ptr<SimEnv> make_tabular_env(TabularMdp mdp, std::uint64_t seed = 0);

// Gridworld map characters: 'S' start, 'E' exit, '#' wall, '.' or ' ' open.
// Actions 0..3 = up, down, left, right; bumping a wall or the edge stays put.
// Every step costs -1; entering the exit ends the episode.
struct GridworldLayout {
    int rows = 0;
    int cols = 0;
    std::vector<std::string> map;
    int start_cell = -1;  // compact open-cell index
    int exit_cell = -1;

    static GridworldLayout parse(const std::vector<std::string>& map);
    int n_open() const { return static_cast<int>(cell_of_state.size()); }
    std::vector<int> cell_of_state;  // open-cell index -> row * cols + col
    std::vector<int> state_of_cell;  // row * cols + col -> open-cell index or -1
};

} // namespace poisonlab
