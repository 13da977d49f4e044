#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "poisonlab/agents.hpp"
#include "poisonlab/attacks.hpp"
#include "poisonlab/envs.hpp"
#include "poisonlab/serialize.hpp"

namespace poisonlab {

// ---------------------------------------------------------------------------
// Budget calibration
// ---------------------------------------------------------------------------

struct EnvConstants {
    double v_max = 0.0;  // best expected episodic return
    double v_min = 0.0;  // worst expected episodic return
    double l_max = 0.0;  // episode step cap
};

struct BudgetBounds {
    double b_floor = 0.0;  // (v_max - v_min) / l_max
    double e_cap = 0.0;    // v_max - v_min
};

/// Throws ValidationError when v_max <= v_min or l_max < 1.
BudgetBounds derive_budgets(const EnvConstants& constants);

/// Exact DP constants for tabular environments; pinned empirical constants
/// for the classic-control ones.
EnvConstants env_constants(const SimEnv& env);

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

/// Attack block of a config:
///   {"kind": "AE", "delta": 2.5, "radius": 0.5, "target": {"source": "random"}}
/// target.source: "random" | "expert" | "medium" | "file:<path>".
/// UR uses {"kind": "UR", "p": 0.05, "delta": 1.0}; p defaults to C/T.
struct AttackSpec {
    std::string kind;      // UR | AE | AI | Flip
    double delta = 0.0;    // |delta| defaults to B
    double radius = 0.5;
    double p = -1.0;       // UR only; -1 => use C_over_T
    std::string target_source = "random";

    static AttackSpec from_json(const Json& j);
    Json to_json() const;
};

struct BudgetConfig {
    double B = std::numeric_limits<double>::infinity();
    double C_over_T = 1.0;
    double E = std::numeric_limits<double>::infinity();
    bool enforce_floor = true;  // validate B >= b_floor and E <= e_cap
};

struct SweepConfig {
    std::string axis;  // C_over_T | delta | r | E | target_quality
    std::vector<Json> values;
};

struct ExperimentConfig {
    std::string name = "run";
    EnvSpec env;
    AgentConfig agent;
    std::optional<AttackSpec> attack;
    BudgetConfig budget;
    std::optional<SweepConfig> sweep;
    std::vector<std::uint64_t> seeds;
    std::string output_dir = "out";

    static ExperimentConfig from_json(const Json& j);
    Json to_json() const;
    /// Structural checks; throws ValidationError / ConfigError.
    void validate() const;
};

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

struct SeedResult {
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    TrainingTrace trace;
    EfficiencyTuple efficiency;  // recomputed from the raw session log
    Policy target;               // attack target actually used (AE/AI)
    bool has_target = false;
    long long e_violations = 0;  // episodes whose recomputed spend exceeded E
    bool c_ok = true;            // recomputed corrupted-step count within C
    bool b_ok = true;            // recomputed max |delta| within B
};

struct AggregateResult {
    double mean_v = 0.0;
    double variance_v = 0.0;  // population variance over succeeded seeds
    Vec per_seed_v;
    std::vector<std::pair<long long, double>> mean_attack_rate_curve;
    std::vector<std::pair<long long, double>> mean_proposed_rate_curve;
    double c_spent_mean = 0.0;
    double b_used_max = 0.0;
    long long e_violations = 0;  // recomputed from raw logs; must stay 0
    long long c_violations = 0;
    std::vector<std::uint64_t> failed_seeds;
    std::string chosen_arm = "default";
    std::vector<SeedResult> seeds;
    std::string run_dir;
};

/// Runs every seed (both delta signs for UR, keeping the lower-mean_V arm),
/// writes <output_dir>/<name>/summary.json plus per-seed traces and session
/// logs, and returns the aggregate of the chosen arm.
AggregateResult run_experiment(const ExperimentConfig& config, int workers = 1);

/// One run per sweep point; writes each run plus a sweep_summary.json.
std::vector<AggregateResult> sweep_experiment(const ExperimentConfig& config, int workers = 1);

/// Attack target policies by quality tier. expert trains a clean agent and
/// takes its greedy snapshot; medium takes the earliest epoch snapshot whose
/// evaluation first exceeds the midpoint between random and expert value.
Policy make_target_policy(const std::string& quality, const SimEnv& env,
                          const AgentConfig& agent_cfg, std::uint64_t seed);

/// Scans a results directory for summary.json files and writes
/// v_vs_budget.csv, v_vs_delta.csv and attack_rate_by_epoch.csv.
/// Throws ConfigError when no summaries are found.
void report(const std::string& results_dir);

/// Reference policy used to measure how often the agent strays from the
/// adversarial optimum: the canonical class optimum for AE/AI, the
/// adversarial MDP's optimum for UR/Flip, the true optimum with no attack.
/// Off-support actions pinned so the distance margin to the target is
/// uniform. Only for tabularizable environments.
Policy reference_policy(const TabularMdp& mdp, const AttackStrategy* strategy);

} // namespace poisonlab
