#include "poisonlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <thread>

#include "poisonlab/mdp_ops.hpp"
#include "poisonlab/oracle.hpp"

namespace poisonlab {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Budget calibration
// ---------------------------------------------------------------------------

BudgetBounds derive_budgets(const EnvConstants& constants) {
    if (!(constants.v_max > constants.v_min))
        throw ValidationError("budget constants need v_max > v_min");
    if (!(constants.l_max >= 1.0))
        throw ValidationError("budget constants need l_max >= 1");
    BudgetBounds b;
    b.e_cap = constants.v_max - constants.v_min;
    b.b_floor = b.e_cap / constants.l_max;
    return b;
}

EnvConstants env_constants(const SimEnv& env) {
    const std::string id = env.id();
    if (id == "cartpole") return {500.0, 0.0, 500.0};
    if (id == "mountaincar") return {-100.0, -200.0, 200.0};
    if (id == "pointmass") return {-17.0, -255.0, 100.0};  // empirical
    // Tabular environments: exact DP extremes. The minimum comes from the
    // reward-negated MDP's optimum.
    TabularMdp mdp = to_tabular(env);
    EnvConstants c;
    c.v_max = optimal_policy(mdp).value;
    TabularMdp negated = mdp;
    for (int s = 0; s < mdp.n_states; ++s)
        for (int a = 0; a < mdp.n_actions; ++a)
            negated.expected_reward[s][a] = -negated.expected_reward[s][a];
    c.v_min = -optimal_policy(negated).value;
    c.l_max = env.horizon_cap();
    return c;
}

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

namespace {

double json_number_or_inf(const Json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    const Json& v = j.at(key);
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "inf" || s == "unlimited") return std::numeric_limits<double>::infinity();
        throw ConfigError("field '" + key + "' must be a number or \"inf\"");
    }
    return v.get<double>();
}

Json inf_aware(double v) {
    if (std::isinf(v)) return Json("inf");
    return Json(v);
}

AgentConfig::Kind agent_kind_from_string(const std::string& s) {
    if (s == "tabular_q") return AgentConfig::Kind::TabularQ;
    if (s == "dqn") return AgentConfig::Kind::Dqn;
    if (s == "cem") return AgentConfig::Kind::CemContinuous;
    throw ConfigError("unknown agent kind: " + s + " (expected tabular_q | dqn | cem)");
}

std::string agent_kind_to_string(AgentConfig::Kind k) {
    switch (k) {
        case AgentConfig::Kind::TabularQ: return "tabular_q";
        case AgentConfig::Kind::Dqn: return "dqn";
        case AgentConfig::Kind::CemContinuous: return "cem";
    }
    return "?";
}

long long default_train_steps(const std::string& env_id) {
    if (env_id == "cartpole" || env_id == "mountaincar") return 80000;
    return 20000;
}

AgentConfig agent_from_json(const Json& j) {
    AgentConfig cfg;
    cfg.kind = agent_kind_from_string(j.value("kind", std::string("tabular_q")));
    cfg.learning_rate = j.value("learning_rate", cfg.kind == AgentConfig::Kind::Dqn ? 5e-4 : 0.3);
    cfg.epsilon_start = j.value("epsilon_start", 1.0);
    cfg.epsilon_end = j.value("epsilon_end", 0.05);
    cfg.decay_steps = j.value("decay_steps", -1LL);
    cfg.train_steps = j.value("train_steps", -1LL);
    cfg.epoch_length = j.value("epoch_length", 500LL);
    cfg.eval_episodes = j.value("eval_episodes", 10);
    cfg.discount = j.value("discount", 1.0);
    cfg.replay_capacity = j.value("replay_capacity", 20000);
    cfg.batch_size = j.value("batch_size", 32);
    cfg.target_sync = j.value("target_sync", 250);
    cfg.hidden = j.value("hidden", 64);
    cfg.momentum = j.value("momentum", 0.9);
    cfg.learn_start = j.value("learn_start", 500LL);
    cfg.population = j.value("population", 30);
    cfg.elite_frac = j.value("elite_frac", 0.2);
    cfg.sigma = j.value("sigma", 0.5);
    return cfg;
}

Json agent_to_json(const AgentConfig& cfg) {
    Json j;
    j["kind"] = agent_kind_to_string(cfg.kind);
    j["learning_rate"] = cfg.learning_rate;
    j["epsilon_start"] = cfg.epsilon_start;
    j["epsilon_end"] = cfg.epsilon_end;
    j["decay_steps"] = cfg.decay_steps;
    j["train_steps"] = cfg.train_steps;
    j["epoch_length"] = cfg.epoch_length;
    j["eval_episodes"] = cfg.eval_episodes;
    j["discount"] = cfg.discount;
    if (cfg.kind == AgentConfig::Kind::Dqn) {
        j["replay_capacity"] = cfg.replay_capacity;
        j["batch_size"] = cfg.batch_size;
        j["target_sync"] = cfg.target_sync;
        j["hidden"] = cfg.hidden;
        j["momentum"] = cfg.momentum;
        j["learn_start"] = cfg.learn_start;
    }
    if (cfg.kind == AgentConfig::Kind::CemContinuous) {
        j["population"] = cfg.population;
        j["elite_frac"] = cfg.elite_frac;
        j["sigma"] = cfg.sigma;
    }
    return j;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

} // namespace

AttackSpec AttackSpec::from_json(const Json& j) {
    AttackSpec spec;
    spec.kind = j.at("kind").get<std::string>();
    if (spec.kind != "UR" && spec.kind != "AE" && spec.kind != "AI" && spec.kind != "Flip")
        throw ConfigError("unknown attack kind: " + spec.kind);
    spec.delta = j.value("delta", 0.0);
    spec.radius = j.value("radius", 0.5);
    spec.p = j.value("p", -1.0);
    if (j.contains("target")) {
        const Json& t = j.at("target");
        spec.target_source = t.is_string() ? t.get<std::string>()
                                           : t.value("source", std::string("random"));
    }
    return spec;
}

Json AttackSpec::to_json() const {
    Json j;
    j["kind"] = kind;
    j["delta"] = delta;
    if (kind == "AE" || kind == "AI") {
        j["radius"] = radius;
        j["target"] = Json{{"source", target_source}};
    }
    if (kind == "UR") j["p"] = p;
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
    ExperimentConfig cfg;
    cfg.name = j.value("name", std::string("run"));
    cfg.env = EnvSpec::from_json(j.at("env"));
    cfg.agent = agent_from_json(j.value("agent", Json::object()));
    if (j.contains("attack") && !j.at("attack").is_null())
        cfg.attack = AttackSpec::from_json(j.at("attack"));
    if (j.contains("budget")) {
        const Json& b = j.at("budget");
        cfg.budget.B = json_number_or_inf(b, "B", cfg.budget.B);
        cfg.budget.C_over_T = b.value("C_over_T", 1.0);
        cfg.budget.E = json_number_or_inf(b, "E", cfg.budget.E);
        cfg.budget.enforce_floor = b.value("enforce_floor", true);
    }
    if (j.contains("sweep") && !j.at("sweep").is_null()) {
        SweepConfig sweep;
        sweep.axis = j.at("sweep").at("axis").get<std::string>();
        for (const Json& v : j.at("sweep").at("values")) sweep.values.push_back(v);
        cfg.sweep = sweep;
    }
    if (!j.contains("seeds")) throw ConfigError("config needs a \"seeds\" list");
    for (const Json& s : j.at("seeds")) cfg.seeds.push_back(s.get<std::uint64_t>());
    std::sort(cfg.seeds.begin(), cfg.seeds.end());
    cfg.seeds.erase(std::unique(cfg.seeds.begin(), cfg.seeds.end()), cfg.seeds.end());
    cfg.output_dir = j.value("output_dir", std::string("out"));
    cfg.validate();
    return cfg;
}

Json ExperimentConfig::to_json() const {
    Json j;
    j["name"] = name;
    j["env"] = env.to_json();
    j["agent"] = agent_to_json(agent);
    j["attack"] = attack ? attack->to_json() : Json(nullptr);
    j["budget"] = Json{{"B", inf_aware(budget.B)},
                       {"C_over_T", budget.C_over_T},
                       {"E", inf_aware(budget.E)},
                       {"enforce_floor", budget.enforce_floor}};
    if (sweep) j["sweep"] = Json{{"axis", sweep->axis}, {"values", sweep->values}};
    j["seeds"] = seeds;
    j["output_dir"] = output_dir;
    return j;
}

void ExperimentConfig::validate() const {
    if (seeds.empty()) throw ValidationError("config needs at least one seed");
    if (!(budget.C_over_T >= 0.0 && budget.C_over_T <= 1.0))
        throw ValidationError("C_over_T must lie in [0, 1]");
    if (!(budget.B > 0.0)) throw ValidationError("budget B must be positive");
    if (budget.E < 0.0) throw ValidationError("budget E must be nonnegative");
    if (attack && attack->kind == "Flip" && std::isfinite(budget.B))
        throw ConfigError("Flip has unbounded per-step magnitude; set budget B to \"inf\"");
    if (attack && attack->kind == "UR" && attack->p > 1.0)
        throw ValidationError("UR probability must lie in [0, 1]");
    if (sweep) {
        static const char* axes[] = {"C_over_T", "delta", "r", "E", "target_quality"};
        if (std::find_if(std::begin(axes), std::end(axes),
                         [&](const char* a) { return sweep->axis == a; }) == std::end(axes))
            throw ConfigError("unknown sweep axis: " + sweep->axis);
        if (sweep->values.empty()) throw ValidationError("sweep needs at least one value");
    }
}

// ---------------------------------------------------------------------------
// Target and reference policies
// ---------------------------------------------------------------------------

Policy make_target_policy(const std::string& quality, const SimEnv& env,
                          const AgentConfig& agent_cfg, std::uint64_t seed) {
    if (quality.rfind("file:", 0) == 0)
        return policy_from_json(load_json_file(quality.substr(5)));

    if (quality == "random") {
        Rng rng = make_rng(seed, "target-random");
        if (env.n_states() > 0) {
            std::uniform_int_distribution<int> pick(0, env.action_space().n - 1);
            std::vector<int> actions(env.n_states());
            for (int& a : actions) a = pick(rng);
            return Policy::deterministic(actions);
        }
        const int dim = env.observation_dim();
        const bool discrete = env.action_space().kind == ActionSpace::Kind::Discrete;
        const int n_out = discrete ? env.action_space().n : env.action_space().dim();
        Vec w(static_cast<std::size_t>(n_out) * (dim + 1));
        std::normal_distribution<double> g(0.0, 0.5);
        for (double& x : w) x = g(rng);
        return Policy::parametric(std::move(w), "linear");
    }

    if (quality == "expert" || quality == "medium") {
        std::unique_ptr<SimEnv> train_env = env.clone();
        train_env->seed(child_seed(seed, "target-env"));
        std::unique_ptr<Agent> agent = make_agent(agent_cfg, *train_env);
        std::vector<Policy> snapshots;
        TrainingTrace trace =
            agent->train(*train_env, nullptr, child_seed(seed, "target-train"), nullptr,
                         quality == "medium" ? &snapshots : nullptr);
        if (quality == "expert") return agent->greedy_policy();

        const Policy random_pi = make_target_policy("random", env, agent_cfg, seed);
        const double v_random = evaluate_policy(env, random_pi, agent_cfg.eval_episodes,
                                                child_seed(seed, "target-eval"));
        const double v_expert = trace.best_value;
        const double midpoint = 0.5 * (v_random + v_expert);
        for (std::size_t i = 0; i < trace.per_epoch_eval.size(); ++i) {
            if (trace.per_epoch_eval[i].second >= midpoint) return snapshots.at(i);
        }
        throw ConfigError("no training snapshot reached the medium-quality midpoint");
    }
    throw ConfigError("unknown target quality: " + quality);
}

Policy reference_policy(const TabularMdp& mdp, const AttackStrategy* strategy) {
    if (strategy == nullptr) return optimal_policy(mdp).policy;
    switch (strategy->kind) {
        case AttackStrategy::Kind::AE:
            return predicted_class_optimum(mdp, strategy->target, strategy->radius, true);
        case AttackStrategy::Kind::AI:
            return predicted_class_optimum(mdp, strategy->target, strategy->radius, false);
        case AttackStrategy::Kind::UR:
        case AttackStrategy::Kind::Flip:
            return optimal_policy(adversarial_mdp(mdp, *strategy)).policy;
    }
    throw ConfigError("unknown strategy kind");
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

namespace {

AgentConfig resolve_agent(const ExperimentConfig& cfg) {
    AgentConfig agent = cfg.agent;
    if (agent.train_steps < 0) agent.train_steps = default_train_steps(cfg.env.id);
    if (agent.decay_steps < 0) agent.decay_steps = agent.train_steps / 2;
    agent.validate();
    return agent;
}

Json pair_series(const std::vector<std::pair<long long, double>>& s) {
    Json out = Json::array();
    for (const auto& [a, b] : s) out.push_back(Json::array({a, b}));
    return out;
}

Json trace_to_json(const TrainingTrace& t, std::uint64_t seed) {
    Json j;
    j["seed"] = seed;
    j["best_value"] = t.best_value;
    j["steps_run"] = t.steps_run;
    j["per_epoch_eval"] = pair_series(t.per_epoch_eval);
    j["per_epoch_attack_rate"] = pair_series(t.per_epoch_attack_rate);
    j["per_epoch_proposed_rate"] = pair_series(t.per_epoch_proposed_rate);
    j["suboptimal_action_rate"] = pair_series(t.suboptimal_action_rate);
    j["overall_attack_rate"] = t.overall_attack_rate;
    j["overall_proposed_rate"] = t.overall_proposed_rate;
    j["overall_suboptimal_rate"] = t.overall_suboptimal_rate;
    return j;
}

struct ArmPlan {
    std::string name = "default";
    double ur_sign = 1.0;
};

struct RunInputs {
    const ExperimentConfig& config;
    AgentConfig agent;
    long long C_limit = 0;
};

std::optional<AttackStrategy> build_strategy(const RunInputs& in, const ArmPlan& arm,
                                             const SimEnv& env, std::uint64_t seed,
                                             Policy* target_out) {
    if (!in.config.attack) return std::nullopt;
    const AttackSpec& spec = *in.config.attack;
    const double B = in.config.budget.B;
    const double magnitude =
        spec.delta != 0.0 ? std::abs(spec.delta) : (std::isfinite(B) ? B : 1.0);
    if (spec.kind == "UR") {
        const double p = spec.p >= 0.0 ? spec.p : in.config.budget.C_over_T;
        return AttackStrategy::ur(p, arm.ur_sign * magnitude);
    }
    if (spec.kind == "Flip") return AttackStrategy::flip();
    Policy target = make_target_policy(spec.target_source, env, in.agent, seed);
    if (target_out) *target_out = target;
    if (spec.kind == "AE") return AttackStrategy::ae(std::move(target), magnitude, spec.radius);
    return AttackStrategy::ai(std::move(target), magnitude, spec.radius);
}

SeedResult run_single_seed(const RunInputs& in, const ArmPlan& arm, std::uint64_t seed,
                           const fs::path& seed_dir) {
    SeedResult result;
    result.seed = seed;
    try {
        std::unique_ptr<SimEnv> env = make_env(in.config.env, child_seed(seed, "env"));

        Policy target;
        std::optional<AttackStrategy> strategy =
            build_strategy(in, arm, *env, seed, &target);
        result.has_target = strategy && strategy->needs_target();
        if (result.has_target) result.target = target;

        std::optional<AttackSession> session;
        if (strategy)
            session.emplace(make_session(*strategy, in.config.budget.B, in.C_limit,
                                         in.config.budget.E, env->action_space(),
                                         child_seed(seed, "attack")));

        // Reference for the measured suboptimal-action rate: the adversarial
        // optimum of the tabularized environment, when one exists.
        std::optional<Policy> reference;
        if (env->n_states() > 0) {
            try {
                reference = reference_policy(to_tabular(*env),
                                             strategy ? &*strategy : nullptr);
            } catch (const UnsupportedError&) {
            }
        }

        std::unique_ptr<Agent> agent = make_agent(in.agent, *env);
        result.trace = agent->train(*env, session ? &*session : nullptr,
                                    child_seed(seed, "run"),
                                    reference ? &*reference : nullptr);

        if (session) {
            result.efficiency = measure_efficiency(session->log(), result.trace.best_value);
            result.c_ok = result.efficiency.C_used <= in.C_limit;
            result.b_ok = result.efficiency.B_used <= in.config.budget.B * (1.0 + 1e-12);
            // Recompute the per-episode spend from the raw log.
            double spend = 0.0;
            long long episode = -1;
            for (const SessionRecord& rec : session->log()) {
                if (rec.episode != episode) {
                    episode = rec.episode;
                    spend = 0.0;
                }
                spend += std::abs(rec.delta_applied);
                if (spend > in.config.budget.E * (1.0 + 1e-12)) {
                    result.e_violations += 1;
                    break;
                }
            }
        } else {
            result.efficiency.V = result.trace.best_value;
        }

        fs::create_directories(seed_dir);
        save_json_file((seed_dir / "trace.json").string(), trace_to_json(result.trace, seed));
        if (session) {
            std::ofstream log_out(seed_dir / "session.jsonl");
            session->write_jsonl(log_out);
        }
    } catch (const std::exception& e) {
        result.failed = true;
        result.error = e.what();
    }
    return result;
}

void parallel_for(int workers, std::size_t n, const std::function<void(std::size_t)>& fn) {
    workers = std::max(1, std::min<int>(workers, static_cast<int>(n)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (std::thread& t : pool) t.join();
}

struct ArmOutcome {
    ArmPlan plan;
    std::vector<SeedResult> seeds;
    double mean_v = 0.0;
    double variance_v = 0.0;
    std::size_t succeeded = 0;
};

ArmOutcome run_arm(const RunInputs& in, const ArmPlan& plan, const fs::path& run_dir,
                   int workers) {
    ArmOutcome outcome;
    outcome.plan = plan;
    outcome.seeds.resize(in.config.seeds.size());
    parallel_for(workers, in.config.seeds.size(), [&](std::size_t i) {
        const std::uint64_t seed = in.config.seeds[i];
        const fs::path seed_dir = run_dir / plan.name / ("seed_" + std::to_string(seed));
        outcome.seeds[i] = run_single_seed(in, plan, seed, seed_dir);
    });
    double sum = 0.0;
    for (const SeedResult& r : outcome.seeds) {
        if (r.failed) continue;
        sum += r.trace.best_value;
        outcome.succeeded += 1;
    }
    if (outcome.succeeded > 0) {
        outcome.mean_v = sum / outcome.succeeded;
        double sq = 0.0;
        for (const SeedResult& r : outcome.seeds)
            if (!r.failed) sq += (r.trace.best_value - outcome.mean_v) *
                                 (r.trace.best_value - outcome.mean_v);
        outcome.variance_v = sq / outcome.succeeded;
    }
    return outcome;
}

AggregateResult aggregate_from_arm(const ArmOutcome& arm) {
    AggregateResult agg;
    agg.chosen_arm = arm.plan.name;
    agg.mean_v = arm.mean_v;
    agg.variance_v = arm.variance_v;
    agg.seeds = arm.seeds;

    std::size_t epochs = std::string::npos;
    double c_sum = 0.0;
    for (const SeedResult& r : arm.seeds) {
        if (r.failed) {
            agg.failed_seeds.push_back(r.seed);
            continue;
        }
        agg.per_seed_v.push_back(r.trace.best_value);
        c_sum += static_cast<double>(r.efficiency.C_used);
        agg.b_used_max = std::max(agg.b_used_max, r.efficiency.B_used);
        agg.e_violations += r.e_violations;
        if (!r.c_ok) agg.c_violations += 1;
        epochs = std::min(epochs, r.trace.per_epoch_attack_rate.size());
    }
    if (!agg.per_seed_v.empty()) c_sum /= static_cast<double>(agg.per_seed_v.size());
    agg.c_spent_mean = c_sum;

    if (epochs != std::string::npos && epochs > 0) {
        for (std::size_t e = 0; e < epochs; ++e) {
            double rate = 0.0, proposed = 0.0;
            long long epoch_id = 0;
            std::size_t n = 0;
            for (const SeedResult& r : arm.seeds) {
                if (r.failed) continue;
                epoch_id = r.trace.per_epoch_attack_rate[e].first;
                rate += r.trace.per_epoch_attack_rate[e].second;
                proposed += r.trace.per_epoch_proposed_rate[e].second;
                n += 1;
            }
            if (n == 0) break;
            agg.mean_attack_rate_curve.emplace_back(epoch_id, rate / n);
            agg.mean_proposed_rate_curve.emplace_back(epoch_id, proposed / n);
        }
    }
    return agg;
}

Json arm_summary_json(const ArmOutcome& arm) {
    Json j;
    j["mean_V"] = arm.mean_v;
    j["variance_V"] = arm.variance_v;
    j["n_seeds"] = arm.succeeded;
    Json per_seed = Json::array();
    for (const SeedResult& r : arm.seeds) {
        Json s;
        s["seed"] = r.seed;
        s["failed"] = r.failed;
        if (r.failed)
            s["error"] = r.error;
        else {
            s["best_value"] = r.trace.best_value;
            s["c_used"] = r.efficiency.C_used;
            s["b_used"] = r.efficiency.B_used;
            s["e_max_episode"] = r.efficiency.E_max_episode;
        }
        per_seed.push_back(s);
    }
    j["seeds"] = per_seed;
    return j;
}

} // namespace

AggregateResult run_experiment(const ExperimentConfig& config, int workers) {
    config.validate();
    RunInputs in{config, resolve_agent(config), 0};
    in.C_limit = static_cast<long long>(std::llround(config.budget.C_over_T *
                                                     static_cast<double>(in.agent.train_steps)));

    // Fail fast on incompatible configs and enforce budget calibration.
    std::unique_ptr<SimEnv> probe = make_env(config.env, 0);
    (void)make_agent(in.agent, *probe);
    const EnvConstants constants = env_constants(*probe);
    const BudgetBounds bounds = derive_budgets(constants);
    if (config.budget.enforce_floor) {
        if (config.budget.B < bounds.b_floor * (1.0 - 1e-12))
            throw ValidationError("budget B " + format_double(config.budget.B) +
                                  " is below the floor " + format_double(bounds.b_floor));
        if (config.budget.E > bounds.e_cap * (1.0 + 1e-12))
            throw ValidationError("budget E " + format_double(config.budget.E) +
                                  " exceeds the cap " + format_double(bounds.e_cap));
    }

    const fs::path run_dir = fs::path(config.output_dir) / config.name;
    fs::create_directories(run_dir);

    std::vector<ArmOutcome> arms;
    if (config.attack && config.attack->kind == "UR") {
        arms.push_back(run_arm(in, {"delta_pos", +1.0}, run_dir, workers));
        arms.push_back(run_arm(in, {"delta_neg", -1.0}, run_dir, workers));
    } else {
        arms.push_back(run_arm(in, {"default", +1.0}, run_dir, workers));
    }

    std::size_t chosen = 0;
    for (std::size_t i = 1; i < arms.size(); ++i)
        if (arms[i].succeeded > 0 && arms[i].mean_v < arms[chosen].mean_v) chosen = i;

    AggregateResult agg = aggregate_from_arm(arms[chosen]);
    agg.run_dir = run_dir.string();

    Json summary;
    summary["name"] = config.name;
    summary["env"] = config.env.id;
    summary["agent"] = agent_kind_to_string(in.agent.kind);
    summary["attack"] = config.attack ? config.attack->kind : "none";
    if (config.attack) {
        const double magnitude = config.attack->delta != 0.0
                                     ? std::abs(config.attack->delta)
                                     : (std::isfinite(config.budget.B) ? config.budget.B : 0.0);
        summary["delta"] = (config.attack->kind == "UR" && agg.chosen_arm == "delta_neg")
                               ? -magnitude
                               : magnitude;
        summary["radius"] = config.attack->radius;
    } else {
        summary["delta"] = Json(nullptr);
    }
    summary["C_over_T"] = config.budget.C_over_T;
    summary["C_limit"] = in.C_limit;
    summary["B"] = inf_aware(config.budget.B);
    summary["E"] = inf_aware(config.budget.E);
    summary["train_steps"] = in.agent.train_steps;
    summary["env_constants"] = Json{{"v_max", constants.v_max},
                                    {"v_min", constants.v_min},
                                    {"l_max", constants.l_max}};
    summary["budget_bounds"] = Json{{"b_floor", bounds.b_floor}, {"e_cap", bounds.e_cap}};
    summary["chosen_arm"] = agg.chosen_arm;
    Json arms_json;
    for (const ArmOutcome& arm : arms) arms_json[arm.plan.name] = arm_summary_json(arm);
    summary["arms"] = arms_json;
    Json result;
    result["mean_V"] = agg.mean_v;
    result["variance_V"] = agg.variance_v;
    result["n_seeds"] = agg.per_seed_v.size();
    result["per_seed_V"] = agg.per_seed_v;
    result["mean_attack_rate_curve"] = pair_series(agg.mean_attack_rate_curve);
    result["mean_proposed_rate_curve"] = pair_series(agg.mean_proposed_rate_curve);
    result["budget_usage"] = Json{{"c_spent_mean", agg.c_spent_mean},
                                  {"b_used_max", agg.b_used_max},
                                  {"e_violations", agg.e_violations},
                                  {"c_violations", agg.c_violations}};
    result["failed_seeds"] = agg.failed_seeds;
    summary["result"] = result;
    summary["config"] = config.to_json();
    save_json_file((run_dir / "summary.json").string(), summary);

    std::ofstream row(run_dir / "rows.csv");
    row << "env,agent,attack,C_over_T,delta,mean_V,var_V,n_seeds\n";
    row << config.env.id << ',' << agent_kind_to_string(in.agent.kind) << ','
        << (config.attack ? config.attack->kind : "none") << ','
        << format_double(config.budget.C_over_T) << ','
        << (summary["delta"].is_number() ? format_double(summary["delta"].get<double>()) : "")
        << ',' << format_double(agg.mean_v) << ',' << format_double(agg.variance_v) << ','
        << agg.per_seed_v.size() << "\n";
    return agg;
}

std::vector<AggregateResult> sweep_experiment(const ExperimentConfig& config, int workers) {
    config.validate();
    if (!config.sweep) throw ConfigError("sweep_experiment needs a \"sweep\" block");

    std::vector<AggregateResult> results;
    Json points = Json::array();
    for (const Json& value : config.sweep->values) {
        ExperimentConfig point = config;
        point.sweep.reset();
        std::string label;
        const std::string& axis = config.sweep->axis;
        if (axis == "target_quality") {
            if (!point.attack) throw ConfigError("target_quality sweep needs an attack");
            point.attack->target_source = value.get<std::string>();
            label = point.attack->target_source;
        } else {
            const double v = value.get<double>();
            label = format_double(v);
            if (axis == "C_over_T") {
                point.budget.C_over_T = v;
            } else if (axis == "delta") {
                if (!point.attack) throw ConfigError("delta sweep needs an attack");
                point.attack->delta = v;
                point.budget.B = std::abs(v);  // |delta| = B by construction
            } else if (axis == "r") {
                if (!point.attack) throw ConfigError("r sweep needs an attack");
                point.attack->radius = v;
            } else if (axis == "E") {
                point.budget.E = v;
            }
        }
        point.name = config.name + "_" + axis + "_" + label;
        results.push_back(run_experiment(point, workers));
        Json p;
        p["axis"] = axis;
        p["value"] = value;
        p["run"] = point.name;
        p["mean_V"] = results.back().mean_v;
        p["variance_V"] = results.back().variance_v;
        points.push_back(p);
    }
    Json sweep_summary;
    sweep_summary["name"] = config.name;
    sweep_summary["axis"] = config.sweep->axis;
    sweep_summary["points"] = points;
    const fs::path dir = fs::path(config.output_dir);
    fs::create_directories(dir);
    save_json_file((dir / (config.name + "_sweep_summary.json")).string(), sweep_summary);
    return results;
}

// ---------------------------------------------------------------------------
// Reporting
// ---------------------------------------------------------------------------

void report(const std::string& results_dir) {
    std::vector<fs::path> summaries;
    if (!fs::exists(results_dir)) throw ConfigError("results directory does not exist");
    for (const auto& entry : fs::recursive_directory_iterator(results_dir))
        if (entry.is_regular_file() && entry.path().filename() == "summary.json")
            summaries.push_back(entry.path());
    if (summaries.empty()) throw ConfigError("no run summaries found under " + results_dir);
    std::sort(summaries.begin(), summaries.end());

    std::ofstream budget_csv(fs::path(results_dir) / "v_vs_budget.csv");
    std::ofstream delta_csv(fs::path(results_dir) / "v_vs_delta.csv");
    std::ofstream rate_csv(fs::path(results_dir) / "attack_rate_by_epoch.csv");
    budget_csv << "env,agent,attack,C_over_T,mean_V,var_V,n_seeds\n";
    delta_csv << "env,agent,attack,delta,mean_V,var_V,n_seeds\n";
    rate_csv << "env,agent,attack,run,epoch,mean_attack_rate,mean_proposed_rate\n";

    for (const fs::path& path : summaries) {
        const Json j = load_json_file(path.string());
        const std::string env = j.value("env", std::string("?"));
        const std::string agent = j.value("agent", std::string("?"));
        const std::string attack = j.value("attack", std::string("none"));
        const std::string name = j.value("name", std::string("?"));
        const Json& result = j.at("result");
        const std::string mean_v = format_double(result.at("mean_V").get<double>());
        const std::string var_v = format_double(result.at("variance_V").get<double>());
        const std::size_t n_seeds = result.at("n_seeds").get<std::size_t>();

        budget_csv << env << ',' << agent << ',' << attack << ','
                   << format_double(j.value("C_over_T", 1.0)) << ',' << mean_v << ',' << var_v
                   << ',' << n_seeds << "\n";
        const std::string delta =
            j.contains("delta") && j.at("delta").is_number()
                ? format_double(j.at("delta").get<double>())
                : "";
        delta_csv << env << ',' << agent << ',' << attack << ',' << delta << ',' << mean_v << ','
                  << var_v << ',' << n_seeds << "\n";
        const Json& applied = result.at("mean_attack_rate_curve");
        const Json& proposed = result.at("mean_proposed_rate_curve");
        for (std::size_t i = 0; i < applied.size(); ++i) {
            rate_csv << env << ',' << agent << ',' << attack << ',' << name << ','
                     << applied[i][0].get<long long>() << ','
                     << format_double(applied[i][1].get<double>()) << ','
                     << (i < proposed.size() ? format_double(proposed[i][1].get<double>()) : "")
                     << "\n";
        }
    }
}

} // namespace poisonlab
