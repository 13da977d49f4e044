#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "poisonlab/harness.hpp"
#include "poisonlab/mdp_ops.hpp"
#include "poisonlab/oracle.hpp"
#include "poisonlab/serialize.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
    std::vector<std::uint64_t> seeds;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        std::size_t comma = csv.find(',', pos);
        if (comma == std::string::npos) comma = csv.size();
        seeds.push_back(std::stoull(csv.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    return seeds;
}

poisonlab::ExperimentConfig load_config(const std::string& path, const std::string& seeds_csv,
                                        const std::string& out_dir) {
    poisonlab::Json j = poisonlab::load_json_file(path);
    if (!seeds_csv.empty()) j["seeds"] = parse_seed_list(seeds_csv);
    if (!out_dir.empty()) j["output_dir"] = out_dir;
    return poisonlab::ExperimentConfig::from_json(j);
}

int finish_run(const std::vector<poisonlab::AggregateResult>& results) {
    bool partial = false;
    for (const auto& r : results) {
        std::printf("%s: mean_V=%.6g var_V=%.6g seeds=%zu", r.run_dir.c_str(), r.mean_v,
                    r.variance_v, r.per_seed_v.size());
        if (!r.failed_seeds.empty()) {
            partial = true;
            std::printf(" FAILED_SEEDS=%zu", r.failed_seeds.size());
        }
        std::printf("\n");
    }
    return partial ? kExitPartial : kExitOk;
}

poisonlab::Json theorem_report_json(const poisonlab::TheoremReport& rep) {
    poisonlab::Json j;
    j["degenerate"] = rep.degenerate;
    if (rep.degenerate) {
        j["degenerate_reason"] = rep.degenerate_reason;
        return j;
    }
    j["premise_holds"] = rep.premise_holds;
    j["exact"] = rep.exact;
    j["predicted_target"] = poisonlab::policy_to_json(rep.predicted_target);
    j["predicted_V_bound"] = rep.predicted_v_bound;
    j["witnesses"] = rep.witnesses;
    j["conclusion_checked"] = rep.conclusion_checked;
    j["conclusion_holds"] = rep.conclusion_holds;
    j["margin_all_states"] = rep.margin_all_states;
    j["margin_support"] = rep.margin_support;
    return j;
}

int run_verify(const std::string& mdp_path, const std::string& attack_path, double eps) {
    using namespace poisonlab;
    const TabularMdp mdp = mdp_from_json(load_json_file(mdp_path));
    const Json aj = load_json_file(attack_path);
    const std::string kind = aj.at("kind").get<std::string>();

    if (eps < 0.0) {
        // Default: 1% of the exact value range.
        TabularMdp negated = mdp;
        for (int s = 0; s < mdp.n_states; ++s)
            for (int a = 0; a < mdp.n_actions; ++a)
                negated.expected_reward[s][a] = -negated.expected_reward[s][a];
        const double v_max = optimal_policy(mdp).value;
        const double v_min = -optimal_policy(negated).value;
        eps = 0.01 * std::max(1e-12, v_max - v_min);
    }

    Json out;
    if (kind == "UR") {
        const double p = aj.value("p", 1.0);
        const double delta = aj.value("delta", 1.0);
        const TrivialUrReport rep = check_trivial_ur(mdp, p, delta, eps);
        out["kind"] = "UR";
        out["trivial"] = rep.trivial;
        out["fixed_horizon_case"] = rep.fixed_horizon_case;
        out["monotone_case"] = rep.monotone_case;
        out["monotone_direction"] = rep.monotone_direction;
        out["v_star"] = rep.v_star;
        out["violating_policies"] = rep.violating_policies;
    } else if (kind == "AE" || kind == "AI") {
        if (!aj.contains("target"))
            throw ConfigError("verify needs an inline \"target\" policy document");
        const Policy target = policy_from_json(aj.at("target"));
        const double delta = aj.value("delta", 1.0);
        const double radius = aj.value("radius", 0.5);
        const TheoremReport rep = kind == "AE"
                                      ? check_ae_theorem(mdp, target, delta, radius, eps)
                                      : check_ai_theorem(mdp, target, delta, radius, eps);
        out = theorem_report_json(rep);
        out["kind"] = kind;
    } else if (kind == "Flip") {
        // The flip adversary's optimum is the true MDP's worst policy.
        TabularMdp flipped = adversarial_mdp(mdp, AttackStrategy::flip());
        OptimalPolicyResult worst = optimal_policy(flipped);
        out["kind"] = "Flip";
        out["predicted_target"] = policy_to_json(worst.policy);
        out["predicted_V_bound"] = policy_value(mdp, worst.policy);
    } else {
        throw ConfigError("unknown attack kind: " + kind);
    }
    out["eps"] = eps;
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"poisonlab: reward-poisoning attacks on RL agents, with oracle verification"};
    app.require_subcommand(1);

    std::string config_path, seeds_csv, out_dir;
    int workers = 1;

    CLI::App* run = app.add_subcommand("run", "run one experiment from a config file");
    run->add_option("config", config_path, "experiment config (JSON)")->required();
    run->add_option("--seeds", seeds_csv, "comma-separated seed list (overrides config)");
    run->add_option("--out", out_dir, "output directory (overrides config)");
    run->add_option("--workers", workers, "parallel seed workers");

    CLI::App* sweep = app.add_subcommand("sweep", "run every point of the config's sweep axis");
    sweep->add_option("config", config_path, "experiment config (JSON)")->required();
    sweep->add_option("--seeds", seeds_csv, "comma-separated seed list (overrides config)");
    sweep->add_option("--out", out_dir, "output directory (overrides config)");
    sweep->add_option("--workers", workers, "parallel seed workers");

    std::string mdp_path, attack_path;
    double eps = -1.0;
    CLI::App* verify = app.add_subcommand("verify", "check attack theorems on a tabular MDP");
    verify->add_option("mdp", mdp_path, "TabularMdp document (JSON)")->required();
    verify->add_option("attack", attack_path, "attack document (JSON)")->required();
    verify->add_option("--eps", eps, "epsilon-optimality margin (default: 1% of value range)");

    std::string report_dir;
    CLI::App* report_cmd = app.add_subcommand("report", "aggregate run summaries into CSV tables");
    report_cmd->add_option("dir", report_dir, "results directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            auto config = load_config(config_path, seeds_csv, out_dir);
            return finish_run({poisonlab::run_experiment(config, workers)});
        }
        if (sweep->parsed()) {
            auto config = load_config(config_path, seeds_csv, out_dir);
            return finish_run(poisonlab::sweep_experiment(config, workers));
        }
        if (verify->parsed()) return run_verify(mdp_path, attack_path, eps);
        if (report_cmd->parsed()) {
            poisonlab::report(report_dir);
            std::printf("wrote v_vs_budget.csv, v_vs_delta.csv, attack_rate_by_epoch.csv under %s\n",
                        report_dir.c_str());
            return kExitOk;
        }
    } catch (const poisonlab::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const poisonlab::ValidationError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitPartial;
    }
    return kExitOk;
}
