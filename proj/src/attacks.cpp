#include "poisonlab/attacks.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "poisonlab/mdp_ops.hpp"

namespace poisonlab {

AttackStrategy AttackStrategy::ur(double p, double delta) {
    if (p < 0.0 || p > 1.0) throw ValidationError("UR probability must lie in [0, 1]");
    AttackStrategy s;
    s.kind = Kind::UR;
    s.p = p;
    s.delta = delta;
    return s;
}

AttackStrategy AttackStrategy::ae(Policy target, double delta, double radius) {
    if (!(delta > 0.0)) throw ValidationError("AE needs delta > 0");
    if (!(radius > 0.0 && radius < 1.0)) throw ValidationError("AE radius must lie in (0, 1)");
    AttackStrategy s;
    s.kind = Kind::AE;
    s.delta = delta;
    s.radius = radius;
    s.target = std::move(target);
    return s;
}

AttackStrategy AttackStrategy::ai(Policy target, double delta, double radius) {
    if (!(delta > 0.0)) throw ValidationError("AI needs delta > 0");
    if (!(radius > 0.0 && radius < 1.0)) throw ValidationError("AI radius must lie in (0, 1)");
    AttackStrategy s;
    s.kind = Kind::AI;
    s.delta = delta;
    s.radius = radius;
    s.target = std::move(target);
    return s;
}

AttackStrategy AttackStrategy::flip() {
    AttackStrategy s;
    s.kind = Kind::Flip;
    return s;
}

std::string AttackStrategy::name() const {
    switch (kind) {
        case Kind::UR: return "UR";
        case Kind::AE: return "AE";
        case Kind::AI: return "AI";
        case Kind::Flip: return "Flip";
    }
    return "?";
}

double propose_perturbation(const AttackStrategy& strategy, const Observation& s,
                            const Action& a, double r, Rng& rng, const ActionSpace& space) {
    switch (strategy.kind) {
        case AttackStrategy::Kind::UR: {
            double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            return u < strategy.p ? -strategy.delta : 0.0;
        }
        case AttackStrategy::Kind::AE: {
            Action ta = policy_action(strategy.target, s, space);
            return action_distance(a, ta, space) <= strategy.radius ? -strategy.delta : 0.0;
        }
        case AttackStrategy::Kind::AI: {
            Action ta = policy_action(strategy.target, s, space);
            return action_distance(a, ta, space) > strategy.radius ? -strategy.delta : 0.0;
        }
        case AttackStrategy::Kind::Flip:
            return -2.0 * r;
    }
    return 0.0;
}

double BudgetAccountant::apply(double proposed) {
    if (proposed == 0.0) return 0.0;
    const double magnitude = std::abs(proposed);
    if (magnitude > B * (1.0 + 1e-12))
        throw std::invalid_argument("proposed perturbation exceeds per-step budget B");
    if (c_spent + 1 > C_limit) return 0.0;
    if (e_spent_this_episode + magnitude > E_limit) return 0.0;
    c_spent += 1;
    e_spent_this_episode += magnitude;
    return proposed;
}

AttackSession::AttackSession(AttackStrategy strategy, BudgetAccountant accountant,
                             ActionSpace space, std::uint64_t seed)
    : strategy_(std::move(strategy)),
      accountant_(accountant),
      space_(std::move(space)),
      rng_(seed) {}

void AttackSession::begin_episode() {
    accountant_.begin_episode();
    episode_ += 1;
}

double AttackSession::perturb(const Observation& s, const Action& a, double r_true) {
    if (episode_ < 0) begin_episode();
    const double proposed = propose_perturbation(strategy_, s, a, r_true, rng_, space_);
    const double applied = accountant_.apply(proposed);
    log_.push_back({t_, episode_, r_true, proposed, applied, accountant_.c_spent,
                    accountant_.e_spent_this_episode});
    t_ += 1;
    return applied;
}

void AttackSession::write_jsonl(std::ostream& out) const {
    for (const SessionRecord& rec : log_) {
        nlohmann::json j;
        j["t"] = rec.t;
        j["episode"] = rec.episode;
        j["delta_applied"] = rec.delta_applied;
        j["c_spent"] = rec.c_spent;
        j["e_spent"] = rec.e_spent;
        out << j.dump() << "\n";
    }
}

AttackSession make_session(AttackStrategy strategy, double B, long long C_limit,
                           double E_limit, ActionSpace space, std::uint64_t seed) {
    if (!(B > 0.0)) throw ValidationError("per-step budget B must be positive");
    if (C_limit < 0) throw ValidationError("corrupted-step budget C must be nonnegative");
    if (E_limit < 0.0) throw ValidationError("per-episode budget E must be nonnegative");
    if (strategy.kind == AttackStrategy::Kind::Flip &&
        B != std::numeric_limits<double>::infinity())
        throw ConfigError("Flip has unbounded per-step magnitude; run it with B = inf");
    if (std::isfinite(B)) {
        if (strategy.kind == AttackStrategy::Kind::UR)
            strategy.delta = std::clamp(strategy.delta, -B, B);
        else
            strategy.delta = std::min(strategy.delta, B);
    }
    BudgetAccountant acct;
    acct.B = B;
    acct.C_limit = C_limit;
    acct.E_limit = E_limit;
    return AttackSession(std::move(strategy), acct, std::move(space), seed);
}

TabularMdp adversarial_mdp(const TabularMdp& mdp, const AttackStrategy& strategy) {
    mdp.validate();
    if (strategy.needs_target() && !strategy.target.is_deterministic())
        throw UnsupportedError("adversarial_mdp needs a deterministic tabular target policy");
    if (strategy.needs_target()) strategy.target.validate(mdp.n_states, mdp.n_actions);

    const ActionSpace space = mdp.n_actions >= 2
                                  ? ActionSpace::discrete(mdp.n_actions)
                                  : ActionSpace{};  // single action: d == 0 always

    TabularMdp adv = mdp;
    for (int s = 0; s < mdp.n_states; ++s) {
        if (mdp.terminal[s]) continue;
        for (int a = 0; a < mdp.n_actions; ++a) {
            double& r = adv.expected_reward[s][a];
            switch (strategy.kind) {
                case AttackStrategy::Kind::UR:
                    r -= strategy.p * strategy.delta;
                    break;
                case AttackStrategy::Kind::AE: {
                    double d = mdp.n_actions >= 2
                                   ? action_distance(a, strategy.target.action_at(s), space)
                                   : 0.0;
                    if (d <= strategy.radius) r -= strategy.delta;
                    break;
                }
                case AttackStrategy::Kind::AI: {
                    double d = mdp.n_actions >= 2
                                   ? action_distance(a, strategy.target.action_at(s), space)
                                   : 0.0;
                    if (d > strategy.radius) r -= strategy.delta;
                    break;
                }
                case AttackStrategy::Kind::Flip:
                    r = -r;
                    break;
            }
        }
    }
    return adv;
}

double ur_predicted_value(const TabularMdp& mdp, const Policy& pi, double p, double delta) {
    const double v = policy_value(mdp, pi);
    const double length = occupancy(mdp, pi).episode_length;
    return v - delta * p * length;
}

EfficiencyTuple measure_efficiency(const std::vector<SessionRecord>& log, double best_value) {
    EfficiencyTuple e;
    e.V = best_value;
    double episode_spend = 0.0;
    long long episode = -1;
    for (const SessionRecord& rec : log) {
        if (rec.episode != episode) {
            episode = rec.episode;
            episode_spend = 0.0;
        }
        if (rec.delta_applied != 0.0) {
            e.C_used += 1;
            e.B_used = std::max(e.B_used, std::abs(rec.delta_applied));
            episode_spend += std::abs(rec.delta_applied);
            e.E_max_episode = std::max(e.E_max_episode, episode_spend);
        }
    }
    return e;
}

} // namespace poisonlab
