#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "poisonlab/attacks.hpp"
#include "poisonlab/mdp_ops.hpp"
#include "poisonlab/serialize.hpp"
#include "test_util.hpp"

using namespace poisonlab;
using namespace poisonlab::testutil;

namespace {

Observation tab_obs(int s) {
    Observation o;
    o.index = s;
    return o;
}

const ActionSpace kD3 = ActionSpace::discrete(3);

} // namespace

TEST_CASE("propose: AE penalizes actions matching the target") {
    const Policy target = Policy::deterministic({1, 2, 0});
    const AttackStrategy ae = AttackStrategy::ae(target, 2.5, 0.5);
    Rng rng(1);
    CHECK(propose_perturbation(ae, tab_obs(0), Action::from_index(1), 0.0, rng, kD3) ==
          doctest::Approx(-2.5));
    CHECK(propose_perturbation(ae, tab_obs(0), Action::from_index(2), 0.0, rng, kD3) == 0.0);
}

TEST_CASE("propose: AI leaves matching actions alone") {
    const Policy target = Policy::deterministic({1, 2, 0});
    const AttackStrategy ai = AttackStrategy::ai(target, 2.5, 0.5);
    Rng rng(1);
    CHECK(propose_perturbation(ai, tab_obs(0), Action::from_index(1), 0.0, rng, kD3) == 0.0);
    CHECK(propose_perturbation(ai, tab_obs(0), Action::from_index(0), 0.0, rng, kD3) ==
          doctest::Approx(-2.5));
}

TEST_CASE("propose: flip turns the reward into its negation") {
    const AttackStrategy flip = AttackStrategy::flip();
    Rng rng(1);
    const double delta =
        propose_perturbation(flip, tab_obs(0), Action::from_index(0), -1.0, rng, kD3);
    CHECK(delta == doctest::Approx(2.0));
    CHECK(-1.0 + delta == doctest::Approx(1.0));
}

TEST_CASE("propose: UR fires with its probability") {
    Rng rng(2);
    const AttackStrategy always = AttackStrategy::ur(1.0, 2.0);
    const AttackStrategy never = AttackStrategy::ur(0.0, 2.0);
    for (int i = 0; i < 50; ++i) {
        CHECK(propose_perturbation(always, tab_obs(0), Action::from_index(0), 0.0, rng, kD3) ==
              doctest::Approx(-2.0));
        CHECK(propose_perturbation(never, tab_obs(0), Action::from_index(0), 0.0, rng, kD3) ==
              0.0);
    }
}

TEST_CASE("propose: targets need a usable observation") {
    const AttackStrategy ae = AttackStrategy::ae(Policy::deterministic({0}), 1.0, 0.5);
    Rng rng(3);
    Observation continuous;
    continuous.features = {0.1, 0.2};
    CHECK_THROWS_AS(
        propose_perturbation(ae, continuous, Action::from_index(0), 0.0, rng, kD3),
        ConfigError);
}

TEST_CASE("budget: corrupted-step cap") {
    BudgetAccountant acct;
    acct.B = 5.0;
    acct.C_limit = 3;
    acct.c_spent = 3;
    CHECK(acct.apply(1.0) == 0.0);
    CHECK(acct.c_spent == 3);
}

TEST_CASE("budget: per-episode cap") {
    BudgetAccountant acct;
    acct.B = 5.0;
    acct.E_limit = 10.0;
    acct.e_spent_this_episode = 9.5;
    CHECK(acct.apply(1.0) == 0.0);
    CHECK(acct.e_spent_this_episode == doctest::Approx(9.5));
}

TEST_CASE("budget: a fresh accountant charges what it applies") {
    BudgetAccountant acct;
    acct.B = 5.0;
    acct.C_limit = 100;
    acct.E_limit = 100.0;
    CHECK(acct.apply(-2.0) == doctest::Approx(-2.0));
    CHECK(acct.c_spent == 1);
    CHECK(acct.e_spent_this_episode == doctest::Approx(2.0));
    CHECK(acct.apply(0.0) == 0.0);
    CHECK(acct.c_spent == 1);  // zero proposals are free
    acct.begin_episode();
    CHECK(acct.e_spent_this_episode == 0.0);
    CHECK(acct.c_spent == 1);  // the step budget never resets
}

TEST_CASE("budget: proposals above B are a contract violation") {
    BudgetAccountant acct;
    acct.B = 1.0;
    CHECK_THROWS_AS(acct.apply(1.5), std::invalid_argument);
}

TEST_CASE("adversarial mdp: flip negates the expected rewards") {
    Rng rng(4);
    const TabularMdp mdp = random_mdp(rng, {.n_states = 4, .n_actions = 2, .terminal_prob = 0.4});
    const TabularMdp adv = adversarial_mdp(mdp, AttackStrategy::flip());
    for (int s = 0; s < mdp.n_states; ++s)
        for (int a = 0; a < mdp.n_actions; ++a)
            CHECK(adv.expected_reward[s][a] == doctest::Approx(-mdp.expected_reward[s][a]));
}

TEST_CASE("adversarial mdp: UR with p = 0 changes nothing") {
    Rng rng(5);
    const TabularMdp mdp = random_mdp(rng, {});
    const TabularMdp adv = adversarial_mdp(mdp, AttackStrategy::ur(0.0, 3.0));
    CHECK(adv.expected_reward == mdp.expected_reward);
}

TEST_CASE("adversarial mdp: AE subtracts delta exactly on target actions") {
    TabularMdp mdp = fixed_chain(1, 0.0);  // placeholder; build 2-state 2-action by hand
    mdp = TabularMdp{};
    mdp.n_states = 2;
    mdp.n_actions = 2;
    mdp.horizon_cap = 3;
    mdp.transition = {{{0.5, 0.5}, {1.0, 0.0}}, {{0.0, 1.0}, {0.5, 0.5}}};
    mdp.expected_reward = {{0.7, -0.2}, {0.1, 0.4}};
    mdp.reward_noise_std = {{0, 0}, {0, 0}};
    mdp.initial_dist = {1.0, 0.0};
    mdp.terminal = {false, false};
    mdp.validate();
    const Policy target = Policy::deterministic({0, 1});
    const TabularMdp adv = adversarial_mdp(mdp, AttackStrategy::ae(target, 5.0, 0.5));
    CHECK(adv.expected_reward[0][0] == doctest::Approx(mdp.expected_reward[0][0] - 5.0));
    CHECK(adv.expected_reward[1][1] == doctest::Approx(mdp.expected_reward[1][1] - 5.0));
    CHECK(adv.expected_reward[0][1] == doctest::Approx(mdp.expected_reward[0][1]));
    CHECK(adv.expected_reward[1][0] == doctest::Approx(mdp.expected_reward[1][0]));
}

TEST_CASE("ur predicted value: degenerate parameters leave the value alone") {
    Rng rng(6);
    const TabularMdp mdp = random_mdp(rng, {});
    const Policy pi = random_det_policy(rng, mdp);
    const double v = policy_value(mdp, pi);
    CHECK(ur_predicted_value(mdp, pi, 0.0, 2.0) == doctest::Approx(v));
    CHECK(ur_predicted_value(mdp, pi, 0.5, 0.0) == doctest::Approx(v));
}

TEST_CASE("ur predicted value: five-step chain arithmetic") {
    const TabularMdp mdp = fixed_chain(5, 1.0);
    const Policy pi = Policy::deterministic(std::vector<int>(6, 0));
    CHECK(ur_predicted_value(mdp, pi, 0.5, 2.0) == doctest::Approx(0.0));
}

TEST_CASE("exact identity: UR adversarial value equals the predicted form") {
    Rng rng(7);
    std::uniform_real_distribution<double> pd(0.0, 1.0), dd(-2.0, 2.0);
    for (int i = 0; i < 50; ++i) {
        const TabularMdp mdp = random_mdp(rng, {.n_states = 4, .n_actions = 3,
                                                .terminal_prob = 0.3});
        const Policy pi = random_det_policy(rng, mdp);
        const double p = pd(rng), delta = dd(rng);
        const TabularMdp adv = adversarial_mdp(mdp, AttackStrategy::ur(p, delta));
        CHECK(policy_value(adv, pi) ==
              doctest::Approx(ur_predicted_value(mdp, pi, p, delta)).epsilon(1e-9));
    }
}

TEST_CASE("exact identities: AE and AI adversarial values") {
    Rng rng(8);
    std::uniform_real_distribution<double> dd(0.1, 3.0);
    for (int i = 0; i < 50; ++i) {
        const TabularMdp mdp = random_mdp(rng, {.n_states = 4, .n_actions = 3,
                                                .terminal_prob = 0.3});
        const Policy pi = random_det_policy(rng, mdp);
        const Policy target = random_det_policy(rng, mdp);
        const double delta = dd(rng);
        const double r = 0.5;
        const double L = occupancy(mdp, pi).episode_length;
        const double dr = policy_distance(mdp, pi, target, r);

        const TabularMdp ae = adversarial_mdp(mdp, AttackStrategy::ae(target, delta, r));
        CHECK(policy_value(ae, pi) ==
              doctest::Approx(policy_value(mdp, pi) - delta * (L - dr)).epsilon(1e-9));

        const TabularMdp ai = adversarial_mdp(mdp, AttackStrategy::ai(target, delta, r));
        CHECK(policy_value(ai, pi) ==
              doctest::Approx(policy_value(mdp, pi) - delta * dr).epsilon(1e-9));
    }
}

TEST_CASE("session: flip always shows the agent the negated reward while budget lasts") {
    AttackSession session = make_session(AttackStrategy::flip(),
                                         std::numeric_limits<double>::infinity(), 1000,
                                         std::numeric_limits<double>::infinity(), kD3, 11);
    Rng rng(12);
    std::uniform_real_distribution<double> rd(-2.0, 2.0);
    session.begin_episode();
    for (int t = 0; t < 200; ++t) {
        const double r = rd(rng);
        const double applied = session.perturb(tab_obs(0), Action::from_index(0), r);
        CHECK(r + applied == doctest::Approx(-r));
    }
}

TEST_CASE("session: flip refuses a finite per-step budget") {
    CHECK_THROWS_AS(make_session(AttackStrategy::flip(), 2.0, 10, 100.0, kD3, 1), ConfigError);
}

TEST_CASE("session: strategy magnitude is clamped to B at construction") {
    AttackSession session = make_session(
        AttackStrategy::ae(Policy::deterministic({0, 0, 0}), 10.0, 0.5), 2.0, 1000, 1e9, kD3, 1);
    CHECK(session.strategy().delta == doctest::Approx(2.0));
    AttackSession ur = make_session(AttackStrategy::ur(1.0, -10.0), 2.0, 1000, 1e9, kD3, 1);
    CHECK(ur.strategy().delta == doctest::Approx(-2.0));
}

TEST_CASE("session: log is complete and the jsonl stream carries the contract fields") {
    AttackSession session =
        make_session(AttackStrategy::ur(0.5, 1.0), 1.0, 5, 2.0, kD3, 21);
    session.begin_episode();
    for (int t = 0; t < 20; ++t) {
        if (t == 10) session.begin_episode();
        session.perturb(tab_obs(0), Action::from_index(0), 0.5);
    }
    CHECK(session.log().size() == 20);
    CHECK(session.steps_observed() == 20);
    std::ostringstream out;
    session.write_jsonl(out);
    std::istringstream lines(out.str());
    std::string line;
    int n = 0;
    while (std::getline(lines, line)) {
        const Json j = Json::parse(line);
        CHECK(j.contains("t"));
        CHECK(j.contains("episode"));
        CHECK(j.contains("delta_applied"));
        CHECK(j.contains("c_spent"));
        CHECK(j.contains("e_spent"));
        n += 1;
    }
    CHECK(n == 20);
}

TEST_CASE("session: randomized budget safety") {
    Rng meta(31);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const double B = 0.5 + 2.0 * unif(meta);
        const long long C = static_cast<long long>(unif(meta) * 40);
        const double E = 0.5 + 6.0 * unif(meta);
        AttackStrategy strategy = trial % 3 == 0
                                      ? AttackStrategy::ur(unif(meta), B * (2 * unif(meta) - 1))
                                      : trial % 3 == 1
                                            ? AttackStrategy::ae(Policy::deterministic({0, 1, 2}),
                                                                 0.1 + B * unif(meta), 0.5)
                                            : AttackStrategy::ai(Policy::deterministic({0, 1, 2}),
                                                                 0.1 + B * unif(meta), 0.5);
        AttackSession session = make_session(strategy, B, C, E, kD3, 1000 + trial);
        Rng walk(trial);
        std::uniform_int_distribution<int> pick(0, 2);
        session.begin_episode();
        for (int t = 0; t < 120; ++t) {
            if (t % 17 == 16) session.begin_episode();
            session.perturb(tab_obs(pick(walk)), Action::from_index(pick(walk)), unif(walk));
        }
        // Recompute every limit from the raw log.
        long long c = 0;
        double episode_spend = 0.0;
        long long episode = -1;
        for (const SessionRecord& rec : session.log()) {
            if (rec.episode != episode) {
                episode = rec.episode;
                episode_spend = 0.0;
            }
            if (rec.delta_applied != 0.0) {
                c += 1;
                episode_spend += std::abs(rec.delta_applied);
                REQUIRE(std::abs(rec.delta_applied) <= B * (1 + 1e-12));
                REQUIRE(episode_spend <= E * (1 + 1e-12));
            }
        }
        REQUIRE(c <= C);
    }
}

TEST_CASE("measure efficiency: recomputed from the raw log") {
    AttackSession session = make_session(AttackStrategy::ur(1.0, 1.5), 1.5, 3, 100.0, kD3, 5);
    session.begin_episode();
    for (int t = 0; t < 10; ++t) session.perturb(tab_obs(0), Action::from_index(0), 0.0);
    const EfficiencyTuple eff = measure_efficiency(session.log(), -7.0);
    CHECK(eff.V == doctest::Approx(-7.0));
    CHECK(eff.C_used == 3);
    CHECK(eff.B_used == doctest::Approx(1.5));
    CHECK(eff.E_max_episode == doctest::Approx(4.5));
}
