#include "poisonlab/agents.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "poisonlab/mdp_ops.hpp"

namespace poisonlab {

void AgentConfig::validate() const {
    if (epsilon_end > epsilon_start)
        throw ValidationError("epsilon_end must not exceed epsilon_start");
    if (epoch_length < 1) throw ValidationError("epoch_length must be >= 1");
    if (train_steps < 0) throw ValidationError("train_steps must be >= 0");
    if (train_steps > 0 && train_steps < epoch_length)
        throw ValidationError("train_steps must be >= epoch_length");
    if (eval_episodes < 1) throw ValidationError("eval_episodes must be >= 1");
    if (!(discount > 0.0 && discount <= 1.0))
        throw ValidationError("discount must lie in (0, 1]");
    if (kind == Kind::Dqn && (batch_size < 1 || replay_capacity < batch_size))
        throw ValidationError("dqn replay must hold at least one batch");
    if (kind == Kind::CemContinuous && (population < 2 || !(elite_frac > 0.0 && elite_frac <= 1.0)))
        throw ValidationError("cem needs population >= 2 and elite_frac in (0, 1]");
}

namespace {

Action greedy_action_of(const Policy& pi, const Observation& obs, const ActionSpace& space) {
    if (pi.kind == Policy::Kind::TabularDeterministic)
        return Action::from_index(pi.action_at(obs.index));
    if (pi.kind == Policy::Kind::Parametric) {
        if (space.kind == ActionSpace::Kind::Discrete)
            return Action::from_index(pi.act_discrete(obs.features, space.n));
        return Action::from_vec(pi.act_box(obs.features, space));
    }
    throw UnsupportedError("cannot evaluate a stochastic policy greedily");
}

double rollout_return(SimEnv& env, const Policy& pi) {
    Observation obs = env.reset();
    double total = 0.0;
    while (true) {
        StepOutcome out = env.step(greedy_action_of(pi, obs, env.action_space()));
        total += out.reward;
        if (out.done) break;
        obs = out.next_observation;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Shared step-based training loop (TabularQ, Dqn)
// ---------------------------------------------------------------------------

class StepAgent;

struct EpochTracker {
    long long steps = 0;
    long long applied = 0;
    long long proposed = 0;
    double suboptimal_sum = 0.0;
};

class StepAgent : public Agent {
  public:
    explicit StepAgent(AgentConfig cfg) : cfg_(std::move(cfg)) {}

    TrainingTrace train(SimEnv& env, AttackSession* attack, std::uint64_t seed,
                        const Policy* reference, std::vector<Policy>* snapshots) override {
        on_train_begin(seed);
        Rng rng = make_rng(seed, "agent");
        const std::uint64_t eval_base = child_seed(seed, "eval");
        const ActionSpace& space = env.action_space();
        TrainingTrace trace;

        auto evaluate = [&](long long epoch) {
            double v = evaluate_policy(env, greedy_policy(), cfg_.eval_episodes,
                                       mix64(eval_base + static_cast<std::uint64_t>(epoch)));
            trace.per_epoch_eval.emplace_back(epoch, v);
            if (snapshots) snapshots->push_back(greedy_policy());
        };

        if (cfg_.train_steps == 0) {
            evaluate(0);
            trace.best_value = trace.per_epoch_eval.front().second;
            return trace;
        }

        Observation obs = env.reset();
        if (attack) attack->begin_episode();
        EpochTracker epoch;
        EpochTracker overall;
        long long epoch_index = 0;

        for (long long step = 0; step < cfg_.train_steps; ++step) {
            const Action a = select_action(obs, step, rng);
            StepOutcome out = env.step(a);
            double observed = out.reward;
            if (attack) {
                observed += attack->perturb(obs, a, out.reward);
                const SessionRecord& rec = attack->log().back();
                if (rec.delta_applied != 0.0) { epoch.applied += 1; overall.applied += 1; }
                if (rec.delta_proposed != 0.0) { epoch.proposed += 1; overall.proposed += 1; }
            }
            if (reference) {
                Action ref_a = policy_action(*reference, obs, space);
                const double d = action_distance(a, ref_a, space);
                epoch.suboptimal_sum += d;
                overall.suboptimal_sum += d;
            }
            epoch.steps += 1;
            overall.steps += 1;

            const bool terminal = out.done && !out.truncated;
            learn(obs, a, observed, out.next_observation, terminal);

            if (out.done) {
                obs = env.reset();
                if (attack) attack->begin_episode();
            } else {
                obs = out.next_observation;
            }

            if ((step + 1) % cfg_.epoch_length == 0 || step + 1 == cfg_.train_steps) {
                epoch_index += 1;
                evaluate(epoch_index);
                trace.per_epoch_attack_rate.emplace_back(
                    epoch_index, static_cast<double>(epoch.applied) / epoch.steps);
                trace.per_epoch_proposed_rate.emplace_back(
                    epoch_index, static_cast<double>(epoch.proposed) / epoch.steps);
                if (reference)
                    trace.suboptimal_action_rate.emplace_back(epoch_index,
                                                              epoch.suboptimal_sum / epoch.steps);
                epoch = EpochTracker{};
            }
        }
        trace.steps_run = cfg_.train_steps;
        trace.overall_attack_rate = static_cast<double>(overall.applied) / overall.steps;
        trace.overall_proposed_rate = static_cast<double>(overall.proposed) / overall.steps;
        if (reference) trace.overall_suboptimal_rate = overall.suboptimal_sum / overall.steps;
        trace.best_value = trace.per_epoch_eval.front().second;
        for (const auto& [e, v] : trace.per_epoch_eval) trace.best_value = std::max(trace.best_value, v);
        return trace;
    }

  protected:
    virtual void on_train_begin(std::uint64_t /*seed*/) {}
    virtual Action select_action(const Observation& obs, long long step, Rng& rng) = 0;
    virtual void learn(const Observation& obs, const Action& a, double reward,
                       const Observation& next, bool terminal) = 0;

    double epsilon_at(long long step) const {
        if (cfg_.decay_steps <= 0) return cfg_.epsilon_end;
        const double frac = std::min(1.0, static_cast<double>(step) / cfg_.decay_steps);
        return cfg_.epsilon_start + frac * (cfg_.epsilon_end - cfg_.epsilon_start);
    }

    AgentConfig cfg_;
};

// ---------------------------------------------------------------------------
// Tabular Q-learning
// ---------------------------------------------------------------------------

class TabularQAgent final : public StepAgent {
  public:
    TabularQAgent(AgentConfig cfg, int n_states, int n_actions)
        : StepAgent(std::move(cfg)),
          n_states_(n_states),
          n_actions_(n_actions),
          q_(n_states, Vec(n_actions, 0.0)) {}

    Policy greedy_policy() const override {
        std::vector<int> actions(n_states_, 0);
        for (int s = 0; s < n_states_; ++s) actions[s] = argmax_row(s);
        return Policy::deterministic(actions);
    }

  protected:
    Action select_action(const Observation& obs, long long step, Rng& rng) override {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        if (unif(rng) < epsilon_at(step)) {
            std::uniform_int_distribution<int> pick(0, n_actions_ - 1);
            return Action::from_index(pick(rng));
        }
        return Action::from_index(argmax_row(obs.index));
    }

    void learn(const Observation& obs, const Action& a, double reward, const Observation& next,
               bool terminal) override {
        double target = reward;
        if (!terminal) target += cfg_.discount * q_[next.index][argmax_row(next.index)];
        double& cell = q_[obs.index][a.index];
        cell += cfg_.learning_rate * (target - cell);
    }

  private:
    int argmax_row(int s) const {
        int best = 0;
        for (int a = 1; a < n_actions_; ++a)
            if (q_[s][a] > q_[s][best]) best = a;
        return best;
    }

    int n_states_;
    int n_actions_;
    Mat q_;
};

// ---------------------------------------------------------------------------
// DQN from scratch: 2 x hidden ReLU layers, uniform replay, periodic target
// sync, squared TD loss, SGD with momentum.
// ---------------------------------------------------------------------------

struct MlpNet {
    int in = 0, hid = 0, out = 0;
    Vec w;

    void init(int in_dim, int hid_dim, int out_dim, Rng& rng) {
        in = in_dim;
        hid = hid_dim;
        out = out_dim;
        w.assign(static_cast<std::size_t>(hid) * in + hid + static_cast<std::size_t>(hid) * hid +
                     hid + static_cast<std::size_t>(out) * hid + out,
                 0.0);
        std::size_t off = 0;
        auto fill = [&](int fan_in, std::size_t count) {
            std::normal_distribution<double> g(0.0, std::sqrt(2.0 / fan_in));
            for (std::size_t i = 0; i < count; ++i) w[off + i] = g(rng);
            off += count;
        };
        fill(in, static_cast<std::size_t>(hid) * in);
        off += hid;  // biases stay zero
        fill(hid, static_cast<std::size_t>(hid) * hid);
        off += hid;
        fill(hid, static_cast<std::size_t>(out) * hid);
    }

    // Forward pass, caching pre-activation signs via the activations.
    void forward(const Vec& x, Vec& h1, Vec& h2, Vec& y) const {
        std::size_t off = 0;
        h1.assign(hid, 0.0);
        for (int i = 0; i < hid; ++i) {
            double z = 0.0;
            for (int j = 0; j < in; ++j) z += w[off + static_cast<std::size_t>(i) * in + j] * x[j];
            h1[i] = z;
        }
        off += static_cast<std::size_t>(hid) * in;
        for (int i = 0; i < hid; ++i) h1[i] = std::max(0.0, h1[i] + w[off + i]);
        off += hid;
        h2.assign(hid, 0.0);
        for (int i = 0; i < hid; ++i) {
            double z = 0.0;
            for (int j = 0; j < hid; ++j) z += w[off + static_cast<std::size_t>(i) * hid + j] * h1[j];
            h2[i] = z;
        }
        off += static_cast<std::size_t>(hid) * hid;
        for (int i = 0; i < hid; ++i) h2[i] = std::max(0.0, h2[i] + w[off + i]);
        off += hid;
        y.assign(out, 0.0);
        for (int i = 0; i < out; ++i) {
            double z = 0.0;
            for (int j = 0; j < hid; ++j) z += w[off + static_cast<std::size_t>(i) * hid + j] * h2[j];
            y[i] = z + w[off + static_cast<std::size_t>(out) * hid + i];
        }
    }

    double q_max(const Vec& x) const {
        Vec h1, h2, y;
        forward(x, h1, h2, y);
        return *std::max_element(y.begin(), y.end());
    }

    // Accumulates dLoss/dw for loss = (y[a] - target)^2 into grad.
    void backward(const Vec& x, int a, double target, Vec& grad) const {
        Vec h1, h2, y;
        forward(x, h1, h2, y);
        const double dy = 2.0 * (y[a] - target);

        const std::size_t w1 = 0;
        const std::size_t b1 = w1 + static_cast<std::size_t>(hid) * in;
        const std::size_t w2 = b1 + hid;
        const std::size_t b2 = w2 + static_cast<std::size_t>(hid) * hid;
        const std::size_t w3 = b2 + hid;
        const std::size_t b3 = w3 + static_cast<std::size_t>(out) * hid;

        // output layer: only row `a` carries gradient
        Vec dh2(hid, 0.0);
        for (int j = 0; j < hid; ++j) {
            grad[w3 + static_cast<std::size_t>(a) * hid + j] += dy * h2[j];
            dh2[j] = dy * w[w3 + static_cast<std::size_t>(a) * hid + j];
        }
        grad[b3 + a] += dy;

        Vec dh1(hid, 0.0);
        for (int i = 0; i < hid; ++i) {
            if (h2[i] <= 0.0) continue;  // ReLU gate
            grad[b2 + i] += dh2[i];
            for (int j = 0; j < hid; ++j) {
                grad[w2 + static_cast<std::size_t>(i) * hid + j] += dh2[i] * h1[j];
                dh1[j] += dh2[i] * w[w2 + static_cast<std::size_t>(i) * hid + j];
            }
        }
        for (int i = 0; i < hid; ++i) {
            if (h1[i] <= 0.0) continue;
            grad[b1 + i] += dh1[i];
            for (int j = 0; j < in; ++j)
                grad[w1 + static_cast<std::size_t>(i) * in + j] += dh1[i] * x[j];
        }
    }
};

class DqnAgent final : public StepAgent {
  public:
    DqnAgent(AgentConfig cfg, int obs_dim, int n_actions)
        : StepAgent(std::move(cfg)), obs_dim_(obs_dim), n_actions_(n_actions) {
        Rng rng = make_rng(0, "dqn-init");
        net_.init(obs_dim_, cfg_.hidden, n_actions_, rng);
        target_ = net_;
        velocity_.assign(net_.w.size(), 0.0);
        replay_.reserve(cfg_.replay_capacity);
    }

    Policy greedy_policy() const override {
        return Policy::parametric(net_.w, "mlp2:" + std::to_string(obs_dim_) + ":" +
                                              std::to_string(cfg_.hidden) + ":" +
                                              std::to_string(n_actions_));
    }

  protected:
    void on_train_begin(std::uint64_t seed) override {
        Rng rng = make_rng(seed, "dqn-init");
        net_.init(obs_dim_, cfg_.hidden, n_actions_, rng);
        target_ = net_;
        velocity_.assign(net_.w.size(), 0.0);
        learn_rng_.seed(child_seed(seed, "dqn-learn"));
        replay_.clear();
        write_pos_ = 0;
        step_count_ = 0;
    }

    Action select_action(const Observation& obs, long long step, Rng& rng) override {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        if (unif(rng) < epsilon_at(step)) {
            std::uniform_int_distribution<int> pick(0, n_actions_ - 1);
            return Action::from_index(pick(rng));
        }
        Vec h1, h2, y;
        net_.forward(obs.features, h1, h2, y);
        int best = 0;
        for (int a = 1; a < n_actions_; ++a)
            if (y[a] > y[best]) best = a;
        return Action::from_index(best);
    }

    void learn(const Observation& obs, const Action& a, double reward, const Observation& next,
               bool terminal) override {
        push_replay({obs.features, a.index, reward, next.features, terminal});
        step_count_ += 1;
        if (step_count_ >= cfg_.learn_start &&
            static_cast<long long>(replay_.size()) >= cfg_.batch_size) {
            train_batch();
        }
        if (step_count_ % cfg_.target_sync == 0) target_ = net_;
    }

  private:
    struct Transition {
        Vec s;
        int a;
        double r;
        Vec next;
        bool terminal;
    };

    void push_replay(Transition t) {
        if (static_cast<long long>(replay_.size()) < cfg_.replay_capacity) {
            replay_.push_back(std::move(t));
        } else {
            replay_[write_pos_] = std::move(t);
            write_pos_ = (write_pos_ + 1) % cfg_.replay_capacity;
        }
    }

    void train_batch() {
        grad_.assign(net_.w.size(), 0.0);
        std::uniform_int_distribution<std::size_t> pick(0, replay_.size() - 1);
        for (int b = 0; b < cfg_.batch_size; ++b) {
            const Transition& t = replay_[pick(learn_rng_)];
            double target = t.r;
            if (!t.terminal) target += cfg_.discount * target_.q_max(t.next);
            net_.backward(t.s, t.a, target, grad_);
        }
        const double scale = cfg_.learning_rate / cfg_.batch_size;
        for (std::size_t i = 0; i < net_.w.size(); ++i) {
            velocity_[i] = cfg_.momentum * velocity_[i] - scale * grad_[i];
            net_.w[i] += velocity_[i];
        }
    }

    int obs_dim_;
    int n_actions_;
    MlpNet net_;
    MlpNet target_;
    Vec velocity_;
    Vec grad_;
    std::vector<Transition> replay_;
    std::size_t write_pos_ = 0;
    long long step_count_ = 0;
    Rng learn_rng_{0x9e3779b97f4a7c15ULL};
};

// ---------------------------------------------------------------------------
// Cross-entropy method over a linear Box policy.
// ---------------------------------------------------------------------------

class CemAgent final : public Agent {
  public:
    CemAgent(AgentConfig cfg, int obs_dim, ActionSpace space)
        : cfg_(std::move(cfg)), obs_dim_(obs_dim), space_(std::move(space)) {
        dim_ = static_cast<std::size_t>(space_.dim()) * (obs_dim_ + 1);
        mean_.assign(dim_, 0.0);
        stddev_.assign(dim_, cfg_.sigma);
    }

    Policy greedy_policy() const override { return Policy::parametric(mean_, "linear"); }

    TrainingTrace train(SimEnv& env, AttackSession* attack, std::uint64_t seed,
                        const Policy* reference, std::vector<Policy>* snapshots) override {
        Rng rng = make_rng(seed, "agent");
        const std::uint64_t eval_base = child_seed(seed, "eval");
        TrainingTrace trace;

        auto evaluate = [&](long long epoch) {
            double v = evaluate_policy(env, greedy_policy(), cfg_.eval_episodes,
                                       mix64(eval_base + static_cast<std::uint64_t>(epoch)));
            trace.per_epoch_eval.emplace_back(epoch, v);
            if (snapshots) snapshots->push_back(greedy_policy());
        };
        if (cfg_.train_steps == 0) {
            evaluate(0);
            trace.best_value = trace.per_epoch_eval.front().second;
            return trace;
        }

        long long steps = 0;
        long long next_epoch_at = cfg_.epoch_length;
        long long epoch_index = 0;
        EpochTracker epoch;
        EpochTracker overall;
        const int n_elite = std::max(1, static_cast<int>(cfg_.population * cfg_.elite_frac));

        while (steps < cfg_.train_steps) {
            std::vector<Vec> samples(cfg_.population);
            Vec scores(cfg_.population, 0.0);
            for (int k = 0; k < cfg_.population && steps < cfg_.train_steps; ++k) {
                samples[k].assign(dim_, 0.0);
                for (std::size_t i = 0; i < dim_; ++i)
                    samples[k][i] = mean_[i] + stddev_[i] * std::normal_distribution<double>()(rng);
                Policy candidate = Policy::parametric(samples[k], "linear");

                Observation obs = env.reset();
                if (attack) attack->begin_episode();
                double observed_return = 0.0;
                while (steps < cfg_.train_steps) {
                    Action a = Action::from_vec(candidate.act_box(obs.features, space_));
                    StepOutcome out = env.step(a);
                    double observed = out.reward;
                    if (attack) {
                        observed += attack->perturb(obs, a, out.reward);
                        const SessionRecord& rec = attack->log().back();
                        if (rec.delta_applied != 0.0) { epoch.applied += 1; overall.applied += 1; }
                        if (rec.delta_proposed != 0.0) { epoch.proposed += 1; overall.proposed += 1; }
                    }
                    if (reference) {
                        Action ref_a = policy_action(*reference, obs, space_);
                        const double d = action_distance(a, ref_a, space_);
                        epoch.suboptimal_sum += d;
                        overall.suboptimal_sum += d;
                    }
                    observed_return += observed;
                    steps += 1;
                    epoch.steps += 1;
                    overall.steps += 1;

                    if (steps >= next_epoch_at || steps == cfg_.train_steps) {
                        epoch_index += 1;
                        evaluate(epoch_index);
                        trace.per_epoch_attack_rate.emplace_back(
                            epoch_index, static_cast<double>(epoch.applied) / epoch.steps);
                        trace.per_epoch_proposed_rate.emplace_back(
                            epoch_index, static_cast<double>(epoch.proposed) / epoch.steps);
                        if (reference)
                            trace.suboptimal_action_rate.emplace_back(
                                epoch_index, epoch.suboptimal_sum / epoch.steps);
                        epoch = EpochTracker{};
                        next_epoch_at += cfg_.epoch_length;
                    }
                    if (out.done) break;
                    obs = out.next_observation;
                }
                scores[k] = observed_return;
            }
            if (steps >= cfg_.train_steps) break;  // partial population: skip the update

            std::vector<int> order(cfg_.population);
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(),
                             [&](int a, int b) { return scores[a] > scores[b]; });
            Vec new_mean(dim_, 0.0), new_sq(dim_, 0.0);
            for (int e = 0; e < n_elite; ++e)
                for (std::size_t i = 0; i < dim_; ++i) new_mean[i] += samples[order[e]][i];
            for (std::size_t i = 0; i < dim_; ++i) new_mean[i] /= n_elite;
            for (int e = 0; e < n_elite; ++e)
                for (std::size_t i = 0; i < dim_; ++i) {
                    double d = samples[order[e]][i] - new_mean[i];
                    new_sq[i] += d * d;
                }
            mean_ = new_mean;
            for (std::size_t i = 0; i < dim_; ++i)
                stddev_[i] = std::max(0.05, std::sqrt(new_sq[i] / n_elite));
        }
        trace.steps_run = steps;
        trace.overall_attack_rate = static_cast<double>(overall.applied) / overall.steps;
        trace.overall_proposed_rate = static_cast<double>(overall.proposed) / overall.steps;
        if (reference) trace.overall_suboptimal_rate = overall.suboptimal_sum / overall.steps;
        trace.best_value = trace.per_epoch_eval.front().second;
        for (const auto& [e, v] : trace.per_epoch_eval) trace.best_value = std::max(trace.best_value, v);
        return trace;
    }

  private:
    AgentConfig cfg_;
    int obs_dim_;
    ActionSpace space_;
    std::size_t dim_ = 0;
    Vec mean_;
    Vec stddev_;
};

} // namespace

std::unique_ptr<Agent> make_agent(const AgentConfig& cfg, const SimEnv& env) {
    cfg.validate();
    switch (cfg.kind) {
        case AgentConfig::Kind::TabularQ: {
            if (env.n_states() < 1)
                throw ConfigError("TabularQ needs a tabular environment");
            if (env.action_space().kind != ActionSpace::Kind::Discrete)
                throw ConfigError("TabularQ needs discrete actions");
            return std::make_unique<TabularQAgent>(cfg, env.n_states(), env.action_space().n);
        }
        case AgentConfig::Kind::Dqn: {
            if (env.action_space().kind != ActionSpace::Kind::Discrete)
                throw ConfigError("Dqn needs discrete actions");
            if (env.n_states() >= 0)
                throw ConfigError("Dqn expects feature observations, not state indices");
            return std::make_unique<DqnAgent>(cfg, env.observation_dim(), env.action_space().n);
        }
        case AgentConfig::Kind::CemContinuous: {
            if (env.action_space().kind != ActionSpace::Kind::Box)
                throw ConfigError("CemContinuous needs a Box action space");
            return std::make_unique<CemAgent>(cfg, env.observation_dim(), env.action_space());
        }
    }
    throw ConfigError("unknown agent kind");
}

double evaluate_policy(const SimEnv& env_proto, const Policy& pi, int episodes,
                       std::uint64_t seed) {
    std::unique_ptr<SimEnv> env = env_proto.clone();
    env->seed(seed);
    double total = 0.0;
    for (int e = 0; e < episodes; ++e) total += rollout_return(*env, pi);
    return total / episodes;
}

} // namespace poisonlab
