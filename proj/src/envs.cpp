#include "poisonlab/envs.hpp"

#include <cmath>

namespace poisonlab {

using Json = nlohmann::json;

EnvSpec EnvSpec::from_json(const Json& j) {
    EnvSpec spec;
    if (!j.is_object() || !j.contains("id"))
        throw ConfigError("env spec needs an \"id\" field");
    spec.id = j.at("id").get<std::string>();
    spec.params = j;
    return spec;
}

Json EnvSpec::to_json() const { return params.is_null() ? Json{{"id", id}} : params; }

// ---------------------------------------------------------------------------
// Gridworld maze
// ---------------------------------------------------------------------------

GridworldLayout GridworldLayout::parse(const std::vector<std::string>& map) {
    GridworldLayout g;
    g.map = map;
    g.rows = static_cast<int>(map.size());
    if (g.rows == 0) throw ConfigError("gridworld map is empty");
    g.cols = static_cast<int>(map[0].size());
    for (const std::string& row : map)
        if (static_cast<int>(row.size()) != g.cols)
            throw ConfigError("gridworld map rows have unequal lengths");

    g.state_of_cell.assign(g.rows * g.cols, -1);
    for (int r = 0; r < g.rows; ++r) {
        for (int c = 0; c < g.cols; ++c) {
            char ch = map[r][c];
            if (ch == '#') continue;
            if (ch != 'S' && ch != 'E' && ch != '.' && ch != ' ')
                throw ConfigError(std::string("gridworld map has unknown cell '") + ch + "'");
            int cell = r * g.cols + c;
            g.state_of_cell[cell] = static_cast<int>(g.cell_of_state.size());
            g.cell_of_state.push_back(cell);
            if (ch == 'S') {
                if (g.start_cell >= 0) throw ConfigError("gridworld map has two starts");
                g.start_cell = g.state_of_cell[cell];
            } else if (ch == 'E') {
                if (g.exit_cell >= 0) throw ConfigError("gridworld map has two exits");
                g.exit_cell = g.state_of_cell[cell];
            }
        }
    }
    if (g.start_cell < 0) throw ConfigError("gridworld map has no start 'S'");
    if (g.exit_cell < 0) throw ConfigError("gridworld map has no exit 'E'");
    return g;
}

namespace {

constexpr int kGridDr[4] = {-1, 1, 0, 0};
constexpr int kGridDc[4] = {0, 0, -1, 1};

class GridworldEnv final : public SimEnv {
  public:
    GridworldEnv(GridworldLayout layout, int horizon, std::uint64_t seed)
        : layout_(std::move(layout)),
          horizon_(horizon),
          space_(ActionSpace::discrete(4)),
          rng_(seed),
          seed_(seed) {
        if (horizon_ < 1) throw ConfigError("gridworld horizon must be >= 1");
    }

    Observation reset() override {
        state_ = layout_.start_cell;
        steps_ = 0;
        Observation o;
        o.index = state_;
        return o;
    }

    StepOutcome step(const Action& a) override {
        if (!a.is_discrete() || a.index < 0 || a.index >= 4)
            throw ConfigError("gridworld expects a discrete action in [0, 4)");
        const int cell = layout_.cell_of_state[state_];
        const int r = cell / layout_.cols, c = cell % layout_.cols;
        const int nr = r + kGridDr[a.index], nc = c + kGridDc[a.index];
        int next = state_;
        if (nr >= 0 && nr < layout_.rows && nc >= 0 && nc < layout_.cols) {
            int idx = layout_.state_of_cell[nr * layout_.cols + nc];
            if (idx >= 0) next = idx;
        }
        state_ = next;
        steps_ += 1;
        StepOutcome out;
        out.next_observation.index = state_;
        out.reward = -1.0;
        out.step_index = steps_;
        const bool at_exit = state_ == layout_.exit_cell;
        out.truncated = !at_exit && steps_ >= horizon_;
        out.done = at_exit || out.truncated;
        return out;
    }

    std::string id() const override { return "gridworld"; }
    const ActionSpace& action_space() const override { return space_; }
    int horizon_cap() const override { return horizon_; }
    int observation_dim() const override { return layout_.n_open(); }
    int n_states() const override { return layout_.n_open(); }
    void seed(std::uint64_t s) override {
        seed_ = s;
        rng_.seed(s);
    }
    std::unique_ptr<SimEnv> clone() const override {
        return std::make_unique<GridworldEnv>(layout_, horizon_, seed_);
    }

    const GridworldLayout& layout() const { return layout_; }

  private:
    GridworldLayout layout_;
    int horizon_;
    ActionSpace space_;
    Rng rng_;
    std::uint64_t seed_;
    int state_ = 0;
    int steps_ = 0;
};

// ---------------------------------------------------------------------------
// Chain: n decision states in a row, then a terminal sink. Both actions
// advance one state, so every policy runs exactly n steps; the "correct"
// action (state index mod 2) pays 1, the other 0.
// ---------------------------------------------------------------------------

class ChainEnv final : public SimEnv {
  public:
    ChainEnv(int n, std::uint64_t seed) : n_(n), space_(ActionSpace::discrete(2)), seed_(seed) {
        if (n_ < 1) throw ConfigError("chain needs n >= 1");
    }

    Observation reset() override {
        state_ = 0;
        steps_ = 0;
        Observation o;
        o.index = 0;
        return o;
    }

    StepOutcome step(const Action& a) override {
        if (!a.is_discrete() || a.index < 0 || a.index >= 2)
            throw ConfigError("chain expects a discrete action in [0, 2)");
        StepOutcome out;
        out.reward = a.index == state_ % 2 ? 1.0 : 0.0;
        state_ += 1;
        steps_ += 1;
        out.next_observation.index = state_;
        out.step_index = steps_;
        out.done = state_ >= n_;
        out.truncated = false;
        return out;
    }

    std::string id() const override { return "chain"; }
    const ActionSpace& action_space() const override { return space_; }
    int horizon_cap() const override { return n_; }
    int observation_dim() const override { return n_ + 1; }
    int n_states() const override { return n_ + 1; }
    void seed(std::uint64_t s) override { seed_ = s; }
    std::unique_ptr<SimEnv> clone() const override { return std::make_unique<ChainEnv>(n_, seed_); }

    int length() const { return n_; }

  private:
    int n_;
    ActionSpace space_;
    std::uint64_t seed_;
    int state_ = 0;
    int steps_ = 0;
};

// ---------------------------------------------------------------------------
// CartPole, standard classic-control dynamics and reward convention:
// +1 per step, episode ends when the pole or cart leaves bounds, cap 500.
// ---------------------------------------------------------------------------

class CartPoleEnv final : public SimEnv {
  public:
    static constexpr double kGravity = 9.8;
    static constexpr double kMassCart = 1.0;
    static constexpr double kMassPole = 0.1;
    static constexpr double kTotalMass = kMassCart + kMassPole;
    static constexpr double kLength = 0.5;  // half pole length
    static constexpr double kPoleMassLength = kMassPole * kLength;
    static constexpr double kForceMag = 10.0;
    static constexpr double kTau = 0.02;
    static constexpr double kThetaThreshold = 12.0 * 2.0 * M_PI / 360.0;
    static constexpr double kXThreshold = 2.4;
    static constexpr int kCap = 500;

    explicit CartPoleEnv(std::uint64_t seed) : space_(ActionSpace::discrete(2)), rng_(seed), seed_(seed) {}

    Observation reset() override {
        std::uniform_real_distribution<double> init(-0.05, 0.05);
        for (double& x : state_) x = init(rng_);
        steps_ = 0;
        return obs();
    }

    StepOutcome step(const Action& a) override {
        if (!a.is_discrete() || a.index < 0 || a.index >= 2)
            throw ConfigError("cartpole expects a discrete action in [0, 2)");
        const double force = a.index == 1 ? kForceMag : -kForceMag;
        const double cos_t = std::cos(state_[2]);
        const double sin_t = std::sin(state_[2]);
        const double temp =
            (force + kPoleMassLength * state_[3] * state_[3] * sin_t) / kTotalMass;
        const double theta_acc =
            (kGravity * sin_t - cos_t * temp) /
            (kLength * (4.0 / 3.0 - kMassPole * cos_t * cos_t / kTotalMass));
        const double x_acc = temp - kPoleMassLength * theta_acc * cos_t / kTotalMass;

        state_[0] += kTau * state_[1];
        state_[1] += kTau * x_acc;
        state_[2] += kTau * state_[3];
        state_[3] += kTau * theta_acc;
        steps_ += 1;

        const bool failed = std::abs(state_[0]) > kXThreshold || std::abs(state_[2]) > kThetaThreshold;
        StepOutcome out;
        out.next_observation = obs();
        out.reward = 1.0;
        out.step_index = steps_;
        out.truncated = !failed && steps_ >= kCap;
        out.done = failed || out.truncated;
        return out;
    }

    std::string id() const override { return "cartpole"; }
    const ActionSpace& action_space() const override { return space_; }
    int horizon_cap() const override { return kCap; }
    int observation_dim() const override { return 4; }
    void seed(std::uint64_t s) override {
        seed_ = s;
        rng_.seed(s);
    }
    std::unique_ptr<SimEnv> clone() const override { return std::make_unique<CartPoleEnv>(seed_); }

  private:
    Observation obs() const {
        Observation o;
        o.features = {state_[0], state_[1], state_[2], state_[3]};
        return o;
    }

    ActionSpace space_;
    Rng rng_;
    std::uint64_t seed_;
    double state_[4] = {0, 0, 0, 0};
    int steps_ = 0;
};

// ---------------------------------------------------------------------------
// MountainCar, standard dynamics: -1 per step, goal at x >= 0.5, cap 200.
// ---------------------------------------------------------------------------

class MountainCarEnv final : public SimEnv {
  public:
    static constexpr double kMinPos = -1.2;
    static constexpr double kMaxPos = 0.6;
    static constexpr double kMaxSpeed = 0.07;
    static constexpr double kGoalPos = 0.5;
    static constexpr double kForce = 0.001;
    static constexpr double kGravity = 0.0025;
    static constexpr int kCap = 200;

    explicit MountainCarEnv(std::uint64_t seed)
        : space_(ActionSpace::discrete(3)), rng_(seed), seed_(seed) {}

    Observation reset() override {
        std::uniform_real_distribution<double> init(-0.6, -0.4);
        pos_ = init(rng_);
        vel_ = 0.0;
        steps_ = 0;
        return obs();
    }

    StepOutcome step(const Action& a) override {
        if (!a.is_discrete() || a.index < 0 || a.index >= 3)
            throw ConfigError("mountaincar expects a discrete action in [0, 3)");
        vel_ += (a.index - 1) * kForce - std::cos(3.0 * pos_) * kGravity;
        vel_ = std::clamp(vel_, -kMaxSpeed, kMaxSpeed);
        pos_ += vel_;
        pos_ = std::clamp(pos_, kMinPos, kMaxPos);
        if (pos_ <= kMinPos && vel_ < 0.0) vel_ = 0.0;
        steps_ += 1;

        const bool at_goal = pos_ >= kGoalPos;
        StepOutcome out;
        out.next_observation = obs();
        out.reward = -1.0;
        out.step_index = steps_;
        out.truncated = !at_goal && steps_ >= kCap;
        out.done = at_goal || out.truncated;
        return out;
    }

    std::string id() const override { return "mountaincar"; }
    const ActionSpace& action_space() const override { return space_; }
    int horizon_cap() const override { return kCap; }
    int observation_dim() const override { return 2; }
    void seed(std::uint64_t s) override {
        seed_ = s;
        rng_.seed(s);
    }
    std::unique_ptr<SimEnv> clone() const override { return std::make_unique<MountainCarEnv>(seed_); }

  private:
    Observation obs() const {
        Observation o;
        o.features = {pos_, vel_};
        return o;
    }

    ActionSpace space_;
    Rng rng_;
    std::uint64_t seed_;
    double pos_ = 0.0, vel_ = 0.0;
    int steps_ = 0;
};

// ---------------------------------------------------------------------------
// Point mass: 2-D position on [-1, 1]^2, Box velocity action in [-1, 1]^2,
// reward -distance-to-goal per step, terminates inside the goal radius.
// Exercises the continuous branch of the action metric.
// ---------------------------------------------------------------------------

class PointMassEnv final : public SimEnv {
  public:
    static constexpr double kStepScale = 0.1;
    static constexpr double kGoalRadius = 0.15;
    static constexpr int kCap = 100;

    explicit PointMassEnv(std::uint64_t seed)
        : space_(ActionSpace::box({-1.0, -1.0}, {1.0, 1.0})), seed_(seed) {}

    Observation reset() override {
        x_ = -0.8;
        y_ = -0.8;
        steps_ = 0;
        return obs();
    }

    StepOutcome step(const Action& a) override {
        if (a.is_discrete() || a.box.size() != 2)
            throw ConfigError("pointmass expects a 2-d Box action");
        const double ax = std::clamp(a.box[0], -1.0, 1.0);
        const double ay = std::clamp(a.box[1], -1.0, 1.0);
        x_ = std::clamp(x_ + kStepScale * ax, -1.0, 1.0);
        y_ = std::clamp(y_ + kStepScale * ay, -1.0, 1.0);
        steps_ += 1;

        const double dist = std::hypot(x_ - kGoalX, y_ - kGoalY);
        StepOutcome out;
        out.next_observation = obs();
        out.reward = -dist;
        out.step_index = steps_;
        const bool at_goal = dist < kGoalRadius;
        out.truncated = !at_goal && steps_ >= kCap;
        out.done = at_goal || out.truncated;
        return out;
    }

    std::string id() const override { return "pointmass"; }
    const ActionSpace& action_space() const override { return space_; }
    int horizon_cap() const override { return kCap; }
    int observation_dim() const override { return 2; }
    void seed(std::uint64_t s) override { seed_ = s; }
    std::unique_ptr<SimEnv> clone() const override { return std::make_unique<PointMassEnv>(seed_); }

  private:
    static constexpr double kGoalX = 0.8;
    static constexpr double kGoalY = 0.8;

    Observation obs() const {
        Observation o;
        o.features = {x_, y_};
        return o;
    }

    ActionSpace space_;
    std::uint64_t seed_;
    double x_ = 0.0, y_ = 0.0;
    int steps_ = 0;
};

// ---------------------------------------------------------------------------
// Generic tabular wrapper: samples transitions and gaussian reward noise.
// ---------------------------------------------------------------------------

class TabularEnv final : public SimEnv {
  public:
    TabularEnv(TabularMdp mdp, std::uint64_t seed)
        : mdp_(std::move(mdp)),
          space_(mdp_.n_actions >= 2 ? ActionSpace::discrete(mdp_.n_actions) : one_action_space()),
          rng_(seed),
          seed_(seed) {
        mdp_.validate();
    }

    Observation reset() override {
        std::discrete_distribution<int> init(mdp_.initial_dist.begin(), mdp_.initial_dist.end());
        state_ = init(rng_);
        steps_ = 0;
        Observation o;
        o.index = state_;
        return o;
    }

    StepOutcome step(const Action& a) override {
        if (!a.is_discrete() || a.index < 0 || a.index >= mdp_.n_actions)
            throw ConfigError("tabular env expects a discrete action in range");
        StepOutcome out;
        double r = mdp_.expected_reward[state_][a.index];
        const double noise = mdp_.reward_noise_std[state_][a.index];
        if (noise > 0.0) r += std::normal_distribution<double>(0.0, noise)(rng_);
        const Vec& row = mdp_.transition[state_][a.index];
        std::discrete_distribution<int> next(row.begin(), row.end());
        state_ = next(rng_);
        steps_ += 1;
        out.next_observation.index = state_;
        out.reward = r;
        out.step_index = steps_;
        const bool terminal = mdp_.terminal[state_];
        out.truncated = !terminal && steps_ >= mdp_.horizon_cap;
        out.done = terminal || out.truncated;
        return out;
    }

    std::string id() const override { return "tabular"; }
    const ActionSpace& action_space() const override { return space_; }
    int horizon_cap() const override { return mdp_.horizon_cap; }
    int observation_dim() const override { return mdp_.n_states; }
    int n_states() const override { return mdp_.n_states; }
    void seed(std::uint64_t s) override {
        seed_ = s;
        rng_.seed(s);
    }
    std::unique_ptr<SimEnv> clone() const override {
        return std::make_unique<TabularEnv>(mdp_, seed_);
    }

    const TabularMdp& mdp() const { return mdp_; }

  private:
    // Degenerate single-action spaces bypass the n >= 2 rule for wrapping.
    static ActionSpace one_action_space() {
        ActionSpace s;
        s.kind = ActionSpace::Kind::Discrete;
        s.n = 1;
        return s;
    }

    TabularMdp mdp_;
    ActionSpace space_;
    Rng rng_;
    std::uint64_t seed_;
    int state_ = 0;
    int steps_ = 0;
};

} // namespace

std::unique_ptr<SimEnv> make_env(const EnvSpec& spec, std::uint64_t seed) {
    const Json& p = spec.params;
    if (spec.id == "gridworld" || spec.id == "gridworld-maze") {
        if (!p.contains("map")) throw ConfigError("gridworld spec needs a \"map\" block");
        auto layout = GridworldLayout::parse(p.at("map").get<std::vector<std::string>>());
        const int horizon = p.value("horizon", 50);
        return std::make_unique<GridworldEnv>(std::move(layout), horizon, seed);
    }
    if (spec.id == "chain") {
        return std::make_unique<ChainEnv>(p.value("n", 5), seed);
    }
    if (spec.id == "cartpole") return std::make_unique<CartPoleEnv>(seed);
    if (spec.id == "mountaincar") return std::make_unique<MountainCarEnv>(seed);
    if (spec.id == "pointmass") return std::make_unique<PointMassEnv>(seed);
    throw ConfigError("unknown environment id: " + spec.id);
}

TabularMdp to_tabular(const SimEnv& env) {
    if (const auto* grid = dynamic_cast<const GridworldEnv*>(&env)) {
        const GridworldLayout& g = grid->layout();
        const int n = g.n_open();
        TabularMdp mdp;
        mdp.n_states = n;
        mdp.n_actions = 4;
        mdp.horizon_cap = grid->horizon_cap();
        mdp.transition.assign(n, Mat(4, Vec(n, 0.0)));
        mdp.expected_reward.assign(n, Vec(4, 0.0));
        mdp.reward_noise_std.assign(n, Vec(4, 0.0));
        mdp.initial_dist.assign(n, 0.0);
        mdp.initial_dist[g.start_cell] = 1.0;
        mdp.terminal.assign(n, false);
        mdp.terminal[g.exit_cell] = true;
        for (int s = 0; s < n; ++s) {
            const int cell = g.cell_of_state[s];
            const int r = cell / g.cols, c = cell % g.cols;
            for (int a = 0; a < 4; ++a) {
                if (mdp.terminal[s]) {
                    mdp.transition[s][a][s] = 1.0;
                    continue;
                }
                int next = s;
                const int nr = r + kGridDr[a], nc = c + kGridDc[a];
                if (nr >= 0 && nr < g.rows && nc >= 0 && nc < g.cols) {
                    int idx = g.state_of_cell[nr * g.cols + nc];
                    if (idx >= 0) next = idx;
                }
                mdp.transition[s][a][next] = 1.0;
                mdp.expected_reward[s][a] = -1.0;
            }
        }
        mdp.validate();
        return mdp;
    }
    if (const auto* chain = dynamic_cast<const ChainEnv*>(&env)) {
        const int n = chain->length();
        TabularMdp mdp;
        mdp.n_states = n + 1;
        mdp.n_actions = 2;
        mdp.horizon_cap = n;
        mdp.transition.assign(n + 1, Mat(2, Vec(n + 1, 0.0)));
        mdp.expected_reward.assign(n + 1, Vec(2, 0.0));
        mdp.reward_noise_std.assign(n + 1, Vec(2, 0.0));
        mdp.initial_dist.assign(n + 1, 0.0);
        mdp.initial_dist[0] = 1.0;
        mdp.terminal.assign(n + 1, false);
        mdp.terminal[n] = true;
        for (int s = 0; s < n; ++s) {
            for (int a = 0; a < 2; ++a) {
                mdp.transition[s][a][s + 1] = 1.0;
                mdp.expected_reward[s][a] = a == s % 2 ? 1.0 : 0.0;
            }
        }
        for (int a = 0; a < 2; ++a) mdp.transition[n][a][n] = 1.0;
        mdp.validate();
        return mdp;
    }
    if (const auto* tab = dynamic_cast<const TabularEnv*>(&env)) return tab->mdp();
    throw UnsupportedError("cannot tabularize environment '" + env.id() + "'");
}

std::unique_ptr<SimEnv> make_tabular_env(TabularMdp mdp, std::uint64_t seed) {
    return std::make_unique<TabularEnv>(std::move(mdp), seed);
}

} // namespace poisonlab
