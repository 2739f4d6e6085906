#ifndef SGSP_ON_SGSP_HPP
#define SGSP_ON_SGSP_HPP

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sgsp/game.hpp"
#include "sgsp/math.hpp"
#include "sgsp/off_sgsp.hpp"
#include "sgsp/trace.hpp"

namespace sgsp {

/// Generative-model interface for the online algorithms. Implementations
/// own any hidden state (e.g. the true joint position behind an aggregated
/// observation); learners only ever see observation indices.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual int n_agents() const = 0;
  virtual int n_states() const = 0;  // observation space size
  virtual int num_actions(int agent, int state) const = 0;
  virtual double discount() const = 0;
  virtual int reset(Rng& rng) = 0;
  virtual std::pair<int, std::vector<double>> step(const std::vector<int>& joint_action,
                                                   Rng& rng) = 0;
  /// Optional scalar diagnostic of the current hidden state (e.g. inter-agent
  /// distance); empty name means none.
  virtual std::string metric_name() const { return {}; }
  virtual double metric() const { return 0.0; }
};

/// Tabular environment over an explicit StochasticGame, uniform random
/// initial state. An optional state metric is reported to the trace.
class GameEnvironment : public Environment {
 public:
  explicit GameEnvironment(StochasticGame game, std::string metric_name = {},
                           std::vector<double> state_metric = {})
      : game_(std::move(game)),
        metric_name_(std::move(metric_name)),
        state_metric_(std::move(state_metric)) {}

  int n_agents() const override { return game_.n_agents(); }
  int n_states() const override { return game_.n_states(); }
  int num_actions(int agent, int state) const override {
    return game_.num_actions(agent, state);
  }
  double discount() const override { return game_.discount(); }
  int reset(Rng& rng) override {
    std::uniform_int_distribution<int> d(0, game_.n_states() - 1);
    state_ = d(rng);
    return state_;
  }
  std::pair<int, std::vector<double>> step(const std::vector<int>& joint_action,
                                           Rng& rng) override {
    auto [y, r] = game_.sample_step(state_, joint_action, rng);
    state_ = y;
    return {y, std::move(r)};
  }
  std::string metric_name() const override { return metric_name_; }
  double metric() const override {
    return state_metric_.empty() ? 0.0 : state_metric_[state_];
  }
  const StochasticGame& game() const { return game_; }

 private:
  StochasticGame game_;
  int state_ = 0;
  std::string metric_name_;
  std::vector<double> state_metric_;
};

/// One decentralized learner: local value estimates for all agents, the
/// gradient surrogate xi over own (state, action) pairs, and the own policy
/// rows. Updates read only the broadcast transition tuple.
class AgentLearner {
 public:
  AgentLearner(int agent_id, const Environment& env)
      : agent_id_(agent_id),
        n_agents_(env.n_agents()),
        discount_(env.discount()) {
    const int S = env.n_states();
    values_.assign(n_agents_, std::vector<double>(S, 0.0));
    xi_.resize(S);
    policy_.resize(S);
    for (int x = 0; x < S; ++x) {
      const int m = env.num_actions(agent_id_, x);
      xi_[x].assign(m, 0.0);
      policy_[x].assign(m, 1.0 / m);
    }
  }

  int agent_id() const { return agent_id_; }
  const std::vector<double>& policy_row(int x) const { return policy_[x]; }
  std::vector<double>& policy_row(int x) { return policy_[x]; }
  double value(int agent, int x) const { return values_[agent][x]; }
  void set_value(int agent, int x, double v) { values_[agent][x] = v; }
  double xi(int x, int a) const { return xi_[x][a]; }
  const std::vector<std::vector<double>>& policy() const { return policy_; }

  /// Samples an action from the (possibly delta-offset) own policy row.
  int act(int x, Rng& rng, double delta_explore) const {
    const auto& row = policy_[x];
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(rng);
    if (delta_explore > 0.0) {
      const double norm = 1.0 + delta_explore * row.size();
      double acc = 0.0;
      for (int a = 0; a < static_cast<int>(row.size()); ++a) {
        acc += (row[a] + delta_explore) / norm;
        if (u < acc) return a;
      }
    } else {
      double acc = 0.0;
      for (int a = 0; a < static_cast<int>(row.size()); ++a) {
        acc += row[a];
        if (u < acc) return a;
      }
    }
    return static_cast<int>(row.size()) - 1;
  }

  /// Applies the value, gradient-estimate, and policy updates in order for
  /// one observed transition. freeze_policy keeps pi fixed (b_n treated as 0).
  void observe(int x, const std::vector<int>& joint_action,
               const std::vector<double>& rewards, int y, double b_n, double c_n,
               const SgspConfig& config, bool freeze_policy = false) {
    const int a_i = joint_action[agent_id_];
    // TD errors from the pre-update values.
    std::vector<double> td(n_agents_);
    double td_sum = 0.0;
    for (int j = 0; j < n_agents_; ++j) {
      td[j] = rewards[j] + discount_ * values_[j][y] - values_[j][x];
      td_sum += td[j];
    }
    for (int j = 0; j < n_agents_; ++j) values_[j][x] += c_n * td[j];
    xi_[x][a_i] += c_n * (td_sum - xi_[x][a_i]);
    if (!std::isfinite(values_[agent_id_][x]) || !std::isfinite(xi_[x][a_i]))
      throw NumericalError("ON-SGSP estimate diverged");
    if (freeze_policy || b_n == 0.0) return;
    auto& row = policy_[x];
    const double p = row[a_i];
    if (p > 0.0) {
      double step = b_n * std::pow(p, config.alpha_prime) *
                    std::abs(td[agent_id_]) * bsgn(-xi_[x][a_i], config.nu);
      // Any single-coordinate step of magnitude >= 2 projects to the same
      // point as a step of exactly 2, and the clamp keeps the row within the
      // range where the projection is numerically exact.
      row[a_i] -= std::clamp(step, -2.0, 2.0);
    }
    row = project_simplex(std::move(row));
  }

 private:
  int agent_id_;
  int n_agents_;
  double discount_;
  std::vector<std::vector<double>> values_;  // [agent][state]
  std::vector<std::vector<double>> xi_;      // [state][own action]
  std::vector<std::vector<double>> policy_;  // [state][own action]
};

struct SelfPlayResult {
  std::vector<AgentLearner> agents;
  RunTrace trace;
  int final_state = 0;
};

/// Synchronous self-play driver: all agents observe the same transition
/// tuple each step; schedules are indexed by the global step counter.
class SelfPlayDriver {
 public:
  SelfPlayDriver(Environment& env, SgspConfig config, uint64_t seed)
      : env_(env), config_(std::move(config)), rng_(seed) {
    config_.validate();
    for (int i = 0; i < env.n_agents(); ++i) agents_.emplace_back(i, env);
  }

  std::vector<AgentLearner>& agents() { return agents_; }
  Rng& rng() { return rng_; }

  SelfPlayResult run(long long max_steps, bool freeze_policy = false) {
    SelfPlayResult res;
    res.trace.metadata["rng"] = kRngId;
    int x = env_.reset(rng_);
    const int N = env_.n_agents();
    std::vector<int> joint(N);
    const std::string metric = env_.metric_name();
    double metric_acc = 0.0;
    long long metric_count = 0;
    std::vector<std::vector<std::vector<double>>> prev_policies = snapshot_policies();
    for (long long n = 1; n <= max_steps; ++n) {
      const bool in_window =
          config_.perturb_delta > 0.0 &&
          (n % config_.perturb_period) < config_.explore_window;
      const double delta = in_window ? config_.perturb_delta : 0.0;
      for (int i = 0; i < N; ++i) joint[i] = agents_[i].act(x, rng_, delta);
      auto [y, rewards] = env_.step(joint, rng_);
      const double b_n = config_.step_b(n);
      const double c_n = config_.step_c(n);
      for (int i = 0; i < N; ++i)
        agents_[i].observe(x, joint, rewards, y, b_n, c_n, config_, freeze_policy);
      if (!metric.empty()) {
        metric_acc += env_.metric();
        ++metric_count;
      }
      x = y;
      if (n % config_.snapshot_every == 0 || n == max_steps) {
        if (metric_count > 0) {
          res.trace.record(n, metric, metric_acc / metric_count);
          metric_acc = 0.0;
          metric_count = 0;
        }
        auto cur = snapshot_policies();
        res.trace.record(n, "policy_delta", max_policy_delta(prev_policies, cur));
        prev_policies = std::move(cur);
      }
    }
    res.final_state = x;
    res.agents = agents_;
    return res;
  }

 private:
  std::vector<std::vector<std::vector<double>>> snapshot_policies() const {
    std::vector<std::vector<std::vector<double>>> snap;
    for (const auto& ag : agents_) snap.push_back(ag.policy());
    return snap;
  }

  static double max_policy_delta(
      const std::vector<std::vector<std::vector<double>>>& a,
      const std::vector<std::vector<std::vector<double>>>& b) {
    double d = 0.0;
    for (size_t i = 0; i < a.size(); ++i)
      for (size_t x = 0; x < a[i].size(); ++x)
        for (size_t k = 0; k < a[i][x].size(); ++k)
          d = std::max(d, std::abs(a[i][x][k] - b[i][x][k]));
    return d;
  }

  Environment& env_;
  SgspConfig config_;
  Rng rng_;
  std::vector<AgentLearner> agents_;
};

}  // namespace sgsp

#endif  // SGSP_ON_SGSP_HPP
