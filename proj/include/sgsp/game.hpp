#ifndef SGSP_GAME_HPP
#define SGSP_GAME_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgsp {

// Seedable generator used everywhere; the identifier is recorded in run
// metadata so traces can be reproduced.
using Rng = std::mt19937_64;
inline constexpr const char* kRngId = "mt19937_64";

struct GameError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TransitionEntry {
  int next_state;
  double prob;
};

/// Finite discounted N-player stochastic game with dense per-state tables
/// indexed by joint-action index. Joint actions are enumerated in row-major
/// agent order (agent 0 most significant). Immutable after validate().
class StochasticGame {
 public:
  StochasticGame(int n_agents, int n_states, double discount,
                 std::vector<std::vector<int>> n_actions)
      : n_agents_(n_agents),
        n_states_(n_states),
        discount_(discount),
        n_actions_(std::move(n_actions)) {
    if (n_agents_ < 1) throw GameError("n_agents must be positive");
    if (n_states_ < 1) throw GameError("n_states must be positive");
    if (!(discount_ > 0.0 && discount_ < 1.0))
      throw GameError("discount must lie strictly inside (0,1)");
    if (static_cast<int>(n_actions_.size()) != n_agents_)
      throw GameError("n_actions agent dimension mismatch");
    for (const auto& per_state : n_actions_) {
      if (static_cast<int>(per_state.size()) != n_states_)
        throw GameError("n_actions state dimension mismatch");
      for (int m : per_state)
        if (m < 1) throw GameError("every state needs at least one action per agent");
    }
    joint_counts_.resize(n_states_);
    for (int x = 0; x < n_states_; ++x) {
      long long c = 1;
      for (int i = 0; i < n_agents_; ++i) c *= n_actions_[i][x];
      joint_counts_[x] = static_cast<int>(c);
    }
    transitions_.resize(n_states_);
    rewards_.resize(n_states_);
    for (int x = 0; x < n_states_; ++x) {
      transitions_[x].resize(joint_counts_[x]);
      rewards_[x].assign(static_cast<size_t>(joint_counts_[x]) * n_agents_, 0.0);
    }
  }

  int n_agents() const { return n_agents_; }
  int n_states() const { return n_states_; }
  double discount() const { return discount_; }
  int num_actions(int agent, int state) const { return n_actions_[agent][state]; }
  int joint_count(int state) const { return joint_counts_[state]; }

  int joint_index(int state, std::span<const int> actions) const {
    int idx = 0;
    for (int i = 0; i < n_agents_; ++i) {
      const int m = n_actions_[i][state];
      if (actions[i] < 0 || actions[i] >= m)
        throw GameError("infeasible action for agent " + std::to_string(i));
      idx = idx * m + actions[i];
    }
    return idx;
  }

  void decode_joint(int state, int joint, std::span<int> actions) const {
    for (int i = n_agents_ - 1; i >= 0; --i) {
      const int m = n_actions_[i][state];
      actions[i] = joint % m;
      joint /= m;
    }
  }

  void set_transition(int state, int joint, std::span<const double> dense_row) {
    std::vector<TransitionEntry> row;
    for (int y = 0; y < n_states_; ++y)
      if (dense_row[y] != 0.0) row.push_back({y, dense_row[y]});
    transitions_[state][joint] = std::move(row);
  }

  void set_transition_sparse(int state, int joint, std::vector<TransitionEntry> row) {
    transitions_[state][joint] = std::move(row);
  }

  void set_reward(int state, int joint, std::span<const double> r) {
    for (int i = 0; i < n_agents_; ++i)
      rewards_[state][static_cast<size_t>(joint) * n_agents_ + i] = r[i];
  }

  const std::vector<TransitionEntry>& transition_row(int state, int joint) const {
    return transitions_[state][joint];
  }

  std::span<const double> reward(int state, int joint) const {
    return {rewards_[state].data() + static_cast<size_t>(joint) * n_agents_,
            static_cast<size_t>(n_agents_)};
  }

  double reward(int state, int joint, int agent) const {
    return rewards_[state][static_cast<size_t>(joint) * n_agents_ + agent];
  }

  double max_abs_reward() const {
    double m = 0.0;
    for (const auto& rs : rewards_)
      for (double r : rs) m = std::max(m, std::abs(r));
    return m;
  }

  /// Checks every transition row is a probability distribution (sum within
  /// 1e-12 of 1, nonnegative entries).
  void validate() const {
    for (int x = 0; x < n_states_; ++x) {
      for (int j = 0; j < joint_counts_[x]; ++j) {
        const auto& row = transitions_[x][j];
        if (row.empty())
          throw GameError("missing transition row at state " + std::to_string(x));
        double sum = 0.0;
        for (const auto& e : row) {
          if (e.prob < 0.0) throw GameError("negative transition probability");
          if (e.next_state < 0 || e.next_state >= n_states_)
            throw GameError("transition to out-of-range state");
          sum += e.prob;
        }
        if (std::abs(sum - 1.0) > 1e-12)
          throw GameError("transition row does not sum to 1 at state " +
                          std::to_string(x) + " joint " + std::to_string(j));
      }
    }
  }

  /// Draws the next state from p(.|x,a); reward vector is returned exactly.
  std::pair<int, std::vector<double>> sample_step(int state,
                                                  std::span<const int> joint_action,
                                                  Rng& rng) const {
    const int j = joint_index(state, joint_action);
    const auto& row = transitions_[state][j];
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    double acc = 0.0;
    int next = row.back().next_state;
    for (const auto& e : row) {
      acc += e.prob;
      if (u < acc) {
        next = e.next_state;
        break;
      }
    }
    auto r = reward(state, j);
    return {next, std::vector<double>(r.begin(), r.end())};
  }

 private:
  int n_agents_;
  int n_states_;
  double discount_;
  std::vector<std::vector<int>> n_actions_;                      // [agent][state]
  std::vector<int> joint_counts_;                                // [state]
  std::vector<std::vector<std::vector<TransitionEntry>>> transitions_;  // [state][joint]
  std::vector<std::vector<double>> rewards_;                     // [state][joint*N+agent]
};

/// Per-agent, per-state distributions over own actions.
class PolicyProfile {
 public:
  PolicyProfile() = default;

  static PolicyProfile uniform(const StochasticGame& game) {
    PolicyProfile pi;
    pi.rows_.resize(game.n_agents());
    for (int i = 0; i < game.n_agents(); ++i) {
      pi.rows_[i].resize(game.n_states());
      for (int x = 0; x < game.n_states(); ++x) {
        const int m = game.num_actions(i, x);
        pi.rows_[i][x].assign(m, 1.0 / m);
      }
    }
    return pi;
  }

  static PolicyProfile deterministic(const StochasticGame& game,
                                     const std::vector<std::vector<int>>& choice) {
    PolicyProfile pi = uniform(game);
    for (int i = 0; i < game.n_agents(); ++i)
      for (int x = 0; x < game.n_states(); ++x) {
        auto& row = pi.rows_[i][x];
        std::fill(row.begin(), row.end(), 0.0);
        row.at(choice[i][x]) = 1.0;
      }
    return pi;
  }

  double prob(int agent, int state, int action) const {
    return rows_[agent][state][action];
  }
  std::vector<double>& row(int agent, int state) { return rows_[agent][state]; }
  const std::vector<double>& row(int agent, int state) const {
    return rows_[agent][state];
  }
  int n_agents() const { return static_cast<int>(rows_.size()); }

  void validate(const StochasticGame& game, double tol = 1e-9) const {
    if (n_agents() != game.n_agents())
      throw GameError("policy agent count mismatch");
    for (int i = 0; i < game.n_agents(); ++i) {
      if (static_cast<int>(rows_[i].size()) != game.n_states())
        throw GameError("policy state count mismatch");
      for (int x = 0; x < game.n_states(); ++x) {
        const auto& row = rows_[i][x];
        if (static_cast<int>(row.size()) != game.num_actions(i, x))
          throw GameError("policy action count mismatch");
        double sum = 0.0;
        for (double p : row) {
          if (p < -tol || p > 1.0 + tol) throw GameError("policy entry outside [0,1]");
          sum += p;
        }
        if (std::abs(sum - 1.0) > tol)
          throw GameError("policy row does not sum to 1");
      }
    }
  }

 private:
  std::vector<std::vector<std::vector<double>>> rows_;  // [agent][state][action]
};

/// Per-agent, per-state scalar value estimates.
class ValueProfile {
 public:
  ValueProfile() = default;
  ValueProfile(int n_agents, int n_states)
      : values_(n_agents, std::vector<double>(n_states, 0.0)) {}

  static ValueProfile zeros(const StochasticGame& game) {
    return ValueProfile(game.n_agents(), game.n_states());
  }

  double value(int agent, int state) const { return values_[agent][state]; }
  double& value(int agent, int state) { return values_[agent][state]; }
  const std::vector<double>& agent_values(int agent) const { return values_[agent]; }
  std::vector<double>& agent_values(int agent) { return values_[agent]; }
  int n_agents() const { return static_cast<int>(values_.size()); }

  bool all_finite() const {
    for (const auto& vs : values_)
      for (double v : vs)
        if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  std::vector<std::vector<double>> values_;  // [agent][state]
};

/// Policy-induced Markov chain P_pi and expected reward vectors R_pi.
struct InducedChain {
  std::vector<double> P;                 // row-major n_states x n_states
  std::vector<std::vector<double>> R;    // [agent][state]
};

inline InducedChain induced_chain(const StochasticGame& game,
                                  const PolicyProfile& pi) {
  pi.validate(game);
  const int S = game.n_states();
  const int N = game.n_agents();
  InducedChain out;
  out.P.assign(static_cast<size_t>(S) * S, 0.0);
  out.R.assign(N, std::vector<double>(S, 0.0));
  std::vector<int> a(N);
  for (int x = 0; x < S; ++x) {
    for (int j = 0; j < game.joint_count(x); ++j) {
      game.decode_joint(x, j, a);
      double w = 1.0;
      for (int i = 0; i < N; ++i) w *= pi.prob(i, x, a[i]);
      if (w == 0.0) continue;
      for (const auto& e : game.transition_row(x, j))
        out.P[static_cast<size_t>(x) * S + e.next_state] += w * e.prob;
      const auto r = game.reward(x, j);
      for (int i = 0; i < N; ++i) out.R[i][x] += w * r[i];
    }
  }
  return out;
}

/// Closed-form policy values: solves (I - beta P_pi) v^i = R^i_pi per agent
/// by LU with partial pivoting. Nonsingular for beta < 1.
inline ValueProfile exact_value(const StochasticGame& game,
                                const PolicyProfile& pi) {
  const int S = game.n_states();
  const int N = game.n_agents();
  const InducedChain chain = induced_chain(game, pi);
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(S, S);
  for (int x = 0; x < S; ++x)
    for (int y = 0; y < S; ++y)
      A(x, y) -= game.discount() * chain.P[static_cast<size_t>(x) * S + y];
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  ValueProfile v(N, S);
  for (int i = 0; i < N; ++i) {
    Eigen::VectorXd r(S);
    for (int x = 0; x < S; ++x) r(x) = chain.R[i][x];
    Eigen::VectorXd sol = lu.solve(r);
    const double residual = (A * sol - r).lpNorm<Eigen::Infinity>();
    if (residual > 1e-10)
      throw NumericalError("exact_value residual " + std::to_string(residual));
    for (int x = 0; x < S; ++x) v.value(i, x) = sol(x);
  }
  return v;
}

/// Q^i_{pi^{-i}}(x, a_i): expected one-step return of playing a_i while the
/// other agents follow pi.
inline double q_value(const StochasticGame& game, const ValueProfile& v,
                      const PolicyProfile& pi, int agent, int x, int a_i) {
  const int N = game.n_agents();
  std::vector<int> a(N);
  double q = 0.0;
  for (int j = 0; j < game.joint_count(x); ++j) {
    game.decode_joint(x, j, a);
    if (a[agent] != a_i) continue;
    double w = 1.0;
    for (int k = 0; k < N; ++k)
      if (k != agent) w *= pi.prob(k, x, a[k]);
    if (w == 0.0) continue;
    double next = 0.0;
    for (const auto& e : game.transition_row(x, j))
      next += e.prob * v.value(agent, e.next_state);
    q += w * (game.reward(x, j, agent) + game.discount() * next);
  }
  return q;
}

inline double bellman_error(const StochasticGame& game, const ValueProfile& v,
                            const PolicyProfile& pi, int agent, int x, int a_i) {
  return q_value(game, v, pi, agent, x, a_i) - v.value(agent, x);
}

}  // namespace sgsp

#endif  // SGSP_GAME_HPP
