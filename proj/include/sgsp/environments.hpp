#ifndef SGSP_ENVIRONMENTS_HPP
#define SGSP_ENVIRONMENTS_HPP

#include <array>
#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "sgsp/game.hpp"
#include "sgsp/on_sgsp.hpp"

namespace sgsp {

/// Single-state two-player 3x3 game. Payoffs (player1, player2) by
/// (row action, column action); pure NE at (a3, a3), mixed NE at
/// ((0.5, 0.5, 0), (0.5, 0.5, 0)).
inline StochasticGame build_hart_game(double beta) {
  static constexpr double kPayoffs[3][3][2] = {
      {{1, 0}, {0, 1}, {1, 0}},
      {{0, 1}, {1, 0}, {1, 0}},
      {{0, 1}, {0, 1}, {1, 1}},
  };
  StochasticGame game(2, 1, beta, {{3}, {3}});
  const std::vector<double> self_loop{1.0};
  for (int a1 = 0; a1 < 3; ++a1)
    for (int a2 = 0; a2 < 3; ++a2) {
      const int j = a1 * 3 + a2;
      game.set_transition(0, j, self_loop);
      const std::array<double, 2> r{kPayoffs[a1][a2][0], kPayoffs[a1][a2][1]};
      game.set_reward(0, j, r);
    }
  game.validate();
  return game;
}

/// Grid helpers for the Stick-Together Game. A position is p = px * M + py;
/// a joint state is p1 * M^2 + p2. Action offsets are listed in a fixed
/// order; per-state action sets keep only the on-grid moves.
namespace stg {

inline constexpr std::array<std::array<int, 2>, 5> kOffsets{
    {{0, 0}, {0, 1}, {0, -1}, {1, 0}, {-1, 0}}};

inline bool on_grid(int px, int py, int M) {
  return px >= 0 && px < M && py >= 0 && py < M;
}

inline std::vector<int> feasible_moves(int pos, int M) {
  const int px = pos / M, py = pos % M;
  std::vector<int> moves;
  for (int k = 0; k < 5; ++k)
    if (on_grid(px + kOffsets[k][0], py + kOffsets[k][1], M)) moves.push_back(k);
  return moves;
}

/// q(s'|s,a) over the on-grid one-step neighborhood of s, weighted
/// 2^{-L1 distance from s' to the action's target cell}.
inline std::vector<std::pair<int, double>> move_kernel(int pos, int move, int M) {
  const int px = pos / M, py = pos % M;
  const int tx = px + kOffsets[move][0], ty = py + kOffsets[move][1];
  std::vector<std::pair<int, double>> out;
  double norm = 0.0;
  for (int k = 0; k < 5; ++k) {
    const int nx = px + kOffsets[k][0], ny = py + kOffsets[k][1];
    if (!on_grid(nx, ny, M)) continue;
    const double w = std::pow(2.0, -(std::abs(nx - tx) + std::abs(ny - ty)));
    out.emplace_back(nx * M + ny, w);
    norm += w;
  }
  for (auto& e : out) e.second /= norm;
  return out;
}

inline int l1_distance(int p1, int p2, int M) {
  return std::abs(p1 / M - p2 / M) + std::abs(p1 % M - p2 % M);
}

inline double reward_at_distance(int d) { return 1.0 - std::exp(double(d)); }

}  // namespace stg

/// Materializes the STG as an explicit StochasticGame. Both agents receive
/// the identical reward 1 - e^{L1 distance}; per-agent kernels multiply into
/// the joint transition. Intended for small M (|S| = M^4).
inline StochasticGame build_stg(int M, double beta) {
  if (M < 2) throw ConfigError("build_stg: M must be >= 2");
  const int P = M * M;
  const int S = P * P;
  std::vector<std::vector<int>> n_actions(2, std::vector<int>(S));
  std::vector<std::vector<int>> moves1(S), moves2(S);
  for (int s = 0; s < S; ++s) {
    moves1[s] = stg::feasible_moves(s / P, M);
    moves2[s] = stg::feasible_moves(s % P, M);
    n_actions[0][s] = static_cast<int>(moves1[s].size());
    n_actions[1][s] = static_cast<int>(moves2[s].size());
  }
  StochasticGame game(2, S, beta, n_actions);
  for (int s = 0; s < S; ++s) {
    const int p1 = s / P, p2 = s % P;
    const double r = stg::reward_at_distance(stg::l1_distance(p1, p2, M));
    const std::array<double, 2> rv{r, r};
    const int m2 = n_actions[1][s];
    for (int a1 = 0; a1 < n_actions[0][s]; ++a1) {
      const auto k1 = stg::move_kernel(p1, moves1[s][a1], M);
      for (int a2 = 0; a2 < m2; ++a2) {
        const auto k2 = stg::move_kernel(p2, moves2[s][a2], M);
        std::vector<TransitionEntry> row;
        row.reserve(k1.size() * k2.size());
        for (const auto& [q1, w1] : k1)
          for (const auto& [q2, w2] : k2)
            row.push_back({q1 * P + q2, w1 * w2});
        const int j = a1 * m2 + a2;
        game.set_transition_sparse(s, j, std::move(row));
        game.set_reward(s, j, rv);
      }
    }
  }
  game.validate();
  return game;
}

/// Builds a GameEnvironment over the explicit STG with the inter-agent
/// distance exposed as the trace metric.
inline GameEnvironment build_stg_env(int M, double beta) {
  const int P = M * M;
  StochasticGame game = build_stg(M, beta);
  std::vector<double> dist(game.n_states());
  for (int s = 0; s < game.n_states(); ++s)
    dist[s] = stg::l1_distance(s / P, s % P, M);
  return GameEnvironment(std::move(game), "distance", std::move(dist));
}

/// STG with learners observing only the coordinate-wise position difference
/// Delta = (|x1-x2|, |y1-y2|), |W_Delta| = M^2. The true joint position
/// evolves underneath; all 5 actions are always presented, with off-grid
/// moves remapped to stay.
class DeltaStgEnv : public Environment {
 public:
  DeltaStgEnv(int M, double beta) : M_(M), beta_(beta) {
    if (M < 2) throw ConfigError("DeltaStgEnv: M must be >= 2");
  }

  int n_agents() const override { return 2; }
  int n_states() const override { return M_ * M_; }
  int num_actions(int, int) const override { return 5; }
  double discount() const override { return beta_; }

  int reset(Rng& rng) override {
    std::uniform_int_distribution<int> d(0, M_ * M_ - 1);
    p1_ = d(rng);
    p2_ = d(rng);
    return delta_index();
  }

  std::pair<int, std::vector<double>> step(const std::vector<int>& joint_action,
                                           Rng& rng) override {
    p1_ = sample_move(p1_, joint_action[0], rng);
    p2_ = sample_move(p2_, joint_action[1], rng);
    const double r = stg::reward_at_distance(stg::l1_distance(p1_, p2_, M_));
    return {delta_index(), {r, r}};
  }

  std::string metric_name() const override { return "distance"; }
  double metric() const override { return stg::l1_distance(p1_, p2_, M_); }

  int delta_index() const {
    const int dx = std::abs(p1_ / M_ - p2_ / M_);
    const int dy = std::abs(p1_ % M_ - p2_ % M_);
    return dx * M_ + dy;
  }

  static int delta_index_of(int p1, int p2, int M) {
    return std::abs(p1 / M - p2 / M) * M + std::abs(p1 % M - p2 % M);
  }

 private:
  int sample_move(int pos, int move, Rng& rng) {
    const int px = pos / M_, py = pos % M_;
    if (!stg::on_grid(px + stg::kOffsets[move][0], py + stg::kOffsets[move][1], M_))
      move = 0;  // off-grid moves act as stay
    const auto kernel = stg::move_kernel(pos, move, M_);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(rng), acc = 0.0;
    for (const auto& [next, p] : kernel) {
      acc += p;
      if (u < acc) return next;
    }
    return kernel.back().first;
  }

  int M_;
  double beta_;
  int p1_ = 0;
  int p2_ = 0;
};

/// Mean L1 inter-agent distance over a window of visited joint states.
inline double avg_distance(const std::vector<int>& joint_states, int M) {
  if (joint_states.empty()) throw GameError("avg_distance: empty window");
  const int P = M * M;
  double sum = 0.0;
  for (int s : joint_states) sum += stg::l1_distance(s / P, s % P, M);
  return sum / joint_states.size();
}

}  // namespace sgsp

#endif  // SGSP_ENVIRONMENTS_HPP
