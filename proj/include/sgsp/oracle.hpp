#ifndef SGSP_ORACLE_HPP
#define SGSP_ORACLE_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sgsp/game.hpp"
#include "sgsp/math.hpp"

namespace sgsp {
namespace oracle {

// Verification routines with their own joint-action enumeration, kept
// separate from the evaluation paths they cross-check.

namespace detail {

/// Iterates all joint actions of a state via an odometer over per-agent
/// action counts, invoking fn(actions).
template <typename Fn>
void for_each_joint(const StochasticGame& game, int x, Fn&& fn) {
  const int N = game.n_agents();
  std::vector<int> a(N, 0);
  while (true) {
    fn(a);
    int k = N - 1;
    while (k >= 0) {
      if (++a[k] < game.num_actions(k, x)) break;
      a[k] = 0;
      --k;
    }
    if (k < 0) break;
  }
}

inline double policy_weight(const PolicyProfile& pi, int x,
                            const std::vector<int>& a, int skip = -1) {
  double w = 1.0;
  for (int i = 0; i < static_cast<int>(a.size()); ++i)
    if (i != skip) w *= pi.prob(i, x, a[i]);
  return w;
}

}  // namespace detail

/// Iterated Bellman operator for a fixed policy; stops when the sup-norm
/// change is at most tol*(1-beta)/beta, giving an error bound of tol.
inline ValueProfile value_iteration_fixed_policy(const StochasticGame& game,
                                                 const PolicyProfile& pi,
                                                 double tol,
                                                 long long max_sweeps) {
  if (tol <= 0.0) throw ConfigError("value_iteration: tol must be positive");
  const int S = game.n_states();
  const int N = game.n_agents();
  const double beta = game.discount();
  ValueProfile v(N, S);
  const double stop = tol * (1.0 - beta) / beta;
  for (long long sweep = 0; sweep < max_sweeps; ++sweep) {
    ValueProfile next(N, S);
    for (int x = 0; x < S; ++x) {
      detail::for_each_joint(game, x, [&](const std::vector<int>& a) {
        const double w = detail::policy_weight(pi, x, a);
        if (w == 0.0) return;
        const int j = game.joint_index(x, a);
        for (int i = 0; i < N; ++i) {
          double e = game.reward(x, j, i);
          for (const auto& t : game.transition_row(x, j))
            e += beta * t.prob * v.value(i, t.next_state);
          next.value(i, x) += w * e;
        }
      });
    }
    double change = 0.0;
    for (int i = 0; i < N; ++i)
      for (int x = 0; x < S; ++x)
        change = std::max(change, std::abs(next.value(i, x) - v.value(i, x)));
    v = std::move(next);
    if (change <= stop) return v;
  }
  throw NumericalError("value_iteration_fixed_policy did not converge");
}

struct BestResponse {
  std::vector<double> value;  // per state, for the responding agent
  std::vector<int> policy;    // deterministic action per state
};

/// Solves the single-agent MDP induced by freezing the opponents at
/// pi_others, by value iteration with greedy extraction (lexicographic ties).
inline BestResponse best_response(const StochasticGame& game, int agent,
                                  const PolicyProfile& pi_others,
                                  double tol = 1e-10,
                                  long long max_sweeps = 1000000) {
  const int S = game.n_states();
  const double beta = game.discount();
  // Marginalize opponents into per-(state, own action) rewards and kernels.
  std::vector<std::vector<double>> r(S);
  std::vector<std::vector<std::vector<double>>> P(S);  // [x][a_i][y] dense
  for (int x = 0; x < S; ++x) {
    const int m = game.num_actions(agent, x);
    r[x].assign(m, 0.0);
    P[x].assign(m, std::vector<double>(S, 0.0));
    detail::for_each_joint(game, x, [&](const std::vector<int>& a) {
      const double w = detail::policy_weight(pi_others, x, a, agent);
      if (w == 0.0) return;
      const int j = game.joint_index(x, a);
      const int ai = a[agent];
      r[x][ai] += w * game.reward(x, j, agent);
      for (const auto& t : game.transition_row(x, j))
        P[x][ai][t.next_state] += w * t.prob;
    });
  }
  std::vector<double> v(S, 0.0);
  const double stop = tol * (1.0 - beta) / beta;
  for (long long sweep = 0; sweep < max_sweeps; ++sweep) {
    std::vector<double> next(S);
    for (int x = 0; x < S; ++x) {
      double best = -std::numeric_limits<double>::infinity();
      for (int ai = 0; ai < game.num_actions(agent, x); ++ai) {
        double q = r[x][ai];
        for (int y = 0; y < S; ++y) q += beta * P[x][ai][y] * v[y];
        best = std::max(best, q);
      }
      next[x] = best;
    }
    double change = 0.0;
    for (int x = 0; x < S; ++x) change = std::max(change, std::abs(next[x] - v[x]));
    v = std::move(next);
    if (change <= stop) break;
    if (sweep + 1 == max_sweeps)
      throw NumericalError("best_response value iteration did not converge");
  }
  BestResponse br;
  br.value = v;
  br.policy.assign(S, 0);
  for (int x = 0; x < S; ++x) {
    double best = -std::numeric_limits<double>::infinity();
    for (int ai = 0; ai < game.num_actions(agent, x); ++ai) {
      double q = r[x][ai];
      for (int y = 0; y < S; ++y) q += beta * P[x][ai][y] * v[y];
      if (q > best + 1e-12) {
        best = q;
        br.policy[x] = ai;
      }
    }
    br.value[x] = best;
  }
  return br;
}

struct NashVerdict {
  bool is_nash;
  double max_gain;
};

/// Checks unilateral-deviation gains: max over agents and states of
/// best-response value minus the policy's own value.
inline NashVerdict is_nash(const StochasticGame& game, const PolicyProfile& pi,
                           double tol) {
  const ValueProfile v =
      value_iteration_fixed_policy(game, pi, 1e-10, 10000000);
  double max_gain = 0.0;
  for (int i = 0; i < game.n_agents(); ++i) {
    const BestResponse br = best_response(game, i, pi);
    for (int x = 0; x < game.n_states(); ++x)
      max_gain = std::max(max_gain, br.value[x] - v.value(i, x));
  }
  return {max_gain <= tol, max_gain};
}

/// Central finite difference of the objective on one raw policy coordinate,
/// without re-projection.
inline double finite_diff_grad(const StochasticGame& game, const ValueProfile& v,
                               const PolicyProfile& pi, int agent, int x, int a_i,
                               double h) {
  if (h <= 0.0) throw ConfigError("finite_diff_grad: h must be positive");
  PolicyProfile plus = pi, minus = pi;
  plus.row(agent, x)[a_i] += h;
  minus.row(agent, x)[a_i] -= h;
  return (objective_f(game, v, plus) - objective_f(game, v, minus)) / (2.0 * h);
}

}  // namespace oracle
}  // namespace sgsp

#endif  // SGSP_ORACLE_HPP
