#ifndef SGSP_MATH_HPP
#define SGSP_MATH_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "sgsp/game.hpp"

namespace sgsp {

/// Continuous extension of sgn(): +-1 outside [-nu, nu], linear x/nu inside.
inline double bsgn(double x, double nu) {
  if (nu <= 0.0) throw ConfigError("bsgn width nu must be positive");
  if (x > nu) return 1.0;
  if (x < -nu) return -1.0;
  return x / nu;
}

/// Euclidean projection onto the probability simplex.
inline std::vector<double> project_simplex(std::vector<double> w) {
  if (w.empty()) throw GameError("project_simplex: empty vector");
  std::vector<double> sorted = w;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumsum = 0.0;
  double tau = 0.0;
  int k = 0;
  for (int j = 0; j < static_cast<int>(sorted.size()); ++j) {
    cumsum += sorted[j];
    const double t = (cumsum - 1.0) / (j + 1);
    if (sorted[j] - t > 0.0) {
      tau = t;
      k = j + 1;
    }
  }
  (void)k;
  for (double& x : w) x = std::max(x - tau, 0.0);
  return w;
}

/// Cross Bellman error g^j_{x,a_i}: agent j's reward and value, marginalized
/// over all agents except the pivot agent i whose action is held at a_i.
inline double cross_bellman(const StochasticGame& game, const ValueProfile& v,
                            const PolicyProfile& pi, int pivot_agent, int x,
                            int a_i, int payoff_agent) {
  const int N = game.n_agents();
  std::vector<int> a(N);
  double acc = 0.0;
  for (int j = 0; j < game.joint_count(x); ++j) {
    game.decode_joint(x, j, a);
    if (a[pivot_agent] != a_i) continue;
    double w = 1.0;
    for (int k = 0; k < N; ++k)
      if (k != pivot_agent) w *= pi.prob(k, x, a[k]);
    if (w == 0.0) continue;
    double next = 0.0;
    for (const auto& e : game.transition_row(x, j))
      next += e.prob * v.value(payoff_agent, e.next_state);
    acc += w * (game.reward(x, j, payoff_agent) + game.discount() * next);
  }
  return acc - v.value(payoff_agent, x);
}

/// Aggregate objective f(v, pi) = sum_i sum_x sum_{a_i} pi * (-g).
inline double objective_f(const StochasticGame& game, const ValueProfile& v,
                          const PolicyProfile& pi) {
  double f = 0.0;
  for (int i = 0; i < game.n_agents(); ++i)
    for (int x = 0; x < game.n_states(); ++x)
      for (int a = 0; a < game.num_actions(i, x); ++a) {
        const double p = pi.prob(i, x, a);
        if (p == 0.0) continue;
        f += p * -bellman_error(game, v, pi, i, x, a);
      }
  return f;
}

/// Max violation of the feasibility constraints: pi >= 0, rows sum to 1,
/// Bellman errors nonpositive.
inline double feasibility(const StochasticGame& game, const ValueProfile& v,
                          const PolicyProfile& pi) {
  double worst = 0.0;
  for (int i = 0; i < game.n_agents(); ++i)
    for (int x = 0; x < game.n_states(); ++x) {
      double sum = 0.0;
      for (int a = 0; a < game.num_actions(i, x); ++a) {
        const double p = pi.prob(i, x, a);
        worst = std::max(worst, -p);
        sum += p;
        worst = std::max(worst, bellman_error(game, v, pi, i, x, a));
      }
      worst = std::max(worst, std::abs(sum - 1.0));
    }
  return worst;
}

/// df/dpi^i(x, a_i) = -sum_j g^j_{x,a_i}.
inline double grad_f(const StochasticGame& game, const ValueProfile& v,
                     const PolicyProfile& pi, int agent, int x, int a_i) {
  double g_sum = 0.0;
  for (int j = 0; j < game.n_agents(); ++j)
    g_sum += cross_bellman(game, v, pi, agent, x, a_i, j);
  return -g_sum;
}

struct SgspEntry {
  int agent;
  int state;
  int action;
  double g;
  double pi;
};

/// Certificate data for the complementarity conditions pi * g = 0 over all
/// (agent, state, action) coordinates plus feasibility of the program.
struct SgspReport {
  double objective = 0.0;
  double max_constraint_violation = 0.0;
  double max_sgsp_violation = 0.0;
  double tol = 0.0;
  bool certified = false;
  std::vector<SgspEntry> per_entry;
};

inline SgspReport sgsp_check(const StochasticGame& game, const ValueProfile& v,
                             const PolicyProfile& pi, double tol) {
  if (tol <= 0.0) throw ConfigError("sgsp_check: tol must be positive");
  SgspReport rep;
  rep.tol = tol;
  rep.objective = 0.0;
  for (int i = 0; i < game.n_agents(); ++i)
    for (int x = 0; x < game.n_states(); ++x) {
      for (int a = 0; a < game.num_actions(i, x); ++a) {
        const double p = pi.prob(i, x, a);
        const double g = bellman_error(game, v, pi, i, x, a);
        rep.per_entry.push_back({i, x, a, g, p});
        rep.objective += p * -g;
        rep.max_sgsp_violation = std::max(rep.max_sgsp_violation, std::abs(p * g));
      }
    }
  rep.max_constraint_violation = feasibility(game, v, pi);
  rep.certified = rep.max_constraint_violation <= tol && rep.max_sgsp_violation <= tol;
  return rep;
}

/// Per-coordinate policy decrement -(pi^alpha') * |g| * bsgn(grad f).
inline double descent_direction(const StochasticGame& game, const ValueProfile& v,
                                const PolicyProfile& pi, int agent, int x, int a_i,
                                double alpha_prime, double nu) {
  const double p = pi.prob(agent, x, a_i);
  if (p == 0.0) return 0.0;
  const double g = cross_bellman(game, v, pi, agent, x, a_i, agent);
  if (g == 0.0) return 0.0;
  const double grad = grad_f(game, v, pi, agent, x, a_i);
  return -std::pow(p, alpha_prime) * std::abs(g) * bsgn(grad, nu);
}

/// Batched evaluation of all Bellman errors and objective gradients at
/// (v, pi). One pass over joint actions per state; used by the OFF-SGSP
/// sweeps where per-coordinate calls would repeat the same expectations.
struct StageEvaluation {
  // g[agent][state][action], grad[agent][state][action]
  std::vector<std::vector<std::vector<double>>> g;
  std::vector<std::vector<std::vector<double>>> grad;
};

inline StageEvaluation evaluate_stage(const StochasticGame& game,
                                      const ValueProfile& v,
                                      const PolicyProfile& pi) {
  const int N = game.n_agents();
  const int S = game.n_states();
  StageEvaluation ev;
  ev.g.resize(N);
  ev.grad.resize(N);
  for (int i = 0; i < N; ++i) {
    ev.g[i].resize(S);
    ev.grad[i].resize(S);
    for (int x = 0; x < S; ++x) {
      ev.g[i][x].assign(game.num_actions(i, x), 0.0);
      ev.grad[i][x].assign(game.num_actions(i, x), 0.0);
    }
  }
  std::vector<int> a(N);
  std::vector<double> probs(N), excl(N), t(N), prefix(N + 1), suffix(N + 1);
  for (int x = 0; x < S; ++x) {
    // gsum[i][a_i] accumulates sum_j of the marginalized Q-like terms with
    // agent i's action pinned; g and grad are read off afterwards.
    std::vector<std::vector<double>> gsum(N), gown(N);
    for (int i = 0; i < N; ++i) {
      gsum[i].assign(game.num_actions(i, x), 0.0);
      gown[i].assign(game.num_actions(i, x), 0.0);
    }
    for (int j = 0; j < game.joint_count(x); ++j) {
      game.decode_joint(x, j, a);
      for (int i = 0; i < N; ++i) probs[i] = pi.prob(i, x, a[i]);
      prefix[0] = 1.0;
      for (int i = 0; i < N; ++i) prefix[i + 1] = prefix[i] * probs[i];
      suffix[N] = 1.0;
      for (int i = N - 1; i >= 0; --i) suffix[i] = suffix[i + 1] * probs[i];
      bool any = false;
      for (int i = 0; i < N; ++i) {
        excl[i] = prefix[i] * suffix[i + 1];
        if (excl[i] != 0.0) any = true;
      }
      if (!any) continue;
      for (int p = 0; p < N; ++p) {
        double next = 0.0;
        for (const auto& e : game.transition_row(x, j))
          next += e.prob * v.value(p, e.next_state);
        t[p] = game.reward(x, j, p) + game.discount() * next;
      }
      double tsum = 0.0;
      for (int p = 0; p < N; ++p) tsum += t[p];
      for (int i = 0; i < N; ++i) {
        if (excl[i] == 0.0) continue;
        gsum[i][a[i]] += excl[i] * tsum;
        gown[i][a[i]] += excl[i] * t[i];
      }
    }
    double vsum = 0.0;
    for (int p = 0; p < N; ++p) vsum += v.value(p, x);
    for (int i = 0; i < N; ++i)
      for (int ai = 0; ai < game.num_actions(i, x); ++ai) {
        ev.g[i][x][ai] = gown[i][ai] - v.value(i, x);
        ev.grad[i][x][ai] = -(gsum[i][ai] - vsum);
      }
  }
  return ev;
}

}  // namespace sgsp

#endif  // SGSP_MATH_HPP
