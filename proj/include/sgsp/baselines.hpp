#ifndef SGSP_BASELINES_HPP
#define SGSP_BASELINES_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "sgsp/game.hpp"
#include "sgsp/on_sgsp.hpp"
#include "sgsp/trace.hpp"

namespace sgsp {

using Matrix = std::vector<std::vector<double>>;

struct BimatrixSolution {
  std::vector<double> row;
  std::vector<double> col;
  double row_value = 0.0;
  double col_value = 0.0;
};

namespace detail {

inline bool verify_bimatrix(const Matrix& A, const Matrix& B,
                            const std::vector<double>& x,
                            const std::vector<double>& y, double tol,
                            double& u, double& w) {
  const int m = static_cast<int>(A.size());
  const int k = static_cast<int>(A[0].size());
  u = 0.0;
  w = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < k; ++j) {
      u += x[i] * A[i][j] * y[j];
      w += x[i] * B[i][j] * y[j];
    }
  for (int i = 0; i < m; ++i) {
    double payoff = 0.0;
    for (int j = 0; j < k; ++j) payoff += A[i][j] * y[j];
    if (payoff > u + tol) return false;
  }
  for (int j = 0; j < k; ++j) {
    double payoff = 0.0;
    for (int i = 0; i < m; ++i) payoff += x[i] * B[i][j];
    if (payoff > w + tol) return false;
  }
  return true;
}

/// Solves for a mixed strategy of the column player making the row player
/// indifferent across support I, as a least-squares system; returns false if
/// the result is not a distribution over J.
inline bool solve_support(const Matrix& A, const std::vector<int>& I,
                          const std::vector<int>& J, std::vector<double>& y_out,
                          int k_total) {
  const int nI = static_cast<int>(I.size());
  const int nJ = static_cast<int>(J.size());
  // Unknowns: y over J plus the common payoff u.
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nI + 1, nJ + 1);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nI + 1);
  for (int r = 0; r < nI; ++r) {
    for (int c = 0; c < nJ; ++c) M(r, c) = A[I[r]][J[c]];
    M(r, nJ) = -1.0;
  }
  for (int c = 0; c < nJ; ++c) M(nI, c) = 1.0;
  rhs(nI) = 1.0;
  Eigen::VectorXd sol = M.colPivHouseholderQr().solve(rhs);
  if ((M * sol - rhs).lpNorm<Eigen::Infinity>() > 1e-9) return false;
  y_out.assign(k_total, 0.0);
  for (int c = 0; c < nJ; ++c) {
    if (sol(c) < -1e-9) return false;
    y_out[J[c]] = std::max(sol(c), 0.0);
  }
  double s = 0.0;
  for (double v : y_out) s += v;
  if (std::abs(s - 1.0) > 1e-9) return false;
  for (double& v : y_out) v /= s;
  return true;
}

inline void enumerate_supports(int n, int size, std::vector<std::vector<int>>& out) {
  std::vector<int> cur(size);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == size) {
      out.push_back(cur);
      return;
    }
    for (int i = start; i <= n - (size - depth); ++i) {
      cur[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
}

}  // namespace detail

/// One Nash equilibrium of the bimatrix game (A for the row player, B for the
/// column player) by support enumeration in increasing support size with
/// lexicographic tie-break. Best-response conditions are verified to 1e-9
/// before returning.
inline BimatrixSolution bimatrix_nash(const Matrix& A, const Matrix& B) {
  const int m = static_cast<int>(A.size());
  const int k = static_cast<int>(A[0].size());
  const int max_size = std::max(m, k);
  std::vector<std::vector<std::vector<int>>> row_supports(max_size + 1),
      col_supports(max_size + 1);
  for (int s = 1; s <= m; ++s) detail::enumerate_supports(m, s, row_supports[s]);
  for (int s = 1; s <= k; ++s) detail::enumerate_supports(k, s, col_supports[s]);
  for (int total = 2; total <= m + k; ++total) {
    for (int si = 1; si <= std::min(m, total - 1); ++si) {
      const int sj = total - si;
      if (sj < 1 || sj > k) continue;
      for (const auto& I : row_supports[si]) {
        for (const auto& J : col_supports[sj]) {
          std::vector<double> x, y;
          if (si == 1 && sj == 1) {
            x.assign(m, 0.0);
            y.assign(k, 0.0);
            x[I[0]] = 1.0;
            y[J[0]] = 1.0;
          } else {
            if (!detail::solve_support(A, I, J, y, k)) continue;
            // Row strategy makes the column player indifferent over J;
            // transpose B to reuse the solver.
            Matrix Bt(k, std::vector<double>(m));
            for (int i = 0; i < m; ++i)
              for (int j = 0; j < k; ++j) Bt[j][i] = B[i][j];
            if (!detail::solve_support(Bt, J, I, x, m)) continue;
          }
          double u, w;
          if (detail::verify_bimatrix(A, B, x, y, 1e-9, u, w))
            return {x, y, u, w};
        }
      }
    }
  }
  throw NumericalError("bimatrix_nash: no verified support found");
}

struct BaselineResult {
  std::vector<std::vector<std::vector<double>>> policies;  // [agent][state][action]
  RunTrace trace;
};

namespace detail {

/// Shared decaying epsilon-greedy: base epsilon over sqrt of state visits.
inline double explore_eps(double eps0, long long visits) {
  return eps0 / std::sqrt(static_cast<double>(std::max<long long>(visits, 1)));
}

template <typename PolicyAt>
void record_policy_snapshot(const Environment& env, PolicyAt&& policy_at,
                            std::vector<std::vector<std::vector<double>>>& prev,
                            RunTrace& trace, long long n) {
  std::vector<std::vector<std::vector<double>>> cur(env.n_agents());
  for (int i = 0; i < env.n_agents(); ++i) {
    cur[i].resize(env.n_states());
    for (int x = 0; x < env.n_states(); ++x) cur[i][x] = policy_at(i, x);
  }
  double d = 0.0;
  if (!prev.empty())
    for (size_t i = 0; i < cur.size(); ++i)
      for (size_t x = 0; x < cur[i].size(); ++x)
        for (size_t a = 0; a < cur[i][x].size(); ++a)
          d = std::max(d, std::abs(cur[i][x][a] - prev[i][x][a]));
  trace.record(n, "policy_delta", d);
  prev = std::move(cur);
}

inline int sample_from(const std::vector<double>& dist, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng), acc = 0.0;
  for (int a = 0; a < static_cast<int>(dist.size()); ++a) {
    acc += dist[a];
    if (u < acc) return a;
  }
  return static_cast<int>(dist.size()) - 1;
}

}  // namespace detail

/// NashQ (two players): every step, each agent's Q-table at the next state is
/// solved as a stage bimatrix game and the update backs up that equilibrium
/// value. Equilibrium selection is the first verified support, which makes
/// runs deterministic for a fixed seed.
inline BaselineResult nashq_run(Environment& env, const SgspConfig& config,
                                Rng& rng, long long max_steps) {
  if (env.n_agents() != 2)
    throw ConfigError("nashq_run supports exactly 2 agents");
  const int S = env.n_states();
  // Q[agent][state][a1][a2]
  std::vector<std::vector<Matrix>> Q(2, std::vector<Matrix>(S));
  for (int x = 0; x < S; ++x) {
    const int m = env.num_actions(0, x), k = env.num_actions(1, x);
    Q[0][x].assign(m, std::vector<double>(k, 0.0));
    Q[1][x].assign(m, std::vector<double>(k, 0.0));
  }
  std::vector<long long> visits(S, 0);
  BaselineResult res;
  res.trace.metadata["algorithm"] = "nashq";
  res.trace.metadata["rng"] = kRngId;
  const std::string metric = env.metric_name();
  double metric_acc = 0.0;
  long long metric_count = 0;
  std::vector<std::vector<std::vector<double>>> prev_snapshot;
  auto policy_at = [&](int agent, int x) {
    const BimatrixSolution sol = bimatrix_nash(Q[0][x], Q[1][x]);
    return agent == 0 ? sol.row : sol.col;
  };
  int x = env.reset(rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (long long n = 1; n <= max_steps; ++n) {
    ++visits[x];
    const BimatrixSolution here = bimatrix_nash(Q[0][x], Q[1][x]);
    const double eps = detail::explore_eps(config.epsilon, visits[x]);
    std::vector<int> joint(2);
    joint[0] = unif(rng) < eps
                   ? std::uniform_int_distribution<int>(0, env.num_actions(0, x) - 1)(rng)
                   : detail::sample_from(here.row, rng);
    joint[1] = unif(rng) < eps
                   ? std::uniform_int_distribution<int>(0, env.num_actions(1, x) - 1)(rng)
                   : detail::sample_from(here.col, rng);
    auto [y, r] = env.step(joint, rng);
    const BimatrixSolution next = bimatrix_nash(Q[0][y], Q[1][y]);
    std::array<double, 2> nash_v{0.0, 0.0};
    for (int i = 0; i < env.num_actions(0, y); ++i)
      for (int j = 0; j < env.num_actions(1, y); ++j) {
        const double wxy = next.row[i] * next.col[j];
        nash_v[0] += wxy * Q[0][y][i][j];
        nash_v[1] += wxy * Q[1][y][i][j];
      }
    const double c_n = config.step_c(n);
    for (int ag = 0; ag < 2; ++ag) {
      double& q = Q[ag][x][joint[0]][joint[1]];
      q += c_n * (r[ag] + env.discount() * nash_v[ag] - q);
    }
    if (!metric.empty()) {
      metric_acc += env.metric();
      ++metric_count;
    }
    x = y;
    if (n % config.snapshot_every == 0 || n == max_steps) {
      if (metric_count > 0) {
        res.trace.record(n, metric, metric_acc / metric_count);
        metric_acc = 0.0;
        metric_count = 0;
      }
      detail::record_policy_snapshot(env, policy_at, prev_snapshot, res.trace, n);
    }
  }
  res.policies.resize(2);
  for (int i = 0; i < 2; ++i) {
    res.policies[i].resize(S);
    for (int s = 0; s < S; ++s) res.policies[i][s] = policy_at(i, s);
  }
  return res;
}

/// Friend-Q: each agent backs up the maximum joint-action Q-value at the next
/// state; the greedy policy takes each agent's component of the joint argmax
/// (lexicographic tie-break). With N = 1 this is textbook Q-learning.
inline BaselineResult friendq_run(Environment& env, const SgspConfig& config,
                                  Rng& rng, long long max_steps) {
  const int N = env.n_agents();
  const int S = env.n_states();
  // Flat joint-action Q per agent: Q[agent][state][joint index], joint index
  // in row-major agent order.
  std::vector<std::vector<std::vector<double>>> Q(N);
  std::vector<int> joint_count(S, 1);
  for (int x = 0; x < S; ++x)
    for (int i = 0; i < N; ++i) joint_count[x] *= env.num_actions(i, x);
  for (int i = 0; i < N; ++i) {
    Q[i].resize(S);
    for (int x = 0; x < S; ++x) Q[i][x].assign(joint_count[x], 0.0);
  }
  auto joint_index = [&](int x, const std::vector<int>& a) {
    int idx = 0;
    for (int i = 0; i < N; ++i) idx = idx * env.num_actions(i, x) + a[i];
    return idx;
  };
  auto greedy_joint = [&](int agent, int x) {
    // Lexicographically first argmax of this agent's joint Q at x.
    int best = 0;
    for (int j = 1; j < joint_count[x]; ++j)
      if (Q[agent][x][j] > Q[agent][x][best]) best = j;
    return best;
  };
  auto component = [&](int x, int joint, int agent) {
    for (int i = N - 1; i >= 0; --i) {
      const int m = env.num_actions(i, x);
      if (i == agent) return joint % m;
      joint /= m;
    }
    return 0;
  };
  std::vector<long long> visits(S, 0);
  BaselineResult res;
  res.trace.metadata["algorithm"] = "friendq";
  res.trace.metadata["rng"] = kRngId;
  const std::string metric = env.metric_name();
  double metric_acc = 0.0;
  long long metric_count = 0;
  std::vector<std::vector<std::vector<double>>> prev_snapshot;
  auto policy_at = [&](int agent, int x) {
    std::vector<double> row(env.num_actions(agent, x), 0.0);
    row[component(x, greedy_joint(agent, x), agent)] = 1.0;
    return row;
  };
  int x = env.reset(rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (long long n = 1; n <= max_steps; ++n) {
    ++visits[x];
    const double eps = detail::explore_eps(config.epsilon, visits[x]);
    std::vector<int> joint(N);
    for (int i = 0; i < N; ++i) {
      if (unif(rng) < eps)
        joint[i] = std::uniform_int_distribution<int>(0, env.num_actions(i, x) - 1)(rng);
      else
        joint[i] = component(x, greedy_joint(i, x), i);
    }
    auto [y, r] = env.step(joint, rng);
    const int j = joint_index(x, joint);
    const double c_n = config.step_c(n);
    for (int ag = 0; ag < N; ++ag) {
      double best_next = *std::max_element(Q[ag][y].begin(), Q[ag][y].end());
      double& q = Q[ag][x][j];
      q += c_n * (r[ag] + env.discount() * best_next - q);
    }
    if (!metric.empty()) {
      metric_acc += env.metric();
      ++metric_count;
    }
    x = y;
    if (n % config.snapshot_every == 0 || n == max_steps) {
      if (metric_count > 0) {
        res.trace.record(n, metric, metric_acc / metric_count);
        metric_acc = 0.0;
        metric_count = 0;
      }
      detail::record_policy_snapshot(env, policy_at, prev_snapshot, res.trace, n);
    }
  }
  res.policies.resize(N);
  for (int i = 0; i < N; ++i) {
    res.policies[i].resize(S);
    for (int s = 0; s < S; ++s) res.policies[i][s] = policy_at(i, s);
  }
  return res;
}

}  // namespace sgsp

#endif  // SGSP_BASELINES_HPP
