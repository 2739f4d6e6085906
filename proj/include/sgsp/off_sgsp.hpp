#ifndef SGSP_OFF_SGSP_HPP
#define SGSP_OFF_SGSP_HPP

#include <chrono>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "sgsp/game.hpp"
#include "sgsp/math.hpp"
#include "sgsp/trace.hpp"

namespace sgsp {

/// Shared configuration for both two-timescale algorithms.
///
/// The default schedules keep the policy recursion on the slower timescale
/// (b(n)/c(n) -> 0): constant warm-up for n < 1000, then b(n) = 1/n for the
/// policy and c(n) = 1/n^0.75 for the values. Setting swap_timescales flips
/// the decaying exponents to the literal assignment b = 1/n^0.75, c = 1/n.
struct SgspConfig {
  long long max_iters = 100000;
  double warmup_b = 0.2;
  double warmup_c = 0.1;
  long long warmup_iters = 1000;
  bool swap_timescales = false;
  double nu = 1e-4;               // bsgn width
  double alpha_prime = 0.5;       // policy exponent, >= 0.5
  long long perturb_period = 1000;  // Q
  long long explore_window = 100;   // online perturbation window length
  double perturb_delta = 0.05;
  double convergence_tol = 0.05;
  long long snapshot_every = 100;
  double epsilon = 0.1;           // baseline exploration

  double step_b(long long n) const {
    if (n < warmup_iters) return warmup_b;
    return swap_timescales ? std::pow(static_cast<double>(n), -0.75)
                           : 1.0 / static_cast<double>(n);
  }
  double step_c(long long n) const {
    if (n < warmup_iters) return warmup_c;
    return swap_timescales ? 1.0 / static_cast<double>(n)
                           : std::pow(static_cast<double>(n), -0.75);
  }

  void validate() const {
    if (max_iters < 0) throw ConfigError("max_iters must be nonnegative");
    if (nu <= 0.0) throw ConfigError("nu must be positive");
    if (alpha_prime < 0.5) throw ConfigError("alpha_prime must be >= 0.5");
    if (perturb_period < 1) throw ConfigError("perturb_period must be positive");
    if (perturb_delta < 0.0) throw ConfigError("perturb_delta must be nonnegative");
    if (convergence_tol <= 0.0) throw ConfigError("convergence_tol must be positive");
    if (snapshot_every < 1) throw ConfigError("snapshot_every must be positive");
  }
};

/// delta-offset smoothing: every probability shifted by delta, renormalized.
inline PolicyProfile perturb(const StochasticGame& game, const PolicyProfile& pi,
                             double delta) {
  if (delta < 0.0) throw ConfigError("perturb: delta must be nonnegative");
  PolicyProfile out = pi;
  for (int i = 0; i < game.n_agents(); ++i)
    for (int x = 0; x < game.n_states(); ++x) {
      auto& row = out.row(i, x);
      double sum = 0.0;
      for (double& p : row) {
        p += delta;
        sum += p;
      }
      for (double& p : row) p /= sum;
    }
  return out;
}

/// One synchronous value sweep: v += c_n * E_pi[g] per (agent, state),
/// computed from the pre-step v.
inline ValueProfile critic_step(const StochasticGame& game, const ValueProfile& v,
                                const PolicyProfile& pi, double c_n) {
  const StageEvaluation ev = evaluate_stage(game, v, pi);
  ValueProfile out = v;
  for (int i = 0; i < game.n_agents(); ++i)
    for (int x = 0; x < game.n_states(); ++x) {
      double avg_g = 0.0;
      for (int a = 0; a < game.num_actions(i, x); ++a)
        avg_g += pi.prob(i, x, a) * ev.g[i][x][a];
      out.value(i, x) += c_n * avg_g;
    }
  return out;
}

/// One synchronous policy sweep along the descent direction, projected back
/// onto the simplex per (agent, state).
inline PolicyProfile actor_step(const StochasticGame& game, const ValueProfile& v,
                                const PolicyProfile& pi, double b_n,
                                const SgspConfig& config) {
  const StageEvaluation ev = evaluate_stage(game, v, pi);
  PolicyProfile out = pi;
  for (int i = 0; i < game.n_agents(); ++i)
    for (int x = 0; x < game.n_states(); ++x) {
      std::vector<double> raw = pi.row(i, x);
      for (int a = 0; a < static_cast<int>(raw.size()); ++a) {
        const double p = raw[a];
        if (p == 0.0) continue;
        const double dir = -std::pow(p, config.alpha_prime) *
                           std::abs(ev.g[i][x][a]) *
                           bsgn(ev.grad[i][x][a], config.nu);
        raw[a] += b_n * dir;
      }
      out.row(i, x) = project_simplex(std::move(raw));
    }
  return out;
}

struct OffSgspResult {
  ValueProfile values;
  PolicyProfile policy;
  RunTrace trace;
  bool converged = false;
};

/// Model-based two-timescale loop: critic and actor sweep once per
/// iteration, delta-offset perturbation every perturb_period iterations,
/// convergence detected by the complementarity certificate.
inline OffSgspResult run_off_sgsp(const StochasticGame& game,
                                  const ValueProfile& init_v,
                                  const PolicyProfile& init_pi,
                                  const SgspConfig& config, Rng& rng) {
  (void)rng;  // OFF-SGSP is deterministic; rng kept for interface symmetry
  config.validate();
  OffSgspResult res;
  res.values = init_v;
  res.policy = init_pi;
  res.trace.metadata["algorithm"] = "off-sgsp";
  res.trace.metadata["rng"] = kRngId;
  const auto t0 = std::chrono::steady_clock::now();
  auto snapshot = [&](long long n) {
    const SgspReport rep = sgsp_check(game, res.values, res.policy,
                                      config.convergence_tol);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    res.trace.record(n, "f", rep.objective);
    res.trace.record(n, "max_sgsp_violation", rep.max_sgsp_violation);
    res.trace.record(n, "wall_clock_ms", static_cast<double>(ms));
    return rep.certified;
  };
  if (config.max_iters == 0) {
    snapshot(0);
    return res;
  }
  for (long long n = 1; n <= config.max_iters; ++n) {
    const double c_n = config.step_c(n);
    const double b_n = config.step_b(n);
    ValueProfile v_next = critic_step(game, res.values, res.policy, c_n);
    PolicyProfile pi_next = actor_step(game, res.values, res.policy, b_n, config);
    res.values = std::move(v_next);
    res.policy = std::move(pi_next);
    if (!res.values.all_finite())
      throw NumericalError("OFF-SGSP diverged at iteration " + std::to_string(n));
    if (config.perturb_delta > 0.0 && n % config.perturb_period == 0)
      res.policy = perturb(game, res.policy, config.perturb_delta);
    if (n % config.snapshot_every == 0 || n == config.max_iters) {
      if (snapshot(n)) {
        res.converged = true;
        break;
      }
    }
  }
  return res;
}

/// Wide CSV for OFF-SGSP traces: iteration,f,max_sgsp_violation,wall_clock_ms.
inline void write_off_sgsp_csv(const RunTrace& trace, const std::string& path) {
  std::ofstream out(path);
  out << "iteration,f,max_sgsp_violation,wall_clock_ms\n";
  for (size_t k = 0; k + 2 < trace.rows.size(); k += 3) {
    out << trace.rows[k].step << ',' << format_full(trace.rows[k].value) << ','
        << format_full(trace.rows[k + 1].value) << ','
        << format_full(trace.rows[k + 2].value) << '\n';
  }
}

}  // namespace sgsp

#endif  // SGSP_OFF_SGSP_HPP
