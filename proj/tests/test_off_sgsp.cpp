#include <doctest.h>

#include <cmath>

#include "sgsp/environments.hpp"
#include "sgsp/off_sgsp.hpp"
#include "sgsp/oracle.hpp"
#include "test_util.hpp"

using namespace sgsp;

TEST_CASE("config schedules honor the two-timescale requirement") {
  SgspConfig cfg;
  CHECK(cfg.step_b(100) == doctest::Approx(0.2));
  CHECK(cfg.step_c(100) == doctest::Approx(0.1));
  CHECK(cfg.step_b(10000) == doctest::Approx(1.0 / 10000));
  CHECK(cfg.step_c(10000) == doctest::Approx(std::pow(10000.0, -0.75)));
  // policy step decays faster than value step after warmup
  CHECK(cfg.step_b(1000000) / cfg.step_c(1000000) < cfg.step_b(10000) / cfg.step_c(10000));

  SgspConfig swapped;
  swapped.swap_timescales = true;
  CHECK(swapped.step_b(10000) == doctest::Approx(std::pow(10000.0, -0.75)));
  CHECK(swapped.step_c(10000) == doctest::Approx(1.0 / 10000));

  SgspConfig bad;
  bad.nu = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = SgspConfig{};
  bad.alpha_prime = 0.3;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("critic_step keeps the exact-value fixed point") {
  Rng rng(211);
  StochasticGame game = testutil::random_game(rng, 2, 3, 3);
  PolicyProfile pi = testutil::random_policy(game, rng);
  const ValueProfile v = exact_value(game, pi);
  const ValueProfile v2 = critic_step(game, v, pi, 0.5);
  for (int i = 0; i < 2; ++i)
    for (int x = 0; x < 3; ++x)
      CHECK(std::abs(v2.value(i, x) - v.value(i, x)) <= 1e-9);
}

TEST_CASE("critic_step with full step on a single-state single-agent game") {
  StochasticGame game(1, 1, 0.5, {{2}});
  std::vector<double> r0{1.0}, r1{3.0};
  game.set_reward(0, 0, r0);
  game.set_reward(0, 1, r1);
  std::vector<double> row{1.0};
  game.set_transition(0, 0, row);
  game.set_transition(0, 1, row);
  game.validate();
  PolicyProfile pi = PolicyProfile::uniform(game);
  ValueProfile v = ValueProfile::zeros(game);
  v = critic_step(game, v, pi, 1.0);
  // Bellman operator: 0.5*(1 + 0.5*0) + 0.5*(3 + 0.5*0) = 2
  CHECK(v.value(0, 0) == doctest::Approx(2.0));
  v = critic_step(game, v, pi, 1.0);
  CHECK(v.value(0, 0) == doctest::Approx(2.0 + 0.5 * 2.0));
}

TEST_CASE("iterated critic_step converges to exact values") {
  Rng rng(223);
  for (int trial = 0; trial < 5; ++trial) {
    StochasticGame game = testutil::random_game(rng, 2, 4, 3);
    PolicyProfile pi = testutil::random_policy(game, rng);
    const ValueProfile target = exact_value(game, pi);
    ValueProfile v = ValueProfile::zeros(game);
    int sweeps = 0;
    double err = 1.0;
    while (sweeps < 2000 && err > 1e-6) {
      v = critic_step(game, v, pi, 0.5);
      ++sweeps;
      err = 0.0;
      for (int i = 0; i < 2; ++i)
        for (int x = 0; x < 4; ++x)
          err = std::max(err, std::abs(v.value(i, x) - target.value(i, x)));
    }
    CHECK(err <= 1e-6);
    CHECK(sweeps <= 2000);
  }
}

TEST_CASE("actor_step is the identity at a certified point and at b=0") {
  StochasticGame game = build_hart_game(0.8);
  SgspConfig cfg;
  PolicyProfile pi = PolicyProfile::deterministic(game, {{2}, {2}});
  const ValueProfile v = exact_value(game, pi);
  REQUIRE(sgsp_check(game, v, pi, 1e-9).certified);
  PolicyProfile out = actor_step(game, v, pi, 0.01, cfg);
  for (int i = 0; i < 2; ++i)
    for (int a = 0; a < 3; ++a)
      CHECK(std::abs(out.row(i, 0)[a] - pi.row(i, 0)[a]) <= 1e-9);

  Rng rng(227);
  StochasticGame g2 = testutil::random_game(rng, 2, 3, 3);
  PolicyProfile p2 = testutil::random_policy(g2, rng);
  const ValueProfile v2 = exact_value(g2, p2);
  PolicyProfile out2 = actor_step(g2, v2, p2, 0.0, cfg);
  for (int i = 0; i < 2; ++i)
    for (int x = 0; x < 3; ++x)
      for (int a = 0; a < g2.num_actions(i, x); ++a)
        CHECK(out2.row(i, x)[a] == p2.row(i, x)[a]);
}

TEST_CASE("actor_step from a non-Nash Hart point does not increase f") {
  StochasticGame game = build_hart_game(0.8);
  SgspConfig cfg;
  PolicyProfile pi = PolicyProfile::uniform(game);
  pi.row(0, 0) = {0.8, 0.1, 0.1};
  pi.row(1, 0) = {0.1, 0.8, 0.1};
  const ValueProfile v = exact_value(game, pi);
  const double f0 = objective_f(game, v, pi);
  REQUIRE(f0 > 0.0);
  PolicyProfile moved = actor_step(game, v, pi, 1e-3, cfg);
  const ValueProfile vm = exact_value(game, moved);
  CHECK(objective_f(game, vm, moved) <= f0 + 1e-6);
}

TEST_CASE("perturb examples") {
  StochasticGame game = build_hart_game(0.8);
  PolicyProfile pi = PolicyProfile::deterministic(game, {{0}, {0}});
  PolicyProfile same = perturb(game, pi, 0.0);
  CHECK(same.row(0, 0)[0] == 1.0);
  PolicyProfile hat = perturb(game, pi, 0.05);
  CHECK(hat.row(0, 0)[0] == doctest::Approx(1.05 / 1.15));
  CHECK(hat.row(0, 0)[1] == doctest::Approx(0.05 / 1.15));
  CHECK(hat.row(0, 0)[2] == doctest::Approx(0.05 / 1.15));
  PolicyProfile uni = PolicyProfile::uniform(game);
  PolicyProfile uhat = perturb(game, uni, 0.3);
  for (int a = 0; a < 3; ++a)
    CHECK(uhat.row(0, 0)[a] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("run_off_sgsp with max_iters 0 returns the initial point") {
  StochasticGame game = build_hart_game(0.8);
  SgspConfig cfg;
  cfg.max_iters = 0;
  Rng rng(1);
  PolicyProfile pi = PolicyProfile::uniform(game);
  ValueProfile v = ValueProfile::zeros(game);
  OffSgspResult res = run_off_sgsp(game, v, pi, cfg, rng);
  CHECK_FALSE(res.converged);
  for (int a = 0; a < 3; ++a) CHECK(res.policy.row(0, 0)[a] == pi.row(0, 0)[a]);
  CHECK(res.values.value(0, 0) == 0.0);
  bool has_f_at_0 = false;
  for (const auto& row : res.trace.rows)
    if (row.step == 0 && row.metric == "f") has_f_at_0 = true;
  CHECK(has_f_at_0);
}

TEST_CASE("run_off_sgsp certifies the Hart game from uniform init") {
  StochasticGame game = build_hart_game(0.8);
  SgspConfig cfg;
  cfg.max_iters = 100000;
  cfg.convergence_tol = 0.05;
  Rng rng(42);
  OffSgspResult res = run_off_sgsp(game, ValueProfile::zeros(game),
                                   PolicyProfile::uniform(game), cfg, rng);
  CHECK(res.converged);
  CHECK(sgsp_check(game, res.values, res.policy, 0.05).certified);
  res.policy.validate(game);
}

TEST_CASE("run_off_sgsp is bitwise stable at a certified point with delta 0") {
  StochasticGame game = build_hart_game(0.8);
  SgspConfig cfg;
  cfg.max_iters = 1000;
  cfg.perturb_delta = 0.0;
  cfg.convergence_tol = 1e-12;  // never triggers, force 1000 iterations
  Rng rng(7);
  PolicyProfile pi = PolicyProfile::deterministic(game, {{2}, {2}});
  ValueProfile v = exact_value(game, pi);
  OffSgspResult res = run_off_sgsp(game, v, pi, cfg, rng);
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(res.values.value(i, 0) - v.value(i, 0)) <= 1e-9);
    for (int a = 0; a < 3; ++a)
      CHECK(std::abs(res.policy.row(i, 0)[a] - pi.row(i, 0)[a]) <= 1e-9);
  }
}

TEST_CASE("run_off_sgsp keeps policies valid and values bounded") {
  Rng seed_rng(233);
  StochasticGame game = testutil::random_game(seed_rng, 2, 3, 3);
  SgspConfig cfg;
  cfg.max_iters = 5000;
  cfg.convergence_tol = 1e-12;
  Rng rng(9);
  OffSgspResult res = run_off_sgsp(game, ValueProfile::zeros(game),
                                   PolicyProfile::uniform(game), cfg, rng);
  res.policy.validate(game);
  const double bound = game.max_abs_reward() / (1.0 - game.discount()) + 1e-6;
  for (int i = 0; i < 2; ++i)
    for (int x = 0; x < 3; ++x) CHECK(std::abs(res.values.value(i, x)) <= bound);
}

TEST_CASE("off-sgsp trace csv has the expected wide header") {
  StochasticGame game = build_hart_game(0.8);
  SgspConfig cfg;
  cfg.max_iters = 200;
  cfg.convergence_tol = 1e-12;
  Rng rng(3);
  OffSgspResult res = run_off_sgsp(game, ValueProfile::zeros(game),
                                   PolicyProfile::uniform(game), cfg, rng);
  const std::string path = "/tmp/off_trace_test.csv";
  write_off_sgsp_csv(res.trace, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "iteration,f,max_sgsp_violation,wall_clock_ms");
  int lines = 0;
  std::string dummy;
  while (std::getline(in, dummy)) ++lines;
  CHECK(lines >= 2);
}
