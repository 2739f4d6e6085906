#include <doctest.h>

#include <cmath>
#include <map>

#include "sgsp/environments.hpp"
#include "sgsp/game.hpp"
#include "sgsp/oracle.hpp"
#include "sgsp/serialization.hpp"
#include "test_util.hpp"

using namespace sgsp;

namespace {

// Brute-force induced chain by looping joint actions with an explicit
// odometer, independent of the library's joint indexing.
InducedChain brute_force_chain(const StochasticGame& game, const PolicyProfile& pi) {
  const int S = game.n_states();
  const int N = game.n_agents();
  InducedChain out;
  out.P.assign(static_cast<size_t>(S) * S, 0.0);
  out.R.assign(N, std::vector<double>(S, 0.0));
  for (int x = 0; x < S; ++x) {
    std::vector<int> a(N, 0);
    while (true) {
      double w = 1.0;
      for (int i = 0; i < N; ++i) w *= pi.prob(i, x, a[i]);
      const int j = game.joint_index(x, a);
      for (const auto& e : game.transition_row(x, j))
        out.P[static_cast<size_t>(x) * S + e.next_state] += w * e.prob;
      for (int i = 0; i < N; ++i) out.R[i][x] += w * game.reward(x, j, i);
      int k = N - 1;
      while (k >= 0 && ++a[k] == game.num_actions(k, x)) a[k--] = 0;
      if (k < 0) break;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("game construction rejects invalid inputs") {
  CHECK_THROWS_AS(StochasticGame(2, 1, 1.0, {{3}, {3}}), GameError);
  CHECK_THROWS_AS(StochasticGame(2, 1, 0.0, {{3}, {3}}), GameError);
  CHECK_THROWS_AS(StochasticGame(2, 1, 0.8, {{0}, {3}}), GameError);
  StochasticGame g(1, 2, 0.5, {{1, 1}});
  // missing rows caught by validate
  CHECK_THROWS_AS(g.validate(), GameError);
  g.set_transition(0, 0, std::vector<double>{0.5, 0.6});
  g.set_transition(1, 0, std::vector<double>{0.0, 1.0});
  CHECK_THROWS_AS(g.validate(), GameError);
}

TEST_CASE("induced_chain: deterministic policy picks the joint row exactly") {
  Rng rng(7);
  StochasticGame game = testutil::random_game(rng, 2, 3, 2);
  std::vector<std::vector<int>> choice(2, std::vector<int>(3));
  for (int i = 0; i < 2; ++i)
    for (int x = 0; x < 3; ++x) choice[i][x] = game.num_actions(i, x) - 1;
  PolicyProfile pi = PolicyProfile::deterministic(game, choice);
  const InducedChain chain = induced_chain(game, pi);
  for (int x = 0; x < 3; ++x) {
    std::vector<int> a = {choice[0][x], choice[1][x]};
    const int j = game.joint_index(x, a);
    std::vector<double> dense(3, 0.0);
    for (const auto& e : game.transition_row(x, j)) dense[e.next_state] += e.prob;
    for (int y = 0; y < 3; ++y)
      CHECK(chain.P[x * 3 + y] == dense[y]);
  }
}

TEST_CASE("induced_chain: single-state game gives P = [1]") {
  StochasticGame game = build_hart_game(0.8);
  const InducedChain chain = induced_chain(game, PolicyProfile::uniform(game));
  CHECK(chain.P[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("induced_chain matches brute-force joint-action enumeration") {
  Rng rng(11);
  StochasticGame game = testutil::random_game(rng, 2, 3, 2);
  PolicyProfile pi = PolicyProfile::uniform(game);
  const InducedChain a = induced_chain(game, pi);
  const InducedChain b = brute_force_chain(game, pi);
  for (size_t k = 0; k < a.P.size(); ++k) CHECK(a.P[k] == doctest::Approx(b.P[k]).epsilon(1e-12));
  for (int i = 0; i < 2; ++i)
    for (int x = 0; x < 3; ++x)
      CHECK(a.R[i][x] == doctest::Approx(b.R[i][x]).epsilon(1e-12));
}

TEST_CASE("induced_chain rows are stochastic for random policies") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    StochasticGame game = testutil::random_game(rng, 2, 4, 3);
    PolicyProfile pi = testutil::random_policy(game, rng);
    const InducedChain chain = induced_chain(game, pi);
    for (int x = 0; x < 4; ++x) {
      double sum = 0.0;
      for (int y = 0; y < 4; ++y) sum += chain.P[x * 4 + y];
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("exact_value: beta -> small reduces to expected immediate reward") {
  Rng rng(17);
  StochasticGame game = testutil::random_game(rng, 2, 3, 2, 1e-12);
  PolicyProfile pi = testutil::random_policy(game, rng);
  const ValueProfile v = exact_value(game, pi);
  const InducedChain chain = induced_chain(game, pi);
  for (int i = 0; i < 2; ++i)
    for (int x = 0; x < 3; ++x)
      CHECK(v.value(i, x) == doctest::Approx(chain.R[i][x]).epsilon(1e-9));
}

TEST_CASE("exact_value: Hart game, both at a3, beta 0.8 gives v = 5") {
  StochasticGame game = build_hart_game(0.8);
  PolicyProfile pi = PolicyProfile::deterministic(game, {{2}, {2}});
  const ValueProfile v = exact_value(game, pi);
  CHECK(v.value(0, 0) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(v.value(1, 0) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("exact_value matches the value-iteration oracle") {
  Rng rng(19);
  StochasticGame game = testutil::random_game(rng, 2, 4, 2);
  PolicyProfile pi = testutil::random_policy(game, rng);
  const ValueProfile a = exact_value(game, pi);
  const ValueProfile b = oracle::value_iteration_fixed_policy(game, pi, 1e-10, 10000);
  for (int i = 0; i < 2; ++i)
    for (int x = 0; x < 4; ++x)
      CHECK(a.value(i, x) == doctest::Approx(b.value(i, x)).epsilon(1e-8));
}

TEST_CASE("exact_value respects the R_max/(1-beta) bound") {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    StochasticGame game = testutil::random_game(rng, 3, 4, 3);
    PolicyProfile pi = testutil::random_policy(game, rng);
    const ValueProfile v = exact_value(game, pi);
    const double bound = game.max_abs_reward() / (1.0 - game.discount()) + 1e-9;
    for (int i = 0; i < 3; ++i)
      for (int x = 0; x < 4; ++x) CHECK(std::abs(v.value(i, x)) <= bound);
  }
}

TEST_CASE("q_value: N=1 reduces to r + beta E[v]") {
  Rng rng(29);
  StochasticGame game = testutil::random_game(rng, 1, 3, 2);
  PolicyProfile pi = PolicyProfile::uniform(game);
  ValueProfile v(1, 3);
  for (int x = 0; x < 3; ++x) v.value(0, x) = 0.3 * x - 0.1;
  for (int x = 0; x < 3; ++x)
    for (int a = 0; a < game.num_actions(0, x); ++a) {
      std::vector<int> joint = {a};
      const int j = game.joint_index(x, joint);
      double expected = game.reward(x, j, 0);
      for (const auto& e : game.transition_row(x, j))
        expected += game.discount() * e.prob * v.value(0, e.next_state);
      CHECK(q_value(game, v, pi, 0, x, a) == doctest::Approx(expected).epsilon(1e-14));
    }
}

TEST_CASE("q_value: Hart game against deterministic a3, v = (5,5)") {
  StochasticGame game = build_hart_game(0.8);
  PolicyProfile pi = PolicyProfile::deterministic(game, {{2}, {2}});
  ValueProfile v(2, 1);
  v.value(0, 0) = 5.0;
  v.value(1, 0) = 5.0;
  CHECK(q_value(game, v, pi, 0, 0, 2) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(bellman_error(game, v, pi, 0, 0, 2) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("q_value matches brute-force opponent enumeration") {
  Rng rng(31);
  StochasticGame game = testutil::random_game(rng, 2, 3, 3);
  PolicyProfile pi = testutil::random_policy(game, rng);
  const ValueProfile v = exact_value(game, pi);
  for (int x = 0; x < 3; ++x)
    for (int a0 = 0; a0 < game.num_actions(0, x); ++a0) {
      double expected = 0.0;
      for (int a1 = 0; a1 < game.num_actions(1, x); ++a1) {
        std::vector<int> joint = {a0, a1};
        const int j = game.joint_index(x, joint);
        double inner = game.reward(x, j, 0);
        for (const auto& e : game.transition_row(x, j))
          inner += game.discount() * e.prob * v.value(0, e.next_state);
        expected += pi.prob(1, x, a1) * inner;
      }
      CHECK(q_value(game, v, pi, 0, x, a0) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("bellman_error: expectation under own policy vanishes at exact values") {
  Rng rng(37);
  StochasticGame game = testutil::random_game(rng, 2, 4, 3);
  PolicyProfile pi = testutil::random_policy(game, rng);
  const ValueProfile v = exact_value(game, pi);
  for (int i = 0; i < 2; ++i)
    for (int x = 0; x < 4; ++x) {
      double avg = 0.0;
      for (int a = 0; a < game.num_actions(i, x); ++a)
        avg += pi.prob(i, x, a) * bellman_error(game, v, pi, i, x, a);
      CHECK(avg == doctest::Approx(0.0).epsilon(1e-9));
    }
}

TEST_CASE("bellman_error: zero values and constant rewards give g = c") {
  StochasticGame game(2, 2, 0.9, {{2, 2}, {2, 2}});
  for (int x = 0; x < 2; ++x)
    for (int j = 0; j < game.joint_count(x); ++j) {
      game.set_transition(x, j, std::vector<double>{0.5, 0.5});
      game.set_reward(x, j, std::vector<double>{0.7, 0.7});
    }
  game.validate();
  PolicyProfile pi = PolicyProfile::uniform(game);
  ValueProfile v(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int x = 0; x < 2; ++x)
      for (int a = 0; a < 2; ++a)
        CHECK(bellman_error(game, v, pi, i, x, a) == doctest::Approx(0.7).epsilon(1e-14));
}

TEST_CASE("sample_step: deterministic row always lands on the support point") {
  StochasticGame game(1, 2, 0.5, {{1, 1}});
  game.set_transition(0, 0, std::vector<double>{0.0, 1.0});
  game.set_transition(1, 0, std::vector<double>{0.0, 1.0});
  game.set_reward(0, 0, std::vector<double>{1.0});
  game.set_reward(1, 0, std::vector<double>{2.0});
  game.validate();
  Rng rng(1);
  std::vector<int> a = {0};
  for (int k = 0; k < 100; ++k) {
    auto [y, r] = game.sample_step(0, a, rng);
    CHECK(y == 1);
    CHECK(r[0] == 1.0);
  }
}

TEST_CASE("sample_step: fixed seed replays identically") {
  Rng rng(41);
  StochasticGame game = testutil::random_game(rng, 2, 4, 2);
  std::vector<int> a = {0, 0};
  auto rollout = [&](uint64_t seed) {
    Rng r(seed);
    std::vector<int> states;
    int x = 0;
    for (int k = 0; k < 50; ++k) {
      auto [y, rew] = game.sample_step(x, a, r);
      states.push_back(y);
      x = y;
    }
    return states;
  };
  CHECK(rollout(123) == rollout(123));
}

TEST_CASE("sample_step: empirical frequencies track the stored kernel") {
  Rng rng(43);
  StochasticGame game = testutil::random_game(rng, 1, 4, 1);
  std::vector<int> a = {0};
  const int n = 1000000;
  std::map<int, int> counts;
  Rng sampler(4242);
  for (int k = 0; k < n; ++k) counts[game.sample_step(0, a, sampler).first]++;
  for (const auto& e : game.transition_row(0, 0)) {
    const double p = e.prob;
    const double se = std::sqrt(p * (1 - p) / n);
    const double freq = counts[e.next_state] / double(n);
    CHECK(std::abs(freq - p) <= 3 * se + 1e-12);
  }
}

TEST_CASE("game JSON round trip preserves structure and values") {
  Rng rng(47);
  StochasticGame game = testutil::random_game(rng, 2, 3, 2);
  StochasticGame back = game_from_json(game_to_json(game));
  CHECK(back.n_agents() == game.n_agents());
  CHECK(back.n_states() == game.n_states());
  CHECK(back.discount() == game.discount());
  for (int x = 0; x < 3; ++x)
    for (int j = 0; j < game.joint_count(x); ++j) {
      CHECK(back.reward(x, j, 0) == game.reward(x, j, 0));
      std::vector<double> a(3, 0.0), b(3, 0.0);
      for (const auto& e : game.transition_row(x, j)) a[e.next_state] += e.prob;
      for (const auto& e : back.transition_row(x, j)) b[e.next_state] += e.prob;
      for (int y = 0; y < 3; ++y) CHECK(a[y] == doctest::Approx(b[y]).epsilon(1e-15));
    }
}

TEST_CASE("game JSON loader rejects rows deviating beyond 1e-9") {
  StochasticGame game = build_hart_game(0.8);
  json doc = game_to_json(game);
  doc["transitions"][0][0][0] = 1.001;
  CHECK_THROWS_AS(game_from_json(doc), GameError);
  doc["transitions"][0][0][0] = 1.0 + 1e-10;  // tiny deviation renormalized
  CHECK_NOTHROW(game_from_json(doc));
}
