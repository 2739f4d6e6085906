#ifndef SGSP_SERIALIZATION_HPP
#define SGSP_SERIALIZATION_HPP

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sgsp/game.hpp"
#include "sgsp/math.hpp"

namespace sgsp {

using json = nlohmann::json;

/// Game document: {n_agents, states, actions, discount, transitions,
/// rewards}; transitions and rewards are nested arrays keyed by state index
/// and joint-action index, transition rows stored dense.
inline json game_to_json(const StochasticGame& game) {
  json doc;
  doc["n_agents"] = game.n_agents();
  doc["states"] = game.n_states();
  doc["discount"] = game.discount();
  json actions = json::array();
  for (int i = 0; i < game.n_agents(); ++i) {
    json per_state = json::array();
    for (int x = 0; x < game.n_states(); ++x) per_state.push_back(game.num_actions(i, x));
    actions.push_back(per_state);
  }
  doc["actions"] = actions;
  json transitions = json::array(), rewards = json::array();
  for (int x = 0; x < game.n_states(); ++x) {
    json tx = json::array(), rx = json::array();
    for (int j = 0; j < game.joint_count(x); ++j) {
      std::vector<double> dense(game.n_states(), 0.0);
      for (const auto& e : game.transition_row(x, j)) dense[e.next_state] += e.prob;
      tx.push_back(dense);
      const auto r = game.reward(x, j);
      rx.push_back(std::vector<double>(r.begin(), r.end()));
    }
    transitions.push_back(tx);
    rewards.push_back(rx);
  }
  doc["transitions"] = transitions;
  doc["rewards"] = rewards;
  return doc;
}

/// Loader re-normalizes transition rows only when the deviation from 1 is at
/// most 1e-9; larger deviations are rejected.
inline StochasticGame game_from_json(const json& doc) {
  const int N = doc.at("n_agents").get<int>();
  const int S = doc.at("states").get<int>();
  const double beta = doc.at("discount").get<double>();
  auto n_actions = doc.at("actions").get<std::vector<std::vector<int>>>();
  StochasticGame game(N, S, beta, n_actions);
  const auto& transitions = doc.at("transitions");
  const auto& rewards = doc.at("rewards");
  for (int x = 0; x < S; ++x) {
    for (int j = 0; j < game.joint_count(x); ++j) {
      auto row = transitions.at(x).at(j).get<std::vector<double>>();
      double sum = 0.0;
      for (double p : row) sum += p;
      if (std::abs(sum - 1.0) > 1e-9)
        throw GameError("transition row deviates from 1 beyond 1e-9 at state " +
                        std::to_string(x));
      for (double& p : row) p /= sum;
      game.set_transition(x, j, row);
      game.set_reward(x, j, rewards.at(x).at(j).get<std::vector<double>>());
    }
  }
  game.validate();
  return game;
}

inline json policy_to_json(const StochasticGame& game, const PolicyProfile& pi) {
  json rows = json::array();
  for (int i = 0; i < game.n_agents(); ++i) {
    json per_state = json::array();
    for (int x = 0; x < game.n_states(); ++x) per_state.push_back(pi.row(i, x));
    rows.push_back(per_state);
  }
  return json{{"policy", rows}};
}

inline PolicyProfile policy_from_json(const StochasticGame& game, const json& doc) {
  auto rows = doc.at("policy").get<std::vector<std::vector<std::vector<double>>>>();
  PolicyProfile pi = PolicyProfile::uniform(game);
  for (int i = 0; i < game.n_agents(); ++i)
    for (int x = 0; x < game.n_states(); ++x) pi.row(i, x) = rows.at(i).at(x);
  pi.validate(game);
  return pi;
}

inline json sgsp_report_to_json(const SgspReport& rep, bool with_entries = true) {
  json doc;
  doc["objective"] = rep.objective;
  doc["max_constraint_violation"] = rep.max_constraint_violation;
  doc["max_sgsp_violation"] = rep.max_sgsp_violation;
  doc["tol"] = rep.tol;
  doc["certified"] = rep.certified;
  if (with_entries) {
    json entries = json::array();
    for (const auto& e : rep.per_entry)
      entries.push_back({{"agent", e.agent},
                         {"state", e.state},
                         {"action", e.action},
                         {"g", e.g},
                         {"pi", e.pi}});
    doc["per_entry"] = entries;
  }
  return doc;
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  return json::parse(in);
}

inline void save_json_file(const json& doc, const std::string& path) {
  std::ofstream out(path);
  out << doc.dump(2) << '\n';
}

}  // namespace sgsp

#endif  // SGSP_SERIALIZATION_HPP
