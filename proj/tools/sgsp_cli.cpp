// Command-line front end: run experiment sweeps, verify a (game, policy)
// pair against the equilibrium certificates, and summarize trace
// directories.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "sgsp/harness.hpp"
#include "sgsp/oracle.hpp"
#include "sgsp/serialization.hpp"

namespace fs = std::filesystem;

namespace {

int do_run(const std::string& config_path) {
  sgsp::ExperimentConfig cfg;
  try {
    cfg = sgsp::experiment_config_from_json(sgsp::load_json_file(config_path));
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return 2;
  }
  return sgsp::cli_run(cfg);
}

int do_verify(const std::string& game_path, const std::string& policy_path,
              double tol) {
  sgsp::StochasticGame game =
      sgsp::game_from_json(sgsp::load_json_file(game_path));
  sgsp::PolicyProfile pi =
      sgsp::policy_from_json(game, sgsp::load_json_file(policy_path));
  const sgsp::ValueProfile v = sgsp::exact_value(game, pi);
  const sgsp::SgspReport rep = sgsp::sgsp_check(game, v, pi, tol);
  const auto verdict = sgsp::oracle::is_nash(game, pi, tol);
  sgsp::json out = sgsp::sgsp_report_to_json(rep);
  out["is_nash"] = verdict.is_nash;
  out["max_deviation_gain"] = verdict.max_gain;
  std::cout << out.dump(2) << "\n";
  return 0;
}

int do_summarize(const std::string& dir) {
  std::vector<sgsp::json> sidecars;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    if (entry.path().filename() == "summary.json") continue;
    sgsp::json doc = sgsp::load_json_file(entry.path().string());
    if (doc.contains("algorithm") && doc.contains("label")) sidecars.push_back(doc);
  }
  const auto rows = sgsp::summarize_sidecars(sidecars);
  sgsp::write_summary_csv(rows, dir + "/summary.csv");
  std::cout << sgsp::summary_to_text(rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stationary Nash equilibrium solvers for finite discounted "
               "general-sum stochastic games"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run all (seed x algorithm) cells of a config");
  run->add_option("config", config_path, "experiment config JSON")->required();

  std::string game_path, policy_path;
  double tol = 1e-6;
  auto* verify =
      app.add_subcommand("verify", "Check a policy against the equilibrium certificates");
  verify->add_option("game", game_path, "game JSON")->required();
  verify->add_option("policy", policy_path, "policy JSON")->required();
  verify->add_option("--tol", tol, "certificate tolerance");

  std::string dir;
  auto* summarize = app.add_subcommand("summarize", "Summarize a trace directory");
  summarize->add_option("dir", dir, "directory of trace sidecars")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return do_run(config_path);
    if (verify->parsed()) return do_verify(game_path, policy_path, tol);
    if (summarize->parsed()) return do_summarize(dir);
  } catch (const sgsp::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
