#ifndef SGSP_HARNESS_HPP
#define SGSP_HARNESS_HPP

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "sgsp/baselines.hpp"
#include "sgsp/environments.hpp"
#include "sgsp/game.hpp"
#include "sgsp/off_sgsp.hpp"
#include "sgsp/on_sgsp.hpp"
#include "sgsp/oracle.hpp"
#include "sgsp/serialization.hpp"
#include "sgsp/trace.hpp"

namespace sgsp {

/// A reference equilibrium used to label run outcomes.
struct ReferenceNe {
  std::string label;
  std::vector<std::vector<std::vector<double>>> policy;  // [agent][state][action]
};

inline constexpr const char* kNonNashLabel = "non-Nash/oscillating";

/// First reference NE within per-player L1 distance tol of the final policy;
/// a non-stationary run is labelled oscillating regardless of proximity.
inline std::string classify_outcome(
    const std::vector<std::vector<std::vector<double>>>& final_policy,
    const std::vector<ReferenceNe>& references, double tol,
    bool stationary = true) {
  if (references.empty()) throw ConfigError("classify_outcome: no references");
  if (!stationary) return kNonNashLabel;
  for (const auto& ref : references) {
    bool all_close = true;
    for (size_t i = 0; i < final_policy.size() && all_close; ++i)
      for (size_t x = 0; x < final_policy[i].size() && all_close; ++x) {
        double l1 = 0.0;
        for (size_t a = 0; a < final_policy[i][x].size(); ++a)
          l1 += std::abs(final_policy[i][x][a] - ref.policy[i][x][a]);
        if (l1 > tol) all_close = false;
      }
    if (all_close) return ref.label;
  }
  return kNonNashLabel;
}

inline std::vector<ReferenceNe> hart_references() {
  return {
      {"mixed (0.5,0.5,0)", {{{0.5, 0.5, 0.0}}, {{0.5, 0.5, 0.0}}}},
      {"pure (0,0,1)", {{{0.0, 0.0, 1.0}}, {{0.0, 0.0, 1.0}}}},
  };
}

struct ExperimentConfig {
  std::string experiment;               // hart | stg | stg-delta | custom
  std::string game_file;                // for custom
  std::vector<std::string> algorithms;  // off-sgsp | on-sgsp | nashq | friendq
  std::vector<uint64_t> seeds;
  std::string output_dir = "runs";
  int grid_size = 3;                    // M, for stg experiments
  double discount = 0.8;
  long long max_steps = 10000;          // online step budget / OFF-SGSP iters
  double classification_tol = 0.1;
  double stationarity_threshold = 0.05;
  SgspConfig sgsp;

  void validate() const {
    if (seeds.empty()) throw ConfigError("seeds must be nonempty");
    if (algorithms.empty()) throw ConfigError("algorithms must be nonempty");
    if (experiment != "hart" && experiment != "stg" && experiment != "stg-delta" &&
        experiment != "custom")
      throw ConfigError("unknown experiment: " + experiment);
    if (experiment == "custom" && !std::filesystem::exists(game_file))
      throw ConfigError("game file does not exist: " + game_file);
    for (const auto& a : algorithms)
      if (a != "off-sgsp" && a != "on-sgsp" && a != "nashq" && a != "friendq")
        throw ConfigError("unknown algorithm: " + a);
    sgsp.validate();
  }
};

inline ExperimentConfig experiment_config_from_json(const json& doc) {
  ExperimentConfig cfg;
  cfg.experiment = doc.at("experiment").get<std::string>();
  if (doc.contains("game_file")) cfg.game_file = doc["game_file"].get<std::string>();
  if (doc.contains("algorithm"))
    cfg.algorithms = {doc["algorithm"].get<std::string>()};
  if (doc.contains("algorithms"))
    cfg.algorithms = doc["algorithms"].get<std::vector<std::string>>();
  cfg.seeds = doc.at("seeds").get<std::vector<uint64_t>>();
  if (doc.contains("output_dir")) cfg.output_dir = doc["output_dir"].get<std::string>();
  if (doc.contains("grid_size")) cfg.grid_size = doc["grid_size"].get<int>();
  if (doc.contains("discount")) cfg.discount = doc["discount"].get<double>();
  if (doc.contains("max_steps")) cfg.max_steps = doc["max_steps"].get<long long>();
  if (doc.contains("classification_tol"))
    cfg.classification_tol = doc["classification_tol"].get<double>();
  auto& s = cfg.sgsp;
  if (doc.contains("snapshot_every")) s.snapshot_every = doc["snapshot_every"].get<long long>();
  if (doc.contains("nu")) s.nu = doc["nu"].get<double>();
  if (doc.contains("alpha_prime")) s.alpha_prime = doc["alpha_prime"].get<double>();
  if (doc.contains("perturb_period")) s.perturb_period = doc["perturb_period"].get<long long>();
  if (doc.contains("perturb_delta")) s.perturb_delta = doc["perturb_delta"].get<double>();
  if (doc.contains("explore_window")) s.explore_window = doc["explore_window"].get<long long>();
  if (doc.contains("convergence_tol")) s.convergence_tol = doc["convergence_tol"].get<double>();
  if (doc.contains("epsilon")) s.epsilon = doc["epsilon"].get<double>();
  if (doc.contains("swap_timescales")) s.swap_timescales = doc["swap_timescales"].get<bool>();
  s.max_iters = cfg.max_steps;
  return cfg;
}

inline json experiment_config_to_json(const ExperimentConfig& cfg) {
  return json{{"experiment", cfg.experiment},
              {"game_file", cfg.game_file},
              {"algorithms", cfg.algorithms},
              {"seeds", cfg.seeds},
              {"output_dir", cfg.output_dir},
              {"grid_size", cfg.grid_size},
              {"discount", cfg.discount},
              {"max_steps", cfg.max_steps},
              {"classification_tol", cfg.classification_tol},
              {"snapshot_every", cfg.sgsp.snapshot_every},
              {"nu", cfg.sgsp.nu},
              {"alpha_prime", cfg.sgsp.alpha_prime},
              {"perturb_period", cfg.sgsp.perturb_period},
              {"perturb_delta", cfg.sgsp.perturb_delta},
              {"explore_window", cfg.sgsp.explore_window},
              {"convergence_tol", cfg.sgsp.convergence_tol},
              {"epsilon", cfg.sgsp.epsilon},
              {"swap_timescales", cfg.sgsp.swap_timescales}};
}

inline std::string config_hash(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << std::hex << std::hash<std::string>{}(experiment_config_to_json(cfg).dump());
  return out.str();
}

struct CellResult {
  std::string algorithm;
  uint64_t seed = 0;
  std::string label;        // classification, or "n/a" without references
  double final_metric = 0.0;
  std::string final_metric_name;
  double wall_clock_ms = 0.0;
  bool ok = false;
  std::string error;
  std::vector<std::vector<std::vector<double>>> final_policy;
  RunTrace trace;
};

namespace detail {

inline std::unique_ptr<Environment> make_env(const ExperimentConfig& cfg) {
  if (cfg.experiment == "hart")
    return std::make_unique<GameEnvironment>(build_hart_game(cfg.discount));
  if (cfg.experiment == "stg")
    return std::make_unique<GameEnvironment>(build_stg_env(cfg.grid_size, cfg.discount));
  if (cfg.experiment == "stg-delta")
    return std::make_unique<DeltaStgEnv>(cfg.grid_size, cfg.discount);
  return std::make_unique<GameEnvironment>(
      game_from_json(load_json_file(cfg.game_file)));
}

inline StochasticGame make_game(const ExperimentConfig& cfg) {
  if (cfg.experiment == "hart") return build_hart_game(cfg.discount);
  if (cfg.experiment == "stg") return build_stg(cfg.grid_size, cfg.discount);
  if (cfg.experiment == "stg-delta")
    throw ConfigError("off-sgsp needs an explicit game; stg-delta is online-only");
  return game_from_json(load_json_file(cfg.game_file));
}

inline bool trace_stationary(const RunTrace& trace, long long max_step,
                             double threshold) {
  const long long cutoff = static_cast<long long>(0.9 * max_step);
  double worst = 0.0;
  for (const auto& row : trace.rows)
    if (row.metric == "policy_delta" && row.step > cutoff)
      worst = std::max(worst, row.value);
  return worst <= threshold;
}

}  // namespace detail

/// Executes one (algorithm, seed) cell and fills in trace + outcome. Errors
/// are captured, not thrown, so one bad cell does not sink a sweep.
inline CellResult run_cell(const ExperimentConfig& cfg, const std::string& algorithm,
                           uint64_t seed) {
  CellResult cell;
  cell.algorithm = algorithm;
  cell.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    Rng rng(seed);
    if (algorithm == "off-sgsp") {
      StochasticGame game = detail::make_game(cfg);
      SgspConfig sc = cfg.sgsp;
      sc.max_iters = cfg.max_steps;
      OffSgspResult run = run_off_sgsp(game, ValueProfile::zeros(game),
                                       PolicyProfile::uniform(game), sc, rng);
      cell.trace = std::move(run.trace);
      cell.final_policy.resize(game.n_agents());
      for (int i = 0; i < game.n_agents(); ++i) {
        cell.final_policy[i].resize(game.n_states());
        for (int x = 0; x < game.n_states(); ++x)
          cell.final_policy[i][x] = run.policy.row(i, x);
      }
      cell.final_metric_name = "f";
      cell.final_metric = cell.trace.last("f");
    } else if (algorithm == "on-sgsp") {
      auto env = detail::make_env(cfg);
      SelfPlayDriver driver(*env, cfg.sgsp, seed);
      SelfPlayResult run = driver.run(cfg.max_steps);
      cell.trace = std::move(run.trace);
      cell.final_policy.resize(env->n_agents());
      for (int i = 0; i < env->n_agents(); ++i) {
        cell.final_policy[i].resize(env->n_states());
        for (int x = 0; x < env->n_states(); ++x)
          cell.final_policy[i][x] = run.agents[i].policy_row(x);
      }
    } else {
      auto env = detail::make_env(cfg);
      BaselineResult run = algorithm == "nashq"
                               ? nashq_run(*env, cfg.sgsp, rng, cfg.max_steps)
                               : friendq_run(*env, cfg.sgsp, rng, cfg.max_steps);
      cell.trace = std::move(run.trace);
      cell.final_policy = std::move(run.policies);
    }
    if (cell.final_metric_name.empty()) {
      if (cfg.experiment == "hart") {
        const bool stat = detail::trace_stationary(cell.trace, cfg.max_steps,
                                                   cfg.stationarity_threshold);
        cell.label = classify_outcome(cell.final_policy, hart_references(),
                                      cfg.classification_tol, stat);
      } else {
        cell.final_metric_name = "distance";
        cell.final_metric = cell.trace.last("distance");
      }
    }
    if (cell.label.empty()) cell.label = "n/a";
    cell.ok = true;
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.error = e.what();
  }
  cell.wall_clock_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
  return cell;
}

inline int worker_pool_size() {
  if (const char* env = std::getenv("SGSP_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Writes trace CSV and JSON sidecar for one completed cell.
inline void persist_cell(const ExperimentConfig& cfg, const CellResult& cell) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  const std::string stem = cfg.output_dir + "/" + cell.algorithm + "_seed" +
                           std::to_string(cell.seed);
  if (cell.algorithm == "off-sgsp")
    write_off_sgsp_csv(cell.trace, stem + ".csv");
  else
    write_trace_csv(cell.trace, stem + ".csv");
  json sidecar;
  sidecar["config_hash"] = config_hash(cfg);
  sidecar["config"] = experiment_config_to_json(cfg);
  sidecar["seed"] = cell.seed;
  sidecar["rng"] = kRngId;
  sidecar["algorithm"] = cell.algorithm;
  sidecar["ok"] = cell.ok;
  sidecar["error"] = cell.error;
  sidecar["label"] = cell.label;
  sidecar["final_metric_name"] = cell.final_metric_name;
  sidecar["final_metric"] = cell.final_metric;
  sidecar["wall_clock_ms"] = cell.wall_clock_ms;
  sidecar["final_policy"] = cell.final_policy;
  save_json_file(sidecar, stem + ".json");
}

struct SummaryRow {
  std::string algorithm;
  std::map<std::string, int> label_counts;
  double metric_mean = 0.0;
  double metric_stddev = 0.0;
  double total_wall_clock_ms = 0.0;
  int n_runs = 0;
};

inline std::vector<SummaryRow> summarize_sidecars(const std::vector<json>& sidecars) {
  if (sidecars.empty()) throw ConfigError("summarize: no traces found");
  std::map<std::string, std::vector<const json*>> by_alg;
  for (const auto& sc : sidecars)
    by_alg[sc.at("algorithm").get<std::string>()].push_back(&sc);
  std::vector<SummaryRow> out;
  for (const auto& [alg, cells] : by_alg) {
    SummaryRow row;
    row.algorithm = alg;
    row.n_runs = static_cast<int>(cells.size());
    double sum = 0.0, sq = 0.0;
    for (const json* sc : cells) {
      row.label_counts[sc->at("label").get<std::string>()]++;
      const double m = sc->at("final_metric").get<double>();
      sum += m;
      sq += m * m;
      row.total_wall_clock_ms += sc->at("wall_clock_ms").get<double>();
    }
    row.metric_mean = sum / row.n_runs;
    const double var = std::max(sq / row.n_runs - row.metric_mean * row.metric_mean, 0.0);
    row.metric_stddev = std::sqrt(var);
    out.push_back(row);
  }
  return out;
}

inline std::string summary_to_text(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  for (const auto& row : rows) {
    out << row.algorithm << " (" << row.n_runs << " runs, "
        << row.total_wall_clock_ms / 1000.0 << " s total)\n";
    for (const auto& [label, count] : row.label_counts)
      out << "  " << label << ": " << count << " ("
          << 100.0 * count / row.n_runs << "%)\n";
    out << "  final metric mean " << row.metric_mean << " +- " << row.metric_stddev
        << "\n";
  }
  return out.str();
}

inline void write_summary_csv(const std::vector<SummaryRow>& rows,
                              const std::string& path) {
  std::ofstream out(path);
  out << "algorithm,label,count,percent,metric_mean,metric_stddev,total_wall_clock_ms\n";
  for (const auto& row : rows)
    for (const auto& [label, count] : row.label_counts)
      out << row.algorithm << ',' << '"' << label << '"' << ',' << count << ','
          << format_full(100.0 * count / row.n_runs) << ','
          << format_full(row.metric_mean) << ',' << format_full(row.metric_stddev)
          << ',' << format_full(row.total_wall_clock_ms) << '\n';
}

/// Runs every (seed x algorithm) cell on a bounded worker pool, persists all
/// artifacts, and writes the summary. Returns the process exit code: 0 when
/// all cells completed, 1 when any aborted.
inline int cli_run(const ExperimentConfig& cfg, std::ostream& log = std::cout) {
  cfg.validate();
  struct Job {
    std::string algorithm;
    uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& alg : cfg.algorithms)
    for (uint64_t seed : cfg.seeds) jobs.push_back({alg, seed});
  std::vector<CellResult> results(jobs.size());
  std::atomic<size_t> next{0};
  const int workers = std::min<int>(worker_pool_size(), static_cast<int>(jobs.size()));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      while (true) {
        const size_t k = next.fetch_add(1);
        if (k >= jobs.size()) break;
        results[k] = run_cell(cfg, jobs[k].algorithm, jobs[k].seed);
      }
    });
  for (auto& t : pool) t.join();
  bool all_ok = true;
  std::vector<json> sidecars;
  for (const auto& cell : results) {
    persist_cell(cfg, cell);
    if (!cell.ok) {
      all_ok = false;
      log << "cell " << cell.algorithm << "/seed " << cell.seed
          << " aborted: " << cell.error << "\n";
    }
    sidecars.push_back(load_json_file(cfg.output_dir + "/" + cell.algorithm +
                                      "_seed" + std::to_string(cell.seed) + ".json"));
  }
  const auto rows = summarize_sidecars(sidecars);
  write_summary_csv(rows, cfg.output_dir + "/summary.csv");
  log << summary_to_text(rows);
  return all_ok ? 0 : 1;
}

}  // namespace sgsp

#endif  // SGSP_HARNESS_HPP
