#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "deadend/heuristic_search.hpp"
#include "deadend/mdp_io.hpp"

namespace deadend {

struct BenchInstance {
  std::string name;
  NamedMdp mdp;
};

struct BenchConfig {
  double penalty = 500.0;
  /// Second lrtdp penalty; <= 0 skips the large-penalty runs.
  double big_penalty = 5e8;
  /// Also run lrtdp at big_penalty with the zero heuristic.
  bool no_heuristic_run = true;
  double epsilon = kDefaultEpsilon;
  std::uint64_t seed = 0;
  std::size_t max_backups = 20'000'000;
  double time_limit = 120.0;
  /// Tolerance of the s0 policy-agreement check.
  double agree_tol = 1e-6;
};

struct BenchRun {
  std::string label;  // "lrtdp", "lrtdp-bigD", "lrtdp-bigD-noh", "shs"
  double penalty = kInfinity;
  double wall_s = 0.0;
  std::size_t backups = 0;
  std::size_t states_touched = 0;
  std::size_t greedy_graph_builds = 0;
  std::size_t greedy_graph_max_states = 0;
  bool converged = false;
  bool timed_out = false;
  bool dead_start = false;
  /// Goal probability and conditional cost of the returned policy at s0.
  std::optional<double> goal_prob;
  std::optional<double> cond_cost;
  std::string error;
};

struct BenchRow {
  std::string instance;
  std::size_t states = 0;
  std::size_t dead_ends = 0;
  std::size_t reachable = 0;
  std::vector<BenchRun> runs;
  /// The lrtdp (penalty) and shs policies have the same goal probability
  /// and conditional cost at s0 within agree_tol.
  bool agree = false;

  const BenchRun* find(const std::string& label) const;
};

/// Runs lrtdp (finite penalty, dead-end-aware heuristic) and shs
/// (reachability probability heuristic, zero cost heuristic) on each
/// instance. Budget exhaustion marks a run timed out and the sweep goes on.
std::vector<BenchRow> bench_compare(const std::vector<BenchInstance>& instances, const BenchConfig& cfg);

/// Manifest: {"instances": [{"name", "grid": GridSpec, "seed"} |
/// {"name", "file"}], optional BenchConfig fields}. Relative paths resolve
/// against `base_dir`.
std::vector<BenchInstance> load_manifest(const nlohmann::json& manifest, const std::filesystem::path& base_dir,
                                         BenchConfig& cfg);

std::string bench_table_text(const std::vector<BenchRow>& rows);
nlohmann::json bench_table_json(const std::vector<BenchRow>& rows, const BenchConfig& cfg);

}  // namespace deadend
