#include "deadend/bench.hpp"

#include <cmath>

#include <fmt/format.h>

#include "deadend/gridworld.hpp"
#include "deadend/oracle.hpp"

namespace deadend {

using nlohmann::json;

namespace {

void evaluate_at_start(const ExplicitMdp& mdp, const Policy& policy, BenchRun& run) {
  const StateId s0 = *mdp.start();
  if (!policy.assigned(s0) && !mdp.is_goal(s0)) return;
  try {
    const auto eval = evaluate_policy(mdp, complete_policy(mdp, policy));
    run.goal_prob = eval.goal_prob[s0];
    run.cond_cost = eval.conditional_cost[s0];
  } catch (const std::exception& e) {
    run.error = e.what();
  }
}

BenchRun fill(std::string label, double penalty, const SolveReport& rep, const ExplicitMdp& mdp) {
  BenchRun run;
  run.label = std::move(label);
  run.penalty = penalty;
  run.wall_s = rep.wall_time.count();
  run.backups = rep.backups;
  run.states_touched = rep.stats.states_touched;
  run.greedy_graph_builds = rep.stats.greedy_graph_builds;
  run.greedy_graph_max_states = rep.stats.greedy_graph_max_states;
  run.converged = rep.converged;
  run.timed_out = !rep.converged;
  run.dead_start = rep.dead_start;
  if (rep.converged && !rep.dead_start) evaluate_at_start(mdp, rep.policy, run);
  return run;
}

BenchRun run_lrtdp(const std::string& label, const ExplicitMdp& base, double penalty, bool heuristic,
                   const SearchConfig& sc) {
  const ExplicitMdp mdp = base.with_penalty(penalty);
  const Heuristic h = heuristic ? Heuristic::deadend_aware_cost(mdp) : Heuristic::zero_cost();
  try {
    return fill(label, penalty, lrtdp(mdp, BackupMode::kFinitePenalty, h, sc), mdp);
  } catch (const std::exception& e) {
    BenchRun run;
    run.label = label;
    run.penalty = penalty;
    run.error = e.what();
    return run;
  }
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

std::string cell(const std::optional<double>& v) { return v ? fmt::format("{:.6g}", *v) : "-"; }

}  // namespace

const BenchRun* BenchRow::find(const std::string& label) const {
  for (const auto& r : runs)
    if (r.label == label) return &r;
  return nullptr;
}

std::vector<BenchRow> bench_compare(const std::vector<BenchInstance>& instances, const BenchConfig& cfg) {
  SearchConfig sc;
  sc.epsilon = cfg.epsilon;
  sc.seed = cfg.seed;
  sc.max_backups = cfg.max_backups;
  sc.time_limit = cfg.time_limit;

  std::vector<BenchRow> rows;
  for (const auto& inst : instances) {
    const ExplicitMdp& mdp = inst.mdp.mdp;
    if (!mdp.start()) throw std::invalid_argument("bench instance " + inst.name + " has no start state");
    BenchRow row;
    row.instance = inst.name;
    row.states = mdp.num_states();
    row.dead_ends = detect_dead_ends(mdp).size();
    row.reachable = reachable_from(mdp, *mdp.start()).size();

    row.runs.push_back(run_lrtdp("lrtdp", mdp, cfg.penalty, true, sc));
    if (cfg.big_penalty > 0.0) {
      row.runs.push_back(run_lrtdp("lrtdp-bigD", mdp, cfg.big_penalty, true, sc));
      if (cfg.no_heuristic_run) row.runs.push_back(run_lrtdp("lrtdp-bigD-noh", mdp, cfg.big_penalty, false, sc));
    }
    try {
      const ExplicitMdp inf = mdp.with_penalty(kInfinity);
      row.runs.push_back(fill("shs", kInfinity,
                              shs(inf, Heuristic::reachability_prob(inf), Heuristic::zero_cost(), sc), inf));
    } catch (const std::exception& e) {
      BenchRun run;
      run.label = "shs";
      run.error = e.what();
      row.runs.push_back(run);
    }

    const BenchRun* a = row.find("lrtdp");
    const BenchRun* b = row.find("shs");
    row.agree = a && b && a->goal_prob && b->goal_prob && close(*a->goal_prob, *b->goal_prob, cfg.agree_tol) &&
                close(*a->cond_cost, *b->cond_cost, cfg.agree_tol);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<BenchInstance> load_manifest(const json& manifest, const std::filesystem::path& base_dir,
                                         BenchConfig& cfg) {
  cfg.penalty = manifest.value("penalty", cfg.penalty);
  cfg.big_penalty = manifest.value("big_penalty", cfg.big_penalty);
  cfg.no_heuristic_run = manifest.value("no_heuristic_run", cfg.no_heuristic_run);
  cfg.epsilon = manifest.value("epsilon", cfg.epsilon);
  cfg.seed = manifest.value("seed", cfg.seed);
  cfg.max_backups = manifest.value("max_backups", cfg.max_backups);
  cfg.time_limit = manifest.value("time_limit", cfg.time_limit);
  cfg.agree_tol = manifest.value("agree_tol", cfg.agree_tol);

  auto it = manifest.find("instances");
  if (it == manifest.end() || !it->is_array()) throw std::invalid_argument("manifest needs an \"instances\" array");
  std::vector<BenchInstance> out;
  for (const auto& entry : *it) {
    BenchInstance inst;
    inst.name = entry.value("name", std::string("instance") + std::to_string(out.size()));
    if (auto g = entry.find("grid"); g != entry.end()) {
      inst.mdp = generate_grid(parse_grid_spec(*g), entry.value("seed", std::uint64_t{0}));
    } else if (auto f = entry.find("file"); f != entry.end()) {
      std::filesystem::path path = f->get<std::string>();
      if (path.is_relative()) path = base_dir / path;
      inst.mdp = load_mdp(path);
    } else {
      throw std::invalid_argument("manifest instance " + inst.name + " needs \"grid\" or \"file\"");
    }
    out.push_back(std::move(inst));
  }
  return out;
}

std::string bench_table_text(const std::vector<BenchRow>& rows) {
  std::string out = fmt::format("{:<18} {:>6} {:>5} {:<15} {:>10} {:>10} {:>8} {:>7} {:>9} {:>10} {}\n", "instance",
                                "|S|", "dead", "run", "D", "time_s", "backups", "touched", "builds", "P(s0)",
                                "status");
  for (const auto& row : rows) {
    for (const auto& r : row.runs) {
      std::string status = !r.error.empty() ? "error: " + r.error
                           : r.timed_out    ? "timed-out"
                           : r.dead_start   ? "dead-start"
                                            : "ok";
      out += fmt::format("{:<18} {:>6} {:>5} {:<15} {:>10.3g} {:>10.4f} {:>10} {:>7} {:>9} {:>10} {}\n", row.instance,
                         row.states, row.dead_ends, r.label, r.penalty, r.wall_s, r.backups, r.states_touched,
                         r.greedy_graph_builds, cell(r.goal_prob), status);
    }
    out += fmt::format("{:<18} agree(lrtdp, shs) at s0: {}\n", row.instance, row.agree ? "yes" : "no");
  }
  return out;
}

json bench_table_json(const std::vector<BenchRow>& rows, const BenchConfig& cfg) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json doc;
  doc["config"] = {{"penalty", cfg.penalty},       {"big_penalty", cfg.big_penalty}, {"epsilon", cfg.epsilon},
                   {"seed", cfg.seed},             {"max_backups", cfg.max_backups}, {"time_limit", cfg.time_limit},
                   {"agree_tol", cfg.agree_tol}};
  json arr = json::array();
  for (const auto& row : rows) {
    json runs = json::array();
    for (const auto& r : row.runs) {
      runs.push_back({{"label", r.label},
                      {"penalty", std::isinf(r.penalty) ? json("inf") : json(r.penalty)},
                      {"wall_s", r.wall_s},
                      {"backups", r.backups},
                      {"states_touched", r.states_touched},
                      {"greedy_graph_builds", r.greedy_graph_builds},
                      {"greedy_graph_max_states", r.greedy_graph_max_states},
                      {"converged", r.converged},
                      {"timed_out", r.timed_out},
                      {"dead_start", r.dead_start},
                      {"goal_prob", opt(r.goal_prob)},
                      {"cond_cost", opt(r.cond_cost)},
                      {"error", r.error}});
    }
    arr.push_back({{"instance", row.instance},
                   {"states", row.states},
                   {"dead_ends", row.dead_ends},
                   {"reachable", row.reachable},
                   {"agree", row.agree},
                   {"runs", runs}});
  }
  doc["rows"] = arr;
  return doc;
}

}  // namespace deadend
