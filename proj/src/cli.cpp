#include "deadend/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <map>
#include <memory>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "deadend/bench.hpp"
#include "deadend/conditional.hpp"
#include "deadend/exact_solvers.hpp"
#include "deadend/gridworld.hpp"
#include "deadend/heuristic_search.hpp"
#include "deadend/mdp_io.hpp"
#include "deadend/oracle.hpp"
#include "deadend/simulate.hpp"

namespace deadend {

using nlohmann::json;

namespace {

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void setup_logging() {
  static std::shared_ptr<spdlog::logger> logger = [] {
    auto l = spdlog::stderr_color_mt("deadend-mdp");
    spdlog::set_default_logger(l);
    return l;
  }();
  const char* env = std::getenv("DEADEND_MDP_LOG");
  const std::string level = env ? env : "warn";
  logger->set_level(spdlog::level::from_str(level));
}

double parse_penalty(const std::string& text) {
  if (text == "inf" || text == "Infinity") return kInfinity;
  try {
    std::size_t used = 0;
    double d = std::stod(text, &used);
    if (used != text.size() || !(d > 0.0)) throw std::invalid_argument(text);
    return d;
  } catch (const std::exception&) {
    throw InputError("--penalty must be a positive number or \"inf\", got \"" + text + "\"");
  }
}

json read_json_file(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

std::string fmt_value(double v) { return std::isinf(v) ? (v > 0 ? "inf" : "-inf") : fmt::format("{:.10g}", v); }

void print_policy(std::ostream& out, const NamedMdp& named, const Policy& policy, const ValueFn* values,
                  const GoalProbFn* probs) {
  for (StateId s = 0; s < policy.size(); ++s) {
    auto a = policy.action(s);
    if (!a) continue;
    out << fmt::format("  {:<12} {:<8}", named.state_names[s], named.action_names[*a]);
    if (probs) out << fmt::format("  P={}", fmt_value((*probs)[s]));
    if (values && !values->empty()) out << fmt::format("  J={}", fmt_value((*values)[s]));
    out << "\n";
  }
}

struct SolveOptions {
  std::string algo;
  std::string input;
  std::string penalty;
  double eps = kDefaultEpsilon;
  double eta = kDefaultGreedyTolerance;
  std::uint64_t seed = 0;
  std::size_t max_backups = 50'000'000;
  std::size_t max_sweeps = 100'000;
  double time_limit = 0.0;
  std::string out;
};

int cmd_solve(const SolveOptions& o, std::ostream& out) {
  NamedMdp named = load_mdp(o.input);
  if (!o.penalty.empty()) named.mdp = named.mdp.with_penalty(parse_penalty(o.penalty));
  const ExplicitMdp& mdp = named.mdp;

  ViConfig vc;
  vc.epsilon = o.eps;
  vc.eta = o.eta;
  vc.max_sweeps = o.max_sweeps;
  SearchConfig sc;
  sc.epsilon = o.eps;
  sc.eta = o.eta;
  sc.seed = o.seed;
  sc.max_backups = o.max_backups;
  sc.time_limit = o.time_limit;

  auto need_start = [&] {
    if (!mdp.start()) throw InputError(o.algo + " needs a start state in the input");
  };
  auto need_penalty = [&] {
    if (!mdp.has_finite_penalty()) throw InputError(o.algo + " needs a finite penalty (--penalty D)");
  };

  SolveReport rep;
  spdlog::info("solving {} ({} states, {} actions) with {}", o.input, mdp.num_states(), mdp.num_actions(), o.algo);
  if (o.algo == "vi-ssp") {
    rep = vi_ssp(mdp, vc);
  } else if (o.algo == "vi-fsspude") {
    need_penalty();
    rep = vi_fsspude(mdp, vc);
  } else if (o.algo == "vi-mp") {
    rep = vi_mp(mdp, vc);
  } else if (o.algo == "ivi") {
    rep = ivi(mdp, vc);
  } else if (o.algo == "lrtdp") {
    need_start();
    need_penalty();
    rep = lrtdp(mdp, BackupMode::kFinitePenalty, Heuristic::deadend_aware_cost(mdp), sc);
  } else if (o.algo == "fret") {
    need_start();
    rep = fret(mdp, Heuristic::reachability_prob(mdp), sc);
  } else if (o.algo == "shs") {
    need_start();
    rep = shs(mdp, Heuristic::reachability_prob(mdp), Heuristic::zero_cost(), sc);
  } else {
    throw InputError("unknown algorithm " + o.algo);
  }

  bool dead_start = rep.dead_start;
  if (mdp.start() && dead_end_mask(mdp)[*mdp.start()]) dead_start = true;
  if (rep.probs && mdp.start() && (*rep.probs)[*mdp.start()] <= kProbabilityFloor) dead_start = true;

  out << fmt::format("algorithm: {}\nconverged: {}\nsweeps: {}\nbackups: {}\nresidual: {}\nwall_time_s: {:.6f}\n",
                     o.algo, rep.converged ? "yes" : "no", rep.sweeps, rep.backups, fmt_value(rep.residual_final),
                     rep.wall_time.count());
  if (rep.stats.states_touched > 0) out << fmt::format("states_touched: {}\n", rep.stats.states_touched);
  if (rep.stats.greedy_graph_builds > 0) out << fmt::format("greedy_graph_builds: {}\n", rep.stats.greedy_graph_builds);
  if (auto s0 = mdp.start()) {
    if (rep.probs) out << fmt::format("P(s0): {}\n", fmt_value((*rep.probs)[*s0]));
    if (!rep.values.empty()) out << fmt::format("J(s0): {}\n", fmt_value(rep.values[*s0]));
  }
  if (dead_start) out << "start state is a dead end\n";
  out << "policy:\n";
  print_policy(out, named, rep.policy, &rep.values, rep.probs ? &*rep.probs : nullptr);

  if (!o.out.empty()) write_text_file(o.out, serialize_report(named, rep, o.algo).dump(2) + "\n");
  if (dead_start) return kExitDeadStart;
  return rep.converged ? kExitOk : kExitUnconverged;
}

int cmd_oracle(const std::string& input, const std::string& criterion, const std::string& penalty, bool all_states,
               std::ostream& out) {
  NamedMdp named = load_mdp(input);
  if (!penalty.empty()) named.mdp = named.mdp.with_penalty(parse_penalty(penalty));
  const ExplicitMdp& mdp = named.mdp;
  Criterion c;
  if (criterion == "cost") {
    c = Criterion::kExpectedCost;
  } else if (criterion == "finite-penalty") {
    if (!mdp.has_finite_penalty()) throw InputError("finite-penalty criterion needs a finite penalty (--penalty D)");
    c = Criterion::kFinitePenalty;
  } else if (criterion == "lex") {
    c = Criterion::kLexicographic;
  } else {
    throw InputError("unknown criterion " + criterion);
  }
  EnumerateOptions opts;
  opts.rooted = !all_states;
  OracleResult res;
  try {
    res = enumerate_optimal(mdp, c, opts);
  } catch (const std::length_error& e) {
    throw InputError(std::string("oracle refused: ") + e.what());
  }

  out << fmt::format("criterion: {}\ndomain_states: {}\npolicies_evaluated: {}\n", criterion, res.domain.size(),
                     res.policies_evaluated);
  out << "optimal values:\n";
  for (StateId s : res.domain) {
    out << fmt::format("  {:<12}", named.state_names[s]);
    if (!res.probs.empty()) out << fmt::format(" P={}", fmt_value(res.probs[s]));
    out << fmt::format(" J={}\n", fmt_value(res.values[s]));
  }
  const bool rooted = mdp.start().has_value() && opts.rooted;
  const auto& set = rooted ? res.optimal_at_start : res.optimal_everywhere;
  out << fmt::format("optimal policies ({}): {}\n", rooted ? "at s0" : "everywhere", set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    out << fmt::format(" policy {}:\n", i);
    print_policy(out, named, set[i], nullptr, nullptr);
  }
  return kExitOk;
}

int cmd_sweep(const std::string& input, double dmin, double dmax, std::size_t steps, std::ostream& out) {
  if (!(dmin > 0.0) || !(dmax >= dmin) || steps < 1) throw InputError("need 0 < dmin <= dmax and steps >= 1");
  const NamedMdp named = load_mdp(input);
  ThresholdReport rep;
  try {
    rep = find_penalty_threshold(named.mdp, dmin, dmax, steps);
  } catch (const std::length_error& e) {
    throw InputError(std::string("oracle refused: ") + e.what());
  }
  out << fmt::format("{:>14} {:>8} {:>8} {:>6} {}\n", "D", "fp_opt", "lex_opt", "agree", "note");
  for (const auto& r : rep.rows) {
    out << fmt::format("{:>14.6g} {:>8} {:>8} {:>6} {}\n", r.penalty, r.finite_penalty_optimal,
                       r.lexicographic_optimal, r.agree ? "yes" : "no",
                       r.strict_superset ? "finite-penalty set strictly larger" : "");
  }
  if (rep.found()) {
    out << fmt::format("threshold: agreement from D = {:.6g} upward on this grid\n", *rep.threshold);
  } else {
    out << "threshold: not found (exceeds the grid range)\n";
  }
  return kExitOk;
}

int cmd_simulate(const std::string& input, const std::string& policy_file, std::size_t trials, std::size_t horizon,
                 std::uint64_t seed, std::ostream& out) {
  if (horizon < 1) throw InputError("--horizon must be at least 1");
  const NamedMdp named = load_mdp(input);
  if (!named.mdp.start()) throw InputError("simulate needs a start state in the input");
  const Policy policy = load_policy(named, policy_file);
  SimReport rep;
  try {
    rep = simulate(named.mdp, policy, trials, horizon, seed);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  out << fmt::format(
      "trials: {}\ngoal_hits: {}\ndead_hits: {}\nhorizon_cutoffs: {}\nempirical_goal_prob: {:.6f}\n"
      "mean_cost_given_goal: {:.6f}\nsd_cost_given_goal: {:.6f}\nseed: {}\n",
      rep.trials, rep.goal_hits, rep.dead_hits, rep.horizon_cutoffs, rep.empirical_goal_prob,
      rep.mean_cost_given_goal, rep.sd_cost_given_goal, rep.seed);
  try {
    const auto eval = evaluate_policy(named.mdp, complete_policy(named.mdp, policy));
    const StateId s0 = *named.mdp.start();
    out << fmt::format("exact_goal_prob: {:.6f}\nexact_cost_given_goal: {}\n", eval.goal_prob[s0],
                       fmt_value(eval.conditional_cost[s0]));
  } catch (const std::exception& e) {
    spdlog::info("exact evaluation skipped: {}", e.what());
  }
  return kExitOk;
}

int cmd_gen_grid(const std::string& spec_file, std::uint64_t seed, const std::string& out_file, std::ostream& out) {
  const GridSpec spec = parse_grid_spec(read_json_file(spec_file));
  const NamedMdp named = generate_grid(spec, seed);
  const std::string text = serialize_mdp(named).dump(2) + "\n";
  if (out_file.empty()) {
    out << text;
  } else {
    write_text_file(out_file, text);
    out << fmt::format("wrote {} ({} states, {} dead ends)\n", out_file, named.mdp.num_states(),
                       detect_dead_ends(named.mdp).size());
  }
  return kExitOk;
}

int cmd_bench(const std::string& manifest_file, const std::string& out_dir, std::ostream& out) {
  const json manifest = read_json_file(manifest_file);
  BenchConfig cfg;
  const auto instances =
      load_manifest(manifest, std::filesystem::path(manifest_file).parent_path(), cfg);
  const auto rows = bench_compare(instances, cfg);
  const std::string text = bench_table_text(rows);
  out << text;
  if (!out_dir.empty()) {
    write_text_file(std::filesystem::path(out_dir) / "bench.txt", text);
    write_text_file(std::filesystem::path(out_dir) / "bench.json", bench_table_json(rows, cfg).dump(2) + "\n");
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  setup_logging();
  CLI::App app{"Goal-oriented MDP solvers with dead ends", "deadend-mdp"};
  app.require_subcommand(1);

  SolveOptions so;
  auto* solve = app.add_subcommand("solve", "Solve an MDP file");
  solve->add_option("--algo", so.algo, "vi-ssp | vi-fsspude | vi-mp | ivi | lrtdp | fret | shs")
      ->required()
      ->check(CLI::IsMember({"vi-ssp", "vi-fsspude", "vi-mp", "ivi", "lrtdp", "fret", "shs"}));
  solve->add_option("--input", so.input, "MDP file")->required();
  solve->add_option("--penalty", so.penalty, "dead-end penalty D (number or inf); overrides the file");
  solve->add_option("--eps", so.eps, "convergence threshold")->check(CLI::PositiveNumber);
  solve->add_option("--eta", so.eta, "greedy tie tolerance")->check(CLI::NonNegativeNumber);
  solve->add_option("--seed", so.seed, "random seed (heuristic search)");
  solve->add_option("--max-backups", so.max_backups, "backup budget (heuristic search)");
  solve->add_option("--max-sweeps", so.max_sweeps, "sweep cap (value iteration)");
  solve->add_option("--time-limit", so.time_limit, "seconds (heuristic search); 0 = none");
  solve->add_option("--out", so.out, "write the report and policy as JSON");

  std::string input, criterion, penalty;
  bool all_states = false;
  auto* oracle = app.add_subcommand("oracle", "Exhaustive policy enumeration on a small MDP");
  oracle->add_option("--criterion", criterion, "cost | finite-penalty | lex")
      ->required()
      ->check(CLI::IsMember({"cost", "finite-penalty", "lex"}));
  oracle->add_option("--input", input, "MDP file")->required();
  oracle->add_option("--penalty", penalty, "dead-end penalty D; overrides the file");
  oracle->add_flag("--all-states", all_states, "enumerate over all states, not only those reachable from s0");

  double dmin = 1.0, dmax = 1000.0;
  std::size_t steps = 16;
  auto* sweep = app.add_subcommand("sweep-penalty", "Locate the penalty threshold on a geometric grid");
  sweep->add_option("--input", input, "MDP file")->required();
  sweep->add_option("--dmin", dmin, "smallest penalty")->required();
  sweep->add_option("--dmax", dmax, "largest penalty")->required();
  sweep->add_option("--steps", steps, "grid points")->required();

  std::string policy_file;
  std::size_t trials = 100'000, horizon = 10'000;
  std::uint64_t seed = 0;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo rollouts of a policy");
  sim->add_option("--input", input, "MDP file")->required();
  sim->add_option("--policy", policy_file, "policy file")->required();
  sim->add_option("--trials", trials, "number of rollouts");
  sim->add_option("--horizon", horizon, "step cap per rollout");
  sim->add_option("--seed", seed, "random seed");

  std::string spec_file, out_file;
  auto* gen = app.add_subcommand("gen-grid", "Generate a gridworld MDP file");
  gen->add_option("--spec", spec_file, "grid spec JSON")->required();
  gen->add_option("--seed", seed, "seed for random pits");
  gen->add_option("--out", out_file, "output file (stdout when absent)");

  std::string manifest, out_dir;
  auto* bench = app.add_subcommand("bench", "Compare lrtdp (finite penalty) with shs");
  bench->add_option("--manifest", manifest, "bench manifest JSON")->required();
  bench->add_option("--out", out_dir, "directory for bench.txt and bench.json");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();  // CLI11 wants the arguments reversed, without argv[0]
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (*solve) return cmd_solve(so, out);
    if (*oracle) return cmd_oracle(input, criterion, penalty, all_states, out);
    if (*sweep) return cmd_sweep(input, dmin, dmax, steps, out);
    if (*sim) return cmd_simulate(input, policy_file, trials, horizon, seed, out);
    if (*gen) return cmd_gen_grid(spec_file, seed, out_file, out);
    if (*bench) return cmd_bench(manifest, out_dir, out);
  } catch (const ParseError& e) {
    err << "input error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return kExitInputError;
  } catch (const GridSpecError& e) {
    err << "grid spec error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace deadend
