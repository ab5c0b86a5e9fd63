#include "deadend/exact_solvers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "deadend/conditional.hpp"
#include "deadend/end_components.hpp"

namespace deadend {
namespace {

using Clock = std::chrono::steady_clock;

std::vector<double> initial_table(const ExplicitMdp& mdp, const std::vector<double>& init, double fill,
                                  double goal_value) {
  std::vector<double> table;
  if (init.empty()) {
    table.assign(mdp.num_states(), fill);
  } else if (init.size() == mdp.num_states()) {
    table = init;
  } else {
    throw std::invalid_argument("initial table has " + std::to_string(init.size()) + " entries, expected " +
                                std::to_string(mdp.num_states()));
  }
  for (StateId g : mdp.goals()) table[g] = goal_value;
  return table;
}

// In-place sweeps of `backup` over all non-goal states until SweepStop
// accepts or the sweep budget runs out. Returns true on convergence.
template <typename Backup>
bool sweep(const ExplicitMdp& mdp, std::vector<double>& table, Backup&& backup, double epsilon,
           std::size_t max_sweeps, SolveReport& report) {
  const auto n = mdp.num_states();
  SweepStop stop(epsilon);
  while (report.sweeps < max_sweeps) {
    double change = 0.0;
    for (StateId s = 0; s < n; ++s) {
      if (mdp.is_goal(s)) continue;
      const double updated = backup(s);
      change = std::max(change, value_gap(table[s], updated));
      table[s] = updated;
      ++report.backups;
    }
    ++report.sweeps;
    report.residual_final = change;
    if (stop(change)) return true;
  }
  return false;
}

void check_config(const ViConfig& cfg) {
  if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (cfg.max_sweeps < 1) throw std::invalid_argument("max_sweeps must be at least 1");
}

}  // namespace

Policy greedy_policy(const ExplicitMdp& mdp, const ValueFn& values, double eta) {
  Policy policy(mdp.num_states());
  for (StateId s = 0; s < mdp.num_states(); ++s) {
    if (mdp.is_goal(s) || mdp.rows(s).empty()) continue;
    policy.assign(s, greedy_action(mdp, values, s, eta));
  }
  return policy;
}

SolveReport vi_ssp(const ExplicitMdp& mdp, const ViConfig& cfg) {
  check_config(cfg);
  const auto started = Clock::now();
  SolveReport report;
  report.values = initial_table(mdp, cfg.init, 0.0, 0.0);
  auto& values = report.values;
  report.converged = sweep(
      mdp, values, [&](StateId s) { return bellman_backup(mdp, values, s); }, cfg.epsilon, cfg.max_sweeps,
      report);
  report.policy = greedy_policy(mdp, values, cfg.eta);
  report.wall_time = Clock::now() - started;
  return report;
}

SolveReport vi_fsspude(const ExplicitMdp& mdp, const ViConfig& cfg) {
  check_config(cfg);
  if (!mdp.has_finite_penalty()) throw std::invalid_argument("vi_fsspude requires a finite penalty");
  const auto started = Clock::now();
  SolveReport report;
  report.values = initial_table(mdp, cfg.init, 0.0, 0.0);
  auto& values = report.values;
  report.converged = sweep(
      mdp, values, [&](StateId s) { return finite_penalty_backup(mdp, values, s); }, cfg.epsilon,
      cfg.max_sweeps, report);
  report.policy = greedy_policy(mdp, values, cfg.eta);
  report.wall_time = Clock::now() - started;
  return report;
}

SolveReport maxprob_vi_from_below(const ExplicitMdp& mdp, double epsilon, std::size_t max_sweeps) {
  const auto started = Clock::now();
  SolveReport report;
  GoalProbFn probs(mdp.num_states(), 0.0);
  for (StateId g : mdp.goals()) probs[g] = 1.0;
  report.converged = sweep(
      mdp, probs, [&](StateId s) { return maxprob_backup(mdp, probs, s); }, epsilon, max_sweeps, report);
  report.probs = std::move(probs);
  report.wall_time = Clock::now() - started;
  return report;
}

SolveReport vi_mp(const ExplicitMdp& mdp, const ViConfig& cfg) {
  check_config(cfg);
  const auto started = Clock::now();
  SolveReport report;
  GoalProbFn probs = initial_table(mdp, cfg.init, 1.0, 1.0);
  for (double& p : probs) p = std::clamp(p, 0.0, 1.0);
  const std::vector<bool> everywhere(mdp.num_states(), true);

  while (true) {
    if (!sweep(
            mdp, probs, [&](StateId s) { return maxprob_backup(mdp, probs, s); }, cfg.epsilon, cfg.max_sweeps,
            report))
      break;
    const TrapElimination te = eliminate_traps(mdp, probs, everywhere, cfg.eta, kTrapTolerance);
    ++report.stats.greedy_graph_builds;
    report.stats.greedy_graph_max_states = std::max(report.stats.greedy_graph_max_states, te.graph_states);
    report.stats.greedy_graph_max_actions = std::max(report.stats.greedy_graph_max_actions, te.graph_actions);
    if (te.traps == 0) {
      report.converged = true;
      break;
    }
    ++report.stats.trap_rounds;
  }
  report.probs = std::move(probs);
  report.wall_time = Clock::now() - started;
  return report;
}

SolveReport ivi(const ExplicitMdp& mdp, const ViConfig& cfg) {
  check_config(cfg);
  const auto started = Clock::now();
  ViConfig prob_cfg = cfg;
  prob_cfg.init.clear();
  prob_cfg.epsilon = cfg.effective_prob_epsilon();
  SolveReport report = vi_mp(mdp, prob_cfg);
  const GoalProbFn& probs = *report.probs;

  const ConditionalMdp cond = build_conditional(mdp, probs, cfg.effective_coupling_eta());
  ViConfig cost_cfg = cfg;
  cost_cfg.init.clear();
  SolveReport inner;
  report.values = conditional_values(cond, cost_cfg, &inner);
  report.sweeps += inner.sweeps;
  report.backups += inner.backups;
  report.residual_final = std::max(report.residual_final, inner.residual_final);
  report.converged = report.converged && inner.converged;

  if (mdp.start() && !cond.contains(*mdp.start())) {
    report.dead_start = true;
    report.policy = Policy(mdp.num_states());
  } else {
    report.policy = extract_policy(cond, report.values, cfg.eta);
  }
  report.wall_time = Clock::now() - started;
  return report;
}

ExplicitMdp give_up_augmentation(const ExplicitMdp& mdp, double penalty) {
  if (mdp.goals().empty()) throw std::invalid_argument("give-up augmentation needs at least one goal");
  const auto give_up = static_cast<ActionId>(mdp.num_actions());
  const StateId target = mdp.goals().front();
  MdpBuilder builder(mdp.num_states(), mdp.num_actions() + 1);
  for (StateId s = 0; s < mdp.num_states(); ++s) {
    for (const auto& row : mdp.rows(s)) builder.add_row(s, row.action, row.cost, row.outcomes);
    if (mdp.is_goal(s)) {
      builder.add_goal(s);
      builder.add_row(s, give_up, 0.0, {Outcome{s, 1.0}});
    } else {
      builder.add_row(s, give_up, penalty, {Outcome{target, 1.0}});
    }
  }
  builder.set_start(mdp.start());
  return builder.build();
}

}  // namespace deadend
