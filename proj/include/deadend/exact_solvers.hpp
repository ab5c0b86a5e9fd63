#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <vector>

#include "deadend/backup.hpp"
#include "deadend/mdp_model.hpp"

namespace deadend {

inline constexpr double kDefaultEpsilon = 1e-6;

struct ViConfig {
  double epsilon = kDefaultEpsilon;
  std::size_t max_sweeps = 1'000'000;
  /// Initial table (heuristic). Empty means zeros for cost solvers and ones
  /// for goal-probability solvers.
  std::vector<double> init;
  /// Tie tolerance for greedy action sets.
  double eta = kDefaultGreedyTolerance;
  /// Tolerance for P*-greedy actions when building the conditional MDP.
  /// Unset means 10 * epsilon.
  std::optional<double> coupling_eta;

  /// Residual threshold of the goal-probability stage of ivi. Conditional
  /// transitions divide by P*, so its error is amplified where P* is small.
  /// Unset means epsilon / 1000.
  std::optional<double> prob_epsilon;

  double effective_coupling_eta() const { return coupling_eta.value_or(10.0 * epsilon); }
  double effective_prob_epsilon() const { return prob_epsilon.value_or(1e-3 * epsilon); }
};

struct SearchStats {
  std::size_t states_touched = 0;
  std::size_t greedy_graph_builds = 0;
  std::size_t greedy_graph_max_states = 0;
  std::size_t greedy_graph_max_actions = 0;
  /// Trap-elimination rounds that lowered at least one component.
  std::size_t trap_rounds = 0;
};

struct SolveReport {
  ValueFn values;
  std::optional<GoalProbFn> probs;
  Policy policy;
  std::size_t sweeps = 0;
  std::size_t backups = 0;
  double residual_final = kInfinity;
  std::chrono::duration<double> wall_time{0.0};
  bool converged = false;
  /// Set when s0 has goal probability 0; the policy is then empty.
  bool dead_start = false;
  std::optional<std::uint64_t> seed;
  SearchStats stats;
  /// States with a memoized value (heuristic search only).
  std::vector<bool> touched;
};

/// Gauss-Seidel VI with Bellman backups. Stops at residual <= epsilon or
/// after max_sweeps (converged = false, e.g. when dead ends make costs
/// diverge).
SolveReport vi_ssp(const ExplicitMdp& mdp, const ViConfig& cfg = {});

/// VI with finite-penalty backups min{D, ...}. Throws std::invalid_argument
/// when mdp.penalty() is infinite.
SolveReport vi_fsspude(const ExplicitMdp& mdp, const ViConfig& cfg = {});

/// MAXPROB VI from goals = 1, others = 0. The iterates increase to the least
/// fixed point, which is P*. Result in `probs`.
SolveReport maxprob_vi_from_below(const ExplicitMdp& mdp, double epsilon = kDefaultEpsilon,
                                  std::size_t max_sweeps = 1'000'000);

/// MAXPROB VI from an arbitrary [0,1] table, alternating sweeps to a fixed
/// point with trap elimination until no trap remains. Result in `probs`.
SolveReport vi_mp(const ExplicitMdp& mdp, const ViConfig& cfg = {});

/// Infinite-penalty VI: P* by vi_mp, then conditional costs [J*|P*] on the
/// renormalized MDP and the policy derived from them. `values` holds
/// [J*|P*] (0 on states with P* = 0). The MDP penalty is ignored.
SolveReport ivi(const ExplicitMdp& mdp, const ViConfig& cfg = {});

/// The MDP with one extra action (id = num_actions) in every non-goal state
/// that reaches the first goal with probability 1 at cost D. Solving it with
/// vi_ssp is equivalent to solving `mdp` with finite-penalty backups.
ExplicitMdp give_up_augmentation(const ExplicitMdp& mdp, double penalty);

/// Greedy policy (lowest ActionId among ties) on every non-goal state.
Policy greedy_policy(const ExplicitMdp& mdp, const ValueFn& values, double eta = kDefaultGreedyTolerance);

}  // namespace deadend
