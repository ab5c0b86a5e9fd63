#pragma once

#include <optional>
#include <vector>

#include "deadend/exact_solvers.hpp"
#include "deadend/mdp_model.hpp"

namespace deadend {

/// States whose goal probability is at or below this floor are treated as
/// dead ends when renormalizing.
inline constexpr double kProbabilityFloor = 1e-12;

/// The MDP conditioned on reaching the goal under P*-greedy actions.
///
/// Kept states are those with P*(s) above the floor; each keeps only its
/// P*-greedy actions, with transitions T(s,a,s') P*(s') / Z(s,a) over kept
/// successors, where Z(s,a) = sum T(s,a,s') P*(s'). The result is stored as
/// a compact standalone ExplicitMdp (ids 0..k-1) plus id maps to the base.
struct ConditionalMdp {
  ExplicitMdp mdp;
  std::vector<StateId> to_base;
  std::vector<std::optional<StateId>> from_base;
  GoalProbFn probs;  // base-indexed P* used for the construction
  std::size_t base_num_states = 0;

  bool empty() const { return to_base.empty(); }
  bool contains(StateId base_state) const { return from_base[base_state].has_value(); }
};

/// Builds the conditional MDP. When `root` is given, only kept states
/// reachable from it in the conditional MDP are materialized. Throws
/// std::invalid_argument if `probs` has the wrong size.
ConditionalMdp build_conditional(const ExplicitMdp& mdp, const GoalProbFn& probs, double eta,
                                 std::optional<StateId> root = std::nullopt);

/// [J*|P*] on base states: VI over the conditional MDP, 0 where P* = 0.
ValueFn conditional_values(const ConditionalMdp& cond, const ViConfig& cfg = {},
                           SolveReport* report = nullptr);

/// Arg-min over the kept greedy actions of the conditional Q-value, lowest
/// ActionId on ties; unassigned on dead ends and goals. `values` is
/// base-indexed.
Policy extract_policy(const ConditionalMdp& cond, const ValueFn& values,
                      double eta = kDefaultGreedyTolerance);

}  // namespace deadend
