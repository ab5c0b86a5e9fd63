#pragma once

#include <cstddef>
#include <vector>

#include "deadend/mdp_model.hpp"

namespace deadend {

/// A set of states together with, per member state, the row indices (into
/// mdp.rows(s)) of actions whose outcomes all stay inside the set. Every
/// member can reach every other member using only those actions.
struct EndComponent {
  std::vector<StateId> states;
  std::vector<std::vector<std::size_t>> rows;  // parallel to `states`
};

/// Maximal end components of the sub-MDP restricted to `scope` states and
/// the candidate rows `allowed[s]` (row indices) of each scope state.
/// Candidate rows with an outcome outside `scope` are discarded first.
std::vector<EndComponent> maximal_end_components(const ExplicitMdp& mdp, const std::vector<bool>& scope,
                                                 std::vector<std::vector<std::size_t>> allowed);

/// A component is lowered when its largest value exceeds the escape value by
/// more than this. Using the solver epsilon here leaves residues of that
/// size on dead ends, since each round only lowers to the current escape.
inline constexpr double kTrapTolerance = 1e-12;

struct TrapElimination {
  std::size_t components = 0;     // goal-free end components found
  std::size_t traps = 0;          // components whose values were lowered
  std::size_t graph_states = 0;   // non-goal states in the greedy graph
  std::size_t graph_actions = 0;  // greedy (state, action) pairs in the graph
};

/// One trap-elimination step on a goal-probability table.
///
/// Builds the graph of all `eta`-greedy actions over the non-goal states of
/// `scope`, finds its goal-free maximal end components, and for each
/// component U whose largest value exceeds its escape value by more than
/// `tol`, assigns every member the escape value: the best over member
/// actions with an outcome outside U of
///   sum_{s' not in U} T(s,a,s') P(s') / (1 - sum_{s' in U} T(s,a,s')),
/// or 0 when no such action exists.
TrapElimination eliminate_traps(const ExplicitMdp& mdp, std::vector<double>& probs, const std::vector<bool>& scope,
                                double eta, double tol);

}  // namespace deadend
