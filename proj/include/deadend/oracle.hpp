#pragma once

#include <optional>
#include <vector>

#include "deadend/mdp_model.hpp"

namespace deadend {

/// Tolerance for goal-probability equality inside the lexicographic order.
inline constexpr double kLexProbTolerance = 1e-7;

/// Exact evaluation of one deterministic policy on its absorbing chain.
/// Entries are NaN on states the policy's domain does not cover.
struct PolicyEvaluation {
  std::vector<bool> defined;
  ValueFn expected_cost;        // +inf where the goal is missed with positive probability
  GoalProbFn goal_prob;
  ValueFn conditional_cost;     // expected cost of goal-reaching trajectories, 0 where goal_prob = 0
  ValueFn finite_penalty_cost;  // least fixed point of J = min{D, C + T J}; equals expected_cost when D = inf
};

/// (goal probability, conditional cost), ordered by "higher probability
/// first, then lower cost".
struct LexValue {
  double prob = 0.0;
  double cond_cost = 0.0;
};

/// lhs < rhs in the preference order: rhs is strictly preferable.
bool lex_worse(const LexValue& lhs, const LexValue& rhs, double tol = kLexProbTolerance);
bool lex_equivalent(const LexValue& lhs, const LexValue& rhs, double tol = kLexProbTolerance);

/// Evaluates `policy` on every state it is assigned at, plus everything
/// reachable from those states under it. Throws std::invalid_argument if a
/// reachable non-goal state is unassigned or an assigned action is not
/// applicable.
PolicyEvaluation evaluate_policy(const ExplicitMdp& mdp, const Policy& policy);

/// Copy of `policy` with every unassigned non-goal state reachable under it
/// given its lowest-id applicable action. Partial policies from the solvers
/// leave dead ends open; the filled-in choice cannot change goal
/// probabilities or conditional costs there.
Policy complete_policy(const ExplicitMdp& mdp, const Policy& policy);

/// Goal probability of the policy's chain by from-below iteration to
/// residual <= epsilon (independent of the direct linear solve).
GoalProbFn goal_prob_iterative(const ExplicitMdp& mdp, const Policy& policy, double epsilon = 1e-13);

enum class Criterion { kExpectedCost, kFinitePenalty, kLexicographic };

struct EnumerateOptions {
  std::size_t max_states = 10;          // non-goal states in the enumeration domain
  std::size_t max_policies = 1'000'000;
  /// Enumerate over states reachable from s0 (when set) instead of all states.
  bool rooted = true;
};

struct OracleResult {
  std::vector<StateId> domain;  // non-goal states whose actions are enumerated
  std::size_t policies_evaluated = 0;
  /// Policies optimal at s0 (empty when there is no start state).
  std::vector<Policy> optimal_at_start;
  /// Policies optimal simultaneously at every domain state.
  std::vector<Policy> optimal_everywhere;
  /// Per-state optimum over all enumerated policies. For the lexicographic
  /// criterion `values` holds the conditional cost and `probs` the goal
  /// probability; otherwise `probs` is empty.
  ValueFn values;
  GoalProbFn probs;
};

/// Exhaustive search over deterministic Markovian policies. Throws
/// std::length_error when the domain or policy count exceeds the caps.
OracleResult enumerate_optimal(const ExplicitMdp& mdp, Criterion criterion, const EnumerateOptions& options = {});

struct PenaltyGridRow {
  double penalty = 0.0;
  std::size_t finite_penalty_optimal = 0;
  std::size_t lexicographic_optimal = 0;
  bool agree = false;
  /// Finite-penalty set strictly contains the lexicographic set.
  bool strict_superset = false;
};

struct ThresholdReport {
  std::vector<PenaltyGridRow> rows;
  /// Smallest grid penalty from which the optimal sets agree at every
  /// larger grid point; unset when the last grid point disagrees.
  std::optional<double> threshold;
  bool found() const { return threshold.has_value(); }
};

/// Geometric grid of `steps` penalties from d_lo to d_hi (inclusive).
std::vector<double> geometric_grid(double d_lo, double d_hi, std::size_t steps);

/// Compares the optimal-everywhere sets of the finite-penalty and
/// lexicographic criteria on each grid penalty.
ThresholdReport find_penalty_threshold(const ExplicitMdp& mdp, const std::vector<double>& grid,
                                       const EnumerateOptions& options = {});
ThresholdReport find_penalty_threshold(const ExplicitMdp& mdp, double d_lo, double d_hi, std::size_t steps,
                                       const EnumerateOptions& options = {});

}  // namespace deadend
