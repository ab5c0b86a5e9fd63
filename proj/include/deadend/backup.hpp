#pragma once

#include <span>
#include <vector>

#include "deadend/mdp_model.hpp"

namespace deadend {

/// Default tolerance for treating two action scores as tied.
inline constexpr double kDefaultGreedyTolerance = 1e-9;

enum class GreedyMode { kMinCost, kMaxProb };

struct GreedySet {
  StateId state = 0;
  std::vector<ActionId> actions;  // ascending ActionId
  double tolerance = kDefaultGreedyTolerance;

  ActionId first() const { return actions.front(); }
};

/// C(s,a) + sum T(s,a,s') J(s'). Saturates to +inf if any successor is +inf.
double q_value(const ActionRow& row, std::span<const double> values);
/// Throws std::invalid_argument if `a` is not applicable in `s`.
double q_value(const ExplicitMdp& mdp, std::span<const double> values, StateId s, ActionId a);

/// sum T(s,a,s') P(s'), the MAXPROB score of one row.
double prob_value(const ActionRow& row, std::span<const double> probs);

/// min_a q_value(s, a). Goals return 0.
double bellman_backup(const ExplicitMdp& mdp, std::span<const double> values, StateId s);

/// min{D, min_a q_value(s, a)} with D = mdp.penalty(). Goals return 0.
/// Throws std::invalid_argument when the penalty is infinite.
double finite_penalty_backup(const ExplicitMdp& mdp, std::span<const double> values, StateId s);

/// max_a sum T(s,a,s') P(s'). Goals return 1.
double maxprob_backup(const ExplicitMdp& mdp, std::span<const double> probs, StateId s);

/// All actions scoring within `eta` of the best score at `s` under `mode`.
GreedySet greedy_set(const ExplicitMdp& mdp, std::span<const double> table, StateId s, GreedyMode mode,
                     double eta = kDefaultGreedyTolerance);

/// Lowest-id member of the min-cost greedy set.
ActionId greedy_action(const ExplicitMdp& mdp, std::span<const double> values, StateId s,
                       double eta = kDefaultGreedyTolerance);

/// max over `scope` of |next[s] - prev[s]|, with inf - inf counted as 0.
double residual(std::span<const double> prev, std::span<const double> next, std::span<const StateId> scope);
/// Same over every state.
double residual(std::span<const double> prev, std::span<const double> next);

/// |a - b| with the inf - inf = 0 convention.
double value_gap(double a, double b);

/// Stopping rule for sweep-based solvers, fed the largest change of each
/// sweep. A small change alone says little when the iteration contracts
/// slowly (a 0.999 self-loop moves 1e-6 per sweep while 1e-3 away from the
/// fixed point), so the remaining distance is also estimated from the ratio
/// q of successive changes as change * q / (1 - q), and both must be
/// <= epsilon.
class SweepStop {
 public:
  explicit SweepStop(double epsilon) : epsilon_(epsilon) {}
  bool operator()(double change);

 private:
  double epsilon_;
  double previous_ = -1.0;
  double q_previous_ = 0.0;
};

}  // namespace deadend
