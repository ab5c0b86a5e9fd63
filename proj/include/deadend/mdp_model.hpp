#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace deadend {

using StateId = std::uint32_t;
using ActionId = std::uint32_t;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Tolerance used when checking that a transition row is a distribution.
inline constexpr double kProbabilitySumTolerance = 1e-9;

struct Outcome {
  StateId next;
  double prob;
};

/// One applicable action in one state: its cost and sparse successor list.
struct ActionRow {
  ActionId action;
  double cost;
  std::vector<Outcome> outcomes;
};

/// Per-state cost table J (may hold +inf).
using ValueFn = std::vector<double>;
/// Per-state goal-probability table P, entries in [0, 1].
using GoalProbFn = std::vector<double>;

/// Explicit tabular goal-oriented MDP <S, A, T, C, G, s0, D>.
///
/// States and actions are dense ids. Each state owns the rows of its
/// applicable actions, sorted by ActionId; zero-probability successors are
/// never stored. Instances are immutable once built (see MdpBuilder).
class ExplicitMdp {
 public:
  ExplicitMdp() = default;

  std::size_t num_states() const { return rows_.size(); }
  std::size_t num_actions() const { return num_actions_; }

  std::span<const ActionRow> rows(StateId s) const { return rows_[s]; }
  /// Row of action `a` in state `s`, or nullptr if `a` is not applicable.
  const ActionRow* find_row(StateId s, ActionId a) const;
  bool applicable(StateId s, ActionId a) const { return find_row(s, a) != nullptr; }

  bool is_goal(StateId s) const { return goal_mask_[s]; }
  const std::vector<StateId>& goals() const { return goals_; }
  const std::vector<bool>& goal_mask() const { return goal_mask_; }

  std::optional<StateId> start() const { return start_; }
  double penalty() const { return penalty_; }
  bool has_finite_penalty() const { return penalty_ < kInfinity; }

  /// Copy of this MDP with a different dead-end penalty D.
  ExplicitMdp with_penalty(double penalty) const;
  /// Copy of this MDP with a different (or no) start state.
  ExplicitMdp with_start(std::optional<StateId> start) const;

  bool operator==(const ExplicitMdp& other) const;

 private:
  friend class MdpBuilder;

  std::size_t num_actions_ = 0;
  std::vector<std::vector<ActionRow>> rows_;
  std::vector<bool> goal_mask_;
  std::vector<StateId> goals_;
  std::optional<StateId> start_;
  double penalty_ = kInfinity;
};

/// Accumulates states, rows and goals, then produces an ExplicitMdp.
///
/// The builder only rejects out-of-range ids (std::out_of_range) and
/// duplicate (state, action) rows (std::invalid_argument). Everything else,
/// such as unnormalized rows or non-absorbing goals, is kept as given so that
/// validate() can report it.
class MdpBuilder {
 public:
  MdpBuilder(std::size_t num_states, std::size_t num_actions);

  MdpBuilder& add_row(StateId s, ActionId a, double cost, std::vector<Outcome> outcomes);
  MdpBuilder& add_goal(StateId g);
  MdpBuilder& set_start(std::optional<StateId> s);
  MdpBuilder& set_penalty(double penalty);

  /// Goals without any row receive an absorbing zero-cost self-loop for
  /// every action id. Successor lists are merged per target and zero
  /// probabilities dropped.
  ExplicitMdp build() const;

 private:
  void check_state(StateId s) const;

  ExplicitMdp mdp_;
};

class Policy {
 public:
  Policy() = default;
  explicit Policy(std::size_t num_states) : actions_(num_states) {}

  std::size_t size() const { return actions_.size(); }
  void assign(StateId s, ActionId a) { actions_[s] = a; }
  void clear(StateId s) { actions_[s].reset(); }
  std::optional<ActionId> action(StateId s) const { return actions_[s]; }
  bool assigned(StateId s) const { return actions_[s].has_value(); }
  std::size_t assigned_count() const;
  bool empty() const { return assigned_count() == 0; }

  bool operator==(const Policy& other) const = default;
  auto operator<=>(const Policy& other) const = default;

 private:
  std::vector<std::optional<ActionId>> actions_;
};

enum class ViolationKind {
  kStateOutOfRange,
  kBadProbability,
  kProbabilitySum,
  kGoalNotAbsorbing,
  kGoalCostNonzero,
  kNoApplicableAction,
  kNonPositiveCost,
  kNonFiniteCost,
  kBadPenalty,
  kBadStart,
};

struct Violation {
  ViolationKind kind;
  std::optional<StateId> state;
  std::optional<ActionId> action;
  std::string message;
};

std::string to_string(ViolationKind kind);

/// Every violated structural invariant, empty iff the MDP is valid.
std::vector<Violation> validate(const ExplicitMdp& mdp);

/// States reachable from `source` along positive-probability outcomes of any
/// applicable action, as a membership mask.
std::vector<bool> reachable_mask(const ExplicitMdp& mdp, StateId source);
/// Sorted list form of reachable_mask.
std::vector<StateId> reachable_from(const ExplicitMdp& mdp, StateId source);

/// Mask of states from which no goal is graph-reachable (P*(s) = 0).
std::vector<bool> dead_end_mask(const ExplicitMdp& mdp);
/// Sorted list form of dead_end_mask.
std::vector<StateId> detect_dead_ends(const ExplicitMdp& mdp);

/// Sorted ids of the set bits of a mask.
std::vector<StateId> mask_to_ids(const std::vector<bool>& mask);

}  // namespace deadend
