#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "deadend/conditional.hpp"
#include "deadend/exact_solvers.hpp"
#include "deadend/mdp_model.hpp"

namespace deadend {

enum class HeuristicKind { kZeroCost, kDeadendAwareCost, kAllOnesProb, kReachabilityProb };

/// Admissible initial values for heuristic search.
///
/// Cost heuristics are lower bounds: zero everywhere, or zero except the
/// penalty D on graph-detected dead ends (+inf when D is infinite).
/// Probability heuristics are upper bounds: one everywhere, or zero on
/// graph-detected dead ends and one elsewhere.
class Heuristic {
 public:
  static Heuristic zero_cost();
  static Heuristic deadend_aware_cost(const ExplicitMdp& mdp);
  static Heuristic all_ones_prob();
  static Heuristic reachability_prob(const ExplicitMdp& mdp);

  HeuristicKind kind() const { return kind_; }
  bool is_cost() const { return kind_ == HeuristicKind::kZeroCost || kind_ == HeuristicKind::kDeadendAwareCost; }

  double operator()(const ExplicitMdp& mdp, StateId s) const;

  /// The same heuristic viewed through a conditional MDP's compact ids.
  Heuristic on_conditional(const ConditionalMdp& cond) const;

 private:
  Heuristic(HeuristicKind kind, std::shared_ptr<const std::vector<bool>> dead, double penalty)
      : kind_(kind), dead_(std::move(dead)), penalty_(penalty) {}

  HeuristicKind kind_;
  std::shared_ptr<const std::vector<bool>> dead_;  // base-indexed dead-end mask
  double penalty_ = kInfinity;
  std::shared_ptr<const std::vector<StateId>> to_base_;
};

enum class BackupMode { kSsp, kFinitePenalty };

struct SearchConfig {
  double epsilon = kDefaultEpsilon;
  double eta = kDefaultGreedyTolerance;
  std::uint64_t seed = 0;
  std::size_t max_backups = 50'000'000;
  /// Trial depth cap as a multiple of |S|.
  std::size_t depth_factor = 10;
  /// Wall-clock budget in seconds; <= 0 disables it.
  double time_limit = 0.0;
};

/// Labeled RTDP from s0. In finite-penalty mode a state whose value reaches
/// D ends the trial (the agent gives up there). Values stay lower bounds
/// under an admissible cost heuristic. The returned policy covers the
/// states reachable from s0 under the final greedy policy.
SolveReport lrtdp(const ExplicitMdp& mdp, BackupMode mode, const Heuristic& heuristic,
                  const SearchConfig& cfg = {});

/// Rooted MAXPROB search: revise passes over the eta-greedy graph from s0
/// until its residual is <= epsilon, then trap elimination on that graph,
/// repeated until no trap is lowered. Result in `probs`; entries of
/// untouched states hold their heuristic value.
SolveReport fret(const ExplicitMdp& mdp, const Heuristic& heuristic, const SearchConfig& cfg = {});

/// Staged heuristic search for the infinite-penalty criterion: fret for
/// P*, then lrtdp over the rooted conditional MDP, then the conditional
/// greedy policy on the states it visits from s0. The search config's eta
/// is also the stage coupling tolerance; unset means 10 * epsilon.
SolveReport shs(const ExplicitMdp& mdp, const Heuristic& prob_heuristic, const Heuristic& cost_heuristic,
                const SearchConfig& cfg = {}, std::optional<double> coupling_eta = std::nullopt);

}  // namespace deadend
