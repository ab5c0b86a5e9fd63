#pragma once

#include <cstdint>

#include "deadend/mdp_model.hpp"

namespace deadend {

struct SimReport {
  std::size_t trials = 0;
  std::size_t goal_hits = 0;
  std::size_t dead_hits = 0;
  std::size_t horizon_cutoffs = 0;
  /// Mean and sample standard deviation of accumulated cost over
  /// goal-reaching trials (0 when there are none).
  double mean_cost_given_goal = 0.0;
  double sd_cost_given_goal = 0.0;
  double empirical_goal_prob = 0.0;
  std::uint64_t seed = 0;
};

/// Seeded rollouts of `policy` from s0. A trial ends at a goal, at a
/// graph-detected dead end, or after `horizon` steps. Trial i draws from
/// its own stream derived from (seed, i), so results do not depend on
/// execution order. Throws std::invalid_argument for horizon < 1, a missing
/// start state, or an unassigned/inapplicable action on a visited state.
SimReport simulate(const ExplicitMdp& mdp, const Policy& policy, std::size_t trials, std::size_t horizon,
                   std::uint64_t seed);

}  // namespace deadend
