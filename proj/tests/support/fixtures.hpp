#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "deadend/mdp_model.hpp"

namespace fixtures {

using deadend::ActionId;
using deadend::ExplicitMdp;
using deadend::kInfinity;
using deadend::MdpBuilder;
using deadend::StateId;

// Tie example: s0 --a_d (cost 1)--> {d: .5, g: .5}, s0 --a_g (cost 3)--> g,
// d loops on a_d at cost 1.
inline constexpr StateId kS0 = 0, kD = 1, kG = 2;
inline constexpr ActionId kAd = 0, kAg = 1;

inline ExplicitMdp tie_mdp(double penalty = kInfinity) {
  MdpBuilder b(3, 2);
  b.add_row(kS0, kAd, 1.0, {{kD, 0.5}, {kG, 0.5}});
  b.add_row(kS0, kAg, 3.0, {{kG, 1.0}});
  b.add_row(kD, kAd, 1.0, {{kD, 1.0}});
  b.add_goal(kG).set_start(kS0).set_penalty(penalty);
  return b.build();
}

// The tie MDP with only a_g offered at s0.
inline ExplicitMdp tie_mdp_ag_only() {
  MdpBuilder b(3, 2);
  b.add_row(kS0, kAg, 3.0, {{kG, 1.0}});
  b.add_row(kD, kAd, 1.0, {{kD, 1.0}});
  b.add_goal(kG).set_start(kS0);
  return b.build();
}

// Single action at s costing eps*(D+1): eps -> g, 1-eps -> dead end.
// State 0 = s, 1 = de, 2 = g.
inline ExplicitMdp epsilon_mdp(double eps, double penalty) {
  MdpBuilder b(3, 1);
  b.add_row(0, 0, eps * (penalty + 1.0), {{2, eps}, {1, 1.0 - eps}});
  b.add_row(1, 0, 1.0, {{1, 1.0}});
  b.add_goal(2).set_start(0).set_penalty(penalty);
  return b.build();
}

// s (0) --a, cost 1--> {s: .5, g: .25, de: .25}; de (1) loops; g = 2.
inline ExplicitMdp self_loop_chain() {
  MdpBuilder b(3, 1);
  b.add_row(0, 0, 1.0, {{0, 0.5}, {2, 0.25}, {1, 0.25}});
  b.add_row(1, 0, 1.0, {{1, 1.0}});
  b.add_goal(2).set_start(0);
  return b.build();
}

// s0 (0) --cost 1--> {g: .5, d: .5}; d = 1 loops; g = 2.
inline ExplicitMdp half_chance() {
  MdpBuilder b(3, 1);
  b.add_row(0, 0, 1.0, {{2, 0.5}, {1, 0.5}});
  b.add_row(1, 0, 1.0, {{1, 1.0}});
  b.add_goal(2).set_start(0);
  return b.build();
}

// s (0) --cost c--> g (1).
inline ExplicitMdp two_state_chain(double cost) {
  MdpBuilder b(2, 1);
  b.add_row(0, 0, cost, {{1, 1.0}});
  b.add_goal(1).set_start(0);
  return b.build();
}

struct RandomSpec {
  std::size_t max_states = 8;  // including goals
  std::size_t max_actions = 3;
  std::size_t max_successors = 3;
  double min_cost = 0.5;
  double max_cost = 5.0;
  /// Force at least one state from which every action risks a dead end.
  bool unavoidable_dead_end = false;
};

// Random sparse MDP with strictly positive costs and one or two goals;
// state 0 is the start. With unavoidable_dead_end, the last non-goal state
// is an absorbing trap and every action at s0 reaches it with positive
// probability, so P*(s0) < 1.
inline ExplicitMdp random_mdp(std::mt19937_64& rng, const RandomSpec& spec = {}) {
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  auto unit = [&] { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); };

  const std::size_t n = pick(spec.unavoidable_dead_end ? 4 : 3, spec.max_states);
  const std::size_t na = pick(1, spec.max_actions);
  const std::size_t goals = pick(1, 2);
  MdpBuilder b(n, na);
  const StateId first_goal = static_cast<StateId>(n - goals);
  for (StateId g = first_goal; g < n; ++g) b.add_goal(g);
  const StateId trap = spec.unavoidable_dead_end ? first_goal - 1 : n;  // n means none

  for (StateId s = 0; s < first_goal; ++s) {
    if (s == trap) {
      b.add_row(s, 0, 1.0, {{s, 1.0}});
      continue;
    }
    std::vector<ActionId> acts;
    for (ActionId a = 0; a < na; ++a)
      if (unit() < 0.75) acts.push_back(a);
    if (acts.empty()) acts.push_back(static_cast<ActionId>(pick(0, na - 1)));
    for (ActionId a : acts) {
      const std::size_t k = pick(1, std::min(spec.max_successors, n));
      std::vector<StateId> succ;
      while (succ.size() < k) {
        StateId t = static_cast<StateId>(pick(0, n - 1));
        if (std::find(succ.begin(), succ.end(), t) == succ.end()) succ.push_back(t);
      }
      if (s == 0 && trap < n && std::find(succ.begin(), succ.end(), trap) == succ.end()) succ.push_back(trap);
      std::vector<double> w(succ.size());
      double total = 0.0;
      for (auto& x : w) total += (x = 0.1 + unit());
      std::vector<deadend::Outcome> outs;
      double acc = 0.0;
      for (std::size_t i = 0; i < succ.size(); ++i) {
        double p = i + 1 == succ.size() ? 1.0 - acc : w[i] / total;
        acc += p;
        outs.push_back({succ[i], p});
      }
      const double cost = spec.min_cost + (spec.max_cost - spec.min_cost) * unit();
      b.add_row(s, a, cost, std::move(outs));
    }
  }
  b.set_start(0);
  return b.build();
}

}  // namespace fixtures
