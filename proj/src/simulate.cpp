#include "deadend/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace deadend {

namespace {

// splitmix64 finalizer, used to decorrelate per-trial seeds.
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

StateId sample(const ActionRow& row, std::mt19937_64& rng) {
  double u = unit(rng);
  double acc = 0.0;
  for (const auto& o : row.outcomes) {
    acc += o.prob;
    if (u < acc) return o.next;
  }
  return row.outcomes.back().next;
}

}  // namespace

SimReport simulate(const ExplicitMdp& mdp, const Policy& policy, std::size_t trials, std::size_t horizon,
                   std::uint64_t seed) {
  if (horizon < 1) throw std::invalid_argument("simulate: horizon must be at least 1");
  if (!mdp.start()) throw std::invalid_argument("simulate: the MDP has no start state");
  if (policy.size() != mdp.num_states()) throw std::invalid_argument("simulate: policy size mismatch");

  const auto dead = dead_end_mask(mdp);
  SimReport rep;
  rep.trials = trials;
  rep.seed = seed;
  double sum = 0.0, sum_sq = 0.0;

  for (std::size_t t = 0; t < trials; ++t) {
    std::mt19937_64 rng(mix(seed ^ mix(t)));
    StateId s = *mdp.start();
    double cost = 0.0;
    std::size_t steps = 0;
    for (;;) {
      if (mdp.is_goal(s)) {
        ++rep.goal_hits;
        sum += cost;
        sum_sq += cost * cost;
        break;
      }
      if (dead[s]) {
        ++rep.dead_hits;
        break;
      }
      if (steps == horizon) {
        ++rep.horizon_cutoffs;
        break;
      }
      auto a = policy.action(s);
      const ActionRow* row = a ? mdp.find_row(s, *a) : nullptr;
      if (!row) throw std::invalid_argument("simulate: no applicable policy action at state " + std::to_string(s));
      cost += row->cost;
      s = sample(*row, rng);
      ++steps;
    }
  }

  if (trials > 0) rep.empirical_goal_prob = static_cast<double>(rep.goal_hits) / static_cast<double>(trials);
  if (rep.goal_hits > 0) {
    double n = static_cast<double>(rep.goal_hits);
    rep.mean_cost_given_goal = sum / n;
    if (rep.goal_hits > 1) rep.sd_cost_given_goal = std::sqrt(std::max(0.0, (sum_sq - n * rep.mean_cost_given_goal * rep.mean_cost_given_goal) / (n - 1)));
  }
  return rep;
}

}  // namespace deadend
