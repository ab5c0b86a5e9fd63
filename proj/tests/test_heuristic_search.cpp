#include <doctest.h>

#include <random>

#include "deadend/exact_solvers.hpp"
#include "deadend/gridworld.hpp"
#include "deadend/heuristic_search.hpp"
#include "deadend/oracle.hpp"
#include "fixtures.hpp"

using namespace deadend;
using namespace fixtures;

namespace {

GridSpec pit_grid() {
  GridSpec spec;
  spec.width = 7;
  spec.height = 7;
  spec.start = {0, 0};
  spec.goal = {6, 6};
  spec.pits = {{3, 3}, {4, 2}, {2, 5}};
  spec.p_slip = 0.1;
  return spec;
}

std::size_t touched(const SolveReport& r) { return static_cast<std::size_t>(std::count(r.touched.begin(), r.touched.end(), true)); }

// Non-goal states reachable from s0 under the policy, not expanding states
// whose value sits at the penalty.
std::vector<StateId> policy_envelope(const ExplicitMdp& m, const Policy& p, const ValueFn& v) {
  std::vector<bool> seen(m.num_states(), false);
  std::vector<StateId> stack{*m.start()}, out;
  seen[*m.start()] = true;
  while (!stack.empty()) {
    const StateId s = stack.back();
    stack.pop_back();
    if (m.is_goal(s) || !p.assigned(s)) continue;
    out.push_back(s);
    if (v[s] >= m.penalty()) continue;
    for (const auto& o : m.find_row(s, *p.action(s))->outcomes)
      if (!seen[o.next]) {
        seen[o.next] = true;
        stack.push_back(o.next);
      }
  }
  return out;
}

}  // namespace

TEST_CASE("heuristics") {
  const auto m = tie_mdp(5.0);
  CHECK(Heuristic::zero_cost()(m, kD) == 0.0);
  CHECK(Heuristic::deadend_aware_cost(m)(m, kD) == 5.0);
  CHECK(Heuristic::deadend_aware_cost(m)(m, kS0) == 0.0);
  CHECK(Heuristic::deadend_aware_cost(tie_mdp())(m, kD) == kInfinity);
  CHECK(Heuristic::all_ones_prob()(m, kD) == 1.0);
  CHECK(Heuristic::reachability_prob(m)(m, kD) == 0.0);
  CHECK(Heuristic::reachability_prob(m)(m, kS0) == 1.0);
  CHECK(Heuristic::reachability_prob(m)(m, kG) == 1.0);
  CHECK(Heuristic::zero_cost().is_cost());
  CHECK_FALSE(Heuristic::all_ones_prob().is_cost());
}

TEST_CASE("lrtdp on the tie MDP") {
  const auto r = lrtdp(tie_mdp(5.0), BackupMode::kFinitePenalty, Heuristic::zero_cost());
  CHECK(r.converged);
  CHECK(r.values[kS0] == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(r.policy.action(kS0) == kAg);
  CHECK(r.stats.states_touched <= 3);
  CHECK_THROWS_AS(lrtdp(tie_mdp(), BackupMode::kFinitePenalty, Heuristic::zero_cost()), std::invalid_argument);
  CHECK_THROWS_AS(lrtdp(tie_mdp(5.0), BackupMode::kFinitePenalty, Heuristic::all_ones_prob()), std::invalid_argument);
}

TEST_CASE("lrtdp in ssp mode runs out of budget when every policy fails") {
  SearchConfig cfg;
  cfg.max_backups = 20'000;
  const auto r = lrtdp(half_chance(), BackupMode::kSsp, Heuristic::zero_cost(), cfg);
  CHECK_FALSE(r.converged);
  CHECK(r.backups >= cfg.max_backups);
}

TEST_CASE("lrtdp is reproducible for a fixed seed") {
  const auto m = generate_grid(pit_grid()).mdp.with_penalty(100.0);
  SearchConfig cfg;
  cfg.seed = 9;
  const auto a = lrtdp(m, BackupMode::kFinitePenalty, Heuristic::zero_cost(), cfg);
  const auto b = lrtdp(m, BackupMode::kFinitePenalty, Heuristic::zero_cost(), cfg);
  CHECK(a.backups == b.backups);
  CHECK(a.values == b.values);
  CHECK(a.seed == std::optional<std::uint64_t>{9});
}

TEST_CASE("lrtdp on an avoidable-pit gridworld matches vi_fsspude and touches less") {
  const auto m = generate_grid(pit_grid()).mdp.with_penalty(1e6);
  const auto exact = vi_fsspude(m);
  const auto r = lrtdp(m, BackupMode::kFinitePenalty, Heuristic::deadend_aware_cost(m));
  REQUIRE(r.converged);
  CHECK(std::abs(r.values[*m.start()] - exact.values[*m.start()]) <= 2e-6);
  CHECK((*maxprob_vi_from_below(m).probs)[*m.start()] == 1.0);
  ViConfig cfg;
  cfg.max_sweeps = 200;
  CHECK_FALSE(vi_ssp(m, cfg).converged);
}

TEST_CASE("dead-end-aware heuristic saves backups at a huge penalty") {
  // The start sits in the hazard row, so every cycle through it risks a pit.
  // A risk-free cycle below a hazard row would instead climb by one move
  // cost per backup towards a value near D, whatever the heuristic.
  auto spec = pit_grid();
  spec.hazard_rows = {0};
  spec.start = {2, 0};
  spec.pits.clear();
  const auto m = generate_grid(spec).mdp.with_penalty(5e8);
  SearchConfig cfg;
  cfg.max_backups = 5'000'000;
  const auto smart = lrtdp(m, BackupMode::kFinitePenalty, Heuristic::deadend_aware_cost(m), cfg);
  const auto blind = lrtdp(m, BackupMode::kFinitePenalty, Heuristic::zero_cost(), cfg);
  REQUIRE(smart.converged);
  CHECK(blind.backups > 10 * smart.backups);
}

TEST_CASE("fret") {
  SUBCASE("tie MDP from all ones") {
    const auto r = fret(tie_mdp(), Heuristic::all_ones_prob());
    CHECK(r.converged);
    CHECK((*r.probs)[kS0] == 1.0);
    CHECK((*r.probs)[kD] == 0.0);
    CHECK(r.stats.trap_rounds == 1);
  }
  SUBCASE("dead-end-free gridworld: one build over everything reachable") {
    GridSpec spec = pit_grid();
    spec.pits.clear();
    const auto m = generate_grid(spec).mdp;
    for (const auto& h : {Heuristic::all_ones_prob(), Heuristic::reachability_prob(m)}) {
      const auto r = fret(m, h);
      CHECK(r.converged);
      CHECK(r.stats.trap_rounds == 0);
      CHECK(r.stats.greedy_graph_builds == 1);
      CHECK(r.stats.greedy_graph_max_states == m.num_states() - 1);
      CHECK(r.stats.greedy_graph_max_actions == 4 * (m.num_states() - 1));
      CHECK((*r.probs)[*m.start()] == 1.0);
    }
  }
  SUBCASE("needs a probability heuristic") {
    CHECK_THROWS_AS(fret(tie_mdp(), Heuristic::zero_cost()), std::invalid_argument);
  }
}

TEST_CASE("shs") {
  SUBCASE("tie MDP") {
    const auto m = tie_mdp();
    const auto r = shs(m, Heuristic::reachability_prob(m), Heuristic::zero_cost());
    CHECK(r.converged);
    CHECK(r.policy.action(kS0) == kAg);
    CHECK(r.values[kS0] == doctest::Approx(3.0).epsilon(1e-6));
  }
  SUBCASE("half chance") {
    const auto m = half_chance();
    const auto r = shs(m, Heuristic::all_ones_prob(), Heuristic::zero_cost());
    CHECK((*r.probs)[0] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(r.values[0] == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("dead start") {
    const auto m = tie_mdp().with_start(kD);
    const auto r = shs(m, Heuristic::reachability_prob(m), Heuristic::zero_cost());
    CHECK(r.dead_start);
    CHECK(r.policy.empty());
  }
  SUBCASE("pit gridworld agrees with ivi where shs defines a policy") {
    auto spec = pit_grid();
    spec.hazard_rows = {4};
    spec.pits.clear();
    const auto m = generate_grid(spec).mdp;
    ViConfig vc;
    const auto global = ivi(m, vc);
    const auto rooted = shs(m, Heuristic::reachability_prob(m), Heuristic::zero_cost());
    REQUIRE(rooted.converged);
    std::size_t defined = 0;
    for (StateId s = 0; s < m.num_states(); ++s) {
      if (!rooted.policy.assigned(s)) continue;
      ++defined;
      CHECK(std::abs(rooted.values[s] - global.values[s]) <= 2e-5 * std::max(1.0, global.values[s]));
      CHECK(std::abs((*rooted.probs)[s] - (*global.probs)[s]) <= 2e-5);
    }
    CHECK(defined > 0);
    const auto a = evaluate_policy(m, complete_policy(m, rooted.policy));
    const auto b = evaluate_policy(m, complete_policy(m, global.policy));
    const StateId s0 = *m.start();
    CHECK(a.goal_prob[s0] == doctest::Approx(b.goal_prob[s0]).epsilon(1e-6));
    CHECK(a.conditional_cost[s0] == doctest::Approx(b.conditional_cost[s0]).epsilon(1e-6));
  }
}

TEST_CASE("property: bounds hold during search on small instances") {
  std::mt19937_64 rng(1234);
  for (int i = 0; i < 60; ++i) {
    const auto m = random_mdp(rng, {.unavoidable_dead_end = i % 2 == 0}).with_penalty(10.0 + i);
    const auto exact = vi_fsspude(m);
    const auto below = *maxprob_vi_from_below(m, 1e-13).probs;
    // Truncated runs expose intermediate tables.
    for (std::size_t budget : {1, 3, 10, 1'000'000}) {
      SearchConfig cfg;
      cfg.max_backups = budget;
      cfg.seed = static_cast<std::uint64_t>(i);
      const auto r = lrtdp(m, BackupMode::kFinitePenalty, Heuristic::deadend_aware_cost(m), cfg);
      for (StateId s = 0; s < m.num_states(); ++s)
        if (r.touched[s]) CHECK(r.values[s] <= exact.values[s] + 1e-6);
      const auto f = fret(m, Heuristic::reachability_prob(m), cfg);
      for (StateId s = 0; s < m.num_states(); ++s)
        if (f.touched[s]) CHECK((*f.probs)[s] >= below[s] - 1e-6);
      if (budget == 1'000'000) {
        CHECK(r.converged);
        // Labeling guarantees consistency only on the greedy envelope of s0.
        for (StateId s : policy_envelope(m, r.policy, r.values))
          CHECK(std::abs(r.values[s] - exact.values[s]) <= 1e-5 * std::max(1.0, exact.values[s]));
        if (f.converged) CHECK_MESSAGE(std::abs((*f.probs)[0] - below[0]) <= 2e-6, i, " ", (*f.probs)[0], " ", below[0]);
      }
    }
  }
}

TEST_CASE("touched count stays below |S| on a grid with an unreachable region") {
  GridSpec spec;
  spec.width = 9;
  spec.height = 5;
  spec.start = {0, 0};
  spec.goal = {3, 0};
  spec.walls = {{5, 0}, {5, 1}, {5, 2}, {5, 3}, {5, 4}};
  const auto m = generate_grid(spec).mdp.with_penalty(50.0);
  const auto r = lrtdp(m, BackupMode::kFinitePenalty, Heuristic::deadend_aware_cost(m));
  CHECK(r.converged);
  CHECK(touched(r) < m.num_states());
  CHECK(vi_fsspude(m).backups >= m.num_states() - 1);
}
