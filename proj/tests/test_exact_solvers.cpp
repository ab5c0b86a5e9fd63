#include <doctest.h>

#include <random>

#include "deadend/backup.hpp"
#include "deadend/conditional.hpp"
#include "deadend/exact_solvers.hpp"
#include "fixtures.hpp"

using namespace deadend;
using namespace fixtures;

TEST_CASE("vi_ssp on a deterministic chain") {
  const auto r = vi_ssp(two_state_chain(2.0));
  CHECK(r.converged);
  CHECK(r.values[0] == 2.0);
  CHECK(r.policy.action(0) == ActionId{0});
  CHECK(r.sweeps == 2);
}

TEST_CASE("vi_ssp with only a_g at s0") {
  // Without a_d (and the dead end it leads to) the problem is an SSP.
  MdpBuilder b(2, 2);
  b.add_row(0, kAg, 3.0, {{1, 1.0}});
  b.add_goal(1).set_start(0);
  const auto r = vi_ssp(b.build());
  CHECK(r.converged);
  CHECK(r.values[0] == 3.0);

  // Keeping the unreachable dead end still gives J(s0) = 3 but no convergence.
  ViConfig cfg;
  cfg.max_sweeps = 50;
  const auto kept = vi_ssp(tie_mdp_ag_only(), cfg);
  CHECK_FALSE(kept.converged);
  CHECK(kept.values[kS0] == 3.0);
}

TEST_CASE("vi_ssp diverges on the tie MDP") {
  ViConfig cfg;
  double last = -1.0;
  for (std::size_t sweeps : {10, 20, 40, 80}) {
    cfg.max_sweeps = sweeps;
    const auto r = vi_ssp(tie_mdp(), cfg);
    CHECK_FALSE(r.converged);
    CHECK(r.sweeps == sweeps);
    CHECK(r.values[kD] > last);
    last = r.values[kD];
  }
}

TEST_CASE("vi_fsspude") {
  SUBCASE("D = 4: tie at s0") {
    const auto m = tie_mdp(4.0);
    const auto r = vi_fsspude(m);
    CHECK(r.converged);
    CHECK(r.values[kS0] == 3.0);
    CHECK(r.values[kD] == 4.0);
    CHECK(greedy_set(m, r.values, kS0, GreedyMode::kMinCost).actions == std::vector<ActionId>{kAd, kAg});
    CHECK(r.policy.action(kS0) == kAd);
  }
  SUBCASE("D = 5: a_g is the unique choice") {
    const auto m = tie_mdp(5.0);
    const auto r = vi_fsspude(m);
    CHECK(r.values[kS0] == 3.0);
    CHECK(greedy_set(m, r.values, kS0, GreedyMode::kMinCost).actions == std::vector<ActionId>{kAg});
    CHECK(r.policy.action(kS0) == kAg);
  }
  SUBCASE("epsilon example saturates at D") {
    const auto r = vi_fsspude(epsilon_mdp(0.1, 10.0));
    CHECK(r.values[0] == 10.0);
  }
  SUBCASE("infinite penalty is rejected") { CHECK_THROWS_AS(vi_fsspude(tie_mdp()), std::invalid_argument); }
}

TEST_CASE("maxprob_vi_from_below") {
  const auto tie = *maxprob_vi_from_below(tie_mdp()).probs;
  CHECK(tie[kS0] == 1.0);
  CHECK(tie[kD] == 0.0);
  CHECK(tie[kG] == 1.0);

  const auto chain = maxprob_vi_from_below(self_loop_chain(), 1e-12);
  CHECK((*chain.probs)[0] == doctest::Approx(0.5).epsilon(1e-11));

  MdpBuilder b(2, 1);
  b.add_row(0, 0, 1.0, {{1, 1.0}});
  b.add_row(1, 0, 1.0, {{0, 1.0}});
  const auto none = maxprob_vi_from_below(b.build());
  CHECK(none.sweeps == 1);
  CHECK(*none.probs == std::vector<double>{0.0, 0.0});
}

TEST_CASE("vi_mp") {
  SUBCASE("tie MDP from all ones eliminates the trap at d once") {
    const auto r = vi_mp(tie_mdp());
    CHECK(r.converged);
    CHECK((*r.probs)[kS0] == 1.0);
    CHECK((*r.probs)[kD] == 0.0);
    CHECK(r.stats.trap_rounds == 1);
  }
  SUBCASE("dead-end-free MDP: one full greedy graph, no traps") {
    MdpBuilder b(3, 2);
    b.add_row(0, 0, 1.0, {{1, 0.5}, {2, 0.5}});
    b.add_row(0, 1, 2.0, {{0, 0.5}, {2, 0.5}});
    b.add_row(1, 0, 1.0, {{0, 0.3}, {2, 0.7}});
    b.add_row(1, 1, 1.0, {{1, 0.5}, {0, 0.5}});
    b.add_goal(2).set_start(0);
    const auto m = b.build();
    REQUIRE(detect_dead_ends(m).empty());
    const auto r = vi_mp(m);
    CHECK(r.converged);
    CHECK(r.stats.trap_rounds == 0);
    CHECK(r.stats.greedy_graph_builds == 1);
    CHECK(r.stats.greedy_graph_max_states == 2);
    CHECK(r.stats.greedy_graph_max_actions == 4);
    CHECK(*r.probs == std::vector<double>{1.0, 1.0, 1.0});
  }
  SUBCASE("initialized at P* needs no trap rounds") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 30; ++i) {
      const auto m = random_mdp(rng, {.unavoidable_dead_end = true});
      ViConfig cfg;
      cfg.init = *maxprob_vi_from_below(m, 1e-13).probs;
      CHECK(vi_mp(m, cfg).stats.trap_rounds == 0);
    }
  }
}

TEST_CASE("ivi") {
  SUBCASE("tie MDP") {
    const auto r = ivi(tie_mdp());
    CHECK((*r.probs)[kS0] == 1.0);
    CHECK(r.values[kS0] == 3.0);
    CHECK(r.values[kD] == 0.0);
    CHECK(r.policy.action(kS0) == kAg);
    CHECK_FALSE(r.policy.assigned(kD));
  }
  SUBCASE("half chance") {
    const auto r = ivi(half_chance());
    CHECK((*r.probs)[0] == 0.5);
    CHECK(r.values[0] == 1.0);
  }
  SUBCASE("self-loop chain") {
    // J = 1 + P(stay | reach) J with P(stay | reach) = 0.5 * 0.5 / 0.5 = 0.5.
    const auto r = ivi(self_loop_chain());
    CHECK((*r.probs)[0] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(r.values[0] == doctest::Approx(2.0).epsilon(1e-5));
  }
  SUBCASE("dead start") {
    const auto r = ivi(tie_mdp().with_start(kD));
    CHECK(r.dead_start);
    CHECK(r.policy.empty());
  }
}

TEST_CASE("property: vi_mp is independent of its initialization") {
  std::mt19937_64 rng(101);
  const double eps = 1e-6;
  for (int i = 0; i < 100; ++i) {
    const auto m = random_mdp(rng, {.unavoidable_dead_end = i % 3 == 0});
    ViConfig zero, one;
    zero.epsilon = one.epsilon = eps;
    zero.init.assign(m.num_states(), 0.0);
    one.init.assign(m.num_states(), 1.0);
    const auto p0 = *vi_mp(m, zero).probs;
    const auto p1 = *vi_mp(m, one).probs;
    const auto below = *maxprob_vi_from_below(m, 1e-13).probs;
    for (StateId s = 0; s < m.num_states(); ++s) {
      CHECK_MESSAGE(std::abs(p0[s] - p1[s]) <= 2 * eps, i, " ", s, " ", p0[s], " ", p1[s], " ", below[s]);
      CHECK(std::abs(p1[s] - below[s]) <= 2 * eps);
    }
  }
}

TEST_CASE("property: vi_fsspude is independent of its initialization") {
  std::mt19937_64 rng(202);
  for (int i = 0; i < 100; ++i) {
    const double d = 1.0 + (i % 7) * 4.0;
    const auto m = random_mdp(rng).with_penalty(d);
    ViConfig zero, full;
    full.init.assign(m.num_states(), d);
    const auto a = vi_fsspude(m, zero).values;
    const auto b = vi_fsspude(m, full).values;
    for (StateId s = 0; s < m.num_states(); ++s) CHECK(std::abs(a[s] - b[s]) <= 2 * zero.epsilon);
  }
}

TEST_CASE("property: iterates from below are monotone") {
  std::mt19937_64 rng(303);
  for (int i = 0; i < 30; ++i) {
    const auto m = random_mdp(rng, {.unavoidable_dead_end = true}).with_penalty(20.0);
    ViConfig cfg;
    std::vector<double> prev_cost(m.num_states(), 0.0), prev_prob(m.num_states(), 0.0);
    for (std::size_t k = 1; k <= 12; ++k) {
      cfg.max_sweeps = k;
      const auto cost = vi_fsspude(m, cfg).values;
      const auto prob = *maxprob_vi_from_below(m, 1e-15, k).probs;
      for (StateId s = 0; s < m.num_states(); ++s) {
        CHECK(cost[s] >= prev_cost[s]);
        if (!m.is_goal(s)) CHECK(prob[s] >= prev_prob[s]);
      }
      prev_cost = cost;
      prev_prob = prob;
    }
  }
}

TEST_CASE("property: ivi values are a fixed point of the conditional backup") {
  std::mt19937_64 rng(404);
  for (int i = 0; i < 60; ++i) {
    const auto m = random_mdp(rng, {.unavoidable_dead_end = i % 2 == 0});
    ViConfig cfg;
    const auto r = ivi(m, cfg);
    const auto cond = build_conditional(m, *r.probs, cfg.effective_coupling_eta());
    std::vector<double> compact(cond.to_base.size());
    for (StateId c = 0; c < compact.size(); ++c) compact[c] = r.values[cond.to_base[c]];
    for (StateId c = 0; c < compact.size(); ++c) {
      if (cond.mdp.is_goal(c)) continue;
      CHECK(std::abs(bellman_backup(cond.mdp, compact, c) - compact[c]) <= cfg.epsilon);
    }
  }
}

TEST_CASE("property: on dead-end-free MDPs ivi equals vi_ssp") {
  std::mt19937_64 rng(505);
  int tested = 0;
  while (tested < 40) {
    const auto m = random_mdp(rng);
    if (!detect_dead_ends(m).empty()) continue;
    ++tested;
    ViConfig cfg;
    const auto a = ivi(m, cfg);
    const auto b = vi_ssp(m, cfg);
    REQUIRE(b.converged);
    for (StateId s = 0; s < m.num_states(); ++s) {
      CHECK((*a.probs)[s] == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(std::abs(a.values[s] - b.values[s]) <= 2 * cfg.epsilon * std::max(1.0, b.values[s]));
    }
  }
}

TEST_CASE("give-up augmentation turns finite-penalty VI into plain VI") {
  std::mt19937_64 rng(606);
  for (int i = 0; i < 50; ++i) {
    const double d = 2.0 + i;
    const auto m = random_mdp(rng, {.unavoidable_dead_end = i % 2 == 0}).with_penalty(d);
    const auto aug = give_up_augmentation(m, d);
    CHECK(validate(aug).empty());
    CHECK(detect_dead_ends(aug).empty());
    const auto fp = vi_fsspude(m);
    const auto plain = vi_ssp(aug);
    REQUIRE(plain.converged);
    for (StateId s = 0; s < m.num_states(); ++s) CHECK(std::abs(fp.values[s] - plain.values[s]) <= 2e-6);
  }
}
