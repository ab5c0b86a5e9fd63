#include <doctest.h>

#include <algorithm>
#include <deque>
#include <set>
#include <random>

#include "deadend/exact_solvers.hpp"
#include "deadend/gridworld.hpp"
#include "deadend/mdp_model.hpp"
#include "fixtures.hpp"

using namespace deadend;
using namespace fixtures;

TEST_CASE("tie MDP is valid") {
  CHECK(validate(tie_mdp()).empty());
  CHECK(validate(tie_mdp(4.0)).empty());
}

TEST_CASE("validate reports a row that does not sum to one") {
  MdpBuilder b(3, 2);
  b.add_row(kS0, kAd, 1.0, {{kD, 0.5}, {kG, 0.4}});
  b.add_row(kS0, kAg, 3.0, {{kG, 1.0}});
  b.add_row(kD, kAd, 1.0, {{kD, 1.0}});
  b.add_goal(kG).set_start(kS0);
  const auto v = validate(b.build());
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == ViolationKind::kProbabilitySum);
  CHECK(v[0].state == kS0);
  CHECK(v[0].action == kAd);
  CHECK(v[0].message.find("0.9") != std::string::npos);
}

TEST_CASE("validate reports a costly goal action") {
  MdpBuilder b(2, 1);
  b.add_row(0, 0, 1.0, {{1, 1.0}});
  b.add_row(1, 0, 1.0, {{1, 1.0}});
  b.add_goal(1);
  const auto v = validate(b.build());
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == ViolationKind::kGoalCostNonzero);
  CHECK(v[0].message.find("goal action cost nonzero") != std::string::npos);
}

TEST_CASE("validate catches the remaining structural violations") {
  SUBCASE("goal leaving itself") {
    MdpBuilder b(2, 1);
    b.add_row(0, 0, 1.0, {{1, 1.0}});
    b.add_row(1, 0, 0.0, {{0, 1.0}});
    b.add_goal(1);
    const auto v = validate(b.build());
    REQUIRE(!v.empty());
    CHECK(v[0].kind == ViolationKind::kGoalNotAbsorbing);
  }
  SUBCASE("state without actions") {
    MdpBuilder b(2, 1);
    b.add_goal(1);
    const auto v = validate(b.build());
    REQUIRE(v.size() == 1);
    CHECK(v[0].kind == ViolationKind::kNoApplicableAction);
  }
  SUBCASE("zero cost") {
    MdpBuilder b(2, 1);
    b.add_row(0, 0, 0.0, {{1, 1.0}});
    b.add_goal(1);
    CHECK(validate(b.build())[0].kind == ViolationKind::kNonPositiveCost);
  }
  SUBCASE("bad penalty") {
    auto m = two_state_chain(1.0).with_penalty(-1.0);
    CHECK(validate(m)[0].kind == ViolationKind::kBadPenalty);
  }
}

TEST_CASE("builder rejects duplicate rows and bad ids") {
  MdpBuilder b(2, 1);
  b.add_row(0, 0, 1.0, {{1, 1.0}});
  CHECK_THROWS_AS(b.add_row(0, 0, 1.0, {{1, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(b.add_row(0, 3, 1.0, {{1, 1.0}}), std::out_of_range);
  CHECK_THROWS_AS(b.add_row(5, 0, 1.0, {{1, 1.0}}), std::out_of_range);
}

TEST_CASE("builder merges repeated targets and drops zero outcomes") {
  MdpBuilder b(2, 1);
  b.add_row(0, 0, 1.0, {{1, 0.25}, {0, 0.0}, {1, 0.75}});
  b.add_goal(1);
  const auto m = b.build();
  REQUIRE(m.rows(0).size() == 1);
  REQUIRE(m.rows(0)[0].outcomes.size() == 1);
  CHECK(m.rows(0)[0].outcomes[0].prob == 1.0);
  CHECK(m.rows(1).size() == 1);  // implied goal self-loop
}

TEST_CASE("reachable_from") {
  CHECK(reachable_from(tie_mdp(), kS0) == std::vector<StateId>{kS0, kD, kG});
  CHECK(reachable_from(tie_mdp(), kG) == std::vector<StateId>{kG});
}

TEST_CASE("reachable_from excludes a walled-off cell") {
  GridSpec spec;
  spec.width = 3;
  spec.height = 3;
  spec.start = {0, 0};
  spec.goal = {2, 0};
  // (2,2) is enclosed by walls at (1,2) and (2,1).
  spec.walls = {{1, 2}, {2, 1}};
  const auto named = generate_grid(spec);
  const auto& m = named.mdp;
  const auto got = reachable_from(m, *m.start());

  // Independent BFS over cell coordinates.
  std::set<std::pair<int, int>> walls{{1, 2}, {2, 1}}, seen{{0, 0}};
  std::deque<std::pair<int, int>> q{{0, 0}};
  while (!q.empty()) {
    auto [x, y] = q.front();
    q.pop_front();
    if (std::pair{x, y} == std::pair{2, 0}) continue;
    for (auto [dx, dy] : {std::pair{0, 1}, {1, 0}, {0, -1}, {-1, 0}}) {
      std::pair<int, int> c{x + dx, y + dy};
      if (c.first < 0 || c.second < 0 || c.first > 2 || c.second > 2 || walls.count(c)) continue;
      if (seen.insert(c).second) q.push_back(c);
    }
  }
  std::vector<std::string> names;
  for (StateId s : got) names.push_back(named.state_names[s]);
  CHECK(got.size() == seen.size());
  CHECK(std::find(names.begin(), names.end(), "2,2") == names.end());
  CHECK(std::find(named.state_names.begin(), named.state_names.end(), "2,2") != named.state_names.end());
}

TEST_CASE("detect_dead_ends") {
  CHECK(detect_dead_ends(tie_mdp()) == std::vector<StateId>{kD});

  MdpBuilder b(2, 1);
  b.add_row(0, 0, 1.0, {{1, 1.0}});
  b.add_row(1, 0, 1.0, {{0, 1.0}});
  CHECK(detect_dead_ends(b.build()) == std::vector<StateId>{0, 1});
}

TEST_CASE("dead ends of a pit gridworld are exactly the pits") {
  GridSpec spec;
  spec.width = 5;
  spec.height = 5;
  spec.start = {0, 0};
  spec.goal = {4, 4};
  spec.pits = {{2, 2}, {3, 1}};
  spec.p_slip = 0.2;
  const auto named = generate_grid(spec);
  std::vector<std::string> dead;
  for (StateId s : detect_dead_ends(named.mdp)) dead.push_back(named.state_names[s]);
  std::sort(dead.begin(), dead.end());
  CHECK(dead == std::vector<std::string>{"2,2", "3,1"});
}

TEST_CASE("property: dead ends are the zero set of P* computed from below") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    const auto m = random_mdp(rng, {.unavoidable_dead_end = i % 2 == 1});
    const auto p = *maxprob_vi_from_below(m, 1e-12).probs;
    const auto dead = dead_end_mask(m);
    for (StateId s = 0; s < m.num_states(); ++s) CHECK(dead[s] == (p[s] == 0.0));
  }
}

TEST_CASE("property: adding a transition never shrinks reachability") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const auto m = random_mdp(rng);
    const auto before = reachable_from(m, 0);
    // Rebuild with one extra action row from state 0 to the last state.
    MdpBuilder b(m.num_states(), m.num_actions() + 1);
    for (StateId s = 0; s < m.num_states(); ++s) {
      if (m.is_goal(s)) continue;
      for (const auto& row : m.rows(s)) b.add_row(s, row.action, row.cost, row.outcomes);
    }
    for (StateId g : m.goals()) b.add_goal(g);
    b.add_row(0, static_cast<ActionId>(m.num_actions()), 1.0, {{static_cast<StateId>(m.num_states() - 1), 1.0}});
    const auto after = reachable_from(b.build(), 0);
    CHECK(std::includes(after.begin(), after.end(), before.begin(), before.end()));
  }
}

TEST_CASE("with_penalty and with_start copy the rest") {
  const auto m = tie_mdp();
  const auto m4 = m.with_penalty(4.0);
  CHECK(m4.penalty() == 4.0);
  CHECK(m4.has_finite_penalty());
  CHECK(m4.with_penalty(kInfinity) == m);
  CHECK_FALSE(m.with_start(std::nullopt).start().has_value());
}

TEST_CASE("policy bookkeeping") {
  Policy p(3);
  CHECK(p.empty());
  p.assign(0, 1);
  CHECK(p.assigned(0));
  CHECK(p.assigned_count() == 1);
  p.clear(0);
  CHECK(p.empty());
}
