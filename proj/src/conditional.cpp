#include "deadend/conditional.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace deadend {
namespace {

// Renormalizing mass of a row over kept successors.
double kept_mass(const ActionRow& row, const GoalProbFn& probs, const std::vector<bool>& keep) {
  double z = 0.0;
  for (const auto& o : row.outcomes)
    if (keep[o.next]) z += o.prob * probs[o.next];
  return z;
}

}  // namespace

ConditionalMdp build_conditional(const ExplicitMdp& mdp, const GoalProbFn& probs, double eta,
                                 std::optional<StateId> root) {
  const auto n = mdp.num_states();
  if (probs.size() != n) throw std::invalid_argument("goal-probability table has the wrong size");

  // Globally, exact graph dead ends are excluded up front. A rooted build
  // stays local and relies on the probability floor instead.
  std::vector<bool> keep(n, false);
  const auto dead = root ? std::vector<bool>(n, false) : dead_end_mask(mdp);
  for (StateId s = 0; s < n; ++s) keep[s] = mdp.is_goal(s) || (!dead[s] && probs[s] > kProbabilityFloor);

  std::vector<std::vector<const ActionRow*>> usable(n);
  auto refresh = [&](StateId s) {
    usable[s].clear();
    double best = 0.0;
    for (const auto& row : mdp.rows(s)) best = std::max(best, prob_value(row, probs));
    for (const auto& row : mdp.rows(s))
      if (prob_value(row, probs) >= best - eta && kept_mass(row, probs, keep) > 0.0) usable[s].push_back(&row);
  };
  auto reachable = [&](StateId from) {
    std::vector<bool> seen(n, false);
    if (!keep[from]) return seen;
    std::deque<StateId> queue{from};
    seen[from] = true;
    while (!queue.empty()) {
      const StateId s = queue.front();
      queue.pop_front();
      if (mdp.is_goal(s)) continue;
      refresh(s);
      for (const ActionRow* row : usable[s])
        for (const auto& o : row->outcomes)
          if (keep[o.next] && !seen[o.next]) {
            seen[o.next] = true;
            queue.push_back(o.next);
          }
    }
    return seen;
  };

  std::vector<bool> scope = root ? reachable(*root) : keep;
  // A state left without a usable greedy row is dropped, which can in turn
  // starve its predecessors. So is a state whose usable rows never lead to a
  // goal: a dead end whose table entry sits just above the floor.
  for (bool changed = true; changed;) {
    changed = false;
    for (StateId s = 0; s < n; ++s) {
      if (!scope[s] || !keep[s] || mdp.is_goal(s)) continue;
      refresh(s);
      if (usable[s].empty()) {
        keep[s] = false;
        changed = true;
      }
    }
    if (changed) continue;
    std::vector<bool> reaches(n, false);
    for (bool grew = true; grew;) {
      grew = false;
      for (StateId s = 0; s < n; ++s) {
        if (!scope[s] || !keep[s] || reaches[s]) continue;
        const bool hit = mdp.is_goal(s) || std::any_of(usable[s].begin(), usable[s].end(), [&](const ActionRow* row) {
                           return std::any_of(row->outcomes.begin(), row->outcomes.end(), [&](const Outcome& o) {
                             return keep[o.next] && reaches[o.next];
                           });
                         });
        if (hit) reaches[s] = grew = true;
      }
    }
    for (StateId s = 0; s < n; ++s) {
      if (scope[s] && keep[s] && !reaches[s]) {
        keep[s] = false;
        changed = true;
      }
    }
  }
  keep = root ? reachable(*root) : std::move(keep);

  ConditionalMdp cond;
  cond.probs = probs;
  cond.base_num_states = n;
  cond.from_base.assign(n, std::nullopt);
  for (StateId s = 0; s < n; ++s) {
    if (!keep[s]) continue;
    cond.from_base[s] = static_cast<StateId>(cond.to_base.size());
    cond.to_base.push_back(s);
  }

  MdpBuilder builder(cond.to_base.size(), mdp.num_actions());
  for (StateId c = 0; c < cond.to_base.size(); ++c) {
    const StateId s = cond.to_base[c];
    if (mdp.is_goal(s)) {
      builder.add_goal(c);
      continue;
    }
    for (const ActionRow* row : usable[s]) {
      const double z = kept_mass(*row, probs, keep);
      std::vector<Outcome> outcomes;
      for (const auto& o : row->outcomes)
        if (keep[o.next]) outcomes.push_back(Outcome{*cond.from_base[o.next], o.prob * probs[o.next] / z});
      builder.add_row(c, row->action, row->cost, std::move(outcomes));
    }
  }
  if (mdp.start() && keep[*mdp.start()]) builder.set_start(cond.from_base[*mdp.start()]);
  cond.mdp = builder.build();
  return cond;
}

ValueFn conditional_values(const ConditionalMdp& cond, const ViConfig& cfg, SolveReport* report) {
  ValueFn values(cond.base_num_states, 0.0);
  if (cond.empty()) {
    if (report) {
      *report = SolveReport{};
      report->converged = true;
      report->residual_final = 0.0;
    }
    return values;
  }
  ViConfig inner = cfg;
  inner.init.clear();
  SolveReport solved = vi_ssp(cond.mdp, inner);
  for (StateId c = 0; c < cond.to_base.size(); ++c) values[cond.to_base[c]] = solved.values[c];
  if (report) *report = std::move(solved);
  return values;
}

Policy extract_policy(const ConditionalMdp& cond, const ValueFn& values, double eta) {
  Policy policy(cond.base_num_states);
  std::vector<double> compact(cond.to_base.size());
  for (StateId c = 0; c < cond.to_base.size(); ++c) compact[c] = values[cond.to_base[c]];
  for (StateId c = 0; c < cond.to_base.size(); ++c) {
    if (cond.mdp.is_goal(c) || cond.mdp.rows(c).empty()) continue;
    policy.assign(cond.to_base[c], greedy_action(cond.mdp, compact, c, eta));
  }
  return policy;
}

}  // namespace deadend
