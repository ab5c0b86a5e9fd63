#include "deadend/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>

namespace deadend {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Solves A x = b in place by Gaussian elimination with partial pivoting.
// `a` is row-major k x k.
std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b) {
  const std::size_t k = b.size();
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < k; ++r)
      if (std::abs(a[r * k + col]) > std::abs(a[pivot * k + col])) pivot = r;
    if (a[pivot * k + col] == 0.0) throw std::runtime_error("singular chain system");
    if (pivot != col) {
      for (std::size_t c = 0; c < k; ++c) std::swap(a[col * k + c], a[pivot * k + c]);
      std::swap(b[col], b[pivot]);
    }
    const double diag = a[col * k + col];
    for (std::size_t r = col + 1; r < k; ++r) {
      const double factor = a[r * k + col] / diag;
      if (factor == 0.0) continue;
      for (std::size_t c = col; c < k; ++c) a[r * k + c] -= factor * a[col * k + c];
      b[r] -= factor * b[col];
    }
  }
  std::vector<double> x(k);
  for (std::size_t i = k; i-- > 0;) {
    double acc = b[i];
    for (std::size_t c = i + 1; c < k; ++c) acc -= a[i * k + c] * x[c];
    x[i] = acc / a[i * k + i];
  }
  return x;
}

// Fixed chain of a policy over its domain.
struct Chain {
  std::vector<bool> domain;
  std::vector<const ActionRow*> row;  // nullptr on goals and outside the domain
};

Chain build_chain(const ExplicitMdp& mdp, const Policy& policy) {
  const auto n = mdp.num_states();
  if (policy.size() != n) throw std::invalid_argument("policy size does not match the MDP");
  Chain chain{std::vector<bool>(n, false), std::vector<const ActionRow*>(n, nullptr)};
  std::deque<StateId> queue;
  for (StateId s = 0; s < n; ++s) {
    if (policy.assigned(s) || mdp.is_goal(s)) {
      chain.domain[s] = true;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    const StateId s = queue.front();
    queue.pop_front();
    if (mdp.is_goal(s)) continue;
    const auto a = policy.action(s);
    if (!a) throw std::invalid_argument("policy leaves reachable state " + std::to_string(s) + " unassigned");
    const ActionRow* row = mdp.find_row(s, *a);
    if (row == nullptr)
      throw std::invalid_argument("policy action " + std::to_string(*a) + " is not applicable in state " +
                                  std::to_string(s));
    chain.row[s] = row;
    for (const auto& o : row->outcomes) {
      if (!chain.domain[o.next]) {
        chain.domain[o.next] = true;
        queue.push_back(o.next);
      }
    }
  }
  return chain;
}

// States of the chain from which `targets` are reachable.
std::vector<bool> backward_closure(const ExplicitMdp& mdp, const Chain& chain, const std::vector<bool>& targets) {
  const auto n = mdp.num_states();
  std::vector<std::vector<StateId>> pred(n);
  for (StateId s = 0; s < n; ++s)
    if (chain.row[s])
      for (const auto& o : chain.row[s]->outcomes) pred[o.next].push_back(s);
  std::vector<bool> hit = targets;
  std::deque<StateId> queue;
  for (StateId s = 0; s < n; ++s)
    if (hit[s]) queue.push_back(s);
  while (!queue.empty()) {
    const StateId s = queue.front();
    queue.pop_front();
    for (StateId p : pred[s])
      if (!hit[p]) {
        hit[p] = true;
        queue.push_back(p);
      }
  }
  return hit;
}

// Solves x(s) = rhs(s) + sum_{s' in unknown} W(s, s') x(s') over the
// `unknown` states, where W is given per state by `weights`.
template <typename Weights, typename Rhs>
std::vector<double> solve_on(const std::vector<bool>& unknown, Weights&& weights, Rhs&& rhs) {
  std::vector<StateId> ids;
  std::vector<std::size_t> slot(unknown.size(), 0);
  for (StateId s = 0; s < unknown.size(); ++s)
    if (unknown[s]) {
      slot[s] = ids.size();
      ids.push_back(s);
    }
  const std::size_t k = ids.size();
  std::vector<double> out(unknown.size(), kNaN);
  if (k == 0) return out;
  std::vector<double> a(k * k, 0.0), b(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    const StateId s = ids[i];
    a[i * k + i] = 1.0;
    b[i] = rhs(s);
    weights(s, [&](StateId next, double w) {
      if (unknown[next]) a[i * k + slot[next]] -= w;
    });
  }
  const auto x = solve_dense(std::move(a), std::move(b));
  for (std::size_t i = 0; i < k; ++i) out[ids[i]] = x[i];
  return out;
}

bool costs_close(double a, double b) {
  if (a == b) return true;
  if (std::isinf(a) || std::isinf(b)) return false;
  return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

bool lex_worse(const LexValue& lhs, const LexValue& rhs, double tol) {
  if (lhs.prob < rhs.prob - tol) return true;
  if (rhs.prob < lhs.prob - tol) return false;
  return lhs.cond_cost > rhs.cond_cost && !costs_close(lhs.cond_cost, rhs.cond_cost);
}

bool lex_equivalent(const LexValue& lhs, const LexValue& rhs, double tol) {
  return std::abs(lhs.prob - rhs.prob) <= tol && costs_close(lhs.cond_cost, rhs.cond_cost);
}

PolicyEvaluation evaluate_policy(const ExplicitMdp& mdp, const Policy& policy) {
  const auto n = mdp.num_states();
  const Chain chain = build_chain(mdp, policy);
  PolicyEvaluation ev;
  ev.defined = chain.domain;
  ev.expected_cost.assign(n, kNaN);
  ev.goal_prob.assign(n, kNaN);
  ev.conditional_cost.assign(n, kNaN);
  ev.finite_penalty_cost.assign(n, kNaN);

  std::vector<bool> goal_targets(n, false);
  for (StateId g : mdp.goals())
    if (chain.domain[g]) goal_targets[g] = true;
  const auto reaches_goal = backward_closure(mdp, chain, goal_targets);
  std::vector<bool> misses(n, false);
  for (StateId s = 0; s < n; ++s) misses[s] = chain.domain[s] && !reaches_goal[s];
  const auto can_miss = backward_closure(mdp, chain, misses);

  // Goal probability: absorbing-chain hitting probability.
  std::vector<bool> unknown(n, false);
  for (StateId s = 0; s < n; ++s) unknown[s] = chain.row[s] && reaches_goal[s];
  auto chain_edges = [&](StateId s, auto&& emit) {
    for (const auto& o : chain.row[s]->outcomes) emit(o.next, o.prob);
  };
  auto prob = solve_on(unknown, chain_edges, [&](StateId s) {
    double direct = 0.0;
    for (const auto& o : chain.row[s]->outcomes)
      if (mdp.is_goal(o.next)) direct += o.prob;
    return direct;
  });
  for (StateId s = 0; s < n; ++s) {
    if (!chain.domain[s]) continue;
    if (mdp.is_goal(s)) ev.goal_prob[s] = 1.0;
    else if (!reaches_goal[s]) ev.goal_prob[s] = 0.0;
    else ev.goal_prob[s] = std::clamp(prob[s], 0.0, 1.0);
  }

  // Expected total cost: finite only where the goal is reached surely.
  for (StateId s = 0; s < n; ++s) unknown[s] = chain.row[s] && !can_miss[s];
  auto cost = solve_on(unknown, chain_edges, [&](StateId s) { return chain.row[s]->cost; });
  for (StateId s = 0; s < n; ++s) {
    if (!chain.domain[s]) continue;
    if (mdp.is_goal(s)) ev.expected_cost[s] = 0.0;
    else ev.expected_cost[s] = can_miss[s] ? kInfinity : cost[s];
  }

  // Conditional cost on the renormalized chain T(s,s') P(s') / P(s).
  for (StateId s = 0; s < n; ++s) unknown[s] = chain.row[s] && reaches_goal[s];
  auto conditional = solve_on(
      unknown,
      [&](StateId s, auto&& emit) {
        for (const auto& o : chain.row[s]->outcomes)
          if (reaches_goal[o.next]) emit(o.next, o.prob * ev.goal_prob[o.next] / ev.goal_prob[s]);
      },
      [&](StateId s) { return chain.row[s]->cost; });
  for (StateId s = 0; s < n; ++s) {
    if (!chain.domain[s]) continue;
    ev.conditional_cost[s] = unknown[s] ? conditional[s] : 0.0;
  }

  // Finite-penalty cost by policy iteration over the stop/continue choice,
  // starting from "stop everywhere" (always proper).
  if (!mdp.has_finite_penalty()) {
    ev.finite_penalty_cost = ev.expected_cost;
    return ev;
  }
  const double penalty = mdp.penalty();
  const double tol = 1e-12 * std::max(1.0, penalty);
  std::vector<bool> stop(n, false);
  for (StateId s = 0; s < n; ++s) stop[s] = chain.row[s] != nullptr;
  std::vector<double> values(n, 0.0);
  for (bool changed = true; changed;) {
    for (StateId s = 0; s < n; ++s) unknown[s] = chain.row[s] && !stop[s];
    auto solved = solve_on(
        unknown, chain_edges, [&](StateId s) {
          double acc = chain.row[s]->cost;
          for (const auto& o : chain.row[s]->outcomes)
            if (stop[o.next]) acc += o.prob * penalty;
          return acc;
        });
    for (StateId s = 0; s < n; ++s) {
      if (!chain.row[s]) values[s] = 0.0;
      else values[s] = stop[s] ? penalty : solved[s];
    }
    changed = false;
    for (StateId s = 0; s < n; ++s) {
      if (!chain.row[s]) continue;
      double q = chain.row[s]->cost;
      for (const auto& o : chain.row[s]->outcomes) q += o.prob * values[o.next];
      const bool want_stop = stop[s] ? !(q < penalty - tol) : (penalty < q - tol);
      if (want_stop != stop[s]) {
        stop[s] = want_stop;
        changed = true;
      }
    }
  }
  for (StateId s = 0; s < n; ++s)
    if (chain.domain[s]) ev.finite_penalty_cost[s] = values[s];
  return ev;
}

Policy complete_policy(const ExplicitMdp& mdp, const Policy& policy) {
  if (policy.size() != mdp.num_states()) throw std::invalid_argument("complete_policy: policy size mismatch");
  Policy out = policy;
  std::vector<bool> seen(mdp.num_states(), false);
  std::vector<StateId> stack;
  for (StateId s = 0; s < mdp.num_states(); ++s) {
    if (policy.assigned(s)) {
      seen[s] = true;
      stack.push_back(s);
    }
  }
  while (!stack.empty()) {
    const StateId s = stack.back();
    stack.pop_back();
    if (mdp.is_goal(s)) continue;
    if (!out.assigned(s)) {
      if (mdp.rows(s).empty()) continue;
      out.assign(s, mdp.rows(s).front().action);
    }
    const ActionRow* row = mdp.find_row(s, *out.action(s));
    if (!row) continue;
    for (const auto& o : row->outcomes) {
      if (!seen[o.next]) {
        seen[o.next] = true;
        stack.push_back(o.next);
      }
    }
  }
  return out;
}

GoalProbFn goal_prob_iterative(const ExplicitMdp& mdp, const Policy& policy, double epsilon) {
  const Chain chain = build_chain(mdp, policy);
  const auto n = mdp.num_states();
  GoalProbFn p(n, 0.0);
  for (StateId g : mdp.goals()) p[g] = 1.0;
  for (double change = kInfinity; change > epsilon;) {
    change = 0.0;
    for (StateId s = 0; s < n; ++s) {
      if (!chain.row[s]) continue;
      double next = 0.0;
      for (const auto& o : chain.row[s]->outcomes) next += o.prob * p[o.next];
      change = std::max(change, std::abs(next - p[s]));
      p[s] = next;
    }
  }
  for (StateId s = 0; s < n; ++s)
    if (!chain.domain[s]) p[s] = kNaN;
  return p;
}

OracleResult enumerate_optimal(const ExplicitMdp& mdp, Criterion criterion, const EnumerateOptions& options) {
  const auto n = mdp.num_states();
  OracleResult result;
  const bool rooted = options.rooted && mdp.start().has_value();
  const auto reach = rooted ? reachable_mask(mdp, *mdp.start()) : std::vector<bool>(n, true);
  for (StateId s = 0; s < n; ++s)
    if (reach[s] && !mdp.is_goal(s)) result.domain.push_back(s);
  if (result.domain.size() > options.max_states)
    throw std::length_error("oracle domain has " + std::to_string(result.domain.size()) +
                            " non-goal states, cap is " + std::to_string(options.max_states));
  double count = 1.0;
  for (StateId s : result.domain) {
    if (mdp.rows(s).empty()) throw std::invalid_argument("state " + std::to_string(s) + " has no action");
    count *= static_cast<double>(mdp.rows(s).size());
  }
  if (count > static_cast<double>(options.max_policies))
    throw std::length_error("oracle would enumerate " + std::to_string(static_cast<std::size_t>(count)) +
                            " policies, cap is " + std::to_string(options.max_policies));

  const auto& domain = result.domain;
  auto for_each_policy = [&](auto&& visit) {
    std::vector<std::size_t> choice(domain.size(), 0);
    while (true) {
      Policy policy(n);
      for (std::size_t i = 0; i < domain.size(); ++i) policy.assign(domain[i], mdp.rows(domain[i])[choice[i]].action);
      visit(policy, evaluate_policy(mdp, policy));
      std::size_t i = 0;
      for (; i < domain.size(); ++i) {
        if (++choice[i] < mdp.rows(domain[i]).size()) break;
        choice[i] = 0;
      }
      if (i == domain.size()) return;
    }
  };

  auto score = [&](const PolicyEvaluation& ev, StateId s) {
    switch (criterion) {
      case Criterion::kExpectedCost: return LexValue{0.0, ev.expected_cost[s]};
      case Criterion::kFinitePenalty: return LexValue{0.0, ev.finite_penalty_cost[s]};
      case Criterion::kLexicographic: return LexValue{ev.goal_prob[s], ev.conditional_cost[s]};
    }
    return LexValue{};
  };

  // Pass 1: per-state optimum. Pass 2: collect the policies attaining it.
  std::vector<std::optional<LexValue>> best(n);
  for_each_policy([&](const Policy&, const PolicyEvaluation& ev) {
    ++result.policies_evaluated;
    for (StateId s : domain) {
      const LexValue v = score(ev, s);
      if (!best[s] || lex_worse(*best[s], v)) best[s] = v;
    }
  });
  for_each_policy([&](const Policy& policy, const PolicyEvaluation& ev) {
    bool everywhere = true;
    for (StateId s : domain) everywhere = everywhere && lex_equivalent(score(ev, s), *best[s]);
    if (everywhere) result.optimal_everywhere.push_back(policy);
    if (mdp.start()) {
      const StateId s0 = *mdp.start();
      if (mdp.is_goal(s0) || (ev.defined[s0] && lex_equivalent(score(ev, s0), *best[s0])))
        result.optimal_at_start.push_back(policy);
    }
  });

  result.values.assign(n, kNaN);
  if (criterion == Criterion::kLexicographic) result.probs.assign(n, kNaN);
  for (StateId s = 0; s < n; ++s) {
    if (mdp.is_goal(s)) {
      result.values[s] = 0.0;
      if (!result.probs.empty()) result.probs[s] = 1.0;
    } else if (best[s]) {
      result.values[s] = best[s]->cond_cost;
      if (!result.probs.empty()) result.probs[s] = best[s]->prob;
    }
  }
  return result;
}

std::vector<double> geometric_grid(double d_lo, double d_hi, std::size_t steps) {
  if (!(d_lo > 0.0) || !(d_hi >= d_lo) || steps < 1) throw std::invalid_argument("bad penalty grid");
  std::vector<double> grid;
  if (steps == 1) return {d_lo};
  for (std::size_t i = 0; i < steps; ++i)
    grid.push_back(d_lo * std::pow(d_hi / d_lo, static_cast<double>(i) / static_cast<double>(steps - 1)));
  grid.back() = d_hi;
  return grid;
}

ThresholdReport find_penalty_threshold(const ExplicitMdp& mdp, const std::vector<double>& grid,
                                       const EnumerateOptions& options) {
  ThresholdReport report;
  auto lex = enumerate_optimal(mdp, Criterion::kLexicographic, options).optimal_everywhere;
  std::sort(lex.begin(), lex.end());
  for (double penalty : grid) {
    auto fp = enumerate_optimal(mdp.with_penalty(penalty), Criterion::kFinitePenalty, options).optimal_everywhere;
    std::sort(fp.begin(), fp.end());
    PenaltyGridRow row;
    row.penalty = penalty;
    row.finite_penalty_optimal = fp.size();
    row.lexicographic_optimal = lex.size();
    row.agree = fp == lex;
    row.strict_superset = fp.size() > lex.size() && std::includes(fp.begin(), fp.end(), lex.begin(), lex.end());
    report.rows.push_back(row);
  }
  for (std::size_t i = report.rows.size(); i-- > 0;) {
    if (!report.rows[i].agree) break;
    report.threshold = report.rows[i].penalty;
  }
  return report;
}

ThresholdReport find_penalty_threshold(const ExplicitMdp& mdp, double d_lo, double d_hi, std::size_t steps,
                                       const EnumerateOptions& options) {
  return find_penalty_threshold(mdp, geometric_grid(d_lo, d_hi, steps), options);
}

}  // namespace deadend
