#include "deadend/heuristic_search.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "deadend/backup.hpp"
#include "deadend/end_components.hpp"

namespace deadend {
namespace {

using Clock = std::chrono::steady_clock;

class Budget {
 public:
  Budget(const SearchConfig& cfg, const std::size_t& backups)
      : cfg_(cfg), backups_(backups), started_(Clock::now()) {}

  bool exhausted() {
    if (backups_ >= cfg_.max_backups) return true;
    if (cfg_.time_limit > 0.0 && ++polls_ % 1024 == 0) {
      const std::chrono::duration<double> elapsed = Clock::now() - started_;
      if (elapsed.count() > cfg_.time_limit) timed_out_ = true;
    }
    return timed_out_;
  }

 private:
  const SearchConfig& cfg_;
  const std::size_t& backups_;
  Clock::time_point started_;
  std::size_t polls_ = 0;
  bool timed_out_ = false;
};

void require_start(const ExplicitMdp& mdp) {
  if (!mdp.start()) throw std::invalid_argument("heuristic search needs a start state");
}

class LrtdpRun {
 public:
  LrtdpRun(const ExplicitMdp& mdp, BackupMode mode, const Heuristic& heuristic, const SearchConfig& cfg,
           SolveReport& report)
      : mdp_(mdp),
        heuristic_(heuristic),
        cfg_(cfg),
        report_(report),
        cap_(mode == BackupMode::kFinitePenalty ? mdp.penalty() : kInfinity),
        values_(mdp.num_states(), 0.0),
        touched_(mdp.num_states(), false),
        solved_(mdp.num_states(), false),
        rng_(cfg.seed),
        budget_(cfg, report.backups) {}

  bool run() {
    const StateId start = *mdp_.start();
    const std::size_t depth_cap = cfg_.depth_factor * mdp_.num_states();
    std::vector<StateId> visited;
    while (!is_solved(start)) {
      if (budget_.exhausted()) return false;
      visited.clear();
      StateId s = start;
      while (!is_solved(s)) {
        visited.push_back(s);
        if (mdp_.is_goal(s)) break;
        backup(s);
        if (terminal(s) || visited.size() > depth_cap || budget_.exhausted()) break;
        s = sample(s, best(s).second);
      }
      while (!visited.empty()) {
        const StateId top = visited.back();
        visited.pop_back();
        if (!check_solved(top)) break;
      }
    }
    return true;
  }

  void finish() {
    report_.stats.states_touched =
        static_cast<std::size_t>(std::count(touched_.begin(), touched_.end(), true));
    // Policy and residual over the greedy envelope from s0; reads here do
    // not count as touches.
    const auto n = mdp_.num_states();
    report_.policy = Policy(n);
    report_.residual_final = 0.0;
    std::vector<bool> seen(n, false);
    std::vector<StateId> stack{*mdp_.start()};
    seen[*mdp_.start()] = true;
    while (!stack.empty()) {
      const StateId s = stack.back();
      stack.pop_back();
      if (mdp_.is_goal(s)) continue;
      const auto [q, a] = best(s, /*touch=*/false);
      report_.policy.assign(s, a);
      report_.residual_final = std::max(report_.residual_final, value_gap(std::min(q, cap_), peek(s)));
      // At the cap the agent gives up; successors never matter.
      if (peek(s) >= cap_) continue;
      for (const auto& o : mdp_.find_row(s, a)->outcomes) {
        if (!seen[o.next]) {
          seen[o.next] = true;
          stack.push_back(o.next);
        }
      }
    }
    report_.values.resize(n);
    for (StateId s = 0; s < n; ++s) report_.values[s] = peek(s);
    report_.touched = touched_;
  }

 private:
  double initial(StateId s) const {
    if (mdp_.is_goal(s)) return 0.0;
    return std::min(heuristic_(mdp_, s), cap_);
  }

  double peek(StateId s) const { return touched_[s] ? values_[s] : initial(s); }

  double value(StateId s) {
    if (!touched_[s]) {
      touched_[s] = true;
      values_[s] = initial(s);
    }
    return values_[s];
  }

  // Best Q-value and its lowest-id action (ties within eta).
  std::pair<double, ActionId> best(StateId s, bool touch = true) {
    const auto rows = mdp_.rows(s);
    scratch_.resize(rows.size());
    double low = kInfinity;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      double q = rows[i].cost;
      for (const auto& o : rows[i].outcomes) {
        const double v = touch ? value(o.next) : peek(o.next);
        if (v == kInfinity) {
          q = kInfinity;
          break;
        }
        q += o.prob * v;
      }
      scratch_[i] = q;
      low = std::min(low, q);
    }
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (scratch_[i] <= low + cfg_.eta) return {low, rows[i].action};
    return {low, rows.front().action};
  }

  void backup(StateId s) {
    value(s);
    values_[s] = std::min(best(s).first, cap_);
    ++report_.backups;
  }

  double residual(StateId s) { return value_gap(std::min(best(s).first, cap_), value(s)); }

  // A value at the cap is final: it is a lower bound and cannot exceed the cap.
  bool terminal(StateId s) const { return values_[s] >= cap_; }

  bool is_solved(StateId s) const { return solved_[s] || mdp_.is_goal(s); }

  StateId sample(StateId s, ActionId a) {
    const ActionRow* row = mdp_.find_row(s, a);
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
    for (const auto& o : row->outcomes) {
      if (u < o.prob) return o.next;
      u -= o.prob;
    }
    return row->outcomes.back().next;
  }

  bool check_solved(StateId root) {
    bool consistent = true;
    std::vector<StateId> open, closed;
    if (!is_solved(root)) {
      open.push_back(root);
      in_search_.push_back(root);
      marked(root) = true;
    }
    while (!open.empty()) {
      const StateId s = open.back();
      open.pop_back();
      closed.push_back(s);
      value(s);
      if (residual(s) > cfg_.epsilon) {
        consistent = false;
        continue;
      }
      if (terminal(s)) continue;
      const ActionId a = best(s).second;
      for (const auto& o : mdp_.find_row(s, a)->outcomes) {
        if (!is_solved(o.next) && !marked(o.next)) {
          marked(o.next) = true;
          in_search_.push_back(o.next);
          open.push_back(o.next);
        }
      }
    }
    for (StateId s : in_search_) marked(s) = false;
    in_search_.clear();
    if (consistent) {
      for (StateId s : closed) solved_[s] = true;
    } else {
      while (!closed.empty()) {
        backup(closed.back());
        closed.pop_back();
      }
    }
    return consistent;
  }

  std::vector<bool>::reference marked(StateId s) {
    if (marks_.size() != mdp_.num_states()) marks_.assign(mdp_.num_states(), false);
    return marks_[s];
  }

  const ExplicitMdp& mdp_;
  const Heuristic& heuristic_;
  const SearchConfig& cfg_;
  SolveReport& report_;
  double cap_;
  std::vector<double> values_;
  std::vector<bool> touched_;
  std::vector<bool> solved_;
  std::vector<bool> marks_;
  std::vector<StateId> in_search_;
  std::vector<double> scratch_;
  std::mt19937_64 rng_;
  Budget budget_;
};

class FretRun {
 public:
  FretRun(const ExplicitMdp& mdp, const Heuristic& heuristic, const SearchConfig& cfg, SolveReport& report)
      : mdp_(mdp),
        heuristic_(heuristic),
        cfg_(cfg),
        report_(report),
        probs_(mdp.num_states(), 0.0),
        touched_(mdp.num_states(), false),
        budget_(cfg, report.backups) {}

  bool run() {
    while (true) {
      // Revise the eta-greedy graph from s0 until it is epsilon-consistent.
      std::vector<StateId> order;
      SweepStop stop(cfg_.epsilon);
      while (true) {
        if (budget_.exhausted()) return false;
        order = greedy_graph_postorder();
        double change = 0.0;
        for (StateId s : order) {
          const double updated = backup(s);
          change = std::max(change, std::abs(updated - probs_[s]));
          probs_[s] = updated;
        }
        report_.residual_final = change;
        if (stop(change)) break;
      }

      // Eliminate traps on the graph just revised.
      order = greedy_graph_postorder();
      std::vector<bool> scope(mdp_.num_states(), false);
      for (StateId s : order) {
        scope[s] = true;
        for (const auto& row : mdp_.rows(s))
          for (const auto& o : row.outcomes) value(o.next);
      }
      const TrapElimination te = eliminate_traps(mdp_, probs_, scope, cfg_.eta, kTrapTolerance);
      auto& stats = report_.stats;
      ++stats.greedy_graph_builds;
      stats.greedy_graph_max_states = std::max(stats.greedy_graph_max_states, te.graph_states);
      stats.greedy_graph_max_actions = std::max(stats.greedy_graph_max_actions, te.graph_actions);
      if (te.traps == 0) return true;
      ++stats.trap_rounds;
    }
  }

  void finish() {
    report_.stats.states_touched =
        static_cast<std::size_t>(std::count(touched_.begin(), touched_.end(), true));
    for (StateId s = 0; s < mdp_.num_states(); ++s)
      if (!touched_[s]) probs_[s] = initial(s);
    report_.probs = probs_;
    report_.touched = touched_;
  }

 private:
  double initial(StateId s) const { return mdp_.is_goal(s) ? 1.0 : std::clamp(heuristic_(mdp_, s), 0.0, 1.0); }

  double value(StateId s) {
    if (!touched_[s]) {
      touched_[s] = true;
      probs_[s] = initial(s);
    }
    return probs_[s];
  }

  double score(const ActionRow& row) {
    double p = 0.0;
    for (const auto& o : row.outcomes) p += o.prob * value(o.next);
    return p;
  }

  double backup(StateId s) {
    ++report_.backups;
    double top = 0.0;
    for (const auto& row : mdp_.rows(s)) top = std::max(top, score(row));
    return top;
  }

  // Non-goal states reachable from s0 through eta-greedy actions, children
  // before parents.
  std::vector<StateId> greedy_graph_postorder() {
    const auto n = mdp_.num_states();
    std::vector<StateId> order;
    std::vector<bool> seen(n, false);
    std::vector<std::pair<StateId, std::vector<StateId>>> frames;
    auto expand = [&](StateId s) {
      std::vector<StateId> next;
      value(s);
      double top = 0.0;
      for (const auto& row : mdp_.rows(s)) top = std::max(top, score(row));
      for (const auto& row : mdp_.rows(s)) {
        if (score(row) < top - cfg_.eta) continue;
        for (const auto& o : row.outcomes)
          if (!seen[o.next] && !mdp_.is_goal(o.next)) {
            seen[o.next] = true;
            next.push_back(o.next);
          }
      }
      std::reverse(next.begin(), next.end());
      return next;
    };
    const StateId start = *mdp_.start();
    if (mdp_.is_goal(start)) return order;
    seen[start] = true;
    frames.emplace_back(start, expand(start));
    while (!frames.empty()) {
      auto& pending = frames.back().second;
      if (!pending.empty()) {
        const StateId child = pending.back();
        pending.pop_back();
        auto grandchildren = expand(child);
        frames.emplace_back(child, std::move(grandchildren));
        continue;
      }
      order.push_back(frames.back().first);
      frames.pop_back();
    }
    return order;
  }

  const ExplicitMdp& mdp_;
  const Heuristic& heuristic_;
  const SearchConfig& cfg_;
  SolveReport& report_;
  GoalProbFn probs_;
  std::vector<bool> touched_;
  Budget budget_;
};

}  // namespace

Heuristic Heuristic::zero_cost() { return Heuristic(HeuristicKind::kZeroCost, nullptr, kInfinity); }

Heuristic Heuristic::deadend_aware_cost(const ExplicitMdp& mdp) {
  return Heuristic(HeuristicKind::kDeadendAwareCost, std::make_shared<const std::vector<bool>>(dead_end_mask(mdp)),
                   mdp.penalty());
}

Heuristic Heuristic::all_ones_prob() { return Heuristic(HeuristicKind::kAllOnesProb, nullptr, kInfinity); }

Heuristic Heuristic::reachability_prob(const ExplicitMdp& mdp) {
  return Heuristic(HeuristicKind::kReachabilityProb, std::make_shared<const std::vector<bool>>(dead_end_mask(mdp)),
                   kInfinity);
}

double Heuristic::operator()(const ExplicitMdp& mdp, StateId s) const {
  const bool goal = mdp.is_goal(s);
  const StateId base = to_base_ ? (*to_base_)[s] : s;
  switch (kind_) {
    case HeuristicKind::kZeroCost: return 0.0;
    case HeuristicKind::kDeadendAwareCost: return !goal && (*dead_)[base] ? penalty_ : 0.0;
    case HeuristicKind::kAllOnesProb: return 1.0;
    case HeuristicKind::kReachabilityProb: return !goal && (*dead_)[base] ? 0.0 : 1.0;
  }
  return 0.0;
}

Heuristic Heuristic::on_conditional(const ConditionalMdp& cond) const {
  Heuristic out = *this;
  if (to_base_) {
    auto composed = std::make_shared<std::vector<StateId>>();
    for (StateId b : cond.to_base) composed->push_back((*to_base_)[b]);
    out.to_base_ = std::move(composed);
  } else {
    out.to_base_ = std::make_shared<const std::vector<StateId>>(cond.to_base);
  }
  return out;
}

SolveReport lrtdp(const ExplicitMdp& mdp, BackupMode mode, const Heuristic& heuristic, const SearchConfig& cfg) {
  require_start(mdp);
  if (!heuristic.is_cost()) throw std::invalid_argument("lrtdp needs a cost heuristic");
  if (mode == BackupMode::kFinitePenalty && !mdp.has_finite_penalty())
    throw std::invalid_argument("finite-penalty mode needs a finite penalty");
  const auto started = Clock::now();
  SolveReport report;
  report.seed = cfg.seed;
  LrtdpRun run(mdp, mode, heuristic, cfg, report);
  report.converged = run.run();
  run.finish();
  report.wall_time = Clock::now() - started;
  return report;
}

SolveReport fret(const ExplicitMdp& mdp, const Heuristic& heuristic, const SearchConfig& cfg) {
  require_start(mdp);
  if (heuristic.is_cost()) throw std::invalid_argument("fret needs a goal-probability heuristic");
  const auto started = Clock::now();
  SolveReport report;
  report.seed = cfg.seed;
  FretRun run(mdp, heuristic, cfg, report);
  report.converged = run.run();
  run.finish();
  report.wall_time = Clock::now() - started;
  return report;
}

SolveReport shs(const ExplicitMdp& mdp, const Heuristic& prob_heuristic, const Heuristic& cost_heuristic,
                const SearchConfig& cfg, std::optional<double> coupling_eta) {
  require_start(mdp);
  const auto started = Clock::now();
  const double coupling = coupling_eta.value_or(10.0 * cfg.epsilon);
  SearchConfig stage_one = cfg;
  stage_one.eta = coupling;
  SolveReport report = fret(mdp, prob_heuristic, stage_one);
  const GoalProbFn& probs = *report.probs;
  const StateId start = *mdp.start();
  const auto n = mdp.num_states();
  report.values.assign(n, 0.0);
  report.policy = Policy(n);

  const ConditionalMdp cond = build_conditional(mdp, probs, coupling, start);
  if (cond.empty()) {
    report.dead_start = true;
    report.wall_time = Clock::now() - started;
    return report;
  }

  SearchConfig stage_two = cfg;
  stage_two.max_backups = cfg.max_backups > report.backups ? cfg.max_backups - report.backups : 0;
  const SolveReport inner = lrtdp(cond.mdp, BackupMode::kSsp, cost_heuristic.on_conditional(cond), stage_two);
  for (StateId c = 0; c < cond.to_base.size(); ++c) {
    const StateId s = cond.to_base[c];
    report.values[s] = inner.values[c];
    if (const auto a = inner.policy.action(c)) report.policy.assign(s, *a);
    if (inner.touched[c]) report.touched[s] = true;
  }
  report.stats.states_touched =
      static_cast<std::size_t>(std::count(report.touched.begin(), report.touched.end(), true));
  report.backups += inner.backups;
  report.residual_final = std::max(report.residual_final, inner.residual_final);
  report.converged = report.converged && inner.converged;
  report.wall_time = Clock::now() - started;
  return report;
}

}  // namespace deadend
