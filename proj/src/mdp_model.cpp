#include "deadend/mdp_model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>
#include <stdexcept>

namespace deadend {

const ActionRow* ExplicitMdp::find_row(StateId s, ActionId a) const {
  const auto& state_rows = rows_[s];
  auto it = std::lower_bound(state_rows.begin(), state_rows.end(), a,
                             [](const ActionRow& row, ActionId id) { return row.action < id; });
  if (it == state_rows.end() || it->action != a) return nullptr;
  return &*it;
}

ExplicitMdp ExplicitMdp::with_penalty(double penalty) const {
  ExplicitMdp copy = *this;
  copy.penalty_ = penalty;
  return copy;
}

ExplicitMdp ExplicitMdp::with_start(std::optional<StateId> start) const {
  if (start && *start >= num_states()) throw std::out_of_range("start state out of range");
  ExplicitMdp copy = *this;
  copy.start_ = start;
  return copy;
}

bool ExplicitMdp::operator==(const ExplicitMdp& other) const {
  if (num_actions_ != other.num_actions_ || goal_mask_ != other.goal_mask_ ||
      start_ != other.start_ || rows_.size() != other.rows_.size())
    return false;
  // Penalties compare by value; inf == inf holds.
  if (!(penalty_ == other.penalty_)) return false;
  for (std::size_t s = 0; s < rows_.size(); ++s) {
    const auto& lhs = rows_[s];
    const auto& rhs = other.rows_[s];
    if (lhs.size() != rhs.size()) return false;
    for (std::size_t i = 0; i < lhs.size(); ++i) {
      if (lhs[i].action != rhs[i].action || lhs[i].cost != rhs[i].cost ||
          lhs[i].outcomes.size() != rhs[i].outcomes.size())
        return false;
      for (std::size_t k = 0; k < lhs[i].outcomes.size(); ++k) {
        if (lhs[i].outcomes[k].next != rhs[i].outcomes[k].next ||
            lhs[i].outcomes[k].prob != rhs[i].outcomes[k].prob)
          return false;
      }
    }
  }
  return true;
}

MdpBuilder::MdpBuilder(std::size_t num_states, std::size_t num_actions) {
  mdp_.num_actions_ = num_actions;
  mdp_.rows_.resize(num_states);
  mdp_.goal_mask_.assign(num_states, false);
}

void MdpBuilder::check_state(StateId s) const {
  if (s >= mdp_.rows_.size()) throw std::out_of_range("state id " + std::to_string(s) + " out of range");
}

MdpBuilder& MdpBuilder::add_row(StateId s, ActionId a, double cost, std::vector<Outcome> outcomes) {
  check_state(s);
  if (a >= mdp_.num_actions_) throw std::out_of_range("action id " + std::to_string(a) + " out of range");
  for (const auto& o : outcomes) check_state(o.next);
  auto& state_rows = mdp_.rows_[s];
  auto it = std::lower_bound(state_rows.begin(), state_rows.end(), a,
                             [](const ActionRow& row, ActionId id) { return row.action < id; });
  if (it != state_rows.end() && it->action == a)
    throw std::invalid_argument("duplicate row for state " + std::to_string(s) + ", action " +
                                std::to_string(a));

  // Merge repeated targets, drop zero-probability outcomes, order by target.
  std::sort(outcomes.begin(), outcomes.end(),
            [](const Outcome& x, const Outcome& y) { return x.next < y.next; });
  std::vector<Outcome> merged;
  for (const auto& o : outcomes) {
    if (!merged.empty() && merged.back().next == o.next) {
      merged.back().prob += o.prob;
    } else {
      merged.push_back(o);
    }
  }
  std::erase_if(merged, [](const Outcome& o) { return o.prob == 0.0; });
  state_rows.insert(it, ActionRow{a, cost, std::move(merged)});
  return *this;
}

MdpBuilder& MdpBuilder::add_goal(StateId g) {
  check_state(g);
  mdp_.goal_mask_[g] = true;
  return *this;
}

MdpBuilder& MdpBuilder::set_start(std::optional<StateId> s) {
  if (s) check_state(*s);
  mdp_.start_ = s;
  return *this;
}

MdpBuilder& MdpBuilder::set_penalty(double penalty) {
  mdp_.penalty_ = penalty;
  return *this;
}

ExplicitMdp MdpBuilder::build() const {
  ExplicitMdp out = mdp_;
  out.goals_.clear();
  for (StateId s = 0; s < out.rows_.size(); ++s) {
    if (!out.goal_mask_[s]) continue;
    out.goals_.push_back(s);
    if (out.rows_[s].empty()) {
      for (ActionId a = 0; a < out.num_actions_; ++a)
        out.rows_[s].push_back(ActionRow{a, 0.0, {Outcome{s, 1.0}}});
    }
  }
  return out;
}

std::size_t Policy::assigned_count() const {
  return static_cast<std::size_t>(
      std::count_if(actions_.begin(), actions_.end(), [](const auto& a) { return a.has_value(); }));
}

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kStateOutOfRange: return "state-out-of-range";
    case ViolationKind::kBadProbability: return "bad-probability";
    case ViolationKind::kProbabilitySum: return "probability-sum";
    case ViolationKind::kGoalNotAbsorbing: return "goal-not-absorbing";
    case ViolationKind::kGoalCostNonzero: return "goal-cost-nonzero";
    case ViolationKind::kNoApplicableAction: return "no-applicable-action";
    case ViolationKind::kNonPositiveCost: return "non-positive-cost";
    case ViolationKind::kNonFiniteCost: return "non-finite-cost";
    case ViolationKind::kBadPenalty: return "bad-penalty";
    case ViolationKind::kBadStart: return "bad-start";
  }
  return "unknown";
}

namespace {

std::string format_number(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

}  // namespace

std::vector<Violation> validate(const ExplicitMdp& mdp) {
  std::vector<Violation> out;
  const auto n = mdp.num_states();
  auto add = [&out](ViolationKind kind, std::optional<StateId> s, std::optional<ActionId> a,
                    std::string msg) { out.push_back(Violation{kind, s, a, std::move(msg)}); };

  if (!(mdp.penalty() > 0.0) || std::isnan(mdp.penalty()))
    add(ViolationKind::kBadPenalty, std::nullopt, std::nullopt,
        "penalty must be positive or inf, got " + format_number(mdp.penalty()));
  if (mdp.start() && *mdp.start() >= n)
    add(ViolationKind::kBadStart, std::nullopt, std::nullopt, "start state out of range");

  for (StateId s = 0; s < n; ++s) {
    const bool goal = mdp.is_goal(s);
    if (!goal && mdp.rows(s).empty())
      add(ViolationKind::kNoApplicableAction, s, std::nullopt, "non-goal state has no applicable action");
    for (const auto& row : mdp.rows(s)) {
      double total = 0.0;
      bool bad_prob = false;
      for (const auto& o : row.outcomes) {
        if (o.next >= n) {
          add(ViolationKind::kStateOutOfRange, s, row.action, "successor id out of range");
          continue;
        }
        if (!(o.prob > 0.0 && o.prob <= 1.0)) {
          add(ViolationKind::kBadProbability, s, row.action,
              "probability " + format_number(o.prob) + " outside (0, 1]");
          bad_prob = true;
        }
        total += o.prob;
      }
      if (!bad_prob && std::abs(total - 1.0) > kProbabilitySumTolerance)
        add(ViolationKind::kProbabilitySum, s, row.action,
            "probabilities sum to " + format_number(total) + " != 1");
      if (!std::isfinite(row.cost)) {
        add(ViolationKind::kNonFiniteCost, s, row.action, "cost is not finite");
        continue;
      }
      if (goal) {
        const bool absorbing = row.outcomes.size() == 1 && row.outcomes[0].next == s &&
                               row.outcomes[0].prob == 1.0;
        if (!absorbing)
          add(ViolationKind::kGoalNotAbsorbing, s, row.action, "goal action leaves the goal");
        if (row.cost != 0.0)
          add(ViolationKind::kGoalCostNonzero, s, row.action,
              "goal action cost nonzero (" + format_number(row.cost) + ")");
      } else if (!(row.cost > 0.0)) {
        add(ViolationKind::kNonPositiveCost, s, row.action,
            "cost " + format_number(row.cost) + " is not strictly positive");
      }
    }
  }
  return out;
}

std::vector<StateId> mask_to_ids(const std::vector<bool>& mask) {
  std::vector<StateId> ids;
  for (StateId s = 0; s < mask.size(); ++s)
    if (mask[s]) ids.push_back(s);
  return ids;
}

std::vector<bool> reachable_mask(const ExplicitMdp& mdp, StateId source) {
  std::vector<bool> seen(mdp.num_states(), false);
  std::deque<StateId> queue{source};
  seen[source] = true;
  while (!queue.empty()) {
    const StateId s = queue.front();
    queue.pop_front();
    for (const auto& row : mdp.rows(s)) {
      for (const auto& o : row.outcomes) {
        if (!seen[o.next]) {
          seen[o.next] = true;
          queue.push_back(o.next);
        }
      }
    }
  }
  return seen;
}

std::vector<StateId> reachable_from(const ExplicitMdp& mdp, StateId source) {
  return mask_to_ids(reachable_mask(mdp, source));
}

std::vector<bool> dead_end_mask(const ExplicitMdp& mdp) {
  const auto n = mdp.num_states();
  // Backward search from the goals over the reversed edge relation.
  std::vector<std::vector<StateId>> predecessors(n);
  for (StateId s = 0; s < n; ++s)
    for (const auto& row : mdp.rows(s))
      for (const auto& o : row.outcomes) predecessors[o.next].push_back(s);

  std::vector<bool> reaches_goal(n, false);
  std::deque<StateId> queue;
  for (StateId g : mdp.goals()) {
    reaches_goal[g] = true;
    queue.push_back(g);
  }
  while (!queue.empty()) {
    const StateId s = queue.front();
    queue.pop_front();
    for (StateId p : predecessors[s]) {
      if (!reaches_goal[p]) {
        reaches_goal[p] = true;
        queue.push_back(p);
      }
    }
  }
  reaches_goal.flip();
  return reaches_goal;
}

std::vector<StateId> detect_dead_ends(const ExplicitMdp& mdp) { return mask_to_ids(dead_end_mask(mdp)); }

}  // namespace deadend
