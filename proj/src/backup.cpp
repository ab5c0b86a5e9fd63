#include "deadend/backup.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace deadend {

double q_value(const ActionRow& row, std::span<const double> values) {
  double q = row.cost;
  for (const auto& o : row.outcomes) {
    const double v = values[o.next];
    if (v == kInfinity) return kInfinity;
    q += o.prob * v;
  }
  return q;
}

double q_value(const ExplicitMdp& mdp, std::span<const double> values, StateId s, ActionId a) {
  const ActionRow* row = mdp.find_row(s, a);
  if (row == nullptr)
    throw std::invalid_argument("action " + std::to_string(a) + " is not applicable in state " +
                                std::to_string(s));
  return q_value(*row, values);
}

double prob_value(const ActionRow& row, std::span<const double> probs) {
  double p = 0.0;
  for (const auto& o : row.outcomes) p += o.prob * probs[o.next];
  return p;
}

double bellman_backup(const ExplicitMdp& mdp, std::span<const double> values, StateId s) {
  if (mdp.is_goal(s)) return 0.0;
  double best = kInfinity;
  for (const auto& row : mdp.rows(s)) best = std::min(best, q_value(row, values));
  return best;
}

double finite_penalty_backup(const ExplicitMdp& mdp, std::span<const double> values, StateId s) {
  if (!mdp.has_finite_penalty())
    throw std::invalid_argument("finite_penalty_backup requires a finite penalty");
  if (mdp.is_goal(s)) return 0.0;
  return std::min(mdp.penalty(), bellman_backup(mdp, values, s));
}

double maxprob_backup(const ExplicitMdp& mdp, std::span<const double> probs, StateId s) {
  if (mdp.is_goal(s)) return 1.0;
  double best = 0.0;
  for (const auto& row : mdp.rows(s)) best = std::max(best, prob_value(row, probs));
  return best;
}

GreedySet greedy_set(const ExplicitMdp& mdp, std::span<const double> table, StateId s, GreedyMode mode,
                     double eta) {
  GreedySet out{s, {}, eta};
  const auto rows = mdp.rows(s);
  if (rows.empty()) return out;

  std::vector<double> scores;
  scores.reserve(rows.size());
  for (const auto& row : rows)
    scores.push_back(mode == GreedyMode::kMinCost ? q_value(row, table) : prob_value(row, table));

  if (mode == GreedyMode::kMinCost) {
    const double best = *std::min_element(scores.begin(), scores.end());
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (scores[i] <= best + eta) out.actions.push_back(rows[i].action);
  } else {
    const double best = *std::max_element(scores.begin(), scores.end());
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (scores[i] >= best - eta) out.actions.push_back(rows[i].action);
  }
  return out;
}

ActionId greedy_action(const ExplicitMdp& mdp, std::span<const double> values, StateId s, double eta) {
  const auto rows = mdp.rows(s);
  if (rows.empty()) throw std::invalid_argument("state " + std::to_string(s) + " has no applicable action");
  double best = kInfinity;
  for (const auto& row : rows) best = std::min(best, q_value(row, values));
  for (const auto& row : rows)
    if (q_value(row, values) <= best + eta) return row.action;
  return rows.front().action;
}

double value_gap(double a, double b) {
  if (a == b) return 0.0;  // covers inf == inf
  return std::abs(a - b);
}

double residual(std::span<const double> prev, std::span<const double> next, std::span<const StateId> scope) {
  double r = 0.0;
  for (StateId s : scope) r = std::max(r, value_gap(prev[s], next[s]));
  return r;
}

double residual(std::span<const double> prev, std::span<const double> next) {
  double r = 0.0;
  for (std::size_t s = 0; s < prev.size(); ++s) r = std::max(r, value_gap(prev[s], next[s]));
  return r;
}

bool SweepStop::operator()(double change) {
  const double q_now = previous_ > 0.0 && std::isfinite(previous_) ? change / previous_ : 0.0;
  const double q = std::max(q_now, q_previous_);
  q_previous_ = q_now;
  previous_ = change;
  if (!(change <= epsilon_)) return false;
  return change == 0.0 || (q < 1.0 && change * q / (1.0 - q) <= epsilon_);
}

}  // namespace deadend
