#include "deadend/end_components.hpp"

#include <algorithm>

#include "deadend/backup.hpp"

namespace deadend {
namespace {

constexpr int kUnvisited = -1;

// Strongly connected components of the graph over `active` states whose
// edges are the outcomes of the allowed rows. Returns a component index per
// state (-1 for inactive states) and the component count.
std::pair<std::vector<int>, int> strongly_connected(const ExplicitMdp& mdp, const std::vector<bool>& active,
                                                    const std::vector<std::vector<std::size_t>>& allowed) {
  const auto n = mdp.num_states();
  std::vector<std::vector<StateId>> succ(n);
  for (StateId s = 0; s < n; ++s) {
    if (!active[s]) continue;
    const auto rows = mdp.rows(s);
    for (std::size_t r : allowed[s])
      for (const auto& o : rows[r].outcomes)
        if (active[o.next]) succ[s].push_back(o.next);
    std::sort(succ[s].begin(), succ[s].end());
    succ[s].erase(std::unique(succ[s].begin(), succ[s].end()), succ[s].end());
  }

  std::vector<int> index(n, kUnvisited), low(n, 0), comp(n, kUnvisited);
  std::vector<bool> on_stack(n, false);
  std::vector<StateId> stack;
  std::vector<std::pair<StateId, std::size_t>> frames;
  int next_index = 0;
  int num_components = 0;

  for (StateId root = 0; root < n; ++root) {
    if (!active[root] || index[root] != kUnvisited) continue;
    frames.emplace_back(root, 0);
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!frames.empty()) {
      auto& [v, pos] = frames.back();
      if (pos < succ[v].size()) {
        const StateId w = succ[v][pos++];
        if (index[w] == kUnvisited) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = true;
          frames.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      const StateId done = v;
      frames.pop_back();
      if (!frames.empty()) {
        const StateId parent = frames.back().first;
        low[parent] = std::min(low[parent], low[done]);
      }
      if (low[done] == index[done]) {
        StateId w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = num_components;
        } while (w != done);
        ++num_components;
      }
    }
  }
  return {std::move(comp), num_components};
}

}  // namespace

std::vector<EndComponent> maximal_end_components(const ExplicitMdp& mdp, const std::vector<bool>& scope,
                                                 std::vector<std::vector<std::size_t>> allowed) {
  const auto n = mdp.num_states();
  std::vector<bool> active = scope;
  allowed.resize(n);

  while (true) {
    auto [comp, count] = strongly_connected(mdp, active, allowed);
    bool changed = false;
    for (StateId s = 0; s < n; ++s) {
      if (!active[s]) continue;
      const auto rows = mdp.rows(s);
      auto& mine = allowed[s];
      const auto before = mine.size();
      std::erase_if(mine, [&](std::size_t r) {
        return std::any_of(rows[r].outcomes.begin(), rows[r].outcomes.end(), [&](const Outcome& o) {
          return !active[o.next] || comp[o.next] != comp[s];
        });
      });
      if (mine.size() != before) changed = true;
    }
    for (StateId s = 0; s < n; ++s) {
      if (active[s] && allowed[s].empty()) {
        active[s] = false;
        changed = true;
      }
    }
    if (changed) continue;

    std::vector<EndComponent> out(static_cast<std::size_t>(count));
    for (StateId s = 0; s < n; ++s) {
      if (!active[s]) continue;
      auto& ec = out[static_cast<std::size_t>(comp[s])];
      ec.states.push_back(s);
      ec.rows.push_back(allowed[s]);
    }
    std::erase_if(out, [](const EndComponent& ec) { return ec.states.empty(); });
    return out;
  }
}

TrapElimination eliminate_traps(const ExplicitMdp& mdp, std::vector<double>& probs, const std::vector<bool>& scope,
                                double eta, double tol) {
  const auto n = mdp.num_states();
  TrapElimination result;
  std::vector<bool> graph(n, false);
  std::vector<std::vector<std::size_t>> allowed(n);
  for (StateId s = 0; s < n; ++s) {
    if (!scope[s] || mdp.is_goal(s)) continue;
    graph[s] = true;
    ++result.graph_states;
    const auto rows = mdp.rows(s);
    double best = 0.0;
    for (const auto& row : rows) best = std::max(best, prob_value(row, probs));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (prob_value(rows[r], probs) >= best - eta) {
        allowed[s].push_back(r);
        ++result.graph_actions;
      }
    }
  }

  const auto components = maximal_end_components(mdp, graph, std::move(allowed));
  result.components = components.size();
  std::vector<bool> member(n, false);
  for (const auto& ec : components) {
    for (StateId s : ec.states) member[s] = true;
    double internal = 0.0;
    double escape = 0.0;
    for (StateId s : ec.states) {
      internal = std::max(internal, probs[s]);
      for (const auto& row : mdp.rows(s)) {
        double inside = 0.0;
        double outside_value = 0.0;
        bool leaves = false;
        for (const auto& o : row.outcomes) {
          if (member[o.next]) {
            inside += o.prob;
          } else {
            leaves = true;
            outside_value += o.prob * probs[o.next];
          }
        }
        if (!leaves) continue;
        const double stay = std::min(inside, 1.0);
        escape = std::max(escape, stay < 1.0 ? outside_value / (1.0 - stay) : 0.0);
      }
    }
    escape = std::min(escape, 1.0);
    if (internal > escape + tol) {
      ++result.traps;
      for (StateId s : ec.states) probs[s] = escape;
    }
    for (StateId s : ec.states) member[s] = false;
  }
  return result;
}

}  // namespace deadend
