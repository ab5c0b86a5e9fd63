#include "deadend/gridworld.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

namespace deadend {

using nlohmann::json;

namespace {

constexpr int kDx[4] = {0, 1, 0, -1};  // N E S W
constexpr int kDy[4] = {1, 0, -1, 0};
const char* const kActionNames[5] = {"N", "E", "S", "W", "stay"};
constexpr ActionId kStay = 4;

Cell parse_cell(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
    throw GridSpecError(where + ": expected [x, y]");
  }
  return {v[0].get<int>(), v[1].get<int>()};
}

std::vector<Cell> parse_cells(const json& doc, const char* key) {
  std::vector<Cell> out;
  if (auto it = doc.find(key); it != doc.end()) {
    if (!it->is_array()) throw GridSpecError(std::string(key) + ": expected an array of cells");
    for (std::size_t i = 0; i < it->size(); ++i) {
      out.push_back(parse_cell((*it)[i], std::string(key) + "[" + std::to_string(i) + "]"));
    }
  }
  return out;
}

std::string cell_name(Cell c) { return std::to_string(c.x) + "," + std::to_string(c.y); }

}  // namespace

GridSpec parse_grid_spec(const json& doc) {
  if (!doc.is_object()) throw GridSpecError("grid spec must be a JSON object");
  GridSpec spec;
  spec.width = doc.value("width", spec.width);
  spec.height = doc.value("height", spec.height);
  if (auto it = doc.find("start"); it != doc.end()) spec.start = parse_cell(*it, "start");
  if (auto it = doc.find("goal"); it != doc.end()) spec.goal = parse_cell(*it, "goal");
  spec.pits = parse_cells(doc, "pits");
  spec.walls = parse_cells(doc, "walls");
  spec.p_slip = doc.value("p_slip", spec.p_slip);
  spec.move_cost = doc.value("move_cost", spec.move_cost);
  spec.hazard_rows = doc.value("hazard_rows", spec.hazard_rows);
  spec.random_pits = doc.value("random_pits", spec.random_pits);
  if (auto it = doc.find("penalty"); it != doc.end() && !it->is_null()) {
    if (it->is_string() && it->get<std::string>() == "inf") {
      spec.penalty = kInfinity;
    } else if (it->is_number()) {
      spec.penalty = it->get<double>();
    } else {
      throw GridSpecError("penalty: expected a number or \"inf\"");
    }
  }
  return spec;
}

json grid_spec_to_json(const GridSpec& spec) {
  auto cells = [](const std::vector<Cell>& v) {
    json arr = json::array();
    for (auto c : v) arr.push_back({c.x, c.y});
    return arr;
  };
  json doc = {{"width", spec.width},
              {"height", spec.height},
              {"start", {spec.start.x, spec.start.y}},
              {"goal", {spec.goal.x, spec.goal.y}},
              {"pits", cells(spec.pits)},
              {"walls", cells(spec.walls)},
              {"p_slip", spec.p_slip},
              {"move_cost", spec.move_cost},
              {"hazard_rows", spec.hazard_rows},
              {"random_pits", spec.random_pits}};
  doc["penalty"] = spec.penalty < kInfinity ? json(spec.penalty) : json("inf");
  return doc;
}

NamedMdp generate_grid(const GridSpec& spec, std::uint64_t seed) {
  if (spec.width < 1 || spec.height < 1) throw GridSpecError("grid must be at least 1x1");
  if (!(spec.p_slip >= 0.0 && spec.p_slip < 1.0)) throw GridSpecError("p_slip must lie in [0, 1)");
  if (!(spec.move_cost > 0.0) || !std::isfinite(spec.move_cost)) throw GridSpecError("move_cost must be positive");
  if (spec.random_pits < 0) throw GridSpecError("random_pits must be non-negative");

  auto inside = [&](Cell c) { return c.x >= 0 && c.y >= 0 && c.x < spec.width && c.y < spec.height; };
  for (auto [c, what] : {std::pair{spec.start, "start"}, std::pair{spec.goal, "goal"}}) {
    if (!inside(c)) throw GridSpecError(std::string(what) + " " + cell_name(c) + " is outside the grid");
  }
  std::set<Cell> walls(spec.walls.begin(), spec.walls.end());
  for (auto c : walls) {
    if (!inside(c)) throw GridSpecError("wall " + cell_name(c) + " is outside the grid");
  }
  if (walls.count(spec.start)) throw GridSpecError("start cell is inside a wall");
  if (walls.count(spec.goal)) throw GridSpecError("goal cell is inside a wall");

  std::set<Cell> pits;
  for (auto c : spec.pits) {
    if (!inside(c)) throw GridSpecError("pit " + cell_name(c) + " is outside the grid");
    if (c == spec.start) throw GridSpecError("start cell is a pit");
    if (c == spec.goal) throw GridSpecError("goal cell is a pit");
    if (!walls.count(c)) pits.insert(c);
  }
  for (int y : spec.hazard_rows) {
    if (y < 0 || y >= spec.height) throw GridSpecError("hazard row " + std::to_string(y) + " is outside the grid");
    for (int x = 0; x < spec.width; ++x) {
      if (x % 2 == 0 && x > 0 && x < spec.width - 1) continue;  // gap flanked by pits
      Cell c{x, y};
      if (c != spec.start && c != spec.goal && !walls.count(c)) pits.insert(c);
    }
  }
  if (spec.random_pits > 0) {
    std::vector<Cell> free;
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        Cell c{x, y};
        if (c != spec.start && c != spec.goal && !walls.count(c) && !pits.count(c)) free.push_back(c);
      }
    }
    if (static_cast<std::size_t>(spec.random_pits) > free.size()) throw GridSpecError("not enough free cells for random_pits");
    // Partial Fisher-Yates with raw engine output keeps the result identical
    // across standard libraries (distributions are implementation-defined).
    std::mt19937_64 rng(seed);
    for (int i = 0; i < spec.random_pits; ++i) {
      std::size_t j = i + static_cast<std::size_t>(rng() % (free.size() - i));
      std::swap(free[i], free[j]);
      pits.insert(free[i]);
    }
  }

  std::map<Cell, StateId> ids;
  NamedMdp out;
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      Cell c{x, y};
      if (walls.count(c)) continue;
      ids.emplace(c, static_cast<StateId>(out.state_names.size()));
      out.state_names.push_back(cell_name(c));
    }
  }
  out.action_names.assign(std::begin(kActionNames), std::end(kActionNames));

  auto step = [&](Cell c, int dir) {
    Cell n{c.x + kDx[dir], c.y + kDy[dir]};
    return inside(n) && !walls.count(n) ? n : c;
  };

  MdpBuilder builder(out.state_names.size(), out.action_names.size());
  builder.add_goal(ids.at(spec.goal));
  builder.set_start(ids.at(spec.start));
  builder.set_penalty(spec.penalty);
  for (const auto& [c, s] : ids) {
    if (c == spec.goal) continue;
    if (pits.count(c)) {
      builder.add_row(s, kStay, spec.move_cost, {{s, 1.0}});
      continue;
    }
    for (int dir = 0; dir < 4; ++dir) {
      std::vector<Outcome> outcomes{{ids.at(step(c, dir)), 1.0 - spec.p_slip}};
      if (spec.p_slip > 0.0) {
        outcomes.push_back({ids.at(step(c, (dir + 1) % 4)), spec.p_slip / 2});
        outcomes.push_back({ids.at(step(c, (dir + 3) % 4)), spec.p_slip / 2});
      }
      builder.add_row(s, static_cast<ActionId>(dir), spec.move_cost, std::move(outcomes));
    }
  }
  out.mdp = builder.build();
  return out;
}

}  // namespace deadend
