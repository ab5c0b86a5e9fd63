#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "deadend/mdp_io.hpp"

namespace deadend {

struct Cell {
  int x = 0;
  int y = 0;
  auto operator<=>(const Cell&) const = default;
};

/// Gridworld with pits. Moves N/E/S/W succeed with probability 1 - p_slip
/// and otherwise deflect to one of the two lateral directions (p_slip / 2
/// each). Moving into a wall or off the grid leaves the agent in place.
/// Pits are absorbing dead ends with a single "stay" action.
struct GridSpec {
  int width = 5;
  int height = 5;
  Cell start{0, 0};
  Cell goal{4, 4};
  std::vector<Cell> pits;
  std::vector<Cell> walls;
  double p_slip = 0.0;
  double move_cost = 1.0;
  /// A hazard row is all pits except interior cells with even x. Each gap
  /// is flanked by pits, so every action there risks a lateral slip into one.
  std::vector<int> hazard_rows;
  /// Extra pits placed uniformly at random (seeded) among free cells.
  int random_pits = 0;
  double penalty = kInfinity;
};

class GridSpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

GridSpec parse_grid_spec(const nlohmann::json& doc);
nlohmann::json grid_spec_to_json(const GridSpec& spec);

/// Deterministic in (spec, seed). State names are "x,y"; actions are
/// N, E, S, W, stay. Throws GridSpecError for a malformed spec.
NamedMdp generate_grid(const GridSpec& spec, std::uint64_t seed = 0);

}  // namespace deadend
