#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "imt/mdp.hpp"

namespace imt {

enum class CellKind : std::uint8_t {
  Floor,
  Wall,
  Lava,
  Slippery,
  Goal,
  OnewayNorth,
  OnewayEast,
  OnewaySouth,
  OnewayWest,
};

/// Rectangular cell map parsed from the one-character-per-cell format:
/// `.` floor, `#` wall, `L` lava, `~` slippery, `G` goal, `^>v<` one-ways.
/// The border must be wall and at least one goal must exist unless
/// allow_no_goal is set.
struct GridLayout {
  int width = 0;
  int height = 0;
  std::vector<CellKind> cells;  // row-major

  CellKind at(int x, int y) const { return cells[static_cast<std::size_t>(y * width + x)]; }
  bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }

  static GridLayout parse(const std::string& text, bool allow_no_goal = false);
  static GridLayout load(const std::string& path, bool allow_no_goal = false);
};

/// Maps grid cells and layers back to state indices for heatmap rendering.
/// Gridworlds use one layer per agent orientation; the corridor uses one
/// layer per (tilt, velocity) combination.
struct GridRenderInfo {
  int width = 0;
  int height = 0;
  int layers = 0;
  std::vector<CellKind> cells;  // row-major
  std::vector<int> state_of;    // (y*width + x)*layers + layer, -1 if none

  bool empty() const { return width == 0; }
  int state_at(int x, int y, int layer) const {
    return state_of[static_cast<std::size_t>((y * width + x) * layers + layer)];
  }
};

struct BuiltModel {
  Mdp mdp;
  GridRenderInfo render;
};

/// Gridworld with states (x, y, orientation) over the non-wall cells and
/// actions {forward, left, right, stay}. Moving forward from a slippery
/// tile lands on the intended cell with probability 3/9, slips to the
/// adjacent left/right cells with 1/9 each and to the front diagonals
/// with 2/9 each; outcomes blocked by walls or the border fold into
/// staying put. Lava cells are absorbing bad states, goal cells absorb.
BuiltModel build_slippery_gridworld(const GridLayout& layout);

/// Gridworld variant where moving against a one-way cell's direction is
/// disabled (both leaving and entering), suitable for performance
/// objectives. Slippery cells behave as plain floor here.
BuiltModel build_oneway_gridworld(const GridLayout& layout);

struct CorridorSpec {
  int length = 20;
  int width = 10;
  int tilt_count = 3;
  int velocity_count = 2;
  std::vector<std::pair<int, int>> obstacles;  // (x, y)
};

/// Downhill corridor with states (x, y, tilt, velocity): each of the
/// actions {left, straight, right} first adjusts the tilt, then advances
/// y by the velocity and x by the tilt offset. Obstacle cells are
/// absorbing bad states; the last row absorbs as the goal.
BuiltModel build_corridor_obstacles(const CorridorSpec& spec);

/// Seeded random fixture generator: every (state, action) row has
/// `branching` successors with normalized random probabilities, and
/// bad_fraction of the states are labeled bad.
Mdp random_mdp(std::uint64_t seed, int num_states, int num_actions, int branching,
               double bad_fraction);

}  // namespace imt
