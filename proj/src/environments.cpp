#include "imt/environments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "imt/errors.hpp"
#include "imt/rng.hpp"

namespace imt {

namespace {

constexpr int kOrientations = 4;
// Orientation 0 = north, then clockwise.
constexpr int kDx[kOrientations] = {0, 1, 0, -1};
constexpr int kDy[kOrientations] = {-1, 0, 1, 0};

CellKind cell_from_char(char c, std::size_t lineno) {
  switch (c) {
    case '.':
      return CellKind::Floor;
    case '#':
      return CellKind::Wall;
    case 'L':
      return CellKind::Lava;
    case '~':
      return CellKind::Slippery;
    case 'G':
      return CellKind::Goal;
    case '^':
      return CellKind::OnewayNorth;
    case '>':
      return CellKind::OnewayEast;
    case 'v':
      return CellKind::OnewaySouth;
    case '<':
      return CellKind::OnewayWest;
    default:
      throw ParseError("line " + std::to_string(lineno) + ": unknown cell character '" +
                       std::string(1, c) + "'");
  }
}

bool is_oneway(CellKind k) {
  return k == CellKind::OnewayNorth || k == CellKind::OnewayEast || k == CellKind::OnewaySouth ||
         k == CellKind::OnewayWest;
}

int oneway_direction(CellKind k) {
  switch (k) {
    case CellKind::OnewayNorth:
      return 0;
    case CellKind::OnewayEast:
      return 1;
    case CellKind::OnewaySouth:
      return 2;
    case CellKind::OnewayWest:
      return 3;
    default:
      return -1;
  }
}

int opposite(int dir) { return (dir + 2) % kOrientations; }

struct GridIndex {
  std::vector<int> state_of_cell;  // y*width+x -> first state index or -1
  int num_states = 0;

  int state(int width, int x, int y, int dir) const {
    int base = state_of_cell[static_cast<std::size_t>(y * width + x)];
    return base < 0 ? -1 : base + dir;
  }
};

GridIndex index_states(const GridLayout& layout) {
  GridIndex idx;
  idx.state_of_cell.assign(static_cast<std::size_t>(layout.width * layout.height), -1);
  for (int y = 0; y < layout.height; ++y)
    for (int x = 0; x < layout.width; ++x)
      if (layout.at(x, y) != CellKind::Wall) {
        idx.state_of_cell[static_cast<std::size_t>(y * layout.width + x)] = idx.num_states;
        idx.num_states += kOrientations;
      }
  return idx;
}

GridRenderInfo make_render_info(const GridLayout& layout, const GridIndex& idx) {
  GridRenderInfo render;
  render.width = layout.width;
  render.height = layout.height;
  render.layers = kOrientations;
  render.cells = layout.cells;
  render.state_of.assign(
      static_cast<std::size_t>(layout.width * layout.height * kOrientations), -1);
  for (int y = 0; y < layout.height; ++y)
    for (int x = 0; x < layout.width; ++x)
      for (int dir = 0; dir < kOrientations; ++dir)
        render.state_of[static_cast<std::size_t>((y * layout.width + x) * kOrientations + dir)] =
            idx.state(layout.width, x, y, dir);
  return render;
}

/// Merges outcome masses per target state and pins the row sum to exactly
/// 1.0 by assigning the largest mass the remainder.
void add_row_exact(MdpBuilder& builder, int s, int action,
                   const std::vector<std::pair<int, double>>& outcomes) {
  std::map<int, double> merged;
  for (const auto& [target, mass] : outcomes) merged[target] += mass;
  int largest = merged.begin()->first;
  for (const auto& [target, mass] : merged)
    if (mass > merged[largest]) largest = target;
  double rest = 0.0;
  for (const auto& [target, mass] : merged)
    if (target != largest) rest += mass;
  merged[largest] = 1.0 - rest;
  for (const auto& [target, mass] : merged) builder.add_transition(s, action, target, mass);
}

enum GridAction { kForward = 0, kLeft = 1, kRight = 2, kStay = 3 };

const std::vector<std::string> kGridActionNames = {"forward", "left", "right", "stay"};

BuiltModel build_gridworld(const GridLayout& layout, bool slippery_dynamics) {
  GridIndex idx = index_states(layout);
  MdpBuilder builder(idx.num_states, kGridActionNames);

  int plain_states = 0;
  for (int y = 0; y < layout.height; ++y) {
    for (int x = 0; x < layout.width; ++x) {
      CellKind kind = layout.at(x, y);
      if (kind == CellKind::Wall) continue;
      for (int dir = 0; dir < kOrientations; ++dir) {
        int s = idx.state(layout.width, x, y, dir);
        builder.set_state_name(s, "x" + std::to_string(x) + "y" + std::to_string(y) + "d" +
                                      std::to_string(dir));
        builder.set_features(s, {static_cast<double>(x), static_cast<double>(y),
                                 static_cast<double>(dir)});
        if (kind == CellKind::Lava) {
          builder.add_label(s, kBadLabel);  // absorbed when built
          continue;
        }
        if (kind == CellKind::Goal) {
          builder.add_label(s, kGoalLabel);
          builder.make_absorbing(s);
          continue;
        }
        ++plain_states;
        builder.add_transition(s, kLeft, idx.state(layout.width, x, y, (dir + 3) % 4), 1.0);
        builder.add_transition(s, kRight, idx.state(layout.width, x, y, (dir + 1) % 4), 1.0);
        builder.add_transition(s, kStay, s, 1.0);

        int tx = x + kDx[dir], ty = y + kDy[dir];
        bool forward_allowed = true;
        if (!slippery_dynamics) {
          // One-way rule: moving against the direction of the source or
          // target cell is forbidden.
          if (is_oneway(kind) && oneway_direction(kind) == opposite(dir)) forward_allowed = false;
          if (layout.in_bounds(tx, ty)) {
            CellKind target = layout.at(tx, ty);
            if (is_oneway(target) && oneway_direction(target) == opposite(dir))
              forward_allowed = false;
          }
        }
        if (!forward_allowed) continue;

        auto land = [&](int cx, int cy) -> int {
          if (!layout.in_bounds(cx, cy) || layout.at(cx, cy) == CellKind::Wall)
            return s;  // blocked moves keep the agent in place
          return idx.state(layout.width, cx, cy, dir);
        };

        if (slippery_dynamics && kind == CellKind::Slippery) {
          int ldir = (dir + 3) % 4, rdir = (dir + 1) % 4;
          std::vector<std::pair<int, double>> outcomes = {
              {land(tx, ty), 3.0 / 9.0},
              {land(x + kDx[ldir], y + kDy[ldir]), 1.0 / 9.0},
              {land(x + kDx[rdir], y + kDy[rdir]), 1.0 / 9.0},
              {land(tx + kDx[ldir], ty + kDy[ldir]), 2.0 / 9.0},
              {land(tx + kDx[rdir], ty + kDy[rdir]), 2.0 / 9.0},
          };
          add_row_exact(builder, s, kForward, outcomes);
        } else {
          builder.add_transition(s, kForward, land(tx, ty), 1.0);
        }
      }
    }
  }

  // Uniform initial distribution over the plain (non-lava, non-goal) states.
  if (plain_states > 0) {
    int count = 0;
    double mass = 1.0 / static_cast<double>(plain_states);
    for (int y = 0; y < layout.height; ++y)
      for (int x = 0; x < layout.width; ++x) {
        CellKind kind = layout.at(x, y);
        if (kind == CellKind::Wall || kind == CellKind::Lava || kind == CellKind::Goal) continue;
        for (int dir = 0; dir < kOrientations; ++dir) {
          ++count;
          double p = count == plain_states ? 1.0 - mass * (plain_states - 1) : mass;
          builder.set_initial(idx.state(layout.width, x, y, dir), p);
        }
      }
  }

  BuiltModel out{builder.build(), make_render_info(layout, idx)};
  return out;
}

}  // namespace

GridLayout GridLayout::parse(const std::string& text, bool allow_no_goal) {
  GridLayout layout;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> rows;
  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    rows.push_back(line);
    if (rows.size() > 1 && line.size() != rows.front().size())
      throw ParseError("line " + std::to_string(lineno) + ": ragged layout row");
  }
  if (rows.size() < 3 || rows.front().size() < 3)
    throw ParseError("layout needs at least a 3x3 grid");
  layout.height = static_cast<int>(rows.size());
  layout.width = static_cast<int>(rows.front().size());
  layout.cells.reserve(static_cast<std::size_t>(layout.width * layout.height));
  bool has_goal = false;
  for (std::size_t y = 0; y < rows.size(); ++y)
    for (std::size_t x = 0; x < rows[y].size(); ++x) {
      CellKind kind = cell_from_char(rows[y][x], y + 1);
      if (kind == CellKind::Goal) has_goal = true;
      layout.cells.push_back(kind);
    }
  for (int x = 0; x < layout.width; ++x)
    if (layout.at(x, 0) != CellKind::Wall || layout.at(x, layout.height - 1) != CellKind::Wall)
      throw ParseError("layout border must be wall");
  for (int y = 0; y < layout.height; ++y)
    if (layout.at(0, y) != CellKind::Wall || layout.at(layout.width - 1, y) != CellKind::Wall)
      throw ParseError("layout border must be wall");
  if (!has_goal && !allow_no_goal) throw ParseError("layout has no goal cell");
  return layout;
}

GridLayout GridLayout::load(const std::string& path, bool allow_no_goal) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open layout file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), allow_no_goal);
}

BuiltModel build_slippery_gridworld(const GridLayout& layout) {
  return build_gridworld(layout, true);
}

BuiltModel build_oneway_gridworld(const GridLayout& layout) {
  return build_gridworld(layout, false);
}

BuiltModel build_corridor_obstacles(const CorridorSpec& spec) {
  if (spec.length < 2) throw ModelError("corridor length must be at least 2");
  if (spec.width < 1 || spec.tilt_count < 1 || spec.velocity_count < 1)
    throw ModelError("corridor width, tilt and velocity counts must be positive");
  for (const auto& [ox, oy] : spec.obstacles)
    if (ox < 0 || ox >= spec.width || oy < 0 || oy >= spec.length)
      throw ModelError("obstacle outside the corridor");

  const int layers = spec.tilt_count * spec.velocity_count;
  const int num_states = spec.width * spec.length * layers;
  std::vector<bool> obstacle(static_cast<std::size_t>(spec.width * spec.length), false);
  for (const auto& [ox, oy] : spec.obstacles)
    obstacle[static_cast<std::size_t>(oy * spec.width + ox)] = true;

  auto state_id = [&](int x, int y, int t, int v) {
    return ((y * spec.width + x) * spec.tilt_count + t) * spec.velocity_count + (v - 1);
  };

  MdpBuilder builder(num_states, {"left", "straight", "right", "stay"});
  const int center = spec.tilt_count / 2;
  for (int y = 0; y < spec.length; ++y)
    for (int x = 0; x < spec.width; ++x)
      for (int t = 0; t < spec.tilt_count; ++t)
        for (int v = 1; v <= spec.velocity_count; ++v) {
          int s = state_id(x, y, t, v);
          builder.set_state_name(s, "x" + std::to_string(x) + "y" + std::to_string(y) + "t" +
                                        std::to_string(t) + "v" + std::to_string(v));
          builder.set_features(s, {static_cast<double>(x), static_cast<double>(y),
                                   static_cast<double>(t), static_cast<double>(v)});
          if (obstacle[static_cast<std::size_t>(y * spec.width + x)]) {
            builder.add_label(s, kBadLabel);
            continue;
          }
          if (y == spec.length - 1) {
            builder.add_label(s, kGoalLabel);
            builder.make_absorbing(s);
            continue;
          }
          for (int action = 0; action < 3; ++action) {
            int nt = std::clamp(t + (action - 1), 0, spec.tilt_count - 1);
            int nx = std::clamp(x + (nt - center), 0, spec.width - 1);
            int ny = std::min(y + v, spec.length - 1);
            builder.add_transition(s, action, state_id(nx, ny, nt, v), 1.0);
          }
        }

  int starts = spec.width * layers;
  double mass = 1.0 / static_cast<double>(starts);
  int count = 0;
  for (int x = 0; x < spec.width; ++x)
    for (int t = 0; t < spec.tilt_count; ++t)
      for (int v = 1; v <= spec.velocity_count; ++v) {
        ++count;
        builder.set_initial(state_id(x, 0, t, v),
                            count == starts ? 1.0 - mass * (starts - 1) : mass);
      }

  GridRenderInfo render;
  render.width = spec.width;
  render.height = spec.length;
  render.layers = layers;
  render.cells.assign(static_cast<std::size_t>(spec.width * spec.length), CellKind::Floor);
  for (const auto& [ox, oy] : spec.obstacles)
    render.cells[static_cast<std::size_t>(oy * spec.width + ox)] = CellKind::Lava;
  for (int x = 0; x < spec.width; ++x)
    if (!obstacle[static_cast<std::size_t>((spec.length - 1) * spec.width + x)])
      render.cells[static_cast<std::size_t>((spec.length - 1) * spec.width + x)] = CellKind::Goal;
  render.state_of.resize(static_cast<std::size_t>(spec.width * spec.length * layers));
  for (int y = 0; y < spec.length; ++y)
    for (int x = 0; x < spec.width; ++x)
      for (int t = 0; t < spec.tilt_count; ++t)
        for (int v = 1; v <= spec.velocity_count; ++v)
          render.state_of[static_cast<std::size_t>(
              (y * spec.width + x) * layers + t * spec.velocity_count + (v - 1))] =
              state_id(x, y, t, v);

  return {builder.build(), std::move(render)};
}

Mdp random_mdp(std::uint64_t seed, int num_states, int num_actions, int branching,
               double bad_fraction) {
  if (num_states <= 0 || num_actions <= 0 || branching <= 0)
    throw ModelError("random_mdp parameters must be positive");
  if (branching > num_states) throw ModelError("branching exceeds the state count");
  Rng rng(seed);

  std::vector<std::string> action_names;
  action_names.reserve(static_cast<std::size_t>(num_actions));
  for (int a = 0; a < num_actions; ++a) action_names.push_back("a" + std::to_string(a));
  MdpBuilder builder(num_states, action_names);

  auto bad_count = static_cast<int>(std::floor(bad_fraction * num_states + 0.5));
  std::vector<int> order(static_cast<std::size_t>(num_states));
  for (int s = 0; s < num_states; ++s) order[static_cast<std::size_t>(s)] = s;
  for (std::size_t i = 0; i < order.size(); ++i) {
    std::size_t j = i + next_index(rng, order.size() - i);
    std::swap(order[i], order[j]);
  }
  for (int i = 0; i < bad_count; ++i) builder.add_label(order[static_cast<std::size_t>(i)], kBadLabel);

  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < num_actions; ++a) {
      // Successors: seeded sample without replacement.
      std::vector<int> pool(static_cast<std::size_t>(num_states));
      for (int t = 0; t < num_states; ++t) pool[static_cast<std::size_t>(t)] = t;
      std::vector<int> succs;
      for (int b = 0; b < branching; ++b) {
        std::size_t j = static_cast<std::size_t>(b) + next_index(rng, pool.size() - static_cast<std::size_t>(b));
        std::swap(pool[static_cast<std::size_t>(b)], pool[j]);
        succs.push_back(pool[static_cast<std::size_t>(b)]);
      }
      std::vector<double> weights;
      double total = 0.0;
      for (int b = 0; b < branching; ++b) {
        double w = next_unit(rng) + 1e-3;  // keep every branch reachable
        weights.push_back(w);
        total += w;
      }
      double acc = 0.0;
      for (int b = 0; b < branching; ++b) {
        double p = b + 1 == branching ? 1.0 - acc : weights[static_cast<std::size_t>(b)] / total;
        acc += weights[static_cast<std::size_t>(b)] / total;
        builder.add_transition(s, a, succs[static_cast<std::size_t>(b)], p);
      }
    }
  }
  builder.set_initial(0, 1.0);
  return builder.build();
}

}  // namespace imt
