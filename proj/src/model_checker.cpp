#include "imt/model_checker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "imt/errors.hpp"

namespace imt {

namespace {

std::vector<bool> label_mask(const Mdp& mdp, const std::string& tag) {
  std::vector<bool> mask(static_cast<std::size_t>(mdp.num_states()), false);
  for (int s : mdp.states_with_label(tag)) mask[static_cast<std::size_t>(s)] = true;
  return mask;
}

double row_dot(const std::vector<Transition>& row, const std::vector<double>& v) {
  double acc = 0.0;
  for (const Transition& t : row) acc += t.prob * v[static_cast<std::size_t>(t.target)];
  return acc;
}

bool row_inside(const std::vector<Transition>& row, const std::vector<bool>& set) {
  for (const Transition& t : row)
    if (t.prob > 0.0 && !set[static_cast<std::size_t>(t.target)]) return false;
  return true;
}

bool row_touches(const std::vector<Transition>& row, const std::vector<bool>& set) {
  for (const Transition& t : row)
    if (t.prob > 0.0 && set[static_cast<std::size_t>(t.target)]) return true;
  return false;
}

/// Existential backward closure: states with some path into `target`.
std::vector<bool> can_reach(const Mdp& mdp, const std::vector<bool>& target) {
  std::vector<bool> reach = target;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int s = 0; s < mdp.num_states(); ++s) {
      if (reach[static_cast<std::size_t>(s)]) continue;
      for (int a : mdp.enabled(s)) {
        if (row_touches(mdp.row(s, a), reach)) {
          reach[static_cast<std::size_t>(s)] = true;
          changed = true;
          break;
        }
      }
    }
  }
  return reach;
}

/// Greatest fixpoint of the controllable safe region: non-bad states with
/// some action whose successors stay in the region.
std::vector<bool> safe_region(const Mdp& mdp, const std::vector<bool>& bad) {
  std::vector<bool> region(static_cast<std::size_t>(mdp.num_states()));
  for (int s = 0; s < mdp.num_states(); ++s)
    region[static_cast<std::size_t>(s)] = !bad[static_cast<std::size_t>(s)];
  bool changed = true;
  while (changed) {
    changed = false;
    for (int s = 0; s < mdp.num_states(); ++s) {
      if (!region[static_cast<std::size_t>(s)]) continue;
      bool keeps = false;
      for (int a : mdp.enabled(s)) {
        if (row_inside(mdp.row(s, a), region)) {
          keeps = true;
          break;
        }
      }
      if (!keeps) {
        region[static_cast<std::size_t>(s)] = false;
        changed = true;
      }
    }
  }
  return region;
}

/// States from which every policy reaches `bad` almost surely, i.e. the
/// maximal avoid probability is exactly 0. Complement of the states that
/// can reach the controllable safe region along a bad-free path.
std::vector<bool> avoid_prob0_max(const Mdp& mdp, const std::vector<bool>& bad) {
  std::vector<bool> good = safe_region(mdp, bad);
  bool changed = true;
  while (changed) {
    changed = false;
    for (int s = 0; s < mdp.num_states(); ++s) {
      if (good[static_cast<std::size_t>(s)] || bad[static_cast<std::size_t>(s)]) continue;
      for (int a : mdp.enabled(s)) {
        if (row_touches(mdp.row(s, a), good)) {
          good[static_cast<std::size_t>(s)] = true;
          changed = true;
          break;
        }
      }
    }
  }
  std::vector<bool> out(static_cast<std::size_t>(mdp.num_states()));
  for (int s = 0; s < mdp.num_states(); ++s)
    out[static_cast<std::size_t>(s)] = !good[static_cast<std::size_t>(s)];
  return out;
}

/// States where the maximal reach probability of `bad` is exactly 1
/// (equivalently: minimal avoid probability exactly 0). Nested fixpoint.
std::vector<bool> max_reach_prob1(const Mdp& mdp, const std::vector<bool>& bad) {
  const auto n = static_cast<std::size_t>(mdp.num_states());
  std::vector<bool> outer(n, true);
  bool outer_changed = true;
  while (outer_changed) {
    std::vector<bool> inner = bad;
    bool changed = true;
    while (changed) {
      changed = false;
      for (int s = 0; s < mdp.num_states(); ++s) {
        if (inner[static_cast<std::size_t>(s)] || !outer[static_cast<std::size_t>(s)]) continue;
        for (int a : mdp.enabled(s)) {
          const auto& row = mdp.row(s, a);
          if (row_inside(row, outer) && row_touches(row, inner)) {
            inner[static_cast<std::size_t>(s)] = true;
            changed = true;
            break;
          }
        }
      }
    }
    outer_changed = (inner != outer);
    outer = std::move(inner);
  }
  return outer;
}

struct BoundedQual {
  std::vector<bool> prob1_max, prob0_max, prob1_min, prob0_min;
};

/// n-step exact sets: sure avoidance / sure violation by set recursion.
BoundedQual bounded_qualitative(const Mdp& mdp, const std::vector<bool>& bad, long horizon) {
  const auto n = static_cast<std::size_t>(mdp.num_states());
  std::vector<bool> p1max(n), p1min(n), p0max(n), p0min(n);
  for (int s = 0; s < mdp.num_states(); ++s) {
    bool b = bad[static_cast<std::size_t>(s)];
    p1max[static_cast<std::size_t>(s)] = !b;
    p1min[static_cast<std::size_t>(s)] = !b;
    p0max[static_cast<std::size_t>(s)] = b;
    p0min[static_cast<std::size_t>(s)] = b;
  }
  for (long k = 0; k < horizon; ++k) {
    std::vector<bool> n1max(n), n1min(n), n0max(n), n0min(n);
    bool changed = false;
    for (int s = 0; s < mdp.num_states(); ++s) {
      const auto si = static_cast<std::size_t>(s);
      if (bad[si]) {
        n0max[si] = n0min[si] = true;
        continue;
      }
      bool any1 = false, all1 = true, any0 = false, all0 = true;
      for (int a : mdp.enabled(s)) {
        const auto& row = mdp.row(s, a);
        bool in1 = row_inside(row, p1max);
        // prob1_min needs every action to stay sure; reuse the same row scan.
        if (in1) any1 = true;
        if (!row_inside(row, p1min)) all1 = false;
        if (row_inside(row, p0min)) any0 = true;
        if (!row_inside(row, p0max)) all0 = false;
      }
      n1max[si] = any1;
      n1min[si] = all1;
      n0min[si] = any0;
      n0max[si] = all0;
    }
    changed = n1max != p1max || n1min != p1min || n0max != p0max || n0min != p0min;
    p1max = std::move(n1max);
    p1min = std::move(n1min);
    p0max = std::move(n0max);
    p0min = std::move(n0min);
    if (!changed) break;  // sets are monotone in k; fixpoint reached
  }
  return {p1max, p0max, p1min, p0min};
}

/// Value iteration for the reach probability of `bad` from below, with
/// exact values pinned on the qualitative sets.
std::vector<double> reach_values(const Mdp& mdp, const std::vector<bool>& reach0,
                                 const std::vector<bool>& reach1, OptMode reach_mode,
                                 const CheckSettings& settings) {
  const auto n = static_cast<std::size_t>(mdp.num_states());
  std::vector<double> v(n, 0.0);
  std::vector<int> free_states;
  for (int s = 0; s < mdp.num_states(); ++s) {
    const auto si = static_cast<std::size_t>(s);
    if (reach1[si])
      v[si] = 1.0;
    else if (reach0[si])
      v[si] = 0.0;
    else
      free_states.push_back(s);
  }
  if (free_states.empty()) return v;
  std::vector<double> next = v;
  for (long it = 0; it < settings.max_iterations; ++it) {
    double residual = 0.0;
    for (int s : free_states) {
      const auto si = static_cast<std::size_t>(s);
      double best = reach_mode == OptMode::Max ? -std::numeric_limits<double>::infinity()
                                               : std::numeric_limits<double>::infinity();
      for (int a : mdp.enabled(s)) {
        double q = row_dot(mdp.row(s, a), v);
        best = reach_mode == OptMode::Max ? std::max(best, q) : std::min(best, q);
      }
      next[si] = best;
      residual = std::max(residual, std::abs(best - v[si]));
    }
    for (int s : free_states) v[static_cast<std::size_t>(s)] = next[static_cast<std::size_t>(s)];
    if (residual < settings.residual) return v;
  }
  double residual = 0.0;
  for (int s : free_states) {
    const auto si = static_cast<std::size_t>(s);
    residual = std::max(residual, std::abs(next[si] - v[si]));
  }
  throw ConvergenceError("value iteration did not converge within " +
                             std::to_string(settings.max_iterations) + " iterations",
                         residual);
}

std::vector<double> bounded_avoid_values(const Mdp& mdp, const std::vector<bool>& bad,
                                         long horizon, OptMode mode) {
  const auto n = static_cast<std::size_t>(mdp.num_states());
  std::vector<double> v(n);
  for (int s = 0; s < mdp.num_states(); ++s)
    v[static_cast<std::size_t>(s)] = bad[static_cast<std::size_t>(s)] ? 0.0 : 1.0;
  std::vector<double> next(n);
  for (long k = 0; k < horizon; ++k) {
    for (int s = 0; s < mdp.num_states(); ++s) {
      const auto si = static_cast<std::size_t>(s);
      if (bad[si]) {
        next[si] = 0.0;
        continue;
      }
      double best = mode == OptMode::Max ? -std::numeric_limits<double>::infinity()
                                         : std::numeric_limits<double>::infinity();
      for (int a : mdp.enabled(s)) {
        double q = row_dot(mdp.row(s, a), v);
        best = mode == OptMode::Max ? std::max(best, q) : std::min(best, q);
      }
      next[si] = best;
    }
    v.swap(next);
  }
  return v;
}

std::vector<double> reward_values(const Mdp& mdp, const RewardSpec& spec, OptMode mode,
                                  const CheckSettings& settings) {
  const auto n = static_cast<std::size_t>(mdp.num_states());
  if (spec.reward.size() != n) throw ModelError("reward vector does not cover the state space");
  std::vector<double> v = spec.reward;  // 0-step horizon collects R(s)
  std::vector<double> next(n);
  auto step = [&](double& residual) {
    residual = 0.0;
    for (int s = 0; s < mdp.num_states(); ++s) {
      const auto si = static_cast<std::size_t>(s);
      double best = mode == OptMode::Max ? -std::numeric_limits<double>::infinity()
                                         : std::numeric_limits<double>::infinity();
      for (int a : mdp.enabled(s)) {
        double q = row_dot(mdp.row(s, a), v);
        best = mode == OptMode::Max ? std::max(best, q) : std::min(best, q);
      }
      next[si] = spec.reward[si] + spec.discount * best;
      residual = std::max(residual, std::abs(next[si] - v[si]));
    }
    v.swap(next);
  };
  double residual = 0.0;
  if (spec.bounded()) {
    for (long k = 0; k < *spec.horizon; ++k) step(residual);
    return v;
  }
  if (spec.discount >= 1.0 && !spec.assume_convergence)
    throw ConfigError("unbounded undiscounted reward requires assume_convergence");
  for (long it = 0; it < settings.max_iterations; ++it) {
    step(residual);
    if (residual < settings.residual) return v;
  }
  throw ConvergenceError("reward iteration did not converge within " +
                             std::to_string(settings.max_iterations) + " iterations",
                         residual);
}

}  // namespace

double QValues::spread(int s) const {
  const auto& qs = q[static_cast<std::size_t>(s)];
  if (qs.size() < 2) return 0.0;
  auto [lo, hi] = std::minmax_element(qs.begin(), qs.end());
  return *hi - *lo;
}

QualitativeSets qualitative_sets(const Mdp& mdp, const SafetySpec& spec) {
  auto bad = label_mask(mdp, spec.avoid_label);
  if (spec.bounded()) {
    auto b = bounded_qualitative(mdp, bad, *spec.horizon);
    return {b.prob1_max, b.prob0_max, b.prob1_min, b.prob0_min};
  }
  QualitativeSets out;
  out.prob1_max = safe_region(mdp, bad);
  out.prob0_max = avoid_prob0_max(mdp, bad);
  auto reachable = can_reach(mdp, bad);
  out.prob1_min.resize(static_cast<std::size_t>(mdp.num_states()));
  for (int s = 0; s < mdp.num_states(); ++s)
    out.prob1_min[static_cast<std::size_t>(s)] = !reachable[static_cast<std::size_t>(s)];
  out.prob0_min = max_reach_prob1(mdp, bad);
  return out;
}

ValueVector prob_reach_avoid(const Mdp& mdp, const SafetySpec& spec, OptMode mode,
                             const CheckSettings& settings) {
  auto bad = label_mask(mdp, spec.avoid_label);
  if (spec.bounded()) return {bounded_avoid_values(mdp, bad, *spec.horizon, mode), mode};

  QualitativeSets qual = qualitative_sets(mdp, spec);
  const auto& prob1 = mode == OptMode::Max ? qual.prob1_max : qual.prob1_min;
  const auto& prob0 = mode == OptMode::Max ? qual.prob0_max : qual.prob0_min;
  // avoid = 1 - reach; maximizing avoidance minimizes reachability.
  OptMode reach_mode = mode == OptMode::Max ? OptMode::Min : OptMode::Max;
  std::vector<bool> reach1 = prob0, reach0 = prob1;
  auto reach = reach_values(mdp, reach0, reach1, reach_mode, settings);
  ValueVector out;
  out.mode = mode;
  out.values.resize(reach.size());
  for (std::size_t i = 0; i < reach.size(); ++i)
    out.values[i] = prob1[i] ? 1.0 : (prob0[i] ? 0.0 : 1.0 - reach[i]);
  return out;
}

QValues q_optimistic(const Mdp& mdp, const SafetySpec& spec, const CheckSettings& settings) {
  ValueVector v;
  if (spec.bounded() && *spec.horizon == 0) {
    v = prob_reach_avoid(mdp, spec, OptMode::Max, settings);
    QValues out;
    out.q.resize(static_cast<std::size_t>(mdp.num_states()));
    for (int s = 0; s < mdp.num_states(); ++s)
      out.q[static_cast<std::size_t>(s)].assign(mdp.enabled(s).size(), v[s]);
    return out;
  }
  SafetySpec prev = spec;
  if (spec.bounded()) prev.horizon = *spec.horizon - 1;
  v = prob_reach_avoid(mdp, prev, OptMode::Max, settings);
  QValues out;
  out.q.resize(static_cast<std::size_t>(mdp.num_states()));
  for (int s = 0; s < mdp.num_states(); ++s) {
    auto& qs = out.q[static_cast<std::size_t>(s)];
    qs.reserve(mdp.enabled(s).size());
    for (int a : mdp.enabled(s)) qs.push_back(row_dot(mdp.row(s, a), v.values));
  }
  return out;
}

QValues q_optimistic(const Mdp& mdp, const RewardSpec& spec, const CheckSettings& settings) {
  QValues out;
  out.q.resize(static_cast<std::size_t>(mdp.num_states()));
  if (spec.bounded() && *spec.horizon == 0) {
    for (int s = 0; s < mdp.num_states(); ++s)
      out.q[static_cast<std::size_t>(s)].assign(mdp.enabled(s).size(),
                                                spec.reward[static_cast<std::size_t>(s)]);
    return out;
  }
  RewardSpec prev = spec;
  if (spec.bounded()) prev.horizon = *spec.horizon - 1;
  ValueVector v = expected_reward(mdp, prev, OptMode::Max, settings);
  for (int s = 0; s < mdp.num_states(); ++s) {
    auto& qs = out.q[static_cast<std::size_t>(s)];
    qs.reserve(mdp.enabled(s).size());
    for (int a : mdp.enabled(s))
      qs.push_back(spec.reward[static_cast<std::size_t>(s)] +
                   spec.discount * row_dot(mdp.row(s, a), v.values));
  }
  return out;
}

ValueVector expected_reward(const Mdp& mdp, const RewardSpec& spec, OptMode mode,
                            const CheckSettings& settings) {
  return {reward_values(mdp, spec, mode, settings), mode};
}

}  // namespace imt
