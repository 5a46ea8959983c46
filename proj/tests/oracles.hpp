#pragma once

// Independent reference computations used by the test suites. Everything
// here is written from the definitions (policy enumeration, linear chain
// systems, tree recursion) and deliberately avoids the library's value
// iteration and graph analyses.

#include <cmath>
#include <functional>
#include <vector>

#include "imt/mdp.hpp"

namespace imt::test {

/// Calls fn with every memoryless deterministic policy over the enabled
/// sets (odometer enumeration).
inline void for_each_policy(const Mdp& mdp, const std::function<void(const PolicyTable&)>& fn) {
  const int n = mdp.num_states();
  PolicyTable policy(static_cast<std::size_t>(n));
  std::vector<std::size_t> choice(static_cast<std::size_t>(n), 0);
  for (;;) {
    for (int s = 0; s < n; ++s)
      policy[static_cast<std::size_t>(s)] = mdp.enabled(s)[choice[static_cast<std::size_t>(s)]];
    fn(policy);
    int s = 0;
    while (s < n) {
      auto& c = choice[static_cast<std::size_t>(s)];
      if (++c < mdp.enabled(s).size()) break;
      c = 0;
      ++s;
    }
    if (s == n) return;
  }
}

/// Unbounded per-state probability of avoiding `label` in the Markov chain
/// induced by a total policy: backward closure for the states that can
/// reach the bad set at all, then Gaussian elimination on the linear reach
/// system restricted to them.
inline std::vector<double> chain_avoid_unbounded(const Mdp& mdp, const PolicyTable& policy,
                                                 const std::string& label = kBadLabel) {
  const int n = mdp.num_states();
  std::vector<bool> bad(static_cast<std::size_t>(n), false);
  for (int s : mdp.states_with_label(label)) bad[static_cast<std::size_t>(s)] = true;

  std::vector<bool> touches(static_cast<std::size_t>(n), false);
  for (int s = 0; s < n; ++s) touches[static_cast<std::size_t>(s)] = bad[static_cast<std::size_t>(s)];
  bool changed = true;
  while (changed) {
    changed = false;
    for (int s = 0; s < n; ++s) {
      if (touches[static_cast<std::size_t>(s)]) continue;
      for (const auto& t : mdp.row(s, policy[static_cast<std::size_t>(s)]))
        if (t.prob > 0.0 && touches[static_cast<std::size_t>(t.target)]) {
          touches[static_cast<std::size_t>(s)] = true;
          changed = true;
          break;
        }
    }
  }

  std::vector<int> free_states;
  std::vector<int> position(static_cast<std::size_t>(n), -1);
  for (int s = 0; s < n; ++s)
    if (touches[static_cast<std::size_t>(s)] && !bad[static_cast<std::size_t>(s)]) {
      position[static_cast<std::size_t>(s)] = static_cast<int>(free_states.size());
      free_states.push_back(s);
    }

  // reach(s) = sum_{s' free} P(s,s') reach(s') + sum_{s' bad} P(s,s')
  const std::size_t k = free_states.size();
  std::vector<std::vector<double>> m(k, std::vector<double>(k + 1, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    m[i][i] = 1.0;
    for (const auto& t : mdp.row(free_states[i], policy[static_cast<std::size_t>(free_states[i])])) {
      if (bad[static_cast<std::size_t>(t.target)])
        m[i][k] += t.prob;
      else if (int j = position[static_cast<std::size_t>(t.target)]; j >= 0)
        m[i][static_cast<std::size_t>(j)] -= t.prob;
    }
  }
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < k; ++r)
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    std::swap(m[col], m[pivot]);
    for (std::size_t r = 0; r < k; ++r) {
      if (r == col || m[r][col] == 0.0) continue;
      double factor = m[r][col] / m[col][col];
      for (std::size_t c = col; c <= k; ++c) m[r][c] -= factor * m[col][c];
    }
  }

  std::vector<double> avoid(static_cast<std::size_t>(n), 1.0);
  for (int s = 0; s < n; ++s)
    if (bad[static_cast<std::size_t>(s)]) avoid[static_cast<std::size_t>(s)] = 0.0;
  for (std::size_t i = 0; i < k; ++i)
    avoid[static_cast<std::size_t>(free_states[i])] = 1.0 - m[i][k] / m[i][i];
  return avoid;
}

/// Enumerates every policy and returns the pointwise best/worst unbounded
/// avoid probabilities.
struct EnumeratedBounds {
  std::vector<double> best;
  std::vector<double> worst;
};

inline EnumeratedBounds enumerate_avoid_bounds(const Mdp& mdp,
                                               const std::string& label = kBadLabel) {
  EnumeratedBounds out;
  out.best.assign(static_cast<std::size_t>(mdp.num_states()), 0.0);
  out.worst.assign(static_cast<std::size_t>(mdp.num_states()), 1.0);
  for_each_policy(mdp, [&](const PolicyTable& policy) {
    auto avoid = chain_avoid_unbounded(mdp, policy, label);
    for (std::size_t s = 0; s < avoid.size(); ++s) {
      out.best[s] = std::max(out.best[s], avoid[s]);
      out.worst[s] = std::min(out.worst[s], avoid[s]);
    }
  });
  return out;
}

/// Naive bounded-avoidance recursion branching over actions at every
/// (state, remaining-steps) node.
inline double tree_avoid(const Mdp& mdp, int s, long steps, bool maximize,
                         const std::string& label = kBadLabel) {
  if (mdp.has_label(s, label)) return 0.0;
  if (steps == 0) return 1.0;
  double best = maximize ? 0.0 : 2.0;
  for (int a : mdp.enabled(s)) {
    double value = 0.0;
    for (const auto& t : mdp.row(s, a))
      value += t.prob * tree_avoid(mdp, t.target, steps - 1, maximize, label);
    best = maximize ? std::max(best, value) : std::min(best, value);
  }
  return best;
}

/// Bounded expected accumulated reward of a chain, by direct recursion
/// over the remaining steps (reward collected on entry, n steps => n+1
/// collected states).
inline double chain_reward_bounded(const Mdp& mdp, const PolicyTable& policy,
                                   const std::vector<double>& reward, int s, long steps,
                                   double discount = 1.0) {
  double value = reward[static_cast<std::size_t>(s)];
  if (steps == 0) return value;
  double tail = 0.0;
  for (const auto& t : mdp.row(s, policy[static_cast<std::size_t>(s)]))
    tail += t.prob * chain_reward_bounded(mdp, policy, reward, t.target, steps - 1, discount);
  return value + discount * tail;
}

/// Greatest fixpoint of the controllable safe region, written directly
/// from the definition: non-bad states keeping some action whose
/// successors stay inside the region.
inline std::vector<bool> oracle_safe_region(const Mdp& mdp, const std::string& label = kBadLabel) {
  const int n = mdp.num_states();
  std::vector<bool> region(static_cast<std::size_t>(n), true);
  for (int s : mdp.states_with_label(label)) region[static_cast<std::size_t>(s)] = false;
  for (;;) {
    bool changed = false;
    for (int s = 0; s < n; ++s) {
      if (!region[static_cast<std::size_t>(s)]) continue;
      bool ok = false;
      for (int a : mdp.enabled(s)) {
        bool inside = true;
        for (const auto& t : mdp.row(s, a))
          if (t.prob > 0.0 && !region[static_cast<std::size_t>(t.target)]) {
            inside = false;
            break;
          }
        if (inside) {
          ok = true;
          break;
        }
      }
      if (!ok) {
        region[static_cast<std::size_t>(s)] = false;
        changed = true;
      }
    }
    if (!changed) return region;
  }
}

}  // namespace imt::test
