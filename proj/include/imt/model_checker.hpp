#pragma once

#include <optional>
#include <string>
#include <vector>

#include "imt/mdp.hpp"

namespace imt {

enum class OptMode { Max, Min };

/// Invariant objective "always avoid the labeled set", checked over a
/// finite horizon or (horizon absent) an unbounded one.
struct SafetySpec {
  std::string avoid_label = kBadLabel;
  std::optional<long> horizon;  // nullopt = unbounded

  bool bounded() const { return horizon.has_value(); }
};

/// State-based accumulated reward over a horizon. Reward is collected on
/// every visited state including the initial one, so an n-step horizon
/// sums over n+1 states. With discount 1 and no horizon the caller must
/// assert convergence explicitly.
struct RewardSpec {
  std::vector<double> reward;
  std::optional<long> horizon;
  double discount = 1.0;
  bool assume_convergence = false;

  bool bounded() const { return horizon.has_value(); }
};

struct ValueVector {
  std::vector<double> values;
  OptMode mode = OptMode::Max;

  double operator[](int s) const { return values[static_cast<std::size_t>(s)]; }
};

/// Per-state optimistic action values, aligned with Mdp::enabled(s).
struct QValues {
  std::vector<std::vector<double>> q;

  /// Largest gap between two enabled-action values at s (0 for singletons).
  double spread(int s) const;
};

/// States whose optimal avoid probability is exactly 1 or exactly 0 under
/// each mode, computed without floating point. For a bounded horizon the
/// sets use the n-step recursion; unbounded uses graph fixpoints.
struct QualitativeSets {
  std::vector<bool> prob1_max, prob0_max, prob1_min, prob0_min;
};

struct CheckSettings {
  double residual = 1e-10;     // absolute, sup-norm
  long max_iterations = 100000;
};

/// Optimal probability of avoiding the labeled set for the given horizon.
/// Unbounded values are computed as 1 - reach via the least fixed point,
/// with qualitative states pinned exactly to 1.0 / 0.0 first.
/// Throws ConvergenceError if the residual is not reached.
ValueVector prob_reach_avoid(const Mdp& mdp, const SafetySpec& spec, OptMode mode,
                             const CheckSettings& settings = {});

QualitativeSets qualitative_sets(const Mdp& mdp, const SafetySpec& spec);

/// q(s,a) = sum_s' P(s,a,s') * v_max(s', n-1) over enabled actions.
QValues q_optimistic(const Mdp& mdp, const SafetySpec& spec, const CheckSettings& settings = {});

/// q(s,a) = R(s) + gamma * sum_s' P(s,a,s') * v_max(s', n-1).
QValues q_optimistic(const Mdp& mdp, const RewardSpec& spec, const CheckSettings& settings = {});

/// Optimal expected accumulated reward; see RewardSpec for the collection
/// convention. Throws ConvergenceError on divergence in the unbounded case.
ValueVector expected_reward(const Mdp& mdp, const RewardSpec& spec, OptMode mode,
                            const CheckSettings& settings = {});

}  // namespace imt
