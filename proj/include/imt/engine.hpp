#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "imt/mdp.hpp"
#include "imt/model_checker.hpp"
#include "imt/policy.hpp"

namespace imt {

enum class ObjectiveKind { Safety, Performance };

/// What the policy is tested against: a safety spec with threshold
/// delta in [0,1], or a reward spec with a real threshold.
struct Objective {
  ObjectiveKind kind = ObjectiveKind::Safety;
  SafetySpec safety;
  RewardSpec reward;
  double threshold = 1.0;

  static Objective for_safety(SafetySpec spec, double delta) {
    Objective o;
    o.kind = ObjectiveKind::Safety;
    o.safety = std::move(spec);
    o.threshold = delta;
    return o;
  }
  static Objective for_performance(RewardSpec spec, double delta) {
    Objective o;
    o.kind = ObjectiveKind::Performance;
    o.reward = std::move(spec);
    o.threshold = delta;
    return o;
  }
};

struct EngineConfig {
  int samples_per_iteration = 10;  // m
  double epsilon = 0.05;           // minimal estimate difference
  double rank_epsilon = 1e-9;      // ranks at or below this are unsampleable
  std::optional<std::size_t> max_queries;
  std::uint64_t seed = 0;
  bool record_estimates = true;  // keep per-iteration value snapshots
  CheckSettings check;
};

/// Optimistic/pessimistic value pair plus the optimistic action values the
/// ranking is derived from. For safety objectives the exact qualitative
/// sets ride along so threshold tests at delta = 1.0 never touch floats.
struct EstimatePair {
  ValueVector optimistic;
  ValueVector pessimistic;
  QValues q_optimistic;
  std::optional<QualitativeSets> qualitative;

  double gap(int s) const { return optimistic[s] - pessimistic[s]; }
  double max_gap() const;
};

enum class Verdict : std::uint8_t { Undetermined, Safe, Failure };

/// Evolving partition of the state space. Safe and failure sets only grow.
struct VerdictSets {
  std::vector<Verdict> verdict;

  explicit VerdictSets(int num_states = 0)
      : verdict(static_cast<std::size_t>(num_states), Verdict::Undetermined) {}

  std::size_t count(Verdict v) const;
  std::vector<int> states(Verdict v) const;
  bool is_partition_of(int num_states) const {
    return verdict.size() == static_cast<std::size_t>(num_states);
  }
};

struct RankingTable {
  std::vector<double> rank;

  double operator[](int s) const { return rank[static_cast<std::size_t>(s)]; }
};

enum class TerminationReason { Converged, Budget, FullyRestricted, AdapterFailure };

std::string to_string(TerminationReason r);

struct ClusterIterationInfo {
  int cluster_id = 0;
  std::size_t size = 0;
  std::size_t tested = 0;
  bool failed = false;
};

struct IterationRecord {
  int index = 0;
  std::size_t safe_count = 0;
  std::size_t failure_count = 0;
  std::size_t undetermined_count = 0;
  std::size_t implied_safe = 0;     // clustering only
  std::size_t implied_failure = 0;  // clustering only
  double mean_optimistic = 0.0;
  double mean_pessimistic = 0.0;
  std::size_t policy_queries = 0;      // cumulative distinct decisions
  std::size_t restricted_states = 0;   // cumulative states pinned or sunk
  std::size_t rollout_steps = 0;       // cumulative, clustering only
  std::vector<double> optimistic_values;   // optional snapshots
  std::vector<double> pessimistic_values;
  std::vector<Verdict> verdict_snapshot;
  std::vector<ClusterIterationInfo> clusters;
};

struct RunReport {
  std::vector<IterationRecord> iterations;
  VerdictSets verdicts;
  std::vector<bool> implied;  // per state: verdict came from a cluster
  EstimatePair final_estimates;
  TerminationReason reason = TerminationReason::Converged;
  std::optional<std::string> adapter_error;
  std::shared_ptr<const Mdp> final_mdp;
  std::size_t total_queries = 0;
  std::size_t total_rollout_steps = 0;

  std::size_t implied_count(Verdict v) const;
};

EstimatePair compute_estimates(const Mdp& mdp, const Objective& obj,
                               const CheckSettings& settings = {});

/// Moves undetermined states across the threshold: pessimistic >= delta
/// into safe, optimistic < delta into failure. Classified states never
/// move back. Safety comparisons at delta = 1.0 use the qualitative sets.
VerdictSets classify(const EstimatePair& est, const Objective& obj, VerdictSets verdicts);

/// True iff max_s (e_opt(s) - e_pes(s)) < epsilon.
bool stopping_met(const EstimatePair& est, const EngineConfig& config);

/// rank(s) = largest gap between optimistic action values at s; states
/// with a single enabled action rank 0.
RankingTable compute_ranking(const Mdp& mdp, const EstimatePair& est);

/// Up to m unsampled states with rank above rank_epsilon, by descending
/// rank then ascending index. If none qualify and fallback is allowed
/// (stopping unmet, model not fully restricted), returns the m
/// lowest-index unsampled states instead so the loop always progresses.
std::vector<int> select_top_m(const RankingTable& ranking, const EngineConfig& config,
                              const std::vector<bool>& already_restricted, bool allow_fallback);

/// The importance-driven testing loop: estimate, classify, test stopping,
/// rank, sample the policy at the top-m states, restrict, repeat.
RunReport run_imt(const Mdp& mdp, PolicyHandle& policy, const Objective& obj,
                  const EngineConfig& config);

/// Baseline: same loop with uniformly sampled states instead of ranking.
RunReport run_mt(const Mdp& mdp, PolicyHandle& policy, const Objective& obj,
                 const EngineConfig& config);

struct RolloutResult {
  int start_state = 0;
  bool violation = false;
  std::size_t steps = 0;
};

/// Baseline: rollouts of episode_len steps from uniform random start
/// states; flags episodes that visit a bad state. Every episode consumes
/// at least one unit of the step budget.
std::vector<RolloutResult> run_rt(const Mdp& mdp, PolicyHandle& policy, const Objective& obj,
                                  const EngineConfig& config, std::size_t episode_len,
                                  std::size_t budget);

}  // namespace imt
