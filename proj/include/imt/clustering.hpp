#pragma once

#include <cstdint>
#include <vector>

#include "imt/engine.hpp"
#include "imt/mdp.hpp"
#include "imt/rng.hpp"

namespace imt {

struct ClusterConfig {
  double importance_threshold = 0.8;  // delta_i, on ranks normalized to [0,1]
  double test_fraction = 0.2;         // kappa
  double target_cluster_size = 25.0;  // zeta; k = ceil(|eligible| / zeta)
  long rollout_horizon = 10;          // n_test
  int rollouts_per_state = 1;
  int kmeans_max_iterations = 50;
  std::uint64_t seed = 0;
};

/// Deterministic grouping of the eligible high-ranked states. Clusters are
/// computed by seeded k-means++ on [state features || normalized rank]
/// with every coordinate min-max normalized to [0,1].
struct ClusterAssignment {
  std::vector<int> states;                  // eligible states, ascending
  std::vector<int> cluster_of;              // parallel to states
  std::vector<std::vector<int>> clusters;   // cluster id -> members
  std::vector<std::vector<double>> centroids;

  bool empty() const { return states.empty(); }
};

struct TestedState {
  int state = 0;
  bool violated = false;
};

/// FAIL iff at least one tested state violated; SAFE otherwise.
struct ClusterVerdicts {
  struct Entry {
    bool failed = false;
    std::vector<TestedState> tested;
  };
  std::vector<Entry> entries;  // indexed by cluster id
  std::size_t rollout_steps = 0;

  bool empty() const { return entries.empty(); }
};

/// Eligible set = states with rank / max_rank strictly above the
/// importance threshold (restricted states rank 0 and drop out). Returns
/// an empty assignment when nothing qualifies; the caller then falls back
/// to plain ranked sampling. Throws ModelError if eligible states lack
/// feature vectors.
ClusterAssignment cluster_high_ranked(const RankingTable& ranking,
                                      const std::vector<std::vector<double>>& features,
                                      const ClusterConfig& cfg);

/// Tests ceil(kappa * |cluster|) states per cluster, sampled without
/// replacement, by rolling the policy out for rollout_horizon steps on the
/// original (unrestricted) dynamics. A rollout violates iff it visits a
/// bad state.
ClusterVerdicts execute_cluster_tests(const Mdp& original, PolicyHandle& policy,
                                      const ClusterAssignment& assignment,
                                      const ClusterConfig& cfg, Rng& rng);

/// Turns every clustered state into a sink; states of failed clusters are
/// additionally labeled bad.
Mdp apply_cluster_restriction(const Mdp& mdp, const ClusterAssignment& assignment,
                              const ClusterVerdicts& verdicts);

/// The testing loop with the ranked-sampling step replaced by
/// rank -> cluster -> test -> sink-restrict. Cluster-derived verdicts are
/// recorded as implied, separately from the proven ones.
RunReport run_imtc(const Mdp& mdp, PolicyHandle& policy, const Objective& obj,
                   const EngineConfig& engine_cfg, const ClusterConfig& cluster_cfg);

}  // namespace imt
