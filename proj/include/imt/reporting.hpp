#pragma once

#include <optional>
#include <string>
#include <vector>

#include "imt/clustering.hpp"
#include "imt/engine.hpp"
#include "imt/environments.hpp"

namespace imt {

/// Fully resolved run description, assembled from CLI flags and/or a flat
/// key=value config file.
struct RunConfig {
  std::string mode;         // imt | imtc | mt | rt
  std::string model_spec;   // slippery:<layout> | oneway:<layout> | corridor:LxWxTxV | <mdp file>
  std::string policy_spec;  // tabular:<path> | exec:<command...> | <path>
  std::string obstacles_path;  // corridor models
  std::string reward_path;     // performance objective; default rewards goal states with 1

  ObjectiveKind objective = ObjectiveKind::Safety;
  std::optional<double> delta;
  std::optional<long> horizon;  // nullopt = unbounded
  double discount = 1.0;
  bool assume_convergence = false;

  EngineConfig engine;
  ClusterConfig cluster;

  std::size_t episode_len = 10;  // rt
  std::size_t rt_budget = 1000;  // rt, counted in rollout steps

  std::string out_dir;
};

/// Executes the configured run and writes iterations.csv,
/// final_verdicts.csv, estimates.csv, report.txt (and heatmaps for grid
/// models) into out_dir. Returns the process exit status: 0 success,
/// 1 usage/config error, 2 adapter failure, 3 non-convergence.
int run_from_config(const RunConfig& cfg);

/// One row per iteration with the exact header
/// num_queries,proven_failure,undecided_states,proven_good,pessimistic_avg,optimistic_avg
/// (clustering runs append implied_safe,implied_failure). Numbers are
/// written in shortest round-trip decimal; the write is atomic.
void emit_iteration_csv(const RunReport& report, bool clustering_columns,
                        const std::string& path);

/// One portable pixel map per layer at <base>_o<layer>.pgm: safe cells
/// green, failure red, undetermined blue, walls black. Throws ModelError
/// when the model has no grid metadata.
void render_heatmap(const VerdictSets& verdicts, const GridRenderInfo& render,
                    const std::string& base_path);

/// Shortest round-trip decimal formatting used by every CSV writer.
std::string format_double(double value);

}  // namespace imt
