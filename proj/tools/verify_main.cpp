#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "imt/errors.hpp"
#include "imt/reporting.hpp"

namespace {

struct CliState {
  imt::RunConfig cfg;
  std::string horizon = "inf";
  std::string objective = "safety";
  double delta = -1.0;  // sentinel: not set
  long max_queries = -1;
};

void add_common_options(CLI::App* sub, CliState& state) {
  sub->set_config("--config", "", "Flat key=value configuration file");
  sub->add_option("--model", state.cfg.model_spec,
                  "Model: slippery:<layout>, oneway:<layout>, corridor:LxWxTxV or an MDP file")
      ->required();
  sub->add_option("--policy", state.cfg.policy_spec,
                  "Policy: tabular:<path>, exec:<command...> or a tabular file")
      ->required();
  sub->add_option("--out", state.cfg.out_dir, "Output directory")->required();
  sub->add_option("--delta", state.delta, "Objective threshold (safety default: 1.0)");
  sub->add_option("--epsilon", state.cfg.engine.epsilon, "Minimal estimate difference");
  sub->add_option("--m", state.cfg.engine.samples_per_iteration, "Samples per iteration");
  sub->add_option("--horizon", state.horizon, "Step horizon: a number or 'inf'");
  sub->add_option("--seed", state.cfg.engine.seed, "Random seed");
  sub->add_option("--objective", state.objective, "Objective kind: safety or performance");
  sub->add_option("--reward", state.cfg.reward_path,
                  "Reward file 'state value' (default: 1 on goal states)");
  sub->add_option("--discount", state.cfg.discount, "Reward discount factor");
  sub->add_flag("--assume-convergence", state.cfg.assume_convergence,
                "Allow unbounded undiscounted reward objectives");
  sub->add_option("--rank-epsilon", state.cfg.engine.rank_epsilon,
                  "Ranks at or below this are never sampled");
  sub->add_option("--max-queries", state.max_queries, "Budget of distinct policy queries");
  sub->add_option("--obstacles", state.cfg.obstacles_path, "Obstacle file for corridor models");
}

void add_cluster_options(CLI::App* sub, CliState& state) {
  sub->add_option("--delta-i", state.cfg.cluster.importance_threshold,
                  "Importance threshold on normalized ranks");
  sub->add_option("--kappa", state.cfg.cluster.test_fraction, "Tested fraction per cluster");
  sub->add_option("--zeta", state.cfg.cluster.target_cluster_size, "Target average cluster size");
  sub->add_option("--n-test", state.cfg.cluster.rollout_horizon, "Rollout length per tested state");
  sub->add_option("--rollouts", state.cfg.cluster.rollouts_per_state,
                  "Rollout repetitions per tested state");
}

int dispatch(CliState& state, const std::string& mode) {
  state.cfg.mode = mode;
  if (state.horizon != "inf") {
    try {
      state.cfg.horizon = std::stol(state.horizon);
    } catch (const std::exception&) {
      throw imt::ConfigError("horizon must be a number or 'inf', got '" + state.horizon + "'");
    }
    if (*state.cfg.horizon < 0) throw imt::ConfigError("horizon must be non-negative");
  }
  if (state.objective == "performance")
    state.cfg.objective = imt::ObjectiveKind::Performance;
  else if (state.objective != "safety")
    throw imt::ConfigError("objective must be 'safety' or 'performance'");
  if (state.delta >= 0.0 || state.cfg.objective == imt::ObjectiveKind::Performance)
    state.cfg.delta = state.delta;
  if (state.max_queries >= 0)
    state.cfg.engine.max_queries = static_cast<std::size_t>(state.max_queries);
  state.cfg.cluster.seed = state.cfg.engine.seed;
  return imt::run_from_config(state.cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-based testing of RL policies against safety and performance objectives"};
  app.require_subcommand(1);

  CliState state;
  auto* imt_cmd = app.add_subcommand("imt", "Importance-driven model-based testing");
  auto* imtc_cmd = app.add_subcommand("imtc", "Importance-driven testing with state clustering");
  auto* mt_cmd = app.add_subcommand("mt", "Model-based testing with random state sampling");
  auto* rt_cmd = app.add_subcommand("rt", "Random rollout testing");
  for (auto* sub : {imt_cmd, imtc_cmd, mt_cmd, rt_cmd}) add_common_options(sub, state);
  add_cluster_options(imtc_cmd, state);
  rt_cmd->add_option("--episode-len", state.cfg.episode_len, "Steps per rollout episode");
  rt_cmd->add_option("--budget", state.cfg.rt_budget, "Total rollout step budget");

  try {
    app.parse(argc, argv);
    for (auto* sub : {imt_cmd, imtc_cmd, mt_cmd, rt_cmd})
      if (sub->parsed()) return dispatch(state, sub->get_name());
    return 1;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const imt::ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const imt::AdapterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const imt::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
