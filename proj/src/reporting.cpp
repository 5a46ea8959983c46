#include "imt/reporting.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "imt/errors.hpp"
#include "imt/policy.hpp"

namespace imt {

namespace fs = std::filesystem;

namespace {

/// Write-temp-then-rename so partially written files never appear.
void write_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write '" + tmp + "'");
    out << content;
  }
  fs::rename(tmp, path);
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Safe:
      return "safe";
    case Verdict::Failure:
      return "failure";
    case Verdict::Undetermined:
      return "undetermined";
  }
  return "?";
}

struct LoadedModel {
  Mdp mdp;
  GridRenderInfo render;
  std::string description;
};

std::vector<std::pair<int, int>> load_obstacles(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open obstacles file '" + path + "'");
  std::vector<std::pair<int, int>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream is(line);
    int x, y;
    std::string first;
    if (!(is >> first)) continue;
    if (first[0] == '#') continue;
    std::istringstream row(line);
    if (!(row >> x >> y))
      throw ParseError("line " + std::to_string(lineno) + ": expected 'x y'");
    out.emplace_back(x, y);
  }
  return out;
}

LoadedModel load_model(const RunConfig& cfg) {
  const std::string& spec = cfg.model_spec;
  auto colon = spec.find(':');
  std::string kind = colon == std::string::npos ? "" : spec.substr(0, colon);
  std::string rest = colon == std::string::npos ? spec : spec.substr(colon + 1);
  if (kind == "slippery" || kind == "oneway") {
    GridLayout layout = GridLayout::load(rest, /*allow_no_goal=*/kind == "slippery");
    BuiltModel built =
        kind == "slippery" ? build_slippery_gridworld(layout) : build_oneway_gridworld(layout);
    return {std::move(built.mdp), std::move(built.render), kind + " gridworld from " + rest};
  }
  if (kind == "corridor") {
    CorridorSpec corridor;
    char s1 = 0, s2 = 0, s3 = 0;
    std::istringstream dims(rest);
    if (!(dims >> corridor.length >> s1 >> corridor.width >> s2 >> corridor.tilt_count >> s3 >>
          corridor.velocity_count) ||
        s1 != 'x' || s2 != 'x' || s3 != 'x')
      throw ConfigError("corridor spec must be LxWxTxV, got '" + rest + "'");
    if (!cfg.obstacles_path.empty()) corridor.obstacles = load_obstacles(cfg.obstacles_path);
    BuiltModel built = build_corridor_obstacles(corridor);
    return {std::move(built.mdp), std::move(built.render), "corridor " + rest};
  }
  if (kind == "mdp" || kind.empty() || colon == std::string::npos) {
    const std::string& path = kind == "mdp" ? rest : spec;
    return {load_mdp_file(path), {}, "MDP file " + path};
  }
  throw ConfigError("unknown model kind '" + kind + "'");
}

std::vector<std::string> split_words(const std::string& text) {
  std::istringstream is(text);
  std::vector<std::string> words;
  std::string w;
  while (is >> w) words.push_back(w);
  return words;
}

std::unique_ptr<PolicyHandle> load_policy(const RunConfig& cfg, const Mdp& mdp) {
  const std::string& spec = cfg.policy_spec;
  if (spec.rfind("exec:", 0) == 0) {
    auto words = split_words(spec.substr(5));
    if (words.empty()) throw ConfigError("empty exec policy command");
    std::string command = words.front();
    words.erase(words.begin());
    ExternalPolicyOptions options;
    options.run_id = cfg.engine.seed;
    options.features = mdp.feature_table();
    return spawn_external(command, words, std::move(options));
  }
  std::string path = spec.rfind("tabular:", 0) == 0 ? spec.substr(8) : spec;
  return load_tabular(path, mdp);
}

std::vector<double> load_reward(const RunConfig& cfg, const Mdp& mdp) {
  std::vector<double> reward(static_cast<std::size_t>(mdp.num_states()), 0.0);
  if (cfg.reward_path.empty()) {
    for (int s : mdp.states_with_label(kGoalLabel)) reward[static_cast<std::size_t>(s)] = 1.0;
    return reward;
  }
  std::ifstream in(cfg.reward_path);
  if (!in) throw ParseError("cannot open reward file '" + cfg.reward_path + "'");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream is(line);
    std::string state_tok;
    double value;
    if (!(is >> state_tok)) continue;
    if (state_tok[0] == '#') continue;
    if (!(is >> value))
      throw ParseError("line " + std::to_string(lineno) + ": expected 'state value'");
    auto s = mdp.state_index(state_tok);
    if (!s)
      throw ParseError("line " + std::to_string(lineno) + ": unknown state '" + state_tok + "'");
    reward[static_cast<std::size_t>(*s)] = value;
  }
  return reward;
}

Objective build_objective(const RunConfig& cfg, const Mdp& mdp) {
  if (cfg.objective == ObjectiveKind::Safety) {
    SafetySpec spec;
    spec.horizon = cfg.horizon;
    return Objective::for_safety(spec, cfg.delta.value_or(1.0));
  }
  if (!cfg.delta) throw ConfigError("performance objectives need an explicit --delta");
  RewardSpec spec;
  spec.reward = load_reward(cfg, mdp);
  spec.horizon = cfg.horizon;
  spec.discount = cfg.discount;
  spec.assume_convergence = cfg.assume_convergence;
  return Objective::for_performance(std::move(spec), *cfg.delta);
}

void write_final_verdicts(const RunReport& report, const Mdp& mdp, const std::string& path) {
  std::ostringstream out;
  out << "state,name,verdict,origin\n";
  for (int s = 0; s < mdp.num_states(); ++s) {
    const auto si = static_cast<std::size_t>(s);
    Verdict v = report.verdicts.verdict[si];
    const char* origin = v == Verdict::Undetermined ? "none"
                         : report.implied[si]       ? "implied"
                                                    : "proven";
    out << s << ',' << mdp.state_name(s) << ',' << verdict_name(v) << ',' << origin << '\n';
  }
  write_atomic(path, out.str());
}

void write_estimates(const RunReport& report, const Mdp& mdp, const std::string& path) {
  std::ostringstream out;
  out << "state,name,optimistic,pessimistic\n";
  for (int s = 0; s < mdp.num_states(); ++s) {
    out << s << ',' << mdp.state_name(s) << ',' << format_double(report.final_estimates.optimistic[s])
        << ',' << format_double(report.final_estimates.pessimistic[s]) << '\n';
  }
  write_atomic(path, out.str());
}

void write_report_txt(const RunReport& report, const RunConfig& cfg, const LoadedModel& model,
                      const std::string& path) {
  std::ostringstream out;
  out << "mode: " << cfg.mode << "\n";
  out << "model: " << model.description << " (" << model.mdp.num_states() << " states)\n";
  out << "termination: " << to_string(report.reason) << "\n";
  if (report.adapter_error) out << "adapter error: " << *report.adapter_error << "\n";
  out << "iterations: " << report.iterations.size() << "\n";
  out << "policy queries: " << report.total_queries << "\n";
  if (cfg.mode == "imtc") out << "rollout steps: " << report.total_rollout_steps << "\n";
  out << "safe: " << report.verdicts.count(Verdict::Safe) << "\n";
  out << "failure: " << report.verdicts.count(Verdict::Failure) << "\n";
  out << "undetermined: " << report.verdicts.count(Verdict::Undetermined) << "\n";
  out << "implied safe: " << report.implied_count(Verdict::Safe) << "\n";
  out << "implied failure: " << report.implied_count(Verdict::Failure) << "\n";
  write_atomic(path, out.str());
}

void write_iteration_heatmaps(const RunReport& report, const GridRenderInfo& render,
                              const fs::path& dir) {
  if (render.empty()) return;
  for (const auto& rec : report.iterations) {
    if (rec.verdict_snapshot.empty()) continue;
    VerdictSets snapshot;
    snapshot.verdict = rec.verdict_snapshot;
    render_heatmap(snapshot, render,
                   (dir / ("verdicts_iter_" + std::to_string(rec.index))).string());
  }
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void emit_iteration_csv(const RunReport& report, bool clustering_columns,
                        const std::string& path) {
  std::ostringstream out;
  out << "num_queries,proven_failure,undecided_states,proven_good,pessimistic_avg,optimistic_avg";
  if (clustering_columns) out << ",implied_safe,implied_failure";
  out << '\n';
  for (const auto& rec : report.iterations) {
    std::size_t proven_failure = rec.failure_count - rec.implied_failure;
    std::size_t proven_good = rec.safe_count - rec.implied_safe;
    out << rec.policy_queries << ',' << proven_failure << ',' << rec.undetermined_count << ','
        << proven_good << ',' << format_double(rec.mean_pessimistic) << ','
        << format_double(rec.mean_optimistic);
    if (clustering_columns) out << ',' << rec.implied_safe << ',' << rec.implied_failure;
    out << '\n';
  }
  write_atomic(path, out.str());
}

void render_heatmap(const VerdictSets& verdicts, const GridRenderInfo& render,
                    const std::string& base_path) {
  if (render.empty())
    throw ModelError("model has no grid metadata; heatmaps need a grid environment");
  for (int layer = 0; layer < render.layers; ++layer) {
    std::ostringstream out;
    out << "P6\n" << render.width << ' ' << render.height << "\n255\n";
    for (int y = 0; y < render.height; ++y) {
      for (int x = 0; x < render.width; ++x) {
        unsigned char rgb[3] = {0, 0, 0};
        int s = render.state_at(x, y, layer);
        if (s >= 0) {
          switch (verdicts.verdict[static_cast<std::size_t>(s)]) {
            case Verdict::Safe:
              rgb[1] = 255;
              break;
            case Verdict::Failure:
              rgb[0] = 255;
              break;
            case Verdict::Undetermined:
              rgb[2] = 255;
              break;
          }
        }
        out.write(reinterpret_cast<const char*>(rgb), 3);
      }
    }
    write_atomic(base_path + "_o" + std::to_string(layer) + ".pgm", out.str());
  }
}

int run_from_config(const RunConfig& cfg) {
  if (cfg.mode != "imt" && cfg.mode != "imtc" && cfg.mode != "mt" && cfg.mode != "rt")
    throw ConfigError("unknown mode '" + cfg.mode + "'");
  if (cfg.out_dir.empty()) throw ConfigError("missing output directory");
  if (cfg.mode == "imtc" && cfg.objective != ObjectiveKind::Safety)
    throw ConfigError("imtc requires a safety objective");

  // Load everything before touching the output directory, so config and
  // input errors leave no partial artifacts behind.
  LoadedModel model = load_model(cfg);
  auto violations = model.mdp.validate();
  if (!violations.empty()) {
    std::string msg = "model fails validation:";
    for (const auto& v : violations) msg += "\n  " + v;
    throw ConfigError(msg);
  }
  std::unique_ptr<PolicyHandle> policy = load_policy(cfg, model.mdp);
  Objective objective = build_objective(cfg, model.mdp);

  fs::create_directories(cfg.out_dir);
  fs::path dir(cfg.out_dir);

  if (cfg.mode == "rt") {
    auto results =
        run_rt(model.mdp, *policy, objective, cfg.engine, cfg.episode_len, cfg.rt_budget);
    std::ostringstream out;
    out << "start_state,name,violation,steps\n";
    std::size_t violations_found = 0;
    for (const auto& r : results) {
      out << r.start_state << ',' << model.mdp.state_name(r.start_state) << ','
          << (r.violation ? 1 : 0) << ',' << r.steps << '\n';
      if (r.violation) ++violations_found;
    }
    write_atomic((dir / "rt_results.csv").string(), out.str());
    std::ostringstream summary;
    summary << "mode: rt\n";
    summary << "model: " << model.description << " (" << model.mdp.num_states() << " states)\n";
    summary << "episodes: " << results.size() << "\n";
    summary << "violations: " << violations_found << "\n";
    summary << "policy queries: " << policy->query_count() << "\n";
    write_atomic((dir / "report.txt").string(), summary.str());
    return 0;
  }

  RunReport report;
  if (cfg.mode == "imt")
    report = run_imt(model.mdp, *policy, objective, cfg.engine);
  else if (cfg.mode == "mt")
    report = run_mt(model.mdp, *policy, objective, cfg.engine);
  else
    report = run_imtc(model.mdp, *policy, objective, cfg.engine, cfg.cluster);

  emit_iteration_csv(report, cfg.mode == "imtc", (dir / "iterations.csv").string());
  write_final_verdicts(report, model.mdp, (dir / "final_verdicts.csv").string());
  write_estimates(report, model.mdp, (dir / "estimates.csv").string());
  write_report_txt(report, cfg, model, (dir / "report.txt").string());
  write_iteration_heatmaps(report, model.render, dir);

  if (report.reason == TerminationReason::AdapterFailure) return 2;
  return 0;
}

}  // namespace imt
