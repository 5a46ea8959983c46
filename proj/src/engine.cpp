#include "imt/engine.hpp"

#include <algorithm>
#include <memory>
#include <numeric>

#include "imt/errors.hpp"
#include "imt/rng.hpp"

namespace imt {

namespace {

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<bool> initially_restricted(const Mdp& mdp) {
  std::vector<bool> mask(static_cast<std::size_t>(mdp.num_states()), false);
  for (int s = 0; s < mdp.num_states(); ++s)
    if (mdp.enabled(s).size() == 1) mask[static_cast<std::size_t>(s)] = true;
  return mask;
}

std::vector<int> sample_uniform_unrestricted(const std::vector<bool>& restricted, int m, Rng& rng) {
  std::vector<int> pool;
  for (std::size_t s = 0; s < restricted.size(); ++s)
    if (!restricted[s]) pool.push_back(static_cast<int>(s));
  std::vector<int> out;
  for (int i = 0; i < m && !pool.empty(); ++i) {
    std::size_t j = next_index(rng, pool.size());
    out.push_back(pool[j]);
    pool[j] = pool.back();
    pool.pop_back();
  }
  return out;
}

using Selector = std::function<std::vector<int>(const RankingTable&, const std::vector<bool>&)>;

RunReport run_loop(const Mdp& mdp, PolicyHandle& policy, const Objective& obj,
                   const EngineConfig& config, const Selector& select) {
  RunReport report;
  Mdp current = mdp;
  VerdictSets verdicts(mdp.num_states());
  report.implied.assign(static_cast<std::size_t>(mdp.num_states()), false);
  std::vector<bool> restricted = initially_restricted(current);
  std::size_t newly_restricted = 0;

  for (int iteration = 0;; ++iteration) {
    EstimatePair est = compute_estimates(current, obj, config.check);
    verdicts = classify(est, obj, std::move(verdicts));

    IterationRecord rec;
    rec.index = iteration;
    rec.safe_count = verdicts.count(Verdict::Safe);
    rec.failure_count = verdicts.count(Verdict::Failure);
    rec.undetermined_count = verdicts.count(Verdict::Undetermined);
    rec.mean_optimistic = mean(est.optimistic.values);
    rec.mean_pessimistic = mean(est.pessimistic.values);
    rec.policy_queries = policy.query_count();
    rec.restricted_states = newly_restricted;
    if (config.record_estimates) {
      rec.optimistic_values = est.optimistic.values;
      rec.pessimistic_values = est.pessimistic.values;
    }
    rec.verdict_snapshot = verdicts.verdict;
    report.iterations.push_back(std::move(rec));

    bool done = false;
    if (stopping_met(est, config)) {
      report.reason = TerminationReason::Converged;
      done = true;
    } else if (current.is_fully_restricted()) {
      report.reason = TerminationReason::FullyRestricted;
      done = true;
    } else if (config.max_queries && policy.query_count() >= *config.max_queries) {
      report.reason = TerminationReason::Budget;
      done = true;
    }
    if (done) {
      report.final_estimates = std::move(est);
      break;
    }

    RankingTable ranking = compute_ranking(current, est);
    std::vector<int> targets = select(ranking, restricted);
    if (config.max_queries) {
      std::size_t remaining = *config.max_queries - policy.query_count();
      if (targets.size() > remaining) targets.resize(remaining);
    }
    if (targets.empty()) {
      report.reason = TerminationReason::Budget;
      report.final_estimates = std::move(est);
      break;
    }

    RestrictionSet gamma;
    gamma.reserve(targets.size());
    try {
      for (int s : targets) gamma.emplace_back(s, policy.query(s));
    } catch (const AdapterError& e) {
      report.reason = TerminationReason::AdapterFailure;
      report.adapter_error = e.what();
      report.final_estimates = std::move(est);
      break;
    }
    current = current.restrict(gamma);
    for (int s : targets) {
      restricted[static_cast<std::size_t>(s)] = true;
      ++newly_restricted;
    }
  }

  report.verdicts = std::move(verdicts);
  report.final_mdp = std::make_shared<const Mdp>(std::move(current));
  report.total_queries = policy.query_count();
  return report;
}

}  // namespace

double EstimatePair::max_gap() const {
  double g = 0.0;
  for (std::size_t i = 0; i < optimistic.values.size(); ++i)
    g = std::max(g, optimistic.values[i] - pessimistic.values[i]);
  return g;
}

std::size_t VerdictSets::count(Verdict v) const {
  return static_cast<std::size_t>(std::count(verdict.begin(), verdict.end(), v));
}

std::vector<int> VerdictSets::states(Verdict v) const {
  std::vector<int> out;
  for (std::size_t s = 0; s < verdict.size(); ++s)
    if (verdict[s] == v) out.push_back(static_cast<int>(s));
  return out;
}

std::size_t RunReport::implied_count(Verdict v) const {
  std::size_t n = 0;
  for (std::size_t s = 0; s < implied.size(); ++s)
    if (implied[s] && verdicts.verdict[s] == v) ++n;
  return n;
}

std::string to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::Converged:
      return "converged";
    case TerminationReason::Budget:
      return "budget";
    case TerminationReason::FullyRestricted:
      return "fully_restricted";
    case TerminationReason::AdapterFailure:
      return "adapter_failure";
  }
  return "unknown";
}

EstimatePair compute_estimates(const Mdp& mdp, const Objective& obj,
                               const CheckSettings& settings) {
  EstimatePair est;
  if (obj.kind == ObjectiveKind::Safety) {
    est.optimistic = prob_reach_avoid(mdp, obj.safety, OptMode::Max, settings);
    est.pessimistic = prob_reach_avoid(mdp, obj.safety, OptMode::Min, settings);
    est.q_optimistic = q_optimistic(mdp, obj.safety, settings);
    est.qualitative = qualitative_sets(mdp, obj.safety);
  } else {
    est.optimistic = expected_reward(mdp, obj.reward, OptMode::Max, settings);
    est.pessimistic = expected_reward(mdp, obj.reward, OptMode::Min, settings);
    est.q_optimistic = q_optimistic(mdp, obj.reward, settings);
  }
  return est;
}

VerdictSets classify(const EstimatePair& est, const Objective& obj, VerdictSets verdicts) {
  const bool exact_one =
      obj.kind == ObjectiveKind::Safety && obj.threshold == 1.0 && est.qualitative.has_value();
  for (std::size_t s = 0; s < verdicts.verdict.size(); ++s) {
    if (verdicts.verdict[s] != Verdict::Undetermined) continue;
    const int si = static_cast<int>(s);
    bool safe, failure;
    if (exact_one) {
      safe = est.qualitative->prob1_min[s];
      failure = !est.qualitative->prob1_max[s];
    } else {
      safe = est.pessimistic[si] >= obj.threshold;
      failure = est.optimistic[si] < obj.threshold;
    }
    if (safe)
      verdicts.verdict[s] = Verdict::Safe;
    else if (failure)
      verdicts.verdict[s] = Verdict::Failure;
  }
  return verdicts;
}

bool stopping_met(const EstimatePair& est, const EngineConfig& config) {
  return est.max_gap() < config.epsilon;
}

RankingTable compute_ranking(const Mdp& mdp, const EstimatePair& est) {
  RankingTable table;
  table.rank.resize(static_cast<std::size_t>(mdp.num_states()), 0.0);
  for (int s = 0; s < mdp.num_states(); ++s)
    table.rank[static_cast<std::size_t>(s)] = est.q_optimistic.spread(s);
  return table;
}

std::vector<int> select_top_m(const RankingTable& ranking, const EngineConfig& config,
                              const std::vector<bool>& already_restricted, bool allow_fallback) {
  std::vector<int> candidates;
  for (std::size_t s = 0; s < ranking.rank.size(); ++s)
    if (!already_restricted[s] && ranking.rank[s] > config.rank_epsilon)
      candidates.push_back(static_cast<int>(s));
  std::sort(candidates.begin(), candidates.end(), [&](int a, int b) {
    double ra = ranking[a], rb = ranking[b];
    if (ra != rb) return ra > rb;
    return a < b;
  });
  if (candidates.size() > static_cast<std::size_t>(config.samples_per_iteration))
    candidates.resize(static_cast<std::size_t>(config.samples_per_iteration));
  if (candidates.empty() && allow_fallback) {
    for (std::size_t s = 0;
         s < ranking.rank.size() &&
         candidates.size() < static_cast<std::size_t>(config.samples_per_iteration);
         ++s)
      if (!already_restricted[s]) candidates.push_back(static_cast<int>(s));
  }
  return candidates;
}

RunReport run_imt(const Mdp& mdp, PolicyHandle& policy, const Objective& obj,
                  const EngineConfig& config) {
  return run_loop(mdp, policy, obj, config,
                  [&config](const RankingTable& ranking, const std::vector<bool>& restricted) {
                    return select_top_m(ranking, config, restricted, true);
                  });
}

RunReport run_mt(const Mdp& mdp, PolicyHandle& policy, const Objective& obj,
                 const EngineConfig& config) {
  auto rng = std::make_shared<Rng>(config.seed);
  return run_loop(mdp, policy, obj, config,
                  [&config, rng](const RankingTable&, const std::vector<bool>& restricted) {
                    return sample_uniform_unrestricted(restricted, config.samples_per_iteration,
                                                       *rng);
                  });
}

std::vector<RolloutResult> run_rt(const Mdp& mdp, PolicyHandle& policy, const Objective& obj,
                                  const EngineConfig& config, std::size_t episode_len,
                                  std::size_t budget) {
  if (obj.kind != ObjectiveKind::Safety)
    throw ConfigError("random testing supports safety objectives only");
  const std::string& avoid = obj.safety.avoid_label;
  Rng rng(config.seed);
  std::vector<RolloutResult> results;
  std::size_t used = 0;
  while (used < budget) {
    RolloutResult r;
    r.start_state = static_cast<int>(next_index(rng, static_cast<std::size_t>(mdp.num_states())));
    int s = r.start_state;
    r.violation = mdp.has_label(s, avoid);
    while (r.steps < episode_len && !r.violation) {
      int a = policy.query(s);
      s = mdp.simulate_step(s, a, rng);
      ++r.steps;
      if (mdp.has_label(s, avoid)) r.violation = true;
    }
    used += std::max<std::size_t>(1, r.steps);
    results.push_back(r);
  }
  return results;
}

}  // namespace imt
