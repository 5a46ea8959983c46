#include "imt/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "imt/errors.hpp"

namespace imt {

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double diff = a[i] - b[i];
    d += diff * diff;
  }
  return d;
}

/// Seeded k-means++ initialization followed by Lloyd iterations with a
/// fixed cap. Assignment ties go to the lowest centroid index.
std::vector<int> kmeans(const std::vector<std::vector<double>>& points, int k, int max_iterations,
                        std::uint64_t seed, std::vector<std::vector<double>>* centroids_out) {
  const std::size_t n = points.size();
  const std::size_t dim = points.front().size();
  Rng rng(seed);

  std::vector<std::vector<double>> centroids;
  centroids.reserve(static_cast<std::size_t>(k));
  centroids.push_back(points[next_index(rng, n)]);
  std::vector<double> dist(n);
  while (centroids.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centroids) best = std::min(best, sq_dist(points[i], c));
      dist[i] = best;
      total += best;
    }
    std::size_t pick;
    if (total <= 0.0) {
      pick = next_index(rng, n);  // all remaining points coincide
    } else {
      double u = next_unit(rng) * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += dist[i];
        if (u < acc) {
          pick = i;
          break;
        }
      }
    }
    centroids.push_back(points[pick]);
  }

  std::vector<int> assignment(n, 0);
  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < centroids.size(); ++c) {
        double d = sq_dist(points[i], centroids[c]);
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      if (assignment[i] != best) {
        assignment[i] = best;
        changed = true;
      }
    }
    std::vector<std::vector<double>> sums(centroids.size(), std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(centroids.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[static_cast<std::size_t>(assignment[i])];
      for (std::size_t d = 0; d < dim; ++d)
        sums[static_cast<std::size_t>(assignment[i])][d] += points[i][d];
    }
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centroid
      for (std::size_t d = 0; d < dim; ++d)
        centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
    }
    if (!changed) break;
  }
  if (centroids_out) *centroids_out = std::move(centroids);
  return assignment;
}

bool rollout_violates(const Mdp& original, PolicyHandle& policy, int start,
                      const ClusterConfig& cfg, Rng& rng, std::size_t& steps) {
  int s = start;
  if (original.has_label(s, kBadLabel)) return true;
  for (long t = 0; t < cfg.rollout_horizon; ++t) {
    int a = policy.query(s);
    s = original.simulate_step(s, a, rng);
    ++steps;
    if (original.has_label(s, kBadLabel)) return true;
  }
  return false;
}

}  // namespace

ClusterAssignment cluster_high_ranked(const RankingTable& ranking,
                                      const std::vector<std::vector<double>>& features,
                                      const ClusterConfig& cfg) {
  ClusterAssignment out;
  double max_rank = 0.0;
  for (double r : ranking.rank) max_rank = std::max(max_rank, r);
  if (max_rank <= 0.0) return out;
  for (std::size_t s = 0; s < ranking.rank.size(); ++s)
    if (ranking.rank[s] / max_rank > cfg.importance_threshold)
      out.states.push_back(static_cast<int>(s));
  if (out.states.empty()) return out;

  for (int s : out.states)
    if (static_cast<std::size_t>(s) >= features.size() ||
        features[static_cast<std::size_t>(s)].empty())
      throw ModelError("state " + std::to_string(s) + " lacks a feature vector for clustering");

  const std::size_t dim = features[static_cast<std::size_t>(out.states.front())].size() + 1;
  std::vector<std::vector<double>> points(out.states.size(), std::vector<double>(dim));
  for (std::size_t i = 0; i < out.states.size(); ++i) {
    const auto& f = features[static_cast<std::size_t>(out.states[i])];
    if (f.size() + 1 != dim) throw ModelError("inconsistent feature dimensions across states");
    std::copy(f.begin(), f.end(), points[i].begin());
    points[i][dim - 1] = ranking.rank[static_cast<std::size_t>(out.states[i])] / max_rank;
  }
  // Min-max normalize each coordinate over the eligible set.
  for (std::size_t d = 0; d < dim; ++d) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& p : points) {
      lo = std::min(lo, p[d]);
      hi = std::max(hi, p[d]);
    }
    double range = hi - lo;
    for (auto& p : points) p[d] = range > 0.0 ? (p[d] - lo) / range : 0.0;
  }

  int k = static_cast<int>(
      std::ceil(static_cast<double>(out.states.size()) / cfg.target_cluster_size));
  k = std::clamp(k, 1, static_cast<int>(out.states.size()));

  std::vector<int> raw = kmeans(points, k, cfg.kmeans_max_iterations, cfg.seed, &out.centroids);

  // Compact away empty clusters so ids are dense.
  std::vector<int> remap(static_cast<std::size_t>(k), -1);
  int next_id = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    int& id = remap[static_cast<std::size_t>(raw[i])];
    if (id < 0) id = next_id++;
  }
  out.cluster_of.resize(raw.size());
  out.clusters.assign(static_cast<std::size_t>(next_id), {});
  std::vector<std::vector<double>> kept(static_cast<std::size_t>(next_id));
  for (std::size_t i = 0; i < raw.size(); ++i) {
    int id = remap[static_cast<std::size_t>(raw[i])];
    out.cluster_of[i] = id;
    out.clusters[static_cast<std::size_t>(id)].push_back(out.states[i]);
    kept[static_cast<std::size_t>(id)] = out.centroids[static_cast<std::size_t>(raw[i])];
  }
  out.centroids = std::move(kept);
  return out;
}

ClusterVerdicts execute_cluster_tests(const Mdp& original, PolicyHandle& policy,
                                      const ClusterAssignment& assignment,
                                      const ClusterConfig& cfg, Rng& rng) {
  if (assignment.empty()) throw ModelError("cannot execute tests on an empty cluster assignment");
  ClusterVerdicts verdicts;
  verdicts.entries.resize(assignment.clusters.size());
  for (std::size_t c = 0; c < assignment.clusters.size(); ++c) {
    const auto& members = assignment.clusters[c];
    auto tested_count = static_cast<std::size_t>(
        std::ceil(cfg.test_fraction * static_cast<double>(members.size())));
    tested_count = std::clamp<std::size_t>(tested_count, 1, members.size());
    std::vector<int> pool = members;
    auto& entry = verdicts.entries[c];
    for (std::size_t i = 0; i < tested_count; ++i) {
      std::size_t j = i + next_index(rng, pool.size() - i);
      std::swap(pool[i], pool[j]);
      TestedState t;
      t.state = pool[i];
      for (int rep = 0; rep < cfg.rollouts_per_state && !t.violated; ++rep)
        t.violated = rollout_violates(original, policy, t.state, cfg, rng, verdicts.rollout_steps);
      if (t.violated) entry.failed = true;
      entry.tested.push_back(t);
    }
  }
  return verdicts;
}

Mdp apply_cluster_restriction(const Mdp& mdp, const ClusterAssignment& assignment,
                              const ClusterVerdicts& verdicts) {
  if (verdicts.empty()) return mdp;
  if (verdicts.entries.size() != assignment.clusters.size())
    throw ModelError("cluster verdicts do not cover every cluster");
  std::vector<int> safe_states, failed_states;
  for (std::size_t c = 0; c < assignment.clusters.size(); ++c) {
    auto& target = verdicts.entries[c].failed ? failed_states : safe_states;
    target.insert(target.end(), assignment.clusters[c].begin(), assignment.clusters[c].end());
  }
  return mdp.make_sinks(safe_states, false).make_sinks(failed_states, true);
}

RunReport run_imtc(const Mdp& mdp, PolicyHandle& policy, const Objective& obj,
                   const EngineConfig& engine_cfg, const ClusterConfig& cluster_cfg) {
  if (obj.kind != ObjectiveKind::Safety)
    throw ConfigError("clustering runs support safety objectives only");

  RunReport report;
  const Mdp& original = mdp;  // rollouts use the unrestricted dynamics
  Mdp current = mdp;
  VerdictSets verdicts(mdp.num_states());
  report.implied.assign(static_cast<std::size_t>(mdp.num_states()), false);
  std::vector<bool> restricted(static_cast<std::size_t>(mdp.num_states()), false);
  for (int s = 0; s < mdp.num_states(); ++s)
    if (mdp.enabled(s).size() == 1) restricted[static_cast<std::size_t>(s)] = true;
  std::size_t newly_restricted = 0;
  std::size_t rollout_steps = 0;
  Rng test_rng(cluster_cfg.seed);

  for (int iteration = 0;; ++iteration) {
    EstimatePair est = compute_estimates(current, obj, engine_cfg.check);
    verdicts = classify(est, obj, std::move(verdicts));

    IterationRecord rec;
    rec.index = iteration;
    rec.safe_count = verdicts.count(Verdict::Safe);
    rec.failure_count = verdicts.count(Verdict::Failure);
    rec.undetermined_count = verdicts.count(Verdict::Undetermined);
    for (std::size_t s = 0; s < report.implied.size(); ++s) {
      if (!report.implied[s]) continue;
      if (verdicts.verdict[s] == Verdict::Safe) ++rec.implied_safe;
      if (verdicts.verdict[s] == Verdict::Failure) ++rec.implied_failure;
    }
    rec.mean_optimistic =
        std::accumulate(est.optimistic.values.begin(), est.optimistic.values.end(), 0.0) /
        static_cast<double>(est.optimistic.values.size());
    rec.mean_pessimistic =
        std::accumulate(est.pessimistic.values.begin(), est.pessimistic.values.end(), 0.0) /
        static_cast<double>(est.pessimistic.values.size());
    rec.policy_queries = policy.query_count();
    rec.restricted_states = newly_restricted;
    rec.rollout_steps = rollout_steps;
    if (engine_cfg.record_estimates) {
      rec.optimistic_values = est.optimistic.values;
      rec.pessimistic_values = est.pessimistic.values;
    }
    rec.verdict_snapshot = verdicts.verdict;
    report.iterations.push_back(std::move(rec));

    bool done = false;
    if (stopping_met(est, engine_cfg)) {
      report.reason = TerminationReason::Converged;
      done = true;
    } else if (current.is_fully_restricted()) {
      report.reason = TerminationReason::FullyRestricted;
      done = true;
    } else if (engine_cfg.max_queries && policy.query_count() >= *engine_cfg.max_queries) {
      report.reason = TerminationReason::Budget;
      done = true;
    }
    if (done) {
      report.final_estimates = std::move(est);
      break;
    }

    RankingTable ranking = compute_ranking(current, est);
    ClusterAssignment assignment =
        cluster_high_ranked(ranking, original.feature_table(), cluster_cfg);

    if (assignment.empty()) {
      // Nothing above the importance threshold: fall back to plain ranked
      // sampling so the loop keeps making progress.
      std::vector<int> targets = select_top_m(ranking, engine_cfg, restricted, true);
      if (engine_cfg.max_queries) {
        std::size_t remaining = *engine_cfg.max_queries - policy.query_count();
        if (targets.size() > remaining) targets.resize(remaining);
      }
      if (targets.empty()) {
        report.reason = TerminationReason::Budget;
        report.final_estimates = std::move(est);
        break;
      }
      RestrictionSet gamma;
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
      continue;
    }

    ClusterVerdicts cluster_verdicts;
    try {
      cluster_verdicts =
          execute_cluster_tests(original, policy, assignment, cluster_cfg, test_rng);
    } catch (const AdapterError& e) {
      report.reason = TerminationReason::AdapterFailure;
      report.adapter_error = e.what();
      report.final_estimates = std::move(est);
      break;
    }
    rollout_steps += cluster_verdicts.rollout_steps;
    current = apply_cluster_restriction(current, assignment, cluster_verdicts);

    auto& rec_clusters = report.iterations.back().clusters;
    for (std::size_t c = 0; c < assignment.clusters.size(); ++c) {
      ClusterIterationInfo info;
      info.cluster_id = static_cast<int>(c);
      info.size = assignment.clusters[c].size();
      info.tested = cluster_verdicts.entries[c].tested.size();
      info.failed = cluster_verdicts.entries[c].failed;
      rec_clusters.push_back(info);
    }

    for (std::size_t i = 0; i < assignment.states.size(); ++i) {
      int s = assignment.states[i];
      bool failed = cluster_verdicts.entries[static_cast<std::size_t>(assignment.cluster_of[i])].failed;
      if (!restricted[static_cast<std::size_t>(s)]) {
        restricted[static_cast<std::size_t>(s)] = true;
        ++newly_restricted;
      }
      if (verdicts.verdict[static_cast<std::size_t>(s)] == Verdict::Undetermined) {
        verdicts.verdict[static_cast<std::size_t>(s)] = failed ? Verdict::Failure : Verdict::Safe;
        report.implied[static_cast<std::size_t>(s)] = true;
      }
    }
  }

  report.verdicts = std::move(verdicts);
  report.final_mdp = std::make_shared<const Mdp>(std::move(current));
  report.total_queries = policy.query_count();
  report.total_rollout_steps = rollout_steps;
  return report;
}

}  // namespace imt
