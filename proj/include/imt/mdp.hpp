#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "imt/rng.hpp"

namespace imt {

/// Label carried by avoid states. Bad states are rewritten to absorbing
/// self-loops when a model is built, so "reach bad" and "ever violate"
/// coincide.
inline constexpr const char* kBadLabel = "bad";
inline constexpr const char* kGoalLabel = "goal";

/// Name of the reserved self-loop action used for sink states.
inline constexpr const char* kStayActionName = "stay";

struct Transition {
  int target = 0;
  double prob = 0.0;
};

/// Deterministic memoryless policy as a total map state -> action index.
using PolicyTable = std::vector<int>;

/// Set of (state, action) pairs used to restrict an MDP. States must be
/// pairwise distinct and each action enabled at its state.
using RestrictionSet = std::vector<std::pair<int, int>>;

/// Sparse MDP with per-state enabled action sets. Values are immutable
/// after construction: every operation returns a new model or a pure
/// result, so instances can be shared freely across threads.
///
/// Restriction only ever shrinks enabled sets; the stored transition rows
/// of surviving actions are never touched, so no renormalization happens
/// behind the caller's back.
class Mdp {
 public:
  int num_states() const { return static_cast<int>(rows_.size()); }
  int num_actions() const { return static_cast<int>(action_names_.size()); }

  const std::string& action_name(int a) const { return action_names_[static_cast<std::size_t>(a)]; }
  std::optional<int> action_index(const std::string& name) const;

  const std::string& state_name(int s) const { return state_names_[static_cast<std::size_t>(s)]; }
  /// Resolves a symbolic state name; falls back to parsing a decimal index.
  std::optional<int> state_index(const std::string& name) const;

  /// Index of the reserved sink self-loop action.
  int stay_action() const { return stay_action_; }

  /// Currently enabled actions at s, ascending by action index.
  std::span<const int> enabled(int s) const {
    return {enabled_[static_cast<std::size_t>(s)].data(), enabled_[static_cast<std::size_t>(s)].size()};
  }

  /// Transition row for an enabled or stored (state, action) pair.
  const std::vector<Transition>& row(int s, int a) const;
  bool is_enabled(int s, int a) const;

  bool has_label(int s, const std::string& tag) const;
  const std::set<std::string>& labels(int s) const { return labels_[static_cast<std::size_t>(s)]; }
  std::vector<int> states_with_label(const std::string& tag) const;

  const std::vector<std::pair<int, double>>& initial_distribution() const { return initial_; }

  bool has_features() const { return !features_.empty(); }
  const std::vector<double>& features(int s) const { return features_[static_cast<std::size_t>(s)]; }
  const std::vector<std::vector<double>>& feature_table() const { return features_; }
  std::size_t feature_dim() const { return features_.empty() ? 0 : features_.front().size(); }

  /// True iff every state has exactly one enabled action (a Markov chain).
  bool is_fully_restricted() const;

  /// Returns one description per violated invariant; empty means valid.
  std::vector<std::string> validate() const;

  /// New model where every state in gamma is pinned to its paired action.
  /// Throws ModelError on duplicate states or non-enabled actions.
  Mdp restrict(const RestrictionSet& gamma) const;

  /// New model where each listed state keeps only a probability-1
  /// stay self-loop; with mark_bad the states also gain the `bad` label.
  Mdp make_sinks(const std::vector<int>& states, bool mark_bad) const;

  /// Fully restricted model induced by a total policy. Throws ModelError
  /// naming the first state whose assigned action is no longer enabled.
  Mdp induce_chain(const PolicyTable& policy) const;

  /// Draws a successor of (s, a) from the stored row. Deterministic for a
  /// fixed generator state. Throws ModelError if a is disabled at s.
  int simulate_step(int s, int a, Rng& rng) const;

 private:
  friend class MdpBuilder;

  struct ActionRow {
    int action = 0;
    std::vector<Transition> entries;
  };

  const ActionRow* find_row(int s, int a) const;
  void check_state(int s) const;

  std::vector<std::vector<ActionRow>> rows_;  // per state, ascending by action
  std::vector<std::vector<int>> enabled_;
  std::vector<std::string> action_names_;
  std::vector<std::string> state_names_;
  std::vector<std::set<std::string>> labels_;
  std::vector<std::pair<int, double>> initial_;
  std::vector<std::vector<double>> features_;
  int stay_action_ = -1;
};

/// Incremental construction of an Mdp. build() normalizes bad states to
/// absorbing self-loops (adding the reserved `stay` action if needed),
/// derives the enabled sets and checks basic shape.
class MdpBuilder {
 public:
  MdpBuilder(int num_states, std::vector<std::string> action_names);

  void set_state_name(int s, std::string name);
  void add_transition(int s, int a, int target, double prob);
  void add_label(int s, const std::string& tag);
  void set_initial(int s, double prob);
  void set_features(int s, std::vector<double> f);

  /// Replaces any existing rows of s with a stay self-loop.
  void make_absorbing(int s);

  Mdp build();

 private:
  int ensure_stay_action();

  Mdp m_;
  bool built_ = false;
};

/// Parses the line-oriented MDP text format (see README for the grammar).
Mdp parse_mdp_text(const std::string& text);
Mdp load_mdp_file(const std::string& path);

}  // namespace imt
