#include "imt/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "imt/errors.hpp"

namespace imt {

namespace {
constexpr double kRowSumTolerance = 1e-9;
}

std::optional<int> Mdp::action_index(const std::string& name) const {
  for (int a = 0; a < num_actions(); ++a)
    if (action_names_[static_cast<std::size_t>(a)] == name) return a;
  return std::nullopt;
}

std::optional<int> Mdp::state_index(const std::string& name) const {
  for (int s = 0; s < num_states(); ++s)
    if (state_names_[static_cast<std::size_t>(s)] == name) return s;
  // Fall back to a plain decimal index.
  try {
    std::size_t pos = 0;
    int s = std::stoi(name, &pos);
    if (pos == name.size() && s >= 0 && s < num_states()) return s;
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

void Mdp::check_state(int s) const {
  if (s < 0 || s >= num_states())
    throw ModelError("state index " + std::to_string(s) + " out of range");
}

const Mdp::ActionRow* Mdp::find_row(int s, int a) const {
  const auto& rows = rows_[static_cast<std::size_t>(s)];
  auto it = std::lower_bound(rows.begin(), rows.end(), a,
                             [](const ActionRow& r, int key) { return r.action < key; });
  if (it == rows.end() || it->action != a) return nullptr;
  return &*it;
}

const std::vector<Transition>& Mdp::row(int s, int a) const {
  check_state(s);
  const ActionRow* r = find_row(s, a);
  if (!r)
    throw ModelError("no transition row for state " + state_name(s) + " and action " +
                     action_name(a));
  return r->entries;
}

bool Mdp::is_enabled(int s, int a) const {
  check_state(s);
  const auto& en = enabled_[static_cast<std::size_t>(s)];
  return std::binary_search(en.begin(), en.end(), a);
}

bool Mdp::has_label(int s, const std::string& tag) const {
  check_state(s);
  return labels_[static_cast<std::size_t>(s)].count(tag) > 0;
}

std::vector<int> Mdp::states_with_label(const std::string& tag) const {
  std::vector<int> out;
  for (int s = 0; s < num_states(); ++s)
    if (labels_[static_cast<std::size_t>(s)].count(tag)) out.push_back(s);
  return out;
}

bool Mdp::is_fully_restricted() const {
  for (const auto& en : enabled_)
    if (en.size() != 1) return false;
  return true;
}

std::vector<std::string> Mdp::validate() const {
  std::vector<std::string> violations;
  for (int s = 0; s < num_states(); ++s) {
    const auto& en = enabled_[static_cast<std::size_t>(s)];
    if (en.empty())
      violations.push_back("state " + state_name(s) + " has no enabled action");
    for (int a : en) {
      const ActionRow* r = find_row(s, a);
      if (!r || r->entries.empty()) {
        violations.push_back("state " + state_name(s) + " enables action " + action_name(a) +
                             " without transitions");
        continue;
      }
      double sum = 0.0;
      bool range_ok = true;
      for (const Transition& t : r->entries) {
        if (t.prob < 0.0 || t.prob > 1.0) range_ok = false;
        sum += t.prob;
      }
      if (!range_ok)
        violations.push_back("probability outside [0,1] at state " + state_name(s) +
                             ", action " + action_name(a));
      if (std::abs(sum - 1.0) > kRowSumTolerance) {
        std::ostringstream os;
        os << "row sum " << sum << " != 1 at state " << state_name(s) << ", action "
           << action_name(a);
        violations.push_back(os.str());
      }
    }
  }
  if (!initial_.empty()) {
    double total = 0.0;
    for (const auto& [s, p] : initial_) total += p;
    if (std::abs(total - 1.0) > kRowSumTolerance) {
      std::ostringstream os;
      os << "initial distribution sums to " << total;
      violations.push_back(os.str());
    }
  }
  return violations;
}

Mdp Mdp::restrict(const RestrictionSet& gamma) const {
  std::vector<bool> seen(static_cast<std::size_t>(num_states()), false);
  for (const auto& [s, a] : gamma) {
    check_state(s);
    if (seen[static_cast<std::size_t>(s)])
      throw ModelError("restriction lists state " + state_name(s) + " twice");
    seen[static_cast<std::size_t>(s)] = true;
    if (!is_enabled(s, a))
      throw ModelError("restriction pins disabled action " + action_name(a) + " at state " +
                       state_name(s));
  }
  Mdp out = *this;
  for (const auto& [s, a] : gamma) out.enabled_[static_cast<std::size_t>(s)] = {a};
  return out;
}

Mdp Mdp::make_sinks(const std::vector<int>& states, bool mark_bad) const {
  Mdp out = *this;
  for (int s : states) {
    check_state(s);
    out.rows_[static_cast<std::size_t>(s)] = {
        ActionRow{stay_action_, {Transition{s, 1.0}}}};
    out.enabled_[static_cast<std::size_t>(s)] = {stay_action_};
    if (mark_bad) out.labels_[static_cast<std::size_t>(s)].insert(kBadLabel);
  }
  return out;
}

Mdp Mdp::induce_chain(const PolicyTable& policy) const {
  if (policy.size() != static_cast<std::size_t>(num_states()))
    throw ModelError("policy table covers " + std::to_string(policy.size()) + " of " +
                     std::to_string(num_states()) + " states");
  Mdp out = *this;
  for (int s = 0; s < num_states(); ++s) {
    int a = policy[static_cast<std::size_t>(s)];
    if (!is_enabled(s, a))
      throw ModelError("policy action " + action_name(a) + " conflicts with restriction at state " +
                       state_name(s));
    out.enabled_[static_cast<std::size_t>(s)] = {a};
  }
  return out;
}

int Mdp::simulate_step(int s, int a, Rng& rng) const {
  if (!is_enabled(s, a))
    throw ModelError("cannot simulate disabled action " + action_name(a) + " at state " +
                     state_name(s));
  const auto& entries = row(s, a);
  double u = next_unit(rng);
  double acc = 0.0;
  for (const Transition& t : entries) {
    acc += t.prob;
    if (u < acc) return t.target;
  }
  return entries.back().target;
}

MdpBuilder::MdpBuilder(int num_states, std::vector<std::string> action_names) {
  if (num_states <= 0) throw ModelError("model needs at least one state");
  if (action_names.empty()) throw ModelError("model needs at least one action");
  m_.action_names_ = std::move(action_names);
  m_.rows_.resize(static_cast<std::size_t>(num_states));
  m_.labels_.resize(static_cast<std::size_t>(num_states));
  m_.state_names_.resize(static_cast<std::size_t>(num_states));
  for (int s = 0; s < num_states; ++s)
    m_.state_names_[static_cast<std::size_t>(s)] = "s" + std::to_string(s);
}

void MdpBuilder::set_state_name(int s, std::string name) {
  m_.check_state(s);
  m_.state_names_[static_cast<std::size_t>(s)] = std::move(name);
}

int MdpBuilder::ensure_stay_action() {
  if (m_.stay_action_ >= 0) return m_.stay_action_;
  if (auto idx = m_.action_index(kStayActionName)) {
    m_.stay_action_ = *idx;
  } else {
    m_.action_names_.emplace_back(kStayActionName);
    m_.stay_action_ = m_.num_actions() - 1;
  }
  return m_.stay_action_;
}

void MdpBuilder::add_transition(int s, int a, int target, double prob) {
  m_.check_state(s);
  m_.check_state(target);
  if (a < 0 || a >= m_.num_actions()) throw ModelError("action index out of range");
  auto& rows = m_.rows_[static_cast<std::size_t>(s)];
  auto it = std::lower_bound(rows.begin(), rows.end(), a,
                             [](const Mdp::ActionRow& r, int key) { return r.action < key; });
  if (it == rows.end() || it->action != a) it = rows.insert(it, Mdp::ActionRow{a, {}});
  it->entries.push_back(Transition{target, prob});
}

void MdpBuilder::add_label(int s, const std::string& tag) {
  m_.check_state(s);
  m_.labels_[static_cast<std::size_t>(s)].insert(tag);
}

void MdpBuilder::set_initial(int s, double prob) {
  m_.check_state(s);
  m_.initial_.emplace_back(s, prob);
}

void MdpBuilder::set_features(int s, std::vector<double> f) {
  m_.check_state(s);
  if (m_.features_.empty()) m_.features_.resize(static_cast<std::size_t>(m_.num_states()));
  m_.features_[static_cast<std::size_t>(s)] = std::move(f);
}

void MdpBuilder::make_absorbing(int s) {
  m_.check_state(s);
  int stay = ensure_stay_action();
  m_.rows_[static_cast<std::size_t>(s)] = {Mdp::ActionRow{stay, {Transition{s, 1.0}}}};
}

Mdp MdpBuilder::build() {
  if (built_) throw ModelError("builder already consumed");
  built_ = true;
  ensure_stay_action();
  // Bad states become absorbing self-loops so the avoid property is a plain
  // reachability complement.
  for (int s = 0; s < m_.num_states(); ++s)
    if (m_.labels_[static_cast<std::size_t>(s)].count(kBadLabel)) make_absorbing(s);
  m_.enabled_.resize(static_cast<std::size_t>(m_.num_states()));
  for (int s = 0; s < m_.num_states(); ++s) {
    auto& en = m_.enabled_[static_cast<std::size_t>(s)];
    en.clear();
    for (const auto& row : m_.rows_[static_cast<std::size_t>(s)])
      if (!row.entries.empty()) en.push_back(row.action);
  }
  return std::move(m_);
}

}  // namespace imt
