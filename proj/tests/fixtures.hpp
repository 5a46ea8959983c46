#pragma once

#include <string>
#include <unordered_map>

#include "imt/engine.hpp"
#include "imt/mdp.hpp"
#include "imt/policy.hpp"

namespace imt::test {

// The four-state fixture used across the suites:
//   s0 --a--> s1,  s0 --b--> bad
//   s1 --a--> goal,  s1 --b--> 0.5 goal / 0.5 bad
//   bad and goal absorb.
inline constexpr int kS0 = 0;
inline constexpr int kS1 = 1;
inline constexpr int kBad = 2;
inline constexpr int kGoal = 3;
inline constexpr int kA = 0;
inline constexpr int kB = 1;

inline Mdp make_t1() {
  MdpBuilder b(4, {"a", "b", "stay"});
  b.set_state_name(kS0, "s0");
  b.set_state_name(kS1, "s1");
  b.set_state_name(kBad, "bad");
  b.set_state_name(kGoal, "goal");
  b.add_transition(kS0, kA, kS1, 1.0);
  b.add_transition(kS0, kB, kBad, 1.0);
  b.add_transition(kS1, kA, kGoal, 1.0);
  b.add_transition(kS1, kB, kGoal, 0.5);
  b.add_transition(kS1, kB, kBad, 0.5);
  b.add_label(kBad, kBadLabel);
  b.add_label(kGoal, kGoalLabel);
  b.make_absorbing(kGoal);
  b.set_initial(kS0, 1.0);
  for (int s = 0; s < 4; ++s) b.set_features(s, {static_cast<double>(s)});
  return b.build();
}

inline int t1_stay(const Mdp& t1) { return t1.stay_action(); }

/// Total T1 policy: chooses the given actions at s0/s1, stay at sinks.
inline TabularPolicy t1_policy(const Mdp& t1, int action_s0, int action_s1) {
  return TabularPolicy(std::unordered_map<int, int>{{kS0, action_s0},
                                                    {kS1, action_s1},
                                                    {kBad, t1.stay_action()},
                                                    {kGoal, t1.stay_action()}});
}

inline Objective t1_safety(double delta, std::optional<long> horizon = std::nullopt) {
  SafetySpec spec;
  spec.horizon = horizon;
  return Objective::for_safety(spec, delta);
}

inline std::string test_data_dir() { return IMT_TEST_DATA_DIR; }
inline std::string assets_dir() { return IMT_ASSETS_DIR; }
inline std::string test_tmp_dir() { return IMT_TEST_TMP_DIR; }

}  // namespace imt::test
