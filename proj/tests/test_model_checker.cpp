#include <doctest.h>

#include "imt/environments.hpp"
#include "imt/errors.hpp"
#include "imt/model_checker.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace imt;
using namespace imt::test;

TEST_CASE("t1 unbounded avoid probabilities") {
  // Frozen from enumerating all four deterministic policies by hand:
  // (a,a) -> avoid(s0)=1, (a,b) -> 0.5, (b,*) -> 0.
  Mdp t1 = make_t1();
  auto vmax = prob_reach_avoid(t1, SafetySpec{}, OptMode::Max);
  CHECK(vmax[kS0] == 1.0);
  CHECK(vmax[kS1] == 1.0);
  CHECK(vmax[kBad] == 0.0);
  CHECK(vmax[kGoal] == 1.0);
  auto vmin = prob_reach_avoid(t1, SafetySpec{}, OptMode::Min);
  CHECK(vmin[kS0] == 0.0);
  CHECK(vmin[kS1] == doctest::Approx(0.5));
  CHECK(vmin[kBad] == 0.0);
  CHECK(vmin[kGoal] == 1.0);
}

TEST_CASE("t1 bounded avoid probabilities") {
  Mdp t1 = make_t1();
  SafetySpec one_step;
  one_step.horizon = 1;
  auto vmin = prob_reach_avoid(t1, one_step, OptMode::Min);
  CHECK(vmin[kS0] == 0.0);
  CHECK(vmin[kS1] == doctest::Approx(0.5));
  CHECK(vmin[kBad] == 0.0);
  CHECK(vmin[kGoal] == 1.0);
}

TEST_CASE("empty bad set gives all ones") {
  Mdp m = random_mdp(11, 6, 2, 2, 0.0);
  for (OptMode mode : {OptMode::Max, OptMode::Min}) {
    auto v = prob_reach_avoid(m, SafetySpec{}, mode);
    for (int s = 0; s < m.num_states(); ++s) CHECK(v[s] == 1.0);
  }
}

TEST_CASE("qualitative sets on t1") {
  Mdp t1 = make_t1();
  auto q = qualitative_sets(t1, SafetySpec{});
  CHECK(q.prob1_max == std::vector<bool>{true, true, false, true});
  CHECK(q.prob0_max == std::vector<bool>{false, false, true, false});
  CHECK(q.prob1_min == std::vector<bool>{false, false, false, true});
  CHECK(q.prob0_min == std::vector<bool>{true, false, true, false});
}

TEST_CASE("qualitative sets on degenerate models") {
  SUBCASE("isolated self-loops are safe everywhere") {
    MdpBuilder b(3, {"stay"});
    for (int s = 0; s < 3; ++s) b.make_absorbing(s);
    Mdp m = b.build();
    auto q = qualitative_sets(m, SafetySpec{});
    for (int s = 0; s < 3; ++s) {
      CHECK(q.prob1_max[static_cast<std::size_t>(s)]);
      CHECK(q.prob1_min[static_cast<std::size_t>(s)]);
    }
  }
  SUBCASE("fully bad model is prob0 everywhere") {
    MdpBuilder b(3, {"stay"});
    for (int s = 0; s < 3; ++s) b.add_label(s, kBadLabel);
    Mdp m = b.build();
    auto q = qualitative_sets(m, SafetySpec{});
    for (int s = 0; s < 3; ++s) {
      CHECK(q.prob0_max[static_cast<std::size_t>(s)]);
      CHECK(q.prob0_min[static_cast<std::size_t>(s)]);
    }
  }
}

TEST_CASE("optimistic action values on t1") {
  Mdp t1 = make_t1();
  auto q = q_optimistic(t1, SafetySpec{});
  CHECK(q.q[kS0][0] == 1.0);                      // action a -> s1
  CHECK(q.q[kS0][1] == 0.0);                      // action b -> bad
  CHECK(q.q[kS1][0] == 1.0);                      // action a -> goal
  CHECK(q.q[kS1][1] == doctest::Approx(0.5));     // action b
  CHECK(q.q[kGoal].size() == 1);                  // only stay
  CHECK(q.q[kGoal][0] == 1.0);

  SUBCASE("restriction filters the enabled entries") {
    auto qr = q_optimistic(t1.restrict({{kS0, kA}}), SafetySpec{});
    CHECK(qr.q[kS0].size() == 1);
    CHECK(qr.q[kS0][0] == 1.0);
  }
}

TEST_CASE("expected reward backward induction on t1") {
  Mdp t1 = make_t1();
  RewardSpec spec;
  spec.reward = {0.0, 0.0, 0.0, 1.0};
  spec.horizon = 2;
  auto vmax = expected_reward(t1, spec, OptMode::Max);
  CHECK(vmax[kS0] == doctest::Approx(1.0));
  CHECK(vmax[kS1] == doctest::Approx(2.0));
  CHECK(vmax[kGoal] == doctest::Approx(3.0));
  CHECK(vmax[kBad] == doctest::Approx(0.0));
  auto vmin = expected_reward(t1, spec, OptMode::Min);
  CHECK(vmin[kS0] == doctest::Approx(0.0));
  CHECK(vmin[kS1] == doctest::Approx(1.0));

  SUBCASE("zero reward stays zero") {
    RewardSpec zero;
    zero.reward.assign(4, 0.0);
    zero.horizon = 5;
    auto v = expected_reward(t1, zero, OptMode::Max);
    for (int s = 0; s < 4; ++s) CHECK(v[s] == 0.0);
  }
  SUBCASE("unbounded undiscounted reward needs an explicit opt-in") {
    RewardSpec unbounded;
    unbounded.reward = spec.reward;
    CHECK_THROWS_AS(expected_reward(t1, unbounded, OptMode::Max), ConfigError);
  }
}

TEST_CASE("unbounded values match policy enumeration on random models") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Mdp m = random_mdp(seed, 6, 3, 2, 0.25);
    auto bounds = enumerate_avoid_bounds(m);
    auto vmax = prob_reach_avoid(m, SafetySpec{}, OptMode::Max);
    auto vmin = prob_reach_avoid(m, SafetySpec{}, OptMode::Min);
    for (int s = 0; s < m.num_states(); ++s) {
      CHECK(vmax[s] == doctest::Approx(bounds.best[static_cast<std::size_t>(s)]).epsilon(1e-6));
      CHECK(vmin[s] == doctest::Approx(bounds.worst[static_cast<std::size_t>(s)]).epsilon(1e-6));
    }
  }
}

TEST_CASE("bounded values match the tree recursion oracle") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Mdp m = random_mdp(seed, 5, 2, 2, 0.2);
    for (long n : {0L, 1L, 2L, 4L}) {
      SafetySpec spec;
      spec.horizon = n;
      auto vmax = prob_reach_avoid(m, spec, OptMode::Max);
      auto vmin = prob_reach_avoid(m, spec, OptMode::Min);
      for (int s = 0; s < m.num_states(); ++s) {
        CHECK(vmax[s] == doctest::Approx(tree_avoid(m, s, n, true)).epsilon(1e-9));
        CHECK(vmin[s] == doctest::Approx(tree_avoid(m, s, n, false)).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("mode ordering, consistency and qualitative agreement") {
  for (std::uint64_t seed = 30; seed <= 40; ++seed) {
    Mdp m = random_mdp(seed, 8, 3, 3, 0.25);
    auto vmax = prob_reach_avoid(m, SafetySpec{}, OptMode::Max);
    auto vmin = prob_reach_avoid(m, SafetySpec{}, OptMode::Min);
    auto q = q_optimistic(m, SafetySpec{});
    auto qual = qualitative_sets(m, SafetySpec{});
    for (int s = 0; s < m.num_states(); ++s) {
      const auto si = static_cast<std::size_t>(s);
      CHECK(vmax[s] >= vmin[s] - 1e-9);
      if (qual.prob1_max[si]) CHECK(vmax[s] == 1.0);
      if (qual.prob0_max[si]) CHECK(vmax[s] == 0.0);
      if (qual.prob1_min[si]) CHECK(vmin[s] == 1.0);
      if (qual.prob0_min[si]) CHECK(vmin[s] == 0.0);
      if (!m.has_label(s, kBadLabel)) {
        double best = *std::max_element(q.q[si].begin(), q.q[si].end());
        CHECK(best == doctest::Approx(vmax[s]).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("restriction monotonicity of the value bounds") {
  for (std::uint64_t seed = 50; seed <= 55; ++seed) {
    Mdp m = random_mdp(seed, 7, 3, 2, 0.25);
    Rng rng(seed);
    RestrictionSet gamma;
    for (int s = 0; s < m.num_states(); ++s) {
      auto en = m.enabled(s);
      if (en.size() > 1 && next_unit(rng) < 0.5)
        gamma.emplace_back(s, en[next_index(rng, en.size())]);
    }
    Mdp r = m.restrict(gamma);
    auto vmax = prob_reach_avoid(m, SafetySpec{}, OptMode::Max);
    auto vmax_r = prob_reach_avoid(r, SafetySpec{}, OptMode::Max);
    auto vmin = prob_reach_avoid(m, SafetySpec{}, OptMode::Min);
    auto vmin_r = prob_reach_avoid(r, SafetySpec{}, OptMode::Min);
    for (int s = 0; s < m.num_states(); ++s) {
      CHECK(vmax_r[s] <= vmax[s] + 1e-9);
      CHECK(vmin_r[s] >= vmin[s] - 1e-9);
    }
  }
}
