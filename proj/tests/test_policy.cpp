#include <doctest.h>

#include "imt/errors.hpp"
#include "imt/policy.hpp"

#include "fixtures.hpp"

using namespace imt;
using namespace imt::test;

TEST_CASE("tabular policies cache and count distinct queries") {
  Mdp t1 = make_t1();
  auto policy = load_tabular(test_data_dir() + "/t1_policy_ab.txt", t1);
  CHECK(policy->query(kS0) == kA);
  CHECK(policy->query_count() == 1);
  CHECK(policy->query(kS0) == kA);
  CHECK(policy->query_count() == 1);
  CHECK(policy->query(kS1) == kB);
  CHECK(policy->query_count() == 2);

  SUBCASE("double-querying every state is a function") {
    auto first = materialize_policy(*policy, t1);
    auto second = materialize_policy(*policy, t1);
    CHECK(first == second);
    CHECK(policy->query_count() == 4);
  }
}

TEST_CASE("tabular parsing failures") {
  Mdp t1 = make_t1();
  SUBCASE("partial maps fail only when queried") {
    auto policy = load_tabular(test_data_dir() + "/t1_policy_partial.txt", t1);
    CHECK(policy->query(kS0) == kA);
    CHECK_THROWS_AS(policy->query(kS1), ModelError);
  }
  SUBCASE("empty file answers nothing") {
    auto policy = load_tabular(test_data_dir() + "/t1_policy_empty.txt", t1);
    CHECK_THROWS_AS(policy->query(kS0), ModelError);
  }
  SUBCASE("duplicate states are a parse error") {
    CHECK_THROWS_WITH_AS(load_tabular(test_data_dir() + "/t1_policy_dup.txt", t1),
                         doctest::Contains("duplicate"), ParseError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_tabular(test_data_dir() + "/does_not_exist.txt", t1), ParseError);
  }
}

TEST_CASE("external adapter speaks the line protocol") {
  auto policy = spawn_external("python3", {test_data_dir() + "/echo_policy.py"});
  for (int s = 0; s < 5; ++s) CHECK(policy->query(s) == 0);
  CHECK(policy->query_count() == 5);
}

TEST_CASE("external adapter failure modes") {
  SUBCASE("process death surfaces the queried state") {
    auto policy = spawn_external("python3", {test_data_dir() + "/dying_policy.py"});
    CHECK_THROWS_WITH_AS(policy->query(17), doctest::Contains("17"), AdapterError);
  }
  SUBCASE("unknown protocol version") {
    CHECK_THROWS_WITH_AS(
        spawn_external("python3", {test_data_dir() + "/bad_handshake_policy.py"}),
        doctest::Contains("protocol"), AdapterError);
  }
  SUBCASE("spawn failure") {
    CHECK_THROWS_AS(spawn_external("/definitely/not/an/executable", {}), AdapterError);
  }
}
