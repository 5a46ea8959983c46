#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "imt/environments.hpp"
#include "imt/errors.hpp"
#include "imt/reporting.hpp"

#include "fixtures.hpp"

using namespace imt;
using namespace imt::test;

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::path(test_tmp_dir()) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunReport t1_report() {
  Mdp t1 = make_t1();
  auto policy = t1_policy(t1, kA, kA);
  EngineConfig cfg;
  cfg.samples_per_iteration = 1;
  cfg.epsilon = 0.001;
  return run_imt(t1, policy, t1_safety(0.9), cfg);
}

}  // namespace

TEST_CASE("iteration csv shape and round trip") {
  RunReport report = t1_report();
  fs::path dir = fresh_dir("csv");
  std::string path = (dir / "iterations.csv").string();
  emit_iteration_csv(report, false, path);

  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "num_queries,proven_failure,undecided_states,proven_good,pessimistic_avg,optimistic_avg");

  std::size_t rows = 0;
  std::string line;
  std::vector<double> pes, opt;
  while (std::getline(in, line)) {
    ++rows;
    std::istringstream is(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(is, field, ',')) fields.push_back(field);
    REQUIRE(fields.size() == 6);
    pes.push_back(std::stod(fields[4]));
    opt.push_back(std::stod(fields[5]));
  }
  REQUIRE(rows == report.iterations.size());
  // Parsing the emitted file reproduces the series exactly.
  for (std::size_t i = 0; i < rows; ++i) {
    CHECK(pes[i] == report.iterations[i].mean_pessimistic);
    CHECK(opt[i] == report.iterations[i].mean_optimistic);
  }
  // Converged runs close the gap in the last row.
  CHECK(opt.back() - pes.back() < 0.001);
}

TEST_CASE("csv emission is byte deterministic") {
  RunReport report = t1_report();
  fs::path dir = fresh_dir("csv_det");
  emit_iteration_csv(report, false, (dir / "a.csv").string());
  emit_iteration_csv(report, false, (dir / "b.csv").string());
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
}

TEST_CASE("full precision decimal formatting round trips") {
  for (double v : {0.1, 1.0 / 3.0, 5e-324, 1.0, 0.0, 123456.789012345678}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("heatmaps") {
  GridLayout layout = GridLayout::load(assets_dir() + "/layouts/slippery7.txt");
  BuiltModel built = build_slippery_gridworld(layout);
  fs::path dir = fresh_dir("heatmap");

  SUBCASE("all-undetermined renders uniform blue") {
    VerdictSets verdicts(built.mdp.num_states());
    render_heatmap(verdicts, built.render, (dir / "undet").string());
    for (int layer = 0; layer < 4; ++layer) {
      std::string bytes = slurp(dir / ("undet_o" + std::to_string(layer) + ".pgm"));
      CHECK(bytes.rfind("P6\n9 9\n255\n", 0) == 0);
      std::string pixels = bytes.substr(11);
      REQUIRE(pixels.size() == 9u * 9u * 3u);
      for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 9; ++x) {
          const char* rgb = pixels.data() + (y * 9 + x) * 3;
          if (layout.at(x, y) == CellKind::Wall) {
            CHECK(rgb[2] == 0);
          } else {
            CHECK(static_cast<unsigned char>(rgb[2]) == 255);  // blue
            CHECK(rgb[0] == 0);
          }
        }
    }
  }
  SUBCASE("all-safe renders uniform green in non-wall cells") {
    VerdictSets verdicts(built.mdp.num_states());
    for (auto& v : verdicts.verdict) v = Verdict::Safe;
    render_heatmap(verdicts, built.render, (dir / "safe").string());
    std::string bytes = slurp(dir / "safe_o0.pgm");
    std::string pixels = bytes.substr(11);
    for (int y = 0; y < 9; ++y)
      for (int x = 0; x < 9; ++x) {
        const char* rgb = pixels.data() + (y * 9 + x) * 3;
        unsigned char green = static_cast<unsigned char>(rgb[1]);
        CHECK(green == (layout.at(x, y) == CellKind::Wall ? 0 : 255));
      }
  }
  SUBCASE("identical inputs give identical bytes") {
    VerdictSets verdicts(built.mdp.num_states());
    render_heatmap(verdicts, built.render, (dir / "x").string());
    render_heatmap(verdicts, built.render, (dir / "y").string());
    CHECK(slurp(dir / "x_o1.pgm") == slurp(dir / "y_o1.pgm"));
  }
  SUBCASE("models without grid metadata are rejected") {
    VerdictSets verdicts(4);
    GridRenderInfo none;
    CHECK_THROWS_AS(render_heatmap(verdicts, none, (dir / "no").string()), ModelError);
  }
}

TEST_CASE("run_from_config drives a full imt run") {
  fs::path dir = fresh_dir("run_imt");
  RunConfig cfg;
  cfg.mode = "imt";
  cfg.model_spec = test_data_dir() + "/t1.mdp";
  cfg.policy_spec = test_data_dir() + "/t1_policy_ab.txt";
  cfg.delta = 0.9;
  cfg.engine.epsilon = 0.001;
  cfg.engine.samples_per_iteration = 1;
  cfg.out_dir = dir.string();
  CHECK(run_from_config(cfg) == 0);
  CHECK(fs::exists(dir / "iterations.csv"));
  CHECK(fs::exists(dir / "final_verdicts.csv"));
  CHECK(fs::exists(dir / "estimates.csv"));
  CHECK(fs::exists(dir / "report.txt"));

  // Policy (a, b) leaves the chain through s1's coin flip: s1 fails at 0.9.
  std::string verdicts = slurp(dir / "final_verdicts.csv");
  CHECK(verdicts.find("s1,failure,proven") != std::string::npos);

  // The last iterations.csv row reports no undecided states.
  std::ifstream in(dir / "iterations.csv");
  std::string line, last;
  std::getline(in, line);  // header
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  std::istringstream is(last);
  std::string field;
  std::getline(is, field, ',');  // num_queries
  std::getline(is, field, ',');  // proven_failure
  std::getline(is, field, ',');  // undecided_states
  CHECK(field == "0");
}

TEST_CASE("run_from_config rt with zero budget writes an empty results file") {
  fs::path dir = fresh_dir("run_rt");
  RunConfig cfg;
  cfg.mode = "rt";
  cfg.model_spec = test_data_dir() + "/t1.mdp";
  cfg.policy_spec = test_data_dir() + "/t1_policy_ab.txt";
  cfg.rt_budget = 0;
  cfg.episode_len = 4;
  cfg.out_dir = dir.string();
  CHECK(run_from_config(cfg) == 0);
  std::string csv = slurp(dir / "rt_results.csv");
  CHECK(csv == "start_state,name,violation,steps\n");
}

TEST_CASE("missing inputs produce no partial artifacts") {
  fs::path dir = fresh_dir("run_missing");
  fs::remove_all(dir);  // run_from_config would create it
  RunConfig cfg;
  cfg.mode = "imt";
  cfg.model_spec = test_data_dir() + "/t1.mdp";
  cfg.policy_spec = test_data_dir() + "/never_written.txt";
  cfg.out_dir = dir.string();
  CHECK_THROWS_AS(run_from_config(cfg), ParseError);
  CHECK_FALSE(fs::exists(dir));
}
