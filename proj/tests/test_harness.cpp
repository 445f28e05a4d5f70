#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sagin/harness.hpp"

using namespace sagin;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Small, fast scenario for harness plumbing tests.
const char* kTinyScenario =
    "K = 2\n"
    "N = 1\n"
    "M = 2\n"
    "G = 8\n"
    "task_window = 4\n"
    "horizon = 400\n"
    "arrival_rate = 0.2\n"
    "learner.hidden_width = 16\n"
    "learner.hidden_layers = 1\n"
    "learner.batch = 16\n"
    "learner.buffer = 2000\n"
    "learner.warmup = 50\n"
    "learner.update_every = 10\n";

std::string write_tiny(const std::string& name) {
  const std::string path = (fs::temp_directory_path() / name).string();
  std::ofstream out(path);
  out << kTinyScenario;
  return path;
}

}  // namespace

TEST_CASE("run_episode resolves every task and accounts for them") {
  ScenarioConfig cfg = load_scenario(kTinyScenario);
  auto policy = make_greedy_policy();
  const EpisodeStats st = run_episode(cfg, *policy, 5, nullptr);
  CHECK(st.completed + st.failed == cfg.G);
  CHECK(static_cast<int>(st.tasks.size()) == cfg.G);
  int mode_total = 0;
  for (const int c : st.mode_counts) mode_total += c;
  CHECK(mode_total == cfg.G);
}

TEST_CASE("eval with a feasible forced mode completes everything") {
  ScenarioConfig cfg = load_scenario(std::string(kTinyScenario) +
                                     "task.q_min = 10\ntask.d_max = 11\n");
  auto policy = make_fixed_mode_policy(ModeId::M2);
  const EvalSummary s = run_eval(cfg, *policy, 3, 9, nullptr);
  CHECK(s.completion_rate == doctest::Approx(1.0));
  CHECK(s.mode_counts[static_cast<int>(ModeId::M2)] == 3 * cfg.G);
  for (int i = 0; i < kNumModes; ++i)
    if (static_cast<ModeId>(i) != ModeId::M2) CHECK(s.mode_counts[i] == 0);
}

TEST_CASE("forced bitstream mode wins when only it meets the quality floor") {
  // quality floor above every semantic mode but below M1's 38
  ScenarioConfig cfg = load_scenario(std::string(kTinyScenario) + "task.q_min = 35\n");
  auto policy = make_greedy_policy();
  const EvalSummary s = run_eval(cfg, *policy, 2, 11, nullptr);
  CHECK(s.mode_counts[static_cast<int>(ModeId::M1)] == 2 * cfg.G);
  CHECK(s.completion_rate > 0.9);
}

TEST_CASE("greedy beats random on paired seeds") {
  ScenarioConfig cfg = load_scenario(kTinyScenario);
  auto greedy = make_greedy_policy();
  auto random = make_random_policy();
  const EvalSummary g = run_eval(cfg, *greedy, 5, 17, nullptr);
  const EvalSummary r = run_eval(cfg, *random, 5, 17, nullptr);
  CHECK(g.mean_avg_sce > r.mean_avg_sce);
  CHECK(g.mean_reward > r.mean_reward);
}

TEST_CASE("sweep emits the requested values in order with sane stats") {
  ScenarioConfig cfg = load_scenario(std::string(kTinyScenario) + "task.q_min = 10\n");
  const std::vector<std::string> values = {"3", "6", "9"};
  const auto rows = run_sweep(cfg, "task.d_max", values, {1, 2}, 1, "mode:M3_3");
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].value == values[i]);
    CHECK(rows[i].stddev_sce >= 0.0);
  }
  // the delay-slack term makes the score rise with the deadline
  CHECK(rows[0].mean_sce < rows[1].mean_sce);
  CHECK(rows[1].mean_sce < rows[2].mean_sce);
}

TEST_CASE("train writes metrics rows and a loadable checkpoint") {
  const std::string scn = write_tiny("sagin_train_scn.txt");
  const std::string out = (fs::temp_directory_path() / "sagin_train_out").string();
  fs::remove_all(out);
  TrainOptions opt;
  opt.scenario_path = scn;
  opt.out_dir = out;
  opt.steps = 500;
  opt.seed = 3;
  opt.log_interval = 100;
  CHECK(cmd_train(opt) == 0);

  const std::string metrics = slurp(out + "/metrics.csv");
  // header + 500/100 rows
  CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 1 + 5);
  const ScenarioConfig cfg = load_scenario_file(scn);
  auto policy = make_policy(out + "/checkpoint.bin", cfg);
  const EvalSummary s = run_eval(cfg, *policy, 1, 5, nullptr);
  CHECK(s.episodes.size() == 1);
  fs::remove_all(out);
  fs::remove(scn);
}

TEST_CASE("training twice with one seed is byte-identical") {
  const std::string scn = write_tiny("sagin_det_scn.txt");
  const std::string out1 = (fs::temp_directory_path() / "sagin_det1").string();
  const std::string out2 = (fs::temp_directory_path() / "sagin_det2").string();
  fs::remove_all(out1);
  fs::remove_all(out2);
  TrainOptions opt;
  opt.scenario_path = scn;
  opt.steps = 300;
  opt.seed = 11;
  opt.log_interval = 50;
  opt.out_dir = out1;
  REQUIRE(cmd_train(opt) == 0);
  opt.out_dir = out2;
  REQUIRE(cmd_train(opt) == 0);
  CHECK(slurp(out1 + "/metrics.csv") == slurp(out2 + "/metrics.csv"));
  CHECK(slurp(out1 + "/checkpoint.bin") == slurp(out2 + "/checkpoint.bin"));
  fs::remove_all(out1);
  fs::remove_all(out2);
  fs::remove(scn);
}

TEST_CASE("missing scenario file exits with the config code") {
  TrainOptions opt;
  opt.scenario_path = "/nonexistent/scenario.txt";
  opt.out_dir = (fs::temp_directory_path() / "sagin_nope").string();
  CHECK(cmd_train(opt) == 2);
  CHECK(cmd_eval("/nonexistent/scenario.txt", "greedy", 1, 1, "", "") == 2);
  CHECK(cmd_eval("", "not-a-policy", 1, 1, "", "") == 2);
}

TEST_CASE("eval csv outputs are deterministic and schema-stable") {
  const std::string scn = write_tiny("sagin_eval_scn.txt");
  const std::string out1 = (fs::temp_directory_path() / "sagin_eval1").string();
  const std::string out2 = (fs::temp_directory_path() / "sagin_eval2").string();
  fs::remove_all(out1);
  fs::remove_all(out2);
  REQUIRE(cmd_eval(scn, "greedy", 2, 21, out1, "") == 0);
  REQUIRE(cmd_eval(scn, "greedy", 2, 21, out2, "") == 0);
  const std::string eps = slurp(out1 + "/episodes.csv");
  CHECK(eps == slurp(out2 + "/episodes.csv"));
  CHECK(slurp(out1 + "/tasks.csv") == slurp(out2 + "/tasks.csv"));
  CHECK(eps.rfind("episode,seed,reward,avg_sce,completed,failed,slots\n", 0) == 0);
  CHECK(slurp(out1 + "/tasks.csv").rfind("episode,id,mode,D_g,Q_g,sce,failed\n", 0) == 0);
  fs::remove_all(out1);
  fs::remove_all(out2);
  fs::remove(scn);
}

TEST_CASE("replay validates fresh traces and flags tampering") {
  ScenarioConfig cfg = load_scenario(kTinyScenario);
  auto policy = make_greedy_policy();
  std::stringstream trace;
  run_eval(cfg, *policy, 2, 31, &trace);

  {
    std::stringstream copy(trace.str());
    const ReplayReport rep = replay_trace(copy);
    CHECK(rep.records > 0);
    CHECK(rep.mismatches == 0);
  }
  {
    // tamper with exactly one reward
    std::string text = trace.str();
    const auto pos = text.find("\"reward\":");
    REQUIRE(pos != std::string::npos);
    // splice in a different digit right after the key
    std::string tampered = text.substr(0, pos + 9) + "9" + text.substr(pos + 9);
    std::stringstream bad(tampered);
    const ReplayReport rep = replay_trace(bad);
    CHECK(rep.mismatches == 1);
  }
  {
    std::stringstream empty("");
    const ReplayReport rep = replay_trace(empty);
    CHECK(rep.records == 0);
    CHECK(rep.mismatches == 0);
  }
  {
    std::stringstream corrupt("this is not json\n");
    CHECK_THROWS(replay_trace(corrupt));
  }
}

TEST_CASE("cmd_replay end to end") {
  const std::string scn = write_tiny("sagin_replay_scn.txt");
  const std::string trace = (fs::temp_directory_path() / "sagin_replay.jsonl").string();
  REQUIRE(cmd_eval(scn, "mode:M3_3", 1, 41, "", trace) == 0);
  CHECK(cmd_replay(trace) == 0);
  CHECK(cmd_replay("/nonexistent/trace.jsonl") == 2);
  fs::remove(trace);
  fs::remove(scn);
}

TEST_CASE("random policy spreads mode choices uniformly") {
  ScenarioConfig cfg = load_scenario(kTinyScenario);
  Environment env(cfg);
  env.reset(43);
  auto policy = make_random_policy();
  Rng rng(43);
  std::array<int, kNumModes> counts{};
  int total = 0;
  for (int i = 0; i < 10000 / cfg.task_window; ++i) {
    const Action a = policy->act(env, rng);
    for (const ModeId m : a.mode) {
      ++counts[static_cast<int>(m)];
      ++total;
    }
  }
  for (const int c : counts)
    CHECK(std::abs(static_cast<double>(c) / total - 0.2) < 0.02);
}

TEST_CASE("seed list parsing") {
  const auto seeds = parse_seed_list("1,2,30");
  REQUIRE(seeds.size() == 3);
  CHECK(seeds[2] == 30);
  CHECK(parse_seed_list("").empty());
}
