#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sagin/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"SAGIN image-delivery simulator: satellite-to-UAV-to-user "
               "downlink with hybrid bit/semantic transmission modes and a "
               "distributional soft actor-critic optimizer"};
  app.require_subcommand(1);

  // train
  std::string scenario, out_dir = "out", policy = "greedy", trace, out_csv = "sweep.csv";
  std::string key, seeds_csv = "1,2,3,4,5";
  std::vector<std::string> values;
  long steps = 50000;
  int episodes = 10;
  std::uint64_t seed = 1;
  int log_interval = 500;

  auto* train = app.add_subcommand("train", "train a DSAC agent on a scenario");
  train->add_option("--scenario", scenario, "scenario file (defaults when omitted)");
  train->add_option("--out", out_dir, "output directory for checkpoint.bin and metrics.csv");
  train->add_option("--steps", steps, "environment steps");
  train->add_option("--seed", seed, "master seed");
  train->add_option("--log-interval", log_interval, "steps between metrics rows");

  auto* eval = app.add_subcommand("eval", "evaluate a policy over seeded episodes");
  eval->add_option("--scenario", scenario, "scenario file (defaults when omitted)");
  eval->add_option("--policy", policy, "random | greedy | mode:<M1|M2|M3_1|M3_2|M3_3> | checkpoint path");
  eval->add_option("--episodes", episodes, "episode count");
  eval->add_option("--seed", seed, "base seed");
  eval->add_option("--out", out_dir, "directory for episodes.csv and tasks.csv")->default_val("");
  eval->add_option("--trace", trace, "write a JSON-lines slot trace here");

  auto* sweep = app.add_subcommand("sweep", "sweep one scenario key and record avg SCE");
  sweep->add_option("--scenario", scenario, "scenario file (defaults when omitted)");
  sweep->add_option("--key", key, "scenario key to sweep (e.g. task.d_max, P_S)")->required();
  sweep->add_option("--values", values, "values for the key, in output order")->required();
  sweep->add_option("--seeds", seeds_csv, "comma-separated evaluation seeds");
  sweep->add_option("--episodes", episodes, "episodes per (value, seed)")->default_val(1);
  sweep->add_option("--policy", policy, "policy spec as in eval");
  sweep->add_option("--out", out_csv, "output CSV path");

  auto* replay = app.add_subcommand("replay", "validate a slot trace's rewards");
  replay->add_option("--trace", trace, "JSON-lines trace file")->required();

  CLI11_PARSE(app, argc, argv);

  if (train->parsed()) {
    sagin::TrainOptions opt;
    opt.scenario_path = scenario;
    opt.out_dir = out_dir;
    opt.steps = steps;
    opt.seed = seed;
    opt.log_interval = log_interval;
    return sagin::cmd_train(opt);
  }
  if (eval->parsed())
    return sagin::cmd_eval(scenario, policy, episodes, seed, out_dir, trace);
  if (sweep->parsed())
    return sagin::cmd_sweep(scenario, key, values, seeds_csv, episodes, policy, out_csv);
  if (replay->parsed()) return sagin::cmd_replay(trace);
  return 2;
}
