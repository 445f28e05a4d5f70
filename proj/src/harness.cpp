#include "sagin/harness.hpp"

#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

namespace sagin {

namespace {

using nlohmann::json;

constexpr std::uint64_t kStreamEpisode = 0x45504953;
constexpr std::uint64_t kStreamPolicy = 0x504f4c59;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

bool verbose() {
  const char* v = std::getenv("SAGIN_LOG");
  return v != nullptr && std::string(v) != "0" && std::string(v) != "quiet";
}

}  // namespace

EpisodeStats run_episode(const ScenarioConfig& cfg, Policy& policy, std::uint64_t seed,
                         std::ostream* trace) {
  Environment env(cfg);
  env.reset(seed);
  Rng policy_rng = Rng(seed).derive(kStreamPolicy);

  EpisodeStats stats;
  stats.seed = seed;
  while (!env.state().done) {
    const Action a = policy.act(env, policy_rng);
    const StepResult r = env.step(a);
    stats.reward_sum += r.reward;
    ++stats.slots;
    if (trace) {
      json rec;
      rec["t"] = env.state().t - 1;
      rec["reward"] = r.reward;
      rec["phi"] = r.violated ? 1 : 0;
      json completed = json::array();
      for (const auto& [id, score] : r.completed) completed.push_back({id, score});
      rec["completed"] = completed;
      rec["failed"] = r.failed;
      *trace << rec.dump() << "\n";
    }
  }

  double score_sum = 0.0;
  for (const Task& tk : env.state().tasks) {
    TaskRecord rec;
    rec.id = tk.id;
    rec.mode = tk.mode;
    rec.delay_s = tk.effective_delay(cfg);
    rec.quality = tk.terminal() && tk.stage == TaskStage::Done ? tk.achieved_q : 0.0;
    rec.resolved = tk.terminal();
    rec.failed = tk.stage == TaskStage::Failed;
    if (tk.stage == TaskStage::Done) {
      rec.score = sce(tk.achieved_q, tk.q_min, tk.effective_delay(cfg), tk.d_max,
                      sce_weights(cfg));
      ++stats.completed;
      score_sum += rec.score;
    } else if (rec.failed) {
      ++stats.failed;
    }
    if (tk.mode_bound) ++stats.mode_counts[static_cast<int>(tk.mode)];
    stats.tasks.push_back(rec);
  }
  stats.avg_sce = score_sum / cfg.G;
  return stats;
}

EvalSummary run_eval(const ScenarioConfig& cfg, Policy& policy, int episodes,
                     std::uint64_t base_seed, std::ostream* trace) {
  EvalSummary summary;
  double sum = 0.0, sumsq = 0.0, reward = 0.0;
  long completed = 0, resolved_total = 0;
  for (int e = 0; e < episodes; ++e) {
    const std::uint64_t seed = mix_seed(base_seed, kStreamEpisode + e);
    if (trace) *trace << json({{"episode", e}, {"seed", seed}}).dump() << "\n";
    EpisodeStats st = run_episode(cfg, policy, seed, trace);
    sum += st.avg_sce;
    sumsq += st.avg_sce * st.avg_sce;
    reward += st.reward_sum;
    completed += st.completed;
    resolved_total += cfg.G;
    for (int i = 0; i < kNumModes; ++i) summary.mode_counts[i] += st.mode_counts[i];
    summary.episodes.push_back(std::move(st));
  }
  const int n = episodes;
  summary.mean_avg_sce = sum / n;
  summary.mean_reward = reward / n;
  summary.completion_rate = static_cast<double>(completed) / resolved_total;
  if (n > 1) {
    const double var = (sumsq - sum * sum / n) / (n - 1);
    summary.std_avg_sce = std::sqrt(std::max(0.0, var));
  }
  return summary;
}

std::vector<SweepRow> run_sweep(const ScenarioConfig& base, const std::string& key,
                                const std::vector<std::string>& values,
                                const std::vector<std::uint64_t>& seeds, int episodes,
                                const std::string& policy_spec) {
  if (values.empty()) throw ScenarioError("sweep: need at least one value");
  if (seeds.empty()) throw ScenarioError("sweep: need at least one seed");
  std::vector<SweepRow> rows;
  for (const std::string& value : values) {
    ScenarioConfig cfg = base;
    set_key(cfg, key, value);
    auto policy = make_policy(policy_spec, cfg);
    double sum = 0.0, sumsq = 0.0;
    int n = 0;
    for (const std::uint64_t s : seeds) {
      EvalSummary ev = run_eval(cfg, *policy, episodes, s, nullptr);
      for (const EpisodeStats& ep : ev.episodes) {
        sum += ep.avg_sce;
        sumsq += ep.avg_sce * ep.avg_sce;
        ++n;
      }
    }
    SweepRow row;
    row.value = value;
    row.mean_sce = sum / n;
    if (n > 1) row.stddev_sce = std::sqrt(std::max(0.0, (sumsq - sum * sum / n) / (n - 1)));
    rows.push_back(row);
    if (verbose())
      std::cerr << "sweep " << key << " = " << value << ": mean sce " << row.mean_sce << "\n";
  }
  return rows;
}

TrainArtifacts train(const ScenarioConfig& cfg, const TrainOptions& opt) {
  namespace fs = std::filesystem;
  fs::create_directories(opt.out_dir);
  const std::string metrics_path = opt.out_dir + "/metrics.csv";
  const std::string ckpt_path = opt.out_dir + "/checkpoint.bin";
  std::ofstream metrics(metrics_path);
  if (!metrics) throw std::runtime_error("cannot write " + metrics_path);
  metrics << "step,critic_loss,policy_loss,mean_j,mean_sigma,entropy,episodes,mean_ep_reward\n";

  const ActionSpec spec = action_spec(cfg);
  const ActionLayout layout = layout_from_spec(spec);
  DsacAgent agent(observation_dim(cfg), layout, cfg.learner, opt.seed);
  ReplayBuffer buffer(cfg.learner.buffer_capacity);

  Rng root(opt.seed);
  Rng act_rng = root.derive(11);
  Rng sample_rng = root.derive(12);
  Rng update_rng = root.derive(13);
  auto random_policy = make_random_policy();

  Environment env(cfg);
  int episode = 0;
  env.reset(mix_seed(opt.seed, kStreamEpisode + episode));
  std::vector<double> obs = env.observe();
  double episode_reward = 0.0;
  std::deque<double> recent_rewards;

  TrainMetrics last{};
  for (long step = 0; step < opt.steps; ++step) {
    Action action;
    std::vector<double> flat;
    if (step < cfg.learner.warmup_steps) {
      action = random_policy->act(env, act_rng);
      flat = flatten_action(spec, cfg, action);
    } else {
      const SampledAction s = agent.act(obs, true, act_rng);
      action = action_from_sample(spec, cfg, s);
      flat = s.flat;
    }
    const StepResult r = env.step(action);
    std::vector<double> next_obs = env.observe();
    buffer.add({obs, std::move(flat), r.reward, next_obs, r.done});
    obs = std::move(next_obs);
    episode_reward += r.reward;

    if (r.done) {
      recent_rewards.push_back(episode_reward);
      if (recent_rewards.size() > 20) recent_rewards.pop_front();
      ++episode;
      episode_reward = 0.0;
      env.reset(mix_seed(opt.seed, kStreamEpisode + episode));
      obs = env.observe();
    }

    if (step >= cfg.learner.warmup_steps &&
        buffer.size() >= static_cast<std::size_t>(cfg.learner.batch_size) &&
        (step + 1) % cfg.learner.update_every == 0) {
      const auto batch = buffer.sample(cfg.learner.batch_size, sample_rng);
      last = agent.train_step(batch, update_rng);
    }

    if ((step + 1) % opt.log_interval == 0) {
      double mean_ep = 0.0;
      for (const double v : recent_rewards) mean_ep += v;
      if (!recent_rewards.empty()) mean_ep /= static_cast<double>(recent_rewards.size());
      metrics << (step + 1) << ',' << fmt(last.critic_loss) << ',' << fmt(last.policy_loss)
              << ',' << fmt(last.mean_j) << ',' << fmt(last.mean_sigma) << ','
              << fmt(last.entropy) << ',' << episode << ',' << fmt(mean_ep) << "\n";
      if (verbose())
        std::cerr << "step " << (step + 1) << " episodes " << episode << " mean_ep "
                  << mean_ep << "\n";
    }
  }
  metrics.close();
  agent.save(ckpt_path);

  TrainArtifacts out;
  out.checkpoint_path = ckpt_path;
  out.metrics_path = metrics_path;
  out.episodes = episode;
  for (const double v : recent_rewards) out.mean_recent_episode_reward += v;
  if (!recent_rewards.empty()) out.mean_recent_episode_reward /= recent_rewards.size();
  return out;
}

ReplayReport replay_trace(std::istream& trace) {
  ReplayReport report;
  std::string line;
  long lineno = 0;
  while (std::getline(trace, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error("trace line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!rec.contains("reward")) continue;  // episode headers
    ++report.records;
    double expected = 0.0;
    for (const auto& item : rec["completed"]) expected += item[1].get<double>();
    if (rec["phi"].get<int>() != 0) expected -= 1.0;
    if (expected != rec["reward"].get<double>()) ++report.mismatches;
  }
  return report;
}

ScenarioConfig load_scenario_or_default(const std::string& path) {
  if (path.empty()) return default_scenario();
  return load_scenario_file(path);
}

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    seeds.push_back(std::stoull(item));
  }
  return seeds;
}

void write_eval_csvs(const EvalSummary& summary, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  {
    std::ofstream out(out_dir + "/episodes.csv");
    out << "episode,seed,reward,avg_sce,completed,failed,slots\n";
    for (std::size_t e = 0; e < summary.episodes.size(); ++e) {
      const EpisodeStats& st = summary.episodes[e];
      out << e << ',' << st.seed << ',' << fmt(st.reward_sum) << ',' << fmt(st.avg_sce) << ','
          << st.completed << ',' << st.failed << ',' << st.slots << "\n";
    }
  }
  {
    std::ofstream out(out_dir + "/tasks.csv");
    out << "episode,id,mode,D_g,Q_g,sce,failed\n";
    for (std::size_t e = 0; e < summary.episodes.size(); ++e)
      for (const TaskRecord& tk : summary.episodes[e].tasks)
        out << e << ',' << tk.id << ',' << mode_name(tk.mode) << ',' << fmt(tk.delay_s) << ','
            << fmt(tk.quality) << ',' << fmt(tk.score) << ',' << (tk.failed ? 1 : 0) << "\n";
  }
}

int cmd_train(const TrainOptions& opt) {
  try {
    const ScenarioConfig cfg = load_scenario_or_default(opt.scenario_path);
    const TrainArtifacts art = train(cfg, opt);
    std::cout << "trained " << opt.steps << " steps over " << art.episodes
              << " episodes; mean recent episode reward "
              << fmt(art.mean_recent_episode_reward) << "\n"
              << "checkpoint: " << art.checkpoint_path << "\n"
              << "metrics: " << art.metrics_path << "\n";
    return 0;
  } catch (const ScenarioError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

int cmd_eval(const std::string& scenario_path, const std::string& policy_spec, int episodes,
             std::uint64_t seed, const std::string& out_dir, const std::string& trace_path) {
  try {
    const ScenarioConfig cfg = load_scenario_or_default(scenario_path);
    auto policy = make_policy(policy_spec, cfg);
    std::ofstream trace;
    if (!trace_path.empty()) {
      const auto parent = std::filesystem::path(trace_path).parent_path();
      if (!parent.empty()) std::filesystem::create_directories(parent);
      trace.open(trace_path);
      if (!trace) throw std::runtime_error("cannot write trace: " + trace_path);
    }
    const EvalSummary summary =
        run_eval(cfg, *policy, episodes, seed, trace.is_open() ? &trace : nullptr);
    std::cout << "policy " << policy->name() << " over " << episodes << " episodes\n"
              << "mean avg SCE: " << fmt(summary.mean_avg_sce) << " (std "
              << fmt(summary.std_avg_sce) << ")\n"
              << "mean episode reward: " << fmt(summary.mean_reward) << "\n"
              << "completion rate: " << fmt(summary.completion_rate) << "\n";
    std::cout << "mode usage:";
    for (int i = 0; i < kNumModes; ++i)
      std::cout << ' ' << mode_name(static_cast<ModeId>(i)) << '='
                << summary.mode_counts[i];
    std::cout << "\n";
    if (!out_dir.empty()) write_eval_csvs(summary, out_dir);
    return 0;
  } catch (const ScenarioError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

int cmd_sweep(const std::string& scenario_path, const std::string& key,
              const std::vector<std::string>& values, const std::string& seeds_csv,
              int episodes, const std::string& policy_spec, const std::string& out_csv) {
  try {
    const ScenarioConfig cfg = load_scenario_or_default(scenario_path);
    const auto seeds = parse_seed_list(seeds_csv);
    const auto rows = run_sweep(cfg, key, values, seeds, episodes, policy_spec);
    std::ofstream out(out_csv);
    if (!out) throw std::runtime_error("cannot write " + out_csv);
    out << "value,mean_sce,stddev_sce\n";
    for (const SweepRow& row : rows)
      out << row.value << ',' << fmt(row.mean_sce) << ',' << fmt(row.stddev_sce) << "\n";
    std::cout << "wrote " << rows.size() << " rows to " << out_csv << "\n";
    return 0;
  } catch (const ScenarioError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

int cmd_replay(const std::string& trace_path) {
  try {
    std::ifstream in(trace_path);
    if (!in) {
      std::cerr << "config error: cannot open trace " << trace_path << "\n";
      return 2;
    }
    const ReplayReport report = replay_trace(in);
    std::cout << "records: " << report.records << "\nmismatches: " << report.mismatches
              << "\n";
    return report.mismatches == 0 ? 0 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace sagin
