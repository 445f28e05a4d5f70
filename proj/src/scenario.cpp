#include "sagin/scenario.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "sagin/modes.hpp"

namespace sagin {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_num(const std::string& key, const std::string& raw) {
  char* end = nullptr;
  const double v = std::strtod(raw.c_str(), &end);
  if (end == raw.c_str() || *end != '\0' || !std::isfinite(v))
    throw ScenarioError("bad numeric value for '" + key + "': " + raw);
  return v;
}

long parse_int(const std::string& key, const std::string& raw) {
  const double v = parse_num(key, raw);
  if (v != std::floor(v))
    throw ScenarioError("expected integer for '" + key + "': " + raw);
  return static_cast<long>(v);
}

bool parse_bool(const std::string& key, const std::string& raw) {
  if (raw == "1" || raw == "true" || raw == "on") return true;
  if (raw == "0" || raw == "false" || raw == "off") return false;
  throw ScenarioError("expected boolean (0/1) for '" + key + "': " + raw);
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }

int mode_index_checked(const std::string& name) {
  return static_cast<int>(mode_from_name(name));
}

using Setter = std::function<void(ScenarioConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& key_table() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto num = [&t](const std::string& key, double ScenarioConfig::* field) {
      t[key] = [key, field](ScenarioConfig& c, const std::string&, const std::string& raw) {
        c.*field = parse_num(key, raw);
      };
    };
    auto integer = [&t](const std::string& key, int ScenarioConfig::* field) {
      t[key] = [key, field](ScenarioConfig& c, const std::string&, const std::string& raw) {
        c.*field = static_cast<int>(parse_int(key, raw));
      };
    };

    integer("K", &ScenarioConfig::K);
    integer("N", &ScenarioConfig::N);
    integer("M", &ScenarioConfig::M);
    integer("G", &ScenarioConfig::G);
    integer("horizon", &ScenarioConfig::horizon);
    integer("task_window", &ScenarioConfig::task_window);

    num("d_E", &ScenarioConfig::d_E);
    num("d_k", &ScenarioConfig::d_k);
    num("v_k", &ScenarioConfig::v_k);
    num("pass_gap_mult", &ScenarioConfig::pass_gap_mult);
    t["tau_deg"] = [](ScenarioConfig& c, const std::string& k, const std::string& raw) {
      c.tau_min_elev = parse_num(k, raw) * kPi / 180.0;
    };

    t["sigma_gain_db"] = [](ScenarioConfig& c, const std::string& k, const std::string& raw) {
      c.sigma_gain = db_to_linear(parse_num(k, raw));
    };
    t["eta_max_db"] = [](ScenarioConfig& c, const std::string& k, const std::string& raw) {
      c.eta_max = db_to_linear(parse_num(k, raw));
    };
    t["noise_dbm"] = [](ScenarioConfig& c, const std::string& k, const std::string& raw) {
      c.noise_W = dbm_to_watts(parse_num(k, raw));
    };
    num("f_c", &ScenarioConfig::f_c);
    num("f_I", &ScenarioConfig::f_I);
    num("P_S", &ScenarioConfig::P_S);
    num("P_U", &ScenarioConfig::P_U);
    num("B_su", &ScenarioConfig::B_su);
    num("B_isl", &ScenarioConfig::B_isl);
    num("B_ug", &ScenarioConfig::B_ug);
    num("mu", &ScenarioConfig::mu);
    num("kappa_L", &ScenarioConfig::kappa_L);
    num("kappa_N", &ScenarioConfig::kappa_N);
    num("doppler_hz", &ScenarioConfig::doppler_hz);

    num("v_max", &ScenarioConfig::v_max);
    num("z_min", &ScenarioConfig::z_min);
    num("z_max", &ScenarioConfig::z_max);
    num("area_side", &ScenarioConfig::area_side);
    num("area_spacing", &ScenarioConfig::area_spacing);
    num("uav_start_alt", &ScenarioConfig::uav_start_alt);
    num("isl_d_min", &ScenarioConfig::isl_d_min);
    num("isl_d_max", &ScenarioConfig::isl_d_max);

    num("slot_dt", &ScenarioConfig::slot_dt);
    num("arrival_rate", &ScenarioConfig::arrival_rate);
    num("image_bits", &ScenarioConfig::image_bits);

    num("xi_q", &ScenarioConfig::xi_q);
    num("xi_d", &ScenarioConfig::xi_d);
    num("q_lo", &ScenarioConfig::q_lo);
    num("q_hi", &ScenarioConfig::q_hi);
    num("d_scale", &ScenarioConfig::d_scale);
    t["sce.metric"] = [](ScenarioConfig& c, const std::string&, const std::string& raw) {
      if (raw == "psnr") c.metric = QualityMetric::Psnr;
      else if (raw == "msssim") c.metric = QualityMetric::Msssim;
      else throw ScenarioError("sce.metric must be 'psnr' or 'msssim', got: " + raw);
    };

    t["seed"] = [](ScenarioConfig& c, const std::string& k, const std::string& raw) {
      c.seed = static_cast<std::uint64_t>(parse_int(k, raw));
    };

    // task constraint knobs; task.d_max / task.q_min pin both bounds
    t["task.d_max_lo"] = [](ScenarioConfig& c, const std::string& k, const std::string& raw) {
      c.task.d_max_lo = parse_num(k, raw);
    };
    t["task.d_max_hi"] = [](ScenarioConfig& c, const std::string& k, const std::string& raw) {
      c.task.d_max_hi = parse_num(k, raw);
    };
    t["task.d_max"] = [](ScenarioConfig& c, const std::string& k, const std::string& raw) {
      c.task.d_max_lo = c.task.d_max_hi = parse_num(k, raw);
    };
    t["task.q_min_lo"] = [](ScenarioConfig& c, const std::string& k, const std::string& raw) {
      c.task.q_min_lo = parse_num(k, raw);
    };
    t["task.q_min_hi"] = [](ScenarioConfig& c, const std::string& k, const std::string& raw) {
      c.task.q_min_hi = parse_num(k, raw);
    };
    t["task.q_min"] = [](ScenarioConfig& c, const std::string& k, const std::string& raw) {
      c.task.q_min_lo = c.task.q_min_hi = parse_num(k, raw);
    };
    t["task.encode_split"] = [](ScenarioConfig& c, const std::string& k, const std::string& raw) {
      c.task.encode_split = parse_num(k, raw);
    };
    t["task.exclude_source_queue_delay"] = [](ScenarioConfig& c, const std::string& k,
                                              const std::string& raw) {
      c.task.exclude_source_queue_delay = parse_bool(k, raw);
    };

    t["mode.jpeg2000_ratio"] = [](ScenarioConfig& c, const std::string& k, const std::string& raw) {
      c.modes.jpeg2000_ratio = parse_num(k, raw);
    };
    t["mode.text_bits"] = [](ScenarioConfig& c, const std::string& k, const std::string& raw) {
      c.modes.text_bits = parse_num(k, raw);
    };
    t["mode.codebook_V"] = [](ScenarioConfig& c, const std::string& k, const std::string& raw) {
      c.modes.codebook_size = static_cast<int>(parse_int(k, raw));
    };
    for (const std::string m : {"M1", "M2", "M3_1", "M3_2", "M3_3"}) {
      const int idx = mode_index_checked(m);
      t["mode." + m + ".psnr"] = [idx](ScenarioConfig& c, const std::string& k,
                                       const std::string& raw) {
        c.modes.quality_psnr[idx] = parse_num(k, raw);
      };
      t["mode." + m + ".msssim"] = [idx](ScenarioConfig& c, const std::string& k,
                                         const std::string& raw) {
        c.modes.quality_msssim[idx] = parse_num(k, raw);
      };
      t["mode." + m + ".compute_delay"] = [idx](ScenarioConfig& c, const std::string& k,
                                                const std::string& raw) {
        c.modes.compute_delay_s[idx] = parse_num(k, raw);
      };
      if (m.rfind("M3", 0) == 0) {
        t["mode." + m + ".h"] = [idx](ScenarioConfig& c, const std::string& k,
                                      const std::string& raw) {
          c.modes.latent_h[idx] = static_cast<int>(parse_int(k, raw));
        };
        t["mode." + m + ".w"] = [idx](ScenarioConfig& c, const std::string& k,
                                      const std::string& raw) {
          c.modes.latent_w[idx] = static_cast<int>(parse_int(k, raw));
        };
      }
    }

    t["learner.discount"] = [](ScenarioConfig& c, const std::string& k, const std::string& raw) {
      c.learner.discount = parse_num(k, raw);
    };
    t["learner.temperature"] = [](ScenarioConfig& c, const std::string& k, const std::string& raw) {
      c.learner.temperature = parse_num(k, raw);
    };
    t["learner.clip"] = [](ScenarioConfig& c, const std::string& k, const std::string& raw) {
      c.learner.clip_bound = parse_num(k, raw);
    };
    t["learner.std_floor"] = [](ScenarioConfig& c, const std::string& k, const std::string& raw) {
      c.learner.std_floor = parse_num(k, raw);
    };
    t["learner.buffer"] = [](ScenarioConfig& c, const std::string& k, const std::string& raw) {
      c.learner.buffer_capacity = static_cast<std::size_t>(parse_int(k, raw));
    };
    t["learner.batch"] = [](ScenarioConfig& c, const std::string& k, const std::string& raw) {
      c.learner.batch_size = static_cast<int>(parse_int(k, raw));
    };
    t["learner.critic_lr"] = [](ScenarioConfig& c, const std::string& k, const std::string& raw) {
      c.learner.critic_lr = parse_num(k, raw);
    };
    t["learner.actor_lr"] = [](ScenarioConfig& c, const std::string& k, const std::string& raw) {
      c.learner.actor_lr = parse_num(k, raw);
    };
    t["learner.polyak"] = [](ScenarioConfig& c, const std::string& k, const std::string& raw) {
      c.learner.polyak = parse_num(k, raw);
    };
    t["learner.hidden_width"] = [](ScenarioConfig& c, const std::string& k, const std::string& raw) {
      c.learner.hidden_width = static_cast<int>(parse_int(k, raw));
    };
    t["learner.hidden_layers"] = [](ScenarioConfig& c, const std::string& k, const std::string& raw) {
      c.learner.hidden_layers = static_cast<int>(parse_int(k, raw));
    };
    t["learner.twin_critics"] = [](ScenarioConfig& c, const std::string& k, const std::string& raw) {
      c.learner.twin_critics = parse_bool(k, raw);
    };
    t["learner.update_every"] = [](ScenarioConfig& c, const std::string& k, const std::string& raw) {
      c.learner.update_every = static_cast<int>(parse_int(k, raw));
    };
    t["learner.warmup"] = [](ScenarioConfig& c, const std::string& k, const std::string& raw) {
      c.learner.warmup_steps = static_cast<int>(parse_int(k, raw));
    };
    return t;
  }();
  return table;
}

void apply_key(ScenarioConfig& cfg, const std::string& key, const std::string& value) {
  const auto& table = key_table();
  const auto it = table.find(key);
  if (it == table.end()) throw ScenarioError("unknown key '" + key + "'");
  it->second(cfg, key, value);
}

// Bounds that only make sense per metric; applied when the user switched the
// metric without overriding them explicitly.
void apply_metric_defaults(ScenarioConfig& cfg, const std::set<std::string>& seen) {
  if (cfg.metric != QualityMetric::Msssim) return;
  if (!seen.count("q_lo")) cfg.q_lo = 0.5;
  if (!seen.count("q_hi")) cfg.q_hi = 1.0;
  if (!seen.count("task.q_min_lo") && !seen.count("task.q_min")) cfg.task.q_min_lo = 0.5;
  if (!seen.count("task.q_min_hi") && !seen.count("task.q_min")) cfg.task.q_min_hi = 0.9;
}

}  // namespace

const char* mode_name(ModeId id) {
  switch (id) {
    case ModeId::M1: return "M1";
    case ModeId::M2: return "M2";
    case ModeId::M3_1: return "M3_1";
    case ModeId::M3_2: return "M3_2";
    case ModeId::M3_3: return "M3_3";
  }
  return "?";
}

ModeId mode_from_name(const std::string& name) {
  for (int i = 0; i < kNumModes; ++i)
    if (name == mode_name(static_cast<ModeId>(i))) return static_cast<ModeId>(i);
  throw ScenarioError("unknown mode '" + name + "'");
}

ScenarioConfig default_scenario() {
  ScenarioConfig cfg;
  cfg.tau_min_elev = 40.0 * kPi / 180.0;
  return cfg;
}

std::vector<std::string> validate(const ScenarioConfig& cfg) {
  std::vector<std::string> v;
  auto require = [&v](bool ok, const std::string& msg) {
    if (!ok) v.push_back(msg);
  };

  require(cfg.K >= 1, "K must be >= 1");
  require(cfg.N >= 1, "N must be >= 1");
  require(cfg.M >= 1, "M must be >= 1");
  require(cfg.G >= 1, "G must be >= 1");
  require(cfg.horizon >= 1, "horizon must be >= 1");
  require(cfg.task_window >= 1, "task_window must be >= 1");

  require(cfg.d_E > 0 && cfg.d_k > 0 && cfg.v_k > 0, "d_E, d_k, v_k must be positive");
  require(cfg.tau_min_elev > 0 && cfg.tau_min_elev < kPi / 2,
          "tau_min_elev must lie in (0, pi/2)");
  require(cfg.pass_gap_mult >= 0, "pass_gap_mult must be >= 0");

  require(cfg.sigma_gain > 0 && cfg.eta_max > 0, "antenna gains must be positive");
  require(cfg.f_c > 0 && cfg.f_I > 0 && cfg.v_c > 0, "frequencies and v_c must be positive");
  require(cfg.zeta > 0 && cfg.chi > 0, "zeta and chi must be positive");
  require(cfg.P_S > 0 && cfg.P_U > 0, "transmit powers must be positive");
  require(cfg.B_su > 0 && cfg.B_isl > 0 && cfg.B_ug > 0, "bandwidths must be positive");
  require(cfg.noise_W > 0, "noise_W must be positive");
  require(cfg.mu >= 0, "mu must be >= 0");
  require(cfg.kappa_L > 0 && cfg.kappa_N > 0, "path-loss exponents must be positive");
  require(cfg.doppler_hz >= 0, "doppler_hz must be >= 0");

  require(cfg.v_max > 0, "v_max must be positive");
  require(cfg.z_min < cfg.z_max, "z_min must be below z_max");
  require(cfg.uav_start_alt >= cfg.z_min && cfg.uav_start_alt <= cfg.z_max,
          "uav_start_alt must lie within [z_min, z_max]");
  require(cfg.area_side > 0, "area_side must be positive");
  require(cfg.area_spacing >= cfg.area_side, "area_spacing must keep areas disjoint");
  require(cfg.isl_d_min > 0 && cfg.isl_d_min <= cfg.isl_d_max,
          "ISL distance bounds must satisfy 0 < isl_d_min <= isl_d_max");

  require(cfg.slot_dt > 0, "slot_dt must be positive");
  require(cfg.arrival_rate >= 0, "arrival_rate must be >= 0");
  require(cfg.image_bits > 0, "image_bits must be positive");

  require(cfg.xi_q > 0 && cfg.xi_q < 1 && cfg.xi_d > 0 && cfg.xi_d < 1,
          "xi_q and xi_d must lie in (0, 1)");
  require(std::abs(cfg.xi_q + cfg.xi_d - 1.0) <= 1e-9, "xi_q + xi_d must equal 1");
  require(cfg.q_lo < cfg.q_hi, "q_lo must be below q_hi");
  require(cfg.d_scale > 0, "d_scale must be positive");

  require(cfg.task.d_max_lo > 0 && cfg.task.d_max_lo <= cfg.task.d_max_hi,
          "task delay bounds must satisfy 0 < d_max_lo <= d_max_hi");
  require(cfg.task.q_min_lo <= cfg.task.q_min_hi, "task.q_min_lo must be <= task.q_min_hi");
  require(cfg.task.encode_split >= 0 && cfg.task.encode_split <= 1,
          "task.encode_split must lie in [0, 1]");

  const ModeTable& mt = cfg.modes;
  require(mt.jpeg2000_ratio >= 1, "mode.jpeg2000_ratio must be >= 1");
  require(mt.text_bits > 0, "mode.text_bits must be positive");
  require(mt.codebook_size >= 2 && (mt.codebook_size & (mt.codebook_size - 1)) == 0,
          "mode.codebook_V must be a power of two >= 2");
  for (int i = 2; i < kNumModes; ++i)
    require(mt.latent_h[i] >= 1 && mt.latent_w[i] >= 1, "Mode 3 latent sizes must be >= 1");
  for (int i = 0; i < kNumModes; ++i)
    require(mt.compute_delay_s[i] >= 0, "mode compute delays must be >= 0");

  // Profile ordering: only check when the basic fields are sane, so payload
  // evaluation cannot blow up on garbage.
  if (v.empty()) {
    auto pay = [&cfg](ModeId m) { return mode_payload(m, cfg); };
    const int m1 = 0, m2 = 1, m31 = 2, m32 = 3, m33 = 4;
    require(pay(ModeId::M2) < pay(ModeId::M3_1) && pay(ModeId::M3_1) < pay(ModeId::M3_2) &&
                pay(ModeId::M3_2) < pay(ModeId::M3_3) && pay(ModeId::M3_3) < pay(ModeId::M1),
            "mode payloads must be ordered M2 < M3_1 < M3_2 < M3_3 < M1");
    for (const auto& q : {mt.quality_psnr, mt.quality_msssim}) {
      require(q[m31] < q[m32] && q[m32] < q[m33],
              "Mode 3 quality must increase with latent size");
      require(q[m1] > q[m2] && q[m1] > q[m31] && q[m1] > q[m32] && q[m1] > q[m33],
              "Mode 1 quality must be the maximum");
    }
  }

  const LearnerConfig& lc = cfg.learner;
  require(lc.discount > 0 && lc.discount < 1, "learner.discount must lie in (0, 1)");
  require(lc.temperature >= 0, "learner.temperature must be >= 0");
  require(lc.clip_bound > 0, "learner.clip must be positive");
  require(lc.std_floor > 0, "learner.std_floor must be positive");
  require(lc.batch_size >= 1, "learner.batch must be >= 1");
  require(lc.buffer_capacity >= static_cast<std::size_t>(lc.batch_size),
          "learner.buffer must be >= learner.batch");
  require(lc.critic_lr > 0 && lc.actor_lr > 0, "learning rates must be positive");
  require(lc.polyak >= 0 && lc.polyak < 1, "learner.polyak must lie in [0, 1)");
  require(lc.hidden_width >= 1 && lc.hidden_layers >= 1, "hidden layout must be >= 1");
  require(lc.update_every >= 1, "learner.update_every must be >= 1");
  require(lc.warmup_steps >= 0, "learner.warmup must be >= 0");

  return v;
}

ScenarioConfig load_scenario(const std::string& text) {
  ScenarioConfig cfg = default_scenario();
  std::set<std::string> seen;

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ScenarioError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ScenarioError("line " + std::to_string(lineno) + ": empty key or value");
    try {
      apply_key(cfg, key, value);
    } catch (const ScenarioError& e) {
      throw ScenarioError("line " + std::to_string(lineno) + ": " + e.what());
    }
    seen.insert(key);
  }

  // Complement rule: supplying one weight fixes the other.
  if (seen.count("xi_q") && !seen.count("xi_d")) cfg.xi_d = 1.0 - cfg.xi_q;
  if (seen.count("xi_d") && !seen.count("xi_q")) cfg.xi_q = 1.0 - cfg.xi_d;
  apply_metric_defaults(cfg, seen);

  const auto violations = validate(cfg);
  if (!violations.empty()) {
    std::string msg = "invalid scenario:";
    for (const auto& m : violations) msg += "\n  - " + m;
    throw ScenarioError(msg);
  }
  return cfg;
}

ScenarioConfig load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_scenario(buf.str());
}

void set_key(ScenarioConfig& cfg, const std::string& key, const std::string& value) {
  apply_key(cfg, key, value);
  if (key == "xi_q") cfg.xi_d = 1.0 - cfg.xi_q;
  if (key == "xi_d") cfg.xi_q = 1.0 - cfg.xi_d;
  if (key == "sce.metric") {
    std::set<std::string> none;
    apply_metric_defaults(cfg, none);
  }
  const auto violations = validate(cfg);
  if (!violations.empty()) {
    std::string msg = "override '" + key + " = " + value + "' leaves scenario invalid:";
    for (const auto& m : violations) msg += "\n  - " + m;
    throw ScenarioError(msg);
  }
}

}  // namespace sagin
