#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sagin {

// The five transmission modes: full bitstream (M1), caption only (M2), and
// caption plus quantized image latents at three resolutions (M3_*).
enum class ModeId { M1 = 0, M2 = 1, M3_1 = 2, M3_2 = 3, M3_3 = 4 };

constexpr int kNumModes = 5;

const char* mode_name(ModeId id);
ModeId mode_from_name(const std::string& name);  // throws on unknown name

enum class QualityMetric { Psnr, Msssim };

// Per-mode quality/compute table plus the payload-size knobs. Values are
// configuration, indexed by ModeId.
struct ModeTable {
  double jpeg2000_ratio = 10.0;  // Mode 1 compression ratio
  double text_bits = 8192.0;     // caption payload, bits
  int codebook_size = 1024;      // V; latents cost h*w*log2(V) bits
  std::array<int, kNumModes> latent_h = {0, 0, 8, 16, 32};
  std::array<int, kNumModes> latent_w = {0, 0, 8, 16, 32};
  std::array<double, kNumModes> quality_psnr = {38.0, 14.0, 20.0, 24.0, 28.0};
  std::array<double, kNumModes> quality_msssim = {0.985, 0.65, 0.82, 0.90, 0.95};
  std::array<double, kNumModes> compute_delay_s = {0.1323, 1.33, 1.33, 1.33, 1.33};
};

struct TaskConfig {
  double d_max_lo = 2.0;   // s
  double d_max_hi = 11.0;  // s
  double q_min_lo = 10.0;  // quality threshold bounds, active-metric units
  double q_min_hi = 30.0;
  double encode_split = 0.5;  // share of the mode compute delay spent encoding
  bool exclude_source_queue_delay = false;
};

struct LearnerConfig {
  double discount = 0.99;
  double temperature = 0.2;
  double clip_bound = 10.0;
  double std_floor = 1.0;
  std::size_t buffer_capacity = 200000;
  int batch_size = 256;
  double critic_lr = 3e-4;
  double actor_lr = 1e-4;
  double polyak = 0.995;
  int hidden_width = 256;
  int hidden_layers = 2;
  bool twin_critics = true;
  int update_every = 1;     // env steps per gradient update
  int warmup_steps = 1000;  // random-action steps before training starts
};

// Every physical, traffic, metric, and learning constant in one validated
// record. All internal math is SI; dB/dBm quantities are converted to linear
// watts/gains when a scenario file is loaded. The wavelength is never stored:
// it is always derived as v_c / f_c.
struct ScenarioConfig {
  // population
  int K = 5;  // LEO satellites
  int N = 3;  // UAV relays
  int M = 8;  // ground users

  // orbital geometry
  double d_E = 6371e3;              // Earth radius, m
  double d_k = 750e3;               // LEO altitude, m
  double v_k = 7800.0;              // LEO orbital speed, m/s
  double tau_min_elev = 0.0;        // minimum elevation, rad (set by default_scenario)
  double pass_gap_mult = 10.0;      // invisibility gap between passes, in units of T_k

  // link budget
  double sigma_gain = 1e4;          // LEO antenna gain, linear power (40 dB)
  double eta_max = 1e4;             // ISL peak antenna gain |eta|^2, linear power (40 dB)
  double f_c = 25e9;                // LEO carrier, Hz
  double f_I = 25e9;                // ISL carrier, Hz
  double v_c = 299792458.0;         // m/s
  double zeta = 1.380649e-23;       // Boltzmann, J/K
  double chi = 354.81;              // thermal noise temperature, K
  double P_S = 1.0;                 // LEO transmit power, W
  double P_U = 0.2;                 // UAV transmit power, W
  double B_su = 1e7;                // sat->UAV bandwidth, Hz
  double B_isl = 1e7;               // ISL bandwidth, Hz
  double B_ug = 1e7;                // UAV->user bandwidth, Hz
  double noise_W = 1e-16;           // receiver noise power, W (-130 dBm)
  double mu = 10.0;                 // Rician factor, linear
  double kappa_L = 2.0;             // LoS path-loss exponent
  double kappa_N = 2.6;             // NLoS path-loss exponent
  double doppler_hz = 650e3;        // max Doppler, Hz

  // UAV kinematics and deployment
  double v_max = 10.0;              // m/s
  double z_min = 45.0;              // m
  double z_max = 60.0;              // m
  double area_side = 500.0;         // user area square side, m
  double area_spacing = 1000.0;     // distance between area origins, m
  double uav_start_alt = 50.0;      // m
  double isl_d_min = 250e3;         // ISL distance draw bounds, m
  double isl_d_max = 500e3;

  // time and traffic
  double slot_dt = 0.1;             // s
  int horizon = 2000;               // slots per episode
  double arrival_rate = 0.05;       // mean tasks per slot per LEO
  int G = 100;                      // total tasks per episode
  double image_bits = 3.5 * 1048576 * 8;  // original image, bits (3.5 MB)
  int task_window = 16;             // W: tasks exposed to the learner

  // delay-quality metric
  double xi_q = 0.5;
  double xi_d = 0.5;
  double q_lo = 10.0;               // quality normalization bounds
  double q_hi = 40.0;
  double d_scale = 11.0;            // delay normalization bound, s
  QualityMetric metric = QualityMetric::Psnr;

  ModeTable modes;
  TaskConfig task;
  LearnerConfig learner;

  std::uint64_t seed = 1;

  double wavelength() const { return v_c / f_c; }
};

struct ScenarioError : std::runtime_error {
  explicit ScenarioError(const std::string& what) : std::runtime_error(what) {}
};

// All defaults above plus tau = 40 degrees.
ScenarioConfig default_scenario();

// Returns one message per violated invariant; empty means the config is valid.
std::vector<std::string> validate(const ScenarioConfig& cfg);

// Parses the line-oriented `key = value` scenario format ('#' comments,
// unknown keys are a hard error, later lines win). Unset keys keep defaults.
// When only one of xi_q / xi_d is given, the other is derived as the
// complement. Throws ScenarioError with a line number on parse failure and
// with the violation list on validation failure.
ScenarioConfig load_scenario(const std::string& text);
ScenarioConfig load_scenario_file(const std::string& path);

// Single-key override through the same parser/validator the loader uses.
// `value` is the raw right-hand side, e.g. set_key(cfg, "P_S", "2.0").
void set_key(ScenarioConfig& cfg, const std::string& key, const std::string& value);

}  // namespace sagin
