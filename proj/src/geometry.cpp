#include "sagin/geometry.hpp"

#include <cassert>
#include <stdexcept>

namespace sagin {

namespace {
constexpr double kPi = 3.14159265358979323846;

// Stream ids for episode-derived randomness owned by this module.
constexpr std::uint64_t kStreamIsl = 0x49534c00;
constexpr std::uint64_t kStreamPlacement = 0x504c4143;
constexpr std::uint64_t kStreamPassPhase = 0x50415353;
}  // namespace

double coverage_path_length(double d_E, double d_k, double tau) {
  const double arg = d_E / (d_E + d_k) * std::cos(tau);
  assert(arg >= -1.0 && arg <= 1.0);
  return 2.0 * (d_E + d_k) * (std::acos(arg) - tau);
}

double access_duration(double R_k, double v_k) { return R_k / v_k; }

bool pass_visible(const LeoPass& pass, double t) {
  return t >= pass.pass_start && t <= pass.pass_start + pass.pass_length;
}

LeoPass pass_advanced_to(const LeoPass& pass, double t) {
  LeoPass p = pass;
  const double cycle = p.pass_length + p.gap_length;
  if (cycle <= 0.0) return p;
  while (t > p.pass_start + p.pass_length) p.pass_start += cycle;
  return p;
}

double elevation_at(const LeoPass& pass, double t, double tau) {
  if (!pass_visible(pass, t))
    throw std::domain_error("elevation_at: satellite not visible at requested time");
  if (pass.pass_length <= 0.0) return tau;
  const double u = 2.0 * (t - pass.pass_start) / pass.pass_length - 1.0;
  return tau + (kPi / 2.0 - tau) * (1.0 - std::abs(u));
}

double slant_range(double elev, double d_E, double d_k) {
  const double r = d_E + d_k;
  const double c = d_E * std::cos(elev);
  return std::sqrt(r * r - c * c) - d_E * std::sin(elev);
}

Vec3 advance_uav(const Vec3& pos, const Vec3& vel, double dt, const ScenarioConfig& cfg) {
  Vec3 v = vel;
  const double speed = v.norm();
  if (speed > cfg.v_max && speed > 0.0) v = v * (cfg.v_max / speed);
  Vec3 next = pos + v * dt;
  if (next.z < cfg.z_min) next.z = cfg.z_min;
  if (next.z > cfg.z_max) next.z = cfg.z_max;
  return next;
}

double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

double isl_distance(int i, int j, const Rng& episode_rng, const ScenarioConfig& cfg) {
  if (i == j) throw std::invalid_argument("isl_distance: i and j must differ");
  const int lo = i < j ? i : j;
  const int hi = i < j ? j : i;
  const std::uint64_t pair_id =
      static_cast<std::uint64_t>(lo) * static_cast<std::uint64_t>(cfg.K) +
      static_cast<std::uint64_t>(hi);
  Rng r = episode_rng.derive(kStreamIsl).derive(pair_id);
  return r.uniform(cfg.isl_d_min, cfg.isl_d_max);
}

GeoState initial_geometry(const ScenarioConfig& cfg, const Rng& episode_rng) {
  GeoState geo;
  geo.t = 0;

  auto area_origin = [&cfg](int area) {
    return Vec3{area * cfg.area_spacing, 0.0, 0.0};
  };

  geo.uav_pos.resize(cfg.N);
  for (int n = 0; n < cfg.N; ++n) {
    const Vec3 o = area_origin(n);
    geo.uav_pos[n] = {o.x + cfg.area_side / 2.0, o.y + cfg.area_side / 2.0,
                      cfg.uav_start_alt};
  }

  Rng place = episode_rng.derive(kStreamPlacement);
  geo.user_pos.resize(cfg.M);
  for (int m = 0; m < cfg.M; ++m) {
    const int area = static_cast<int>(place.uniform_int(static_cast<std::uint64_t>(cfg.N)));
    const Vec3 o = area_origin(area);
    geo.user_pos[m] = {o.x + place.uniform(0.0, cfg.area_side),
                       o.y + place.uniform(0.0, cfg.area_side), 0.0};
  }

  const double R = coverage_path_length(cfg.d_E, cfg.d_k, cfg.tau_min_elev);
  const double T = access_duration(R, cfg.v_k);
  Rng phases = episode_rng.derive(kStreamPassPhase);
  geo.passes.resize(cfg.K);
  for (int k = 0; k < cfg.K; ++k) {
    LeoPass& p = geo.passes[k];
    p.leo_id = k;
    p.pass_length = T;
    p.gap_length = cfg.pass_gap_mult * T;
    p.phase_offset = phases.uniform(0.0, T);
    p.pass_start = -p.phase_offset;
    p.ground_track_anchor = {cfg.N * cfg.area_spacing / 2.0, cfg.area_side / 2.0, 0.0};
  }
  return geo;
}

}  // namespace sagin
