#pragma once

#include <cmath>
#include <vector>

#include "sagin/rng.hpp"
#include "sagin/scenario.hpp"

namespace sagin {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  bool operator==(const Vec3& o) const = default;
};

// One LEO's visibility cycle, reduced to a pass timer: visible for
// pass_length seconds starting at pass_start, then gone for gap_length
// seconds, repeating. phase_offset records where in the pass the satellite
// was at episode start (pass_start = -phase_offset at reset).
struct LeoPass {
  int leo_id = 0;
  double pass_start = 0.0;          // s, absolute simulation time
  double pass_length = 0.0;         // s (T_k)
  double gap_length = 0.0;          // s of invisibility between passes
  double phase_offset = 0.0;        // s into the pass at episode start
  Vec3 ground_track_anchor;         // sub-satellite point at max elevation
};

struct GeoState {
  std::vector<Vec3> uav_pos;   // length N
  std::vector<Vec3> user_pos;  // length M, fixed over an episode
  std::vector<LeoPass> passes; // length K
  int t = 0;                   // current slot index
};

// Ground-track arc length over which the satellite is above elevation tau:
// R = 2 (d_E + d_k) (arccos(d_E/(d_E+d_k) cos tau) - tau).
double coverage_path_length(double d_E, double d_k, double tau);

// T_k = R_k / v_k.
double access_duration(double R_k, double v_k);

bool pass_visible(const LeoPass& pass, double t);

// Rolls the pass cycle forward so that `t` is not past the current cycle.
LeoPass pass_advanced_to(const LeoPass& pass, double t);

// Elevation during a pass: tau at the edges, pi/2 at mid-pass, linear in
// between. Throws std::domain_error outside the pass (no visibility).
double elevation_at(const LeoPass& pass, double t, double tau);

// Slant range to the satellite at a given elevation; UAV altitude neglected.
double slant_range(double elev, double d_E, double d_k);

// Applies the speed cap (rescale, direction preserved) and altitude clamp.
Vec3 advance_uav(const Vec3& pos, const Vec3& vel, double dt, const ScenarioConfig& cfg);

double distance(const Vec3& a, const Vec3& b);

// Per-episode inter-satellite distance, symmetric in (i, j). The draw
// derives from the episode stream and the unordered pair, so any call order
// yields the same matrix. Throws std::invalid_argument when i == j.
double isl_distance(int i, int j, const Rng& episode_rng, const ScenarioConfig& cfg);

// Initial placement: users uniform inside N disjoint square areas, one UAV
// at each area center at the configured start altitude.
GeoState initial_geometry(const ScenarioConfig& cfg, const Rng& episode_rng);

}  // namespace sagin
