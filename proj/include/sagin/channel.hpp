#pragma once

#include <complex>
#include <span>
#include <vector>

#include "sagin/rng.hpp"
#include "sagin/scenario.hpp"

namespace sagin {

using Complex = std::complex<double>;

struct LinkSample {
  Complex coeff;
  double rate_bps = 0.0;
  double snr_linear = 0.0;
};

// Free-space satellite downlink amplitude: sqrt(gain) * lambda / (4 pi d),
// rotated by the satellite phase.
Complex sat_uav_coeff(double gain_linear, double wavelength_m, double distance_m,
                      double phase_rad);

// Bessel function of the first kind, order zero. Power series below |x| = 8,
// Hankel asymptotic expansion above; absolute error under 1e-9.
double bessel_j0(double x);

// CSI correlation between estimation and use: delta = J0(2 pi D T).
double correlation_delta(double doppler_hz, double delay_s);

// h = delta * h_hat + sqrt(1 - delta^2) * g, with g complex Gaussian of
// power |h_hat|^2. Expected channel power is preserved for any delta.
Complex outdate_csi(Complex h_hat, double delta, Rng& rng);

// B * log2(1 + P * g^2 / noise)
double shannon_rate(double bandwidth_hz, double power_w, double gain_sq,
                    double noise_plus_interf_w);

// Inter-satellite rate with thermal noise scaled by the free-space loss at
// the ISL carrier: B log2(1 + P g / (zeta chi B (4 pi d f / c)^2)). The gain
// is the linear peak power gain (|eta_max|^2).
double isl_rate(double bandwidth_hz, double power_w, double gain_linear, double distance_m,
                double carrier_hz, const ScenarioConfig& cfg);

// Rician air-ground coefficient: LoS term of fixed unit-magnitude phase with
// d^(-kappa_L/2) decay, NLoS complex Gaussian with d^(-kappa_N/2) decay.
Complex uav_ground_coeff(double mu, double distance_m, double kappa_los, double kappa_nlos,
                         double los_phase_rad, Rng& rng);

// Same, drawing the LoS phase from the generator (phase is held per link per
// episode by the environment; this overload is for standalone use).
Complex uav_ground_coeff(double mu, double distance_m, double kappa_los, double kappa_nlos,
                         Rng& rng);

// Downlink SINR rate for `user` served by `serving_uav`; only UAVs actively
// transmitting this slot contribute interference. `coeffs` holds the N
// coefficients toward this user, `active` flags transmitting UAVs.
double uav_ground_rate(int user, int serving_uav, std::span<const Complex> coeffs,
                       const std::vector<bool>& active, const ScenarioConfig& cfg);

}  // namespace sagin
