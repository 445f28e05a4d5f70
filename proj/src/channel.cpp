#include "sagin/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace sagin {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

Complex sat_uav_coeff(double gain_linear, double wavelength_m, double distance_m,
                      double phase_rad) {
  const double mag = std::sqrt(gain_linear) * wavelength_m / (4.0 * kPi * distance_m);
  return std::polar(mag, phase_rad);
}

double bessel_j0(double x) {
  const double ax = std::abs(x);
  if (ax < 8.0) {
    // Power series sum_k (-x^2/4)^k / (k!)^2; converges well below 8 and the
    // worst-case cancellation there still leaves ~12 good digits.
    const double q = -0.25 * ax * ax;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k <= 48; ++k) {
      term *= q / (static_cast<double>(k) * k);
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  // Hankel expansion J0 = sqrt(2/(pi x)) (P cos(x - pi/4) - Q sin(x - pi/4))
  // with a_k = prod_{j<=k} (2j-1)^2 / (k! (8x)^k); even-k terms feed P and
  // odd-k terms feed Q, signs alternating pairwise (-, -, +, +, ...). The
  // series is asymptotic: stop at the smallest term.
  double p = 1.0, q = 0.0;
  double term = 1.0;  // a_0
  double prev = 1e300;
  for (int k = 1; k <= 24; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= odd * odd / (8.0 * k * ax);
    if (term >= prev) break;
    prev = term;
    const double sign = (((k + 1) / 2) % 2 == 1) ? -1.0 : 1.0;
    if (k % 2 == 1)
      q += sign * term;
    else
      p += sign * term;
    if (term < 1e-17) break;
  }
  const double chi = ax - kPi / 4.0;
  return std::sqrt(2.0 / (kPi * ax)) * (p * std::cos(chi) - q * std::sin(chi));
}

double correlation_delta(double doppler_hz, double delay_s) {
  return bessel_j0(2.0 * kPi * doppler_hz * delay_s);
}

Complex outdate_csi(Complex h_hat, double delta, Rng& rng) {
  const Complex g = rng.circular_normal() * std::abs(h_hat);
  return delta * h_hat + std::sqrt(std::max(0.0, 1.0 - delta * delta)) * g;
}

double shannon_rate(double bandwidth_hz, double power_w, double gain_sq,
                    double noise_plus_interf_w) {
  return bandwidth_hz * std::log2(1.0 + power_w * gain_sq / noise_plus_interf_w);
}

double isl_rate(double bandwidth_hz, double power_w, double gain_linear, double distance_m,
                double carrier_hz, const ScenarioConfig& cfg) {
  const double fs = 4.0 * kPi * distance_m * carrier_hz / cfg.v_c;
  const double noise = cfg.zeta * cfg.chi * bandwidth_hz * fs * fs;
  return bandwidth_hz * std::log2(1.0 + power_w * gain_linear / noise);
}

Complex uav_ground_coeff(double mu, double distance_m, double kappa_los, double kappa_nlos,
                         double los_phase_rad, Rng& rng) {
  const Complex los = std::polar(std::pow(distance_m, -kappa_los / 2.0), los_phase_rad);
  const Complex nlos = rng.circular_normal() * std::pow(distance_m, -kappa_nlos / 2.0);
  return std::sqrt(mu / (mu + 1.0)) * los + std::sqrt(1.0 / (mu + 1.0)) * nlos;
}

Complex uav_ground_coeff(double mu, double distance_m, double kappa_los, double kappa_nlos,
                         Rng& rng) {
  const double phase = rng.uniform(0.0, 2.0 * kPi);
  return uav_ground_coeff(mu, distance_m, kappa_los, kappa_nlos, phase, rng);
}

double uav_ground_rate(int user, int serving_uav, std::span<const Complex> coeffs,
                       const std::vector<bool>& active, const ScenarioConfig& cfg) {
  (void)user;
  if (serving_uav < 0 || serving_uav >= static_cast<int>(coeffs.size()))
    throw std::invalid_argument("uav_ground_rate: serving UAV out of range");
  const double signal = cfg.P_U * std::norm(coeffs[serving_uav]);
  double interference = 0.0;
  for (int n = 0; n < static_cast<int>(coeffs.size()); ++n) {
    if (n == serving_uav || !active[n]) continue;
    interference += cfg.P_U * std::norm(coeffs[n]);
  }
  return cfg.B_ug * std::log2(1.0 + signal / (interference + cfg.noise_W));
}

}  // namespace sagin
