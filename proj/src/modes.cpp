#include "sagin/modes.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sagin {

SceWeights sce_weights(const ScenarioConfig& cfg) {
  return {cfg.xi_q, cfg.xi_d, cfg.q_lo, cfg.q_hi, cfg.d_scale};
}

double vqe_payload_bits(int h, int w, int codebook_size) {
  if (h < 1 || w < 1) throw std::invalid_argument("vqe_payload_bits: h and w must be >= 1");
  if (codebook_size < 2 || (codebook_size & (codebook_size - 1)) != 0)
    throw std::invalid_argument("vqe_payload_bits: codebook size must be a power of two >= 2");
  int bits_per_index = 0;
  for (int v = codebook_size; v > 1; v >>= 1) ++bits_per_index;
  return static_cast<double>(h) * static_cast<double>(w) * bits_per_index;
}

double mode_payload(ModeId id, const ScenarioConfig& cfg) {
  const ModeTable& mt = cfg.modes;
  switch (id) {
    case ModeId::M1:
      return cfg.image_bits / mt.jpeg2000_ratio;
    case ModeId::M2:
      return mt.text_bits;
    default: {
      const int i = static_cast<int>(id);
      return mt.text_bits + vqe_payload_bits(mt.latent_h[i], mt.latent_w[i], mt.codebook_size);
    }
  }
}

double mode_compute_delay(ModeId id, const ScenarioConfig& cfg) {
  return cfg.modes.compute_delay_s[static_cast<int>(id)];
}

double mode_quality(ModeId id, const ScenarioConfig& cfg) {
  const int i = static_cast<int>(id);
  return cfg.metric == QualityMetric::Msssim ? cfg.modes.quality_msssim[i]
                                             : cfg.modes.quality_psnr[i];
}

ModeProfile mode_profile(ModeId id, const ScenarioConfig& cfg) {
  const int i = static_cast<int>(id);
  return {id, mode_payload(id, cfg), mode_compute_delay(id, cfg), cfg.modes.quality_psnr[i],
          cfg.modes.quality_msssim[i]};
}

double normalize_q(double q, const SceWeights& w) {
  return std::clamp((q - w.q_lo) / (w.q_hi - w.q_lo), 0.0, 1.0);
}

double normalize_d(double d, const SceWeights& w) {
  return std::clamp(d / w.d_scale, 0.0, 1.0);
}

double sce(double quality, double q_min, double delay, double d_max, const SceWeights& w) {
  return w.xi_q * (normalize_q(quality, w) - normalize_q(q_min, w)) +
         w.xi_d * (normalize_d(d_max, w) - normalize_d(delay, w));
}

std::vector<ModeId> feasible_modes(double q_min, double d_max,
                                   std::span<const double> est_hop_rates,
                                   const ScenarioConfig& cfg) {
  std::vector<ModeId> out;
  for (int i = 0; i < kNumModes; ++i) {
    const ModeId id = static_cast<ModeId>(i);
    if (mode_quality(id, cfg) < q_min) continue;
    const double payload = mode_payload(id, cfg);
    double total = mode_compute_delay(id, cfg);
    for (const double rate : est_hop_rates) {
      if (!(rate > 0.0)) throw std::invalid_argument("feasible_modes: hop rates must be positive");
      total += payload / rate;
    }
    if (total <= d_max) out.push_back(id);
  }
  return out;
}

}  // namespace sagin
