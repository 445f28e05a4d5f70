#pragma once

#include <span>
#include <vector>

#include "sagin/scenario.hpp"

namespace sagin {

// Payload bits, compute delay, and receiver-side reconstruction quality for
// one transmission mode. Quality is mode-intrinsic: channel conditions decide
// when bits arrive, not how good the reconstruction is.
struct ModeProfile {
  ModeId id = ModeId::M1;
  double payload_bits = 0.0;
  double compute_delay_s = 0.0;
  double quality_psnr = 0.0;
  double quality_msssim = 0.0;
};

struct SceWeights {
  double xi_q = 0.5;
  double xi_d = 0.5;
  double q_lo = 10.0;
  double q_hi = 40.0;
  double d_scale = 11.0;
};

SceWeights sce_weights(const ScenarioConfig& cfg);

// Bits needed to index an h x w grid of codewords from a V-entry codebook:
// h * w * log2(V). Throws std::invalid_argument unless V is a power of two
// >= 2 and h, w >= 1.
double vqe_payload_bits(int h, int w, int codebook_size);

double mode_payload(ModeId id, const ScenarioConfig& cfg);
double mode_compute_delay(ModeId id, const ScenarioConfig& cfg);

// Quality in the active metric (PSNR or MS-SSIM per cfg.metric).
double mode_quality(ModeId id, const ScenarioConfig& cfg);

ModeProfile mode_profile(ModeId id, const ScenarioConfig& cfg);

// clamp((q - q_lo) / (q_hi - q_lo), 0, 1)
double normalize_q(double q, const SceWeights& w);

// clamp(d / d_scale, 0, 1)
double normalize_d(double d, const SceWeights& w);

// Per-task delay-quality score: the weighted sum of the normalized quality
// surplus over the task's floor and the normalized delay slack under its
// deadline. Zero when the task lands exactly on both constraints.
double sce(double quality, double q_min, double delay, double d_max, const SceWeights& w);

// Modes whose quality meets q_min and whose estimated completion time
// (compute plus payload over each hop rate) fits in d_max. Hop rates must be
// positive.
std::vector<ModeId> feasible_modes(double q_min, double d_max,
                                   std::span<const double> est_hop_rates,
                                   const ScenarioConfig& cfg);

}  // namespace sagin
