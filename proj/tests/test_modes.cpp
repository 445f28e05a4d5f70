#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sagin/modes.hpp"
#include "sagin/rng.hpp"

using namespace sagin;

TEST_CASE("vqe payload bits") {
  CHECK(vqe_payload_bits(1, 1, 2) == doctest::Approx(1.0));
  CHECK(vqe_payload_bits(16, 16, 1024) == doctest::Approx(2560.0));
  CHECK(vqe_payload_bits(8, 8, 1024) == doctest::Approx(640.0));
  CHECK_THROWS_AS(vqe_payload_bits(8, 8, 1000), std::invalid_argument);
  CHECK_THROWS_AS(vqe_payload_bits(0, 8, 1024), std::invalid_argument);
  // exactly linear in h*w for fixed V
  for (int h = 1; h <= 12; ++h)
    CHECK(vqe_payload_bits(h, 7, 256) == doctest::Approx(h * 7 * 8.0));
}

TEST_CASE("mode payloads at defaults") {
  const ScenarioConfig cfg = default_scenario();
  CHECK(mode_payload(ModeId::M1, cfg) == doctest::Approx(3.5 * 1048576 * 8 / 10.0));
  CHECK(mode_payload(ModeId::M2, cfg) == doctest::Approx(8192.0));
  CHECK(mode_payload(ModeId::M3_2, cfg) == doctest::Approx(10752.0));  // 8192 + 2560
  // strict payload ordering
  CHECK(mode_payload(ModeId::M2, cfg) < mode_payload(ModeId::M3_1, cfg));
  CHECK(mode_payload(ModeId::M3_1, cfg) < mode_payload(ModeId::M3_2, cfg));
  CHECK(mode_payload(ModeId::M3_2, cfg) < mode_payload(ModeId::M3_3, cfg));
  CHECK(mode_payload(ModeId::M3_3, cfg) < mode_payload(ModeId::M1, cfg));
}

TEST_CASE("mode compute delays") {
  const ScenarioConfig cfg = default_scenario();
  CHECK(mode_compute_delay(ModeId::M1, cfg) == doctest::Approx(0.1323));
  CHECK(mode_compute_delay(ModeId::M2, cfg) == doctest::Approx(1.33));
  CHECK(mode_compute_delay(ModeId::M3_3, cfg) == doctest::Approx(1.33));
}

TEST_CASE("quality normalization") {
  SceWeights w{0.5, 0.5, 10.0, 40.0, 11.0};
  CHECK(normalize_q(10.0, w) == 0.0);
  CHECK(normalize_q(40.0, w) == 1.0);
  CHECK(normalize_q(55.0, w) == 1.0);   // clamped
  CHECK(normalize_q(-5.0, w) == 0.0);   // clamped
  SceWeights w2{0.5, 0.5, 10.0, 40.0, 11.0};
  w2.q_lo = 10;
  w2.q_hi = 40;
  CHECK(normalize_q(25.0, w2) == doctest::Approx(0.5));
}

TEST_CASE("sce zero at the constraint boundary") {
  SceWeights w{0.5, 0.5, 10.0, 40.0, 11.0};
  CHECK(sce(20.0, 20.0, 7.0, 7.0, w) == doctest::Approx(0.0));
}

TEST_CASE("sce ignores delay when the quality weight is 1") {
  SceWeights w{1.0, 0.0, 10.0, 40.0, 11.0};
  CHECK(sce(30.0, 15.0, 2.0, 9.0, w) == sce(30.0, 15.0, 8.0, 9.0, w));
}

TEST_CASE("sce worked example") {
  // weights one half each; n(Q)=0.8, n(Qmin)=0.3, nd(D)=0.2, nd(Dmax)=0.9.
  SceWeights w{0.5, 0.5, 0.0, 1.0, 1.0};
  CHECK(sce(0.8, 0.3, 0.2, 0.9, w) == doctest::Approx(0.6));
}

TEST_CASE("sce monotonicity and bounds over random quadruples") {
  SceWeights w{0.5, 0.5, 10.0, 40.0, 11.0};
  Rng rng(31);
  for (int i = 0; i < 5000; ++i) {
    const double q = rng.uniform(0, 50);
    const double qmin = rng.uniform(0, 50);
    const double d = rng.uniform(0, 15);
    const double dmax = rng.uniform(0, 15);
    const double base = sce(q, qmin, d, dmax, w);
    CHECK(base >= -1.0 - 1e-12);
    CHECK(base <= 1.0 + 1e-12);
    const double eps = 0.3;
    CHECK(sce(q + eps, qmin, d, dmax, w) >= base - 1e-12);
    CHECK(sce(q, qmin + eps, d, dmax, w) <= base + 1e-12);
    CHECK(sce(q, qmin, d + eps, dmax, w) <= base + 1e-12);
    CHECK(sce(q, qmin, d, dmax + eps, w) >= base - 1e-12);
  }
}

TEST_CASE("msssim metric switch changes the quality column") {
  ScenarioConfig cfg = default_scenario();
  CHECK(mode_quality(ModeId::M2, cfg) == doctest::Approx(14.0));
  cfg.metric = QualityMetric::Msssim;
  CHECK(mode_quality(ModeId::M2, cfg) == doctest::Approx(0.65));
  const ModeProfile p = mode_profile(ModeId::M3_3, cfg);
  CHECK(p.quality_psnr == doctest::Approx(28.0));
  CHECK(p.quality_msssim == doctest::Approx(0.95));
}

TEST_CASE("feasible modes: quality screen") {
  const ScenarioConfig cfg = default_scenario();
  const std::vector<double> fast = {1e12, 1e12};
  // nothing binds
  CHECK(feasible_modes(10.0, 1e9, fast, cfg).size() == 5);
  // infeasible by quality everywhere
  CHECK(feasible_modes(39.0, 1e9, fast, cfg).empty());
  // quality floor 22 keeps M1 (38), M3_2 (24), M3_3 (28)
  const auto modes = feasible_modes(22.0, 1e9, fast, cfg);
  REQUIRE(modes.size() == 3);
  CHECK(modes[0] == ModeId::M1);
  CHECK(modes[1] == ModeId::M3_2);
  CHECK(modes[2] == ModeId::M3_3);
}

TEST_CASE("feasible modes: delay screen") {
  const ScenarioConfig cfg = default_scenario();
  // 1 Mbit/s on one hop: M1 needs ~2.9 s transmission + 0.13 compute;
  // semantic modes need ~0.01-0.02 s + 1.33 s compute.
  const std::vector<double> slow = {1e6};
  const auto at_2s = feasible_modes(10.0, 2.0, slow, cfg);
  for (const ModeId m : at_2s) CHECK(m != ModeId::M1);
  CHECK(!at_2s.empty());
  // generous deadline admits everything
  CHECK(feasible_modes(10.0, 11.0, slow, cfg).size() == 5);
  // rates must be positive
  const std::vector<double> zero = {0.0};
  CHECK_THROWS_AS(feasible_modes(10.0, 2.0, zero, cfg), std::invalid_argument);
}
