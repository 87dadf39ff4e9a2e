#include <cmath>
#include <cstdint>

#include <doctest.h>

#include "fsqkd/error.hpp"
#include "fsqkd/mcsim.hpp"

using namespace fsqkd;
using namespace fsqkd::mcsim;

namespace {

McConfig telecom_config(std::uint64_t pulses, double tau, std::uint64_t seed) {
  McConfig cfg;
  cfg.receiver = receiver::hardware_preset("NIR1550").receiver;
  cfg.transmittance = tau;
  cfg.n_pulses = pulses;
  cfg.seed = seed;
  cfg.threads = 2;
  return cfg;
}

bool tallies_equal(const McTally& a, const McTally& b) {
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < 2; ++y) {
      if (a.sent[x][y] != b.sent[x][y]) return false;
      if (a.sifted[x][y] != b.sifted[x][y]) return false;
      if (a.errors[x][y] != b.errors[x][y]) return false;
    }
    if (a.arm_clicks[x] != b.arm_clicks[x]) return false;
    if (a.arm_blocked[x] != b.arm_blocked[x]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("conservation laws of a tally") {
  const McConfig cfg = telecom_config(300'000, 0.3, 7);
  const McTally t = simulate_block(cfg);

  std::uint64_t sent = 0;
  std::uint64_t sifted = 0;
  for (int b = 0; b < 2; ++b) {
    for (int i = 0; i < 2; ++i) {
      sent += t.sent[b][i];
      sifted += t.sifted[b][i];
      CHECK(t.errors[b][i] <= t.sifted[b][i]);
      CHECK(t.sifted[b][i] <= t.sent[b][i]);
    }
  }
  CHECK(sent == cfg.n_pulses);
  // Sifting keeps only basis-matched clicks, so the sum over cells cannot
  // exceed what the two arms registered.
  CHECK(sifted <= t.arm_clicks[0] + t.arm_clicks[1]);
  CHECK(t.arm_clicks[0] > 0);
  CHECK(t.arm_clicks[1] > 0);
  CHECK(t.arm_blocked[0] > 0);  // dead time must be biting at this load
}

TEST_CASE("same seed, any thread count, same tally") {
  const McTally one = simulate_block([] {
    McConfig c = telecom_config(200'000, 0.25, 42);
    c.threads = 1;
    return c;
  }());
  for (unsigned threads : {2u, 3u, 8u}) {
    McConfig c = telecom_config(200'000, 0.25, 42);
    c.threads = threads;
    CHECK(tallies_equal(one, simulate_block(c)));
  }
  SUBCASE("and re-running is reproducible at all") {
    McConfig c = telecom_config(200'000, 0.25, 42);
    CHECK(tallies_equal(simulate_block(c), simulate_block(c)));
  }
  SUBCASE("a different seed moves the numbers") {
    McConfig c = telecom_config(200'000, 0.25, 43);
    c.threads = 1;
    CHECK_FALSE(tallies_equal(one, simulate_block(c)));
  }
}

TEST_CASE("tally matches the analytic model within five sigma") {
  // 2e6 pulses leaves every cell with thousands of clicks, tight enough for
  // a meaningful z-score and fast enough for a unit test.
  const McConfig cfg = telecom_config(2'000'000, 0.2, 20260815);
  const McTally t = simulate_block(cfg);
  const CellComparison cmp = compare_to_analytic(t, cfg);
  for (int b = 0; b < 2; ++b) {
    for (int i = 0; i < 2; ++i) {
      CHECK(std::fabs(cmp.z_gain[b][i]) <= 5.0);
      CHECK(std::fabs(cmp.z_qber[b][i]) <= 5.0);
    }
  }
  CHECK(cmp.max_abs_z <= 5.0);
  CHECK(cmp.max_abs_z > 0.0);  // a simulated tally never matches exactly
}

TEST_CASE("dead time suppression shows up at high load") {
  McConfig hot = telecom_config(400'000, 1.0, 5);
  const McTally t = simulate_block(hot);
  // At unit transmittance the Z arm clicks roughly every tenth slot, so a
  // 25-slot dead window swallows the majority of clicks.
  CHECK(t.arm_blocked[0] > t.arm_clicks[0]);

  McConfig cold = telecom_config(400'000, 1.0, 5);
  cold.receiver.detector.dead_time_s = 0.0;
  const McTally u = simulate_block(cold);
  CHECK(u.arm_blocked[0] == 0);
  CHECK(u.arm_clicks[0] > t.arm_clicks[0]);
}

TEST_CASE("validation") {
  McConfig cfg = telecom_config(0, 0.5, 1);
  CHECK_THROWS_AS(simulate_block(cfg), ValidationError);
  cfg = telecom_config(1000, 1.5, 1);
  CHECK_THROWS_AS(simulate_block(cfg), ValidationError);
}
