#pragma once

#include <cstdint>

#include "fsqkd/detstats.hpp"

namespace fsqkd::mcsim {

struct McConfig {
  detstats::SourceModel source;
  receiver::ReceiverModel receiver;
  double transmittance = 1.0;
  std::uint64_t n_pulses = 10'000'000;
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0 picks the hardware concurrency
};

/// Raw tallies from one simulated block. Cells index [basis][intensity].
struct McTally {
  std::uint64_t sent[2][2] = {};
  std::uint64_t sifted[2][2] = {};   // basis-matched registered clicks
  std::uint64_t errors[2][2] = {};
  std::uint64_t arm_clicks[2] = {};  // registered clicks per arm, any basis
  std::uint64_t arm_blocked[2] = {}; // clicks swallowed by dead time
};

/// Simulates n_pulses clock slots: Poisson photon number, per-photon survival
/// through splitter/insertion/detector, per-slot dark counts, non-paralyzable
/// per-arm dead time, basis sifting. Work is partitioned into fixed blocks
/// with counter-derived RNG streams, so the tally is identical for any thread
/// count under the same seed.
McTally simulate_block(const McConfig& cfg);

/// Per-cell z-scores of the tally against the analytic model (gain cells use
/// the dead-time-derated click probability; error cells condition on the
/// observed clicks).
struct CellComparison {
  double z_gain[2][2] = {};
  double z_qber[2][2] = {};
  double max_abs_z = 0.0;
};

CellComparison compare_to_analytic(const McTally& tally, const McConfig& cfg);

}  // namespace fsqkd::mcsim
