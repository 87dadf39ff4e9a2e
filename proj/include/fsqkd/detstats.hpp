#pragma once

#include "fsqkd/receiver.hpp"

namespace fsqkd::detstats {

using receiver::Basis;

/// Transmitter model for the three-state time-bin protocol with one decoy.
/// Key states live in Z; the single X (monitoring) state is the superposition
/// of both bins and is prepared at half intensity.
struct SourceModel {
  double mu1 = 0.5;           // signal intensity [photons/pulse]
  double mu2 = 0.25;          // decoy intensity, mu2 < mu1
  double p_z = 0.5;           // Alice's Z basis probability
  double p_mu1 = 0.5;         // signal intensity probability
  double clock_hz = 1e9;
  double misalignment = 0.01;  // baseline encoding error
};

/// Mean photon number leaving Alice for one (basis, intensity) cell.
double cell_intensity(const SourceModel& src, Basis basis, int intensity_idx);

/// Per-cell analytic detection statistics. Cells index [basis][intensity]
/// with basis 0 = Z and intensity 0 = mu1.
struct PulseObservables {
  double gain[2][2] = {};   // click probability per sent pulse of that cell
  double qber[2][2] = {};
  double arm_click_prob[2] = {};   // per-slot click probability of each arm
  double arm_click_rate_hz[2] = {};
  double arm_dead_factor[2] = {};  // throughput retained per arm
};

/// Expected detection and error counts, floored to integers, plus the pulse
/// budget that realizes the sifted Z-basis block.
struct ExpectedCounts {
  double n[2][2] = {};  // sifted detections per cell
  double m[2][2] = {};  // errors per cell
  double total_pulses = 0.0;
};

/// Click probability of a threshold detector watching a weak coherent pulse:
/// 1 - (1 - p_dc) * exp(-mu * eta).
double gain(double mu, double eta, double p_dc);

/// Error fraction of those clicks; 0.5 once the gain vanishes, clamped to
/// [0, 0.5].
double qber(double mu, double eta, double p_dc, double e_intrinsic);

/// Gains, QBERs, arm click rates and dead-time factors at one transmittance.
PulseObservables observables(const SourceModel& src, const receiver::ReceiverModel& rx,
                             double transmittance);

/// Sizes the pulse budget so the dead-time-derated sifted Z detections reach
/// n_z_target, then fills every cell. Throws InfeasibleError when the combined
/// Z gain is zero.
ExpectedCounts expected_counts(const SourceModel& src, const receiver::ReceiverModel& rx,
                               double transmittance, double n_z_target);

}  // namespace fsqkd::detstats
