#include "fsqkd/detstats.hpp"

#include <cmath>

#include "fsqkd/error.hpp"

namespace fsqkd::detstats {

namespace {

void validate(const SourceModel& src) {
  // Equal intensities are fine for detection statistics; only the decoy
  // analysis downstream needs mu2 strictly below mu1.
  if (!(src.mu1 > 0.0) || !(src.mu2 > 0.0) || !(src.mu2 <= src.mu1)) {
    throw ValidationError("intensities must satisfy 0 < mu2 <= mu1");
  }
  if (!(src.p_z > 0.0) || !(src.p_z < 1.0) || !(src.p_mu1 > 0.0) || !(src.p_mu1 < 1.0)) {
    throw ValidationError("basis and intensity probabilities must lie in (0, 1)");
  }
  if (!(src.clock_hz > 0.0)) throw ValidationError("clock rate must be positive");
  if (!(src.misalignment >= 0.0) || !(src.misalignment <= 0.5)) {
    throw ValidationError("misalignment must lie in [0, 0.5]");
  }
}

}  // namespace

double cell_intensity(const SourceModel& src, Basis basis, int intensity_idx) {
  const double mu = intensity_idx == 0 ? src.mu1 : src.mu2;
  return basis == Basis::Z ? mu : mu / 2.0;
}

double gain(double mu, double eta, double p_dc) {
  if (!(mu >= 0.0) || !(eta >= 0.0) || !(p_dc >= 0.0) || !(p_dc <= 1.0)) {
    throw ValidationError("gain arguments out of range");
  }
  return 1.0 - (1.0 - p_dc) * std::exp(-mu * eta);
}

double qber(double mu, double eta, double p_dc, double e_intrinsic) {
  const double d = gain(mu, eta, p_dc);
  if (d <= 0.0) return 0.5;
  const double miss = std::exp(-mu * eta);  // no signal photon detected
  double q = (e_intrinsic * (1.0 - miss) + 0.5 * p_dc * miss) / d;
  if (q < 0.0) q = 0.0;
  if (q > 0.5) q = 0.5;
  return q;
}

PulseObservables observables(const SourceModel& src, const receiver::ReceiverModel& rx,
                             double transmittance) {
  validate(src);
  const double p_dc = receiver::dark_click_probability(rx.detector, src.clock_hz);
  PulseObservables obs;
  const double eta[2] = {
      receiver::end_to_end_efficiency(rx, Basis::Z, transmittance),
      receiver::end_to_end_efficiency(rx, Basis::X, transmittance),
  };
  const double e_int[2] = {
      receiver::intrinsic_error_rate(rx, Basis::Z, src.misalignment),
      receiver::intrinsic_error_rate(rx, Basis::X, src.misalignment),
  };
  for (int b = 0; b < 2; ++b) {
    for (int i = 0; i < 2; ++i) {
      const double mu = cell_intensity(src, static_cast<Basis>(b), i);
      obs.gain[b][i] = gain(mu, eta[b], p_dc);
      obs.qber[b][i] = qber(mu, eta[b], p_dc, e_int[b]);
    }
  }
  // Every sent pulse illuminates both arms through the passive splitter, so
  // each arm's click load averages over all four prepared states.
  for (int arm = 0; arm < 2; ++arm) {
    double p_click = 0.0;
    for (int b = 0; b < 2; ++b) {
      const double p_b = b == 0 ? src.p_z : 1.0 - src.p_z;
      for (int i = 0; i < 2; ++i) {
        const double p_i = i == 0 ? src.p_mu1 : 1.0 - src.p_mu1;
        const double mu = cell_intensity(src, static_cast<Basis>(b), i);
        p_click += p_b * p_i * gain(mu, eta[arm], p_dc);
      }
    }
    obs.arm_click_prob[arm] = p_click;
    obs.arm_click_rate_hz[arm] = p_click * src.clock_hz;
    obs.arm_dead_factor[arm] =
        receiver::dead_time_factor(rx.detector, obs.arm_click_rate_hz[arm]);
  }
  return obs;
}

ExpectedCounts expected_counts(const SourceModel& src, const receiver::ReceiverModel& rx,
                               double transmittance, double n_z_target) {
  if (!(n_z_target > 0.0)) throw ValidationError("Z block target must be positive");
  const PulseObservables obs = observables(src, rx, transmittance);
  const double mean_z_gain = src.p_mu1 * obs.gain[0][0] + (1.0 - src.p_mu1) * obs.gain[0][1];
  const double z_yield = src.p_z * mean_z_gain * obs.arm_dead_factor[0];
  if (!(z_yield > 0.0)) {
    throw InfeasibleError("combined Z gain is zero; no detections possible");
  }
  ExpectedCounts counts;
  counts.total_pulses = std::ceil(n_z_target / z_yield);
  for (int b = 0; b < 2; ++b) {
    const double p_b = b == 0 ? src.p_z : 1.0 - src.p_z;
    for (int i = 0; i < 2; ++i) {
      const double p_i = i == 0 ? src.p_mu1 : 1.0 - src.p_mu1;
      const double mean = counts.total_pulses * p_b * p_i * obs.gain[b][i] *
                          obs.arm_dead_factor[b];
      counts.n[b][i] = std::floor(mean);
      counts.m[b][i] = std::floor(obs.qber[b][i] * counts.n[b][i]);
    }
  }
  return counts;
}

}  // namespace fsqkd::detstats
