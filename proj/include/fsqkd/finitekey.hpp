#pragma once

#include "fsqkd/detstats.hpp"

namespace fsqkd::finitekey {

/// Composable security budget. eps_sec is divided equally over the
/// eps_applications statistical bound uses (the same count that appears in
/// the privacy amplification constant).
struct SecurityBudget {
  double eps_sec = 1e-15;
  double eps_cor = 1e-15;
  double n_z_block = 1e8;      // sifted Z detections per analysis block
  double ec_efficiency = 1.12;  // error correction inefficiency factor
  int eps_applications = 19;
};

/// One-decoy statistical bounds for one analysis block.
struct DecoyBounds {
  double s_z0_lower = 0.0;  // vacuum events in Z
  double s_z0_upper = 0.0;
  double s_z1_lower = 0.0;  // single-photon events in Z
  double s_x0_lower = 0.0;
  double s_x0_upper = 0.0;
  double s_x1_lower = 0.0;
  double v_x1_upper = 0.0;   // single-photon errors in X
  double phi_z_upper = 0.5;  // phase error rate estimate
  bool feasible = false;     // both single-photon lower bounds positive
};

struct KeyRateResult {
  double skl_bits = 0.0;       // floor of the key length bound, >= 0
  double skr_per_pulse = 0.0;  // skl / total_pulses
  double qber_z = 0.5;
  double qber_x = 0.5;
  DecoyBounds bounds;
  double total_pulses = 0.0;
  bool feasible = false;
};

/// Binary entropy, exact 0 at the endpoints and exactly 1 at 1/2.
double binary_entropy(double p);

/// Bits disclosed by error correction plus its verification hash:
/// ec_efficiency * n_z_block * h(qber_z) + log2(2/eps_cor).
double ec_leakage(double qber_z, const SecurityBudget& sec);

/// Privacy amplification and composability cost: 6*log2(19/eps_sec).
double pa_cost(const SecurityBudget& sec);

/// Hoeffding deviation sqrt(n/2 * ln(1/eps)); zero for an empty sample.
double hoeffding_delta(double n, double eps);

/// Photon-number weight of the two-intensity mixture:
/// p_mu1 e^-mu1 mu1^n/n! + (1-p_mu1) e^-mu2 mu2^n/n!.
double poisson_mixture_weight(int n, double mu1, double mu2, double p_mu1);

/// Random sampling correction applied on top of the X-basis error ratio when
/// translating it into the Z-basis phase error rate.
double sampling_correction(double eps, double ratio, double n_z1, double n_x1);

/// One-decoy bounds from the expected counts. The X-basis analysis runs on
/// the halved intensities the monitoring states are actually prepared with.
DecoyBounds decoy_bounds(const detstats::ExpectedCounts& counts,
                         const detstats::SourceModel& src, const SecurityBudget& sec);

/// Full key length evaluation for one block. Negative bounds clamp to zero
/// with feasible = false; skl and skr are zero in that case.
KeyRateResult secure_key_length(const detstats::ExpectedCounts& counts,
                                const detstats::SourceModel& src,
                                const SecurityBudget& sec);

}  // namespace fsqkd::finitekey
