#include "fsqkd/finitekey.hpp"

#include <algorithm>
#include <cmath>

#include "fsqkd/error.hpp"

namespace fsqkd::finitekey {

namespace {

void validate(const SecurityBudget& sec) {
  if (!(sec.eps_sec > 0.0) || !(sec.eps_sec < 1.0) || !(sec.eps_cor > 0.0) ||
      !(sec.eps_cor < 1.0)) {
    throw ValidationError("failure probabilities must lie in (0, 1)");
  }
  if (!(sec.n_z_block > 0.0)) throw ValidationError("block size must be positive");
  if (!(sec.ec_efficiency >= 1.0)) {
    throw ValidationError("error correction efficiency must be at least 1");
  }
  if (sec.eps_applications < 1) throw ValidationError("epsilon split must be positive");
}

struct BasisBounds {
  double s0_lower = 0.0;
  double s0_upper = 0.0;
  double s1_lower = 0.0;
  double v1_upper = 0.0;
  double n_total = 0.0;
  double m_total = 0.0;
};

/// One-decoy bounds for a single basis observed with intensities mu1 > mu2.
/// Counts are rescaled by exp(mu)/p to remove the intensity-choice bias, then
/// combined so that all unwanted photon-number terms carry one sign.
BasisBounds basis_bounds(double n1, double n2, double m1, double m2, double mu1,
                         double mu2, double p_mu1, double eps_share) {
  BasisBounds out;
  const double p1 = p_mu1;
  const double p2 = 1.0 - p_mu1;
  out.n_total = n1 + n2;
  out.m_total = m1 + m2;
  const double tau0 = poisson_mixture_weight(0, mu1, mu2, p_mu1);
  const double tau1 = poisson_mixture_weight(1, mu1, mu2, p_mu1);
  const double dn = hoeffding_delta(out.n_total, eps_share);
  const double dm = hoeffding_delta(out.m_total, eps_share);

  const double n1_plus = std::exp(mu1) / p1 * (n1 + dn);
  const double n2_minus = std::max(std::exp(mu2) / p2 * (n2 - dn), 0.0);
  const double m1_plus = std::exp(mu1) / p1 * (m1 + dm);
  const double m2_plus = std::exp(mu2) / p2 * (m2 + dm);
  const double m2_minus = std::max(std::exp(mu2) / p2 * (m2 - dm), 0.0);

  out.s0_lower = std::max(tau0 * (mu1 * n2_minus - mu2 * n1_plus) / (mu1 - mu2), 0.0);

  // Vacuum detections are uniformly random, so half of them surface as
  // errors; either intensity's error count caps them after rescaling.
  out.s0_upper = 2.0 * (tau0 * std::min(m1_plus, m2_plus) +
                        hoeffding_delta(out.n_total, eps_share));
  out.s0_upper = std::min(out.s0_upper, out.n_total);

  out.s1_lower = tau1 * mu1 / (mu2 * (mu1 - mu2)) *
                 (n2_minus - (mu2 * mu2) / (mu1 * mu1) * n1_plus -
                  (mu1 * mu1 - mu2 * mu2) / (mu1 * mu1) * (out.s0_upper / tau0));
  out.s1_lower = std::max(out.s1_lower, 0.0);

  out.v1_upper = std::max(tau1 * (m1_plus - m2_minus) / (mu1 - mu2), 0.0);
  return out;
}

}  // namespace

double binary_entropy(double p) {
  if (!(p >= 0.0) || !(p <= 1.0)) {
    throw ValidationError("entropy argument must lie in [0, 1]");
  }
  if (p == 0.0 || p == 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

double ec_leakage(double qber_z, const SecurityBudget& sec) {
  validate(sec);
  return sec.ec_efficiency * sec.n_z_block * binary_entropy(qber_z) +
         std::log2(2.0 / sec.eps_cor);
}

double pa_cost(const SecurityBudget& sec) {
  validate(sec);
  return 6.0 * std::log2(19.0 / sec.eps_sec);
}

double hoeffding_delta(double n, double eps) {
  if (!(eps > 0.0) || !(eps < 1.0)) {
    throw ValidationError("failure probability must lie in (0, 1)");
  }
  if (!(n >= 0.0)) throw ValidationError("sample size must be non-negative");
  if (n == 0.0) return 0.0;
  return std::sqrt(n / 2.0 * std::log(1.0 / eps));
}

double poisson_mixture_weight(int n, double mu1, double mu2, double p_mu1) {
  if (n < 0) throw ValidationError("photon number must be non-negative");
  double fact = 1.0;
  for (int k = 2; k <= n; ++k) fact *= k;
  return p_mu1 * std::exp(-mu1) * std::pow(mu1, n) / fact +
         (1.0 - p_mu1) * std::exp(-mu2) * std::pow(mu2, n) / fact;
}

double sampling_correction(double eps, double ratio, double n_z1, double n_x1) {
  if (!(eps > 0.0) || !(eps < 1.0)) {
    throw ValidationError("failure probability must lie in (0, 1)");
  }
  if (ratio <= 0.0 || ratio >= 1.0 || n_z1 <= 0.0 || n_x1 <= 0.0) return 0.0;
  const double c = n_z1;
  const double d = n_x1;
  const double lead = (c + d) * (1.0 - ratio) * ratio / (c * d * std::log(2.0));
  const double arg = (c + d) / (c * d * (1.0 - ratio) * ratio) * (21.0 / eps) * (21.0 / eps);
  if (arg <= 1.0) return 0.0;
  return std::sqrt(lead * std::log2(arg));
}

DecoyBounds decoy_bounds(const detstats::ExpectedCounts& counts,
                         const detstats::SourceModel& src, const SecurityBudget& sec) {
  validate(sec);
  if (!(src.mu2 < src.mu1)) {
    throw ValidationError("decoy analysis needs mu2 strictly below mu1");
  }
  const double eps_share = sec.eps_sec / sec.eps_applications;
  const BasisBounds z = basis_bounds(counts.n[0][0], counts.n[0][1], counts.m[0][0],
                                     counts.m[0][1], src.mu1, src.mu2, src.p_mu1,
                                     eps_share);
  // Monitoring states are prepared at half intensity, so the X-basis photon
  // number statistics follow mu/2.
  const BasisBounds x = basis_bounds(counts.n[1][0], counts.n[1][1], counts.m[1][0],
                                     counts.m[1][1], src.mu1 / 2.0, src.mu2 / 2.0,
                                     src.p_mu1, eps_share);
  DecoyBounds b;
  b.s_z0_lower = z.s0_lower;
  b.s_z0_upper = z.s0_upper;
  b.s_z1_lower = z.s1_lower;
  b.s_x0_lower = x.s0_lower;
  b.s_x0_upper = x.s0_upper;
  b.s_x1_lower = x.s1_lower;
  b.v_x1_upper = x.v1_upper;
  b.feasible = z.s1_lower > 0.0 && x.s1_lower > 0.0;
  if (!b.feasible) {
    b.phi_z_upper = 0.5;
    return b;
  }
  double ratio = std::min(b.v_x1_upper / b.s_x1_lower, 0.5);
  double phi = ratio + sampling_correction(eps_share, ratio, b.s_z1_lower, b.s_x1_lower);
  b.phi_z_upper = std::clamp(phi, 0.0, 0.5);
  return b;
}

KeyRateResult secure_key_length(const detstats::ExpectedCounts& counts,
                                const detstats::SourceModel& src,
                                const SecurityBudget& sec) {
  KeyRateResult res;
  res.total_pulses = counts.total_pulses;
  const double n_z = counts.n[0][0] + counts.n[0][1];
  const double m_z = counts.m[0][0] + counts.m[0][1];
  const double n_x = counts.n[1][0] + counts.n[1][1];
  const double m_x = counts.m[1][0] + counts.m[1][1];
  res.qber_z = n_z > 0.0 ? m_z / n_z : 0.5;
  res.qber_x = n_x > 0.0 ? m_x / n_x : 0.5;
  res.bounds = decoy_bounds(counts, src, sec);
  if (!res.bounds.feasible) return res;
  const double key = res.bounds.s_z0_lower +
                     res.bounds.s_z1_lower * (1.0 - binary_entropy(res.bounds.phi_z_upper)) -
                     ec_leakage(res.qber_z, sec) - pa_cost(sec);
  const double bits = std::floor(key);
  if (bits <= 0.0) return res;  // rounds down to nothing; report infeasible
  res.skl_bits = bits;
  res.skr_per_pulse = counts.total_pulses > 0.0 ? res.skl_bits / counts.total_pulses : 0.0;
  res.feasible = true;
  return res;
}

}  // namespace fsqkd::finitekey
