#include <cmath>

#include <doctest.h>

#include "fsqkd/detstats.hpp"
#include "fsqkd/error.hpp"

using namespace fsqkd;
using namespace fsqkd::detstats;
using receiver::Basis;
using receiver::ReceiverModel;

namespace {

doctest::Approx near(double v, double rel = 1e-9) {
  return doctest::Approx(v).epsilon(rel);
}

ReceiverModel telecom_rx() { return receiver::hardware_preset("NIR1550").receiver; }

}  // namespace

TEST_CASE("cell intensities: monitoring states run at half power") {
  SourceModel src;
  CHECK(cell_intensity(src, Basis::Z, 0) == near(0.5, 1e-12));
  CHECK(cell_intensity(src, Basis::Z, 1) == near(0.25, 1e-12));
  CHECK(cell_intensity(src, Basis::X, 0) == near(0.25, 1e-12));
  CHECK(cell_intensity(src, Basis::X, 1) == near(0.125, 1e-12));
}

TEST_CASE("single-cell gain and error fraction") {
  CHECK(gain(0.5, 0.1, 1e-9) == near(0.048770576450515413));
  CHECK(gain(0.0, 0.0, 0.0) == 0.0);
  CHECK(qber(0.5, 0.1, 1e-9, 0.01) == near(0.010000009557041395));

  SUBCASE("vacuum pulses click only on darks, with even errors") {
    CHECK(gain(0.0, 0.3, 1e-9) == near(1e-9, 1e-6));
    CHECK(qber(0.0, 0.3, 1e-9, 0.01) == 0.5);
  }
  SUBCASE("no clicks at all resolves to a coin flip") {
    CHECK(qber(0.0, 0.3, 0.0, 0.01) == 0.5);
  }
  SUBCASE("gain rises with intensity and efficiency") {
    double prev = 0.0;
    for (double mu : {0.05, 0.1, 0.3, 0.6, 1.0}) {
      const double g = gain(mu, 0.4, 1e-9);
      CHECK(g > prev);
      prev = g;
    }
    CHECK(gain(0.5, 0.8, 1e-9) > gain(0.5, 0.2, 1e-9));
  }
  SUBCASE("stays a probability in extremes") {
    CHECK(gain(50.0, 1.0, 1.0) == 1.0);
    CHECK(gain(1e-6, 1e-6, 0.0) > 0.0);
    for (double e : {0.0, 0.25, 0.5}) {
      const double q = qber(0.3, 0.5, 1e-3, e);
      CHECK(q >= 0.0);
      CHECK(q <= 0.5);
    }
  }
  CHECK_THROWS_AS(gain(-0.1, 0.5, 0.0), ValidationError);
  CHECK_THROWS_AS(gain(0.1, -0.5, 0.0), ValidationError);
  CHECK_THROWS_AS(gain(0.1, 0.5, -1e-9), ValidationError);
}

TEST_CASE("full observables at unit transmittance") {
  SourceModel src;
  const PulseObservables obs = observables(src, telecom_rx(), 1.0);

  CHECK(obs.gain[0][0] == near(0.1636631812646071));
  CHECK(obs.gain[0][1] == near(0.085485474200078015));
  CHECK(obs.gain[1][0] == near(0.054823470077258629));
  CHECK(obs.gain[1][1] == near(0.027798102770024036));

  CHECK(obs.qber[0][0] == near(0.010000002503953784));
  CHECK(obs.qber[0][1] == near(0.010000005241967981));
  CHECK(obs.qber[1][0] == near(0.020000008275374313));
  CHECK(obs.qber[1][1] == near(0.020000016787365519));

  CHECK(obs.arm_click_prob[0] == near(0.094582900438906298));
  CHECK(obs.arm_click_prob[1] == near(0.061021592328596969));
  CHECK(obs.arm_click_rate_hz[0] == near(0.094582900438906298 * 1e9));
  CHECK(obs.arm_dead_factor[0] == near(0.29721457829747056));
  CHECK(obs.arm_dead_factor[1] == near(0.39595495455952029));
}

TEST_CASE("observables at a tenth transmittance") {
  SourceModel src;
  const PulseObservables obs = observables(src, telecom_rx(), 0.1);
  CHECK(obs.gain[0][0] == near(0.017713622422279474));
  CHECK(obs.gain[0][1] == near(0.00889638453114594));
  CHECK(obs.gain[1][0] == near(0.0056224916741861586));
  CHECK(obs.gain[1][1] == near(0.0028152090352379089));
  CHECK(obs.qber[0][0] == near(0.010000027172326143));
  CHECK(obs.qber[1][1] == near(0.020000170022436856));
  CHECK(obs.arm_dead_factor[0] == near(0.80014193834568337));
  CHECK(obs.arm_dead_factor[1] == near(0.86358786427673928));

  SUBCASE("qber degrades monotonically as the channel darkens") {
    double prev = 0.0;
    for (double tau : {1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5}) {
      const PulseObservables o = observables(src, telecom_rx(), tau);
      CHECK(o.qber[0][0] > prev);
      CHECK(o.qber[0][0] <= 0.5);
      prev = o.qber[0][0];
    }
  }
}

TEST_CASE("expected counts reproduce the frozen pipeline") {
  SourceModel src;
  const ExpectedCounts c = expected_counts(src, telecom_rx(), 1.0, 1e8);
  CHECK(c.total_pulses == 5401710886.0);
  CHECK(c.n[0][0] == 65688968.0);
  CHECK(c.n[0][1] == 34311031.0);
  CHECK(c.n[1][0] == 29314578.0);
  CHECK(c.n[1][1] == 14863883.0);
  CHECK(c.m[0][0] == 656889.0);
  CHECK(c.m[0][1] == 343110.0);
  CHECK(c.m[1][0] == 586291.0);
  CHECK(c.m[1][1] == 297277.0);

  SUBCASE("counts are integers and errors never exceed detections") {
    for (int b = 0; b < 2; ++b) {
      for (int i = 0; i < 2; ++i) {
        CHECK(c.n[b][i] == std::floor(c.n[b][i]));
        CHECK(c.m[b][i] == std::floor(c.m[b][i]));
        CHECK(c.m[b][i] <= c.n[b][i]);
        CHECK(c.m[b][i] >= 0.0);
      }
    }
  }
  SUBCASE("the sifted Z block lands within flooring slack of the target") {
    const double nz = c.n[0][0] + c.n[0][1];
    CHECK(nz >= 1e8 - 2.0);
    CHECK(nz <= 1e8 + c.total_pulses / 1e8 + 2.0);
  }
  SUBCASE("darker channels need more pulses, tempered by dead-time relief") {
    // 100x less light costs only ~28x the pulses here: the quieter detector
    // spends far less time dead (f_Z 0.297 -> 0.977).
    const ExpectedCounts weak = expected_counts(src, telecom_rx(), 0.01, 1e8);
    CHECK(weak.total_pulses > 20.0 * c.total_pulses);
    CHECK(weak.total_pulses < 100.0 * c.total_pulses);
    const double nz = weak.n[0][0] + weak.n[0][1];
    CHECK(nz >= 1e8 - 2.0);
  }
  SUBCASE("a dead channel with no darks is infeasible") {
    ReceiverModel rx = telecom_rx();
    rx.detector.dark_count_hz = 0.0;
    CHECK_THROWS_AS(expected_counts(src, rx, 0.0, 1e8), InfeasibleError);
  }
}

TEST_CASE("source validation") {
  SourceModel src;
  SUBCASE("decoy must not exceed the signal") {
    src.mu2 = 0.6;
    CHECK_THROWS_AS(observables(src, telecom_rx(), 1.0), ValidationError);
  }
  SUBCASE("equal intensities are tolerated at this layer") {
    src.mu1 = src.mu2 = 0.4;
    CHECK_NOTHROW(observables(src, telecom_rx(), 1.0));
  }
  SUBCASE("probabilities live strictly inside the unit interval") {
    src = SourceModel{};
    src.p_z = 0.0;
    CHECK_THROWS_AS(observables(src, telecom_rx(), 1.0), ValidationError);
    src = SourceModel{};
    src.p_mu1 = 1.0;
    CHECK_THROWS_AS(observables(src, telecom_rx(), 1.0), ValidationError);
  }
  SUBCASE("misalignment is capped at the coin flip") {
    src = SourceModel{};
    src.misalignment = 0.5;
    CHECK_NOTHROW(observables(src, telecom_rx(), 1.0));
    src.misalignment = 0.6;
    CHECK_THROWS_AS(observables(src, telecom_rx(), 1.0), ValidationError);
  }
  SUBCASE("clock must be positive") {
    src = SourceModel{};
    src.clock_hz = 0.0;
    CHECK_THROWS_AS(observables(src, telecom_rx(), 1.0), ValidationError);
  }
}
