#include "fsqkd/receiver.hpp"

#include <cmath>

#include "fsqkd/error.hpp"

namespace fsqkd::receiver {

namespace {

HardwarePreset make_preset(const std::string& name, const std::string& carrier_label,
                           double wavelength_nm, double efficiency, double dark_hz,
                           double absorption_db_per_km) {
  HardwarePreset p;
  p.name = name;
  p.carrier = atmosphere::make_carrier(carrier_label, wavelength_nm);
  p.receiver.detector.efficiency = efficiency;
  p.receiver.detector.dark_count_hz = dark_hz;
  p.receiver.detector.dead_time_s = 25e-9;
  p.absorption_db_per_km = absorption_db_per_km;
  return p;
}

void require(bool ok, const char* what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace

const std::vector<HardwarePreset>& hardware_presets() {
  // Detection efficiencies: SNSPD traces at 0.90; the mid-IR up-conversion
  // trace folds the 0.14 converter and telecom SNSPD into 0.127 overall.
  static const std::vector<HardwarePreset> presets = {
      make_preset("NIR800", "NIR800", 800.0, 0.90, 1.0, 0.0),
      make_preset("NIR1550", "NIR1550", 1557.7, 0.90, 1.0, 1e-3),
      make_preset("MIR_UPCONV", "MIR3998", 3998.6, 0.127, 1.0, 1.9e-3),
      make_preset("MIR_REALISTIC", "MIR3998", 3998.6, 0.05, 100.0, 1.9e-3),
      make_preset("MIR_OPTIMIZED", "MIR3998", 3998.6, 0.80, 100.0, 1.9e-3),
  };
  return presets;
}

const HardwarePreset& hardware_preset(const std::string& name) {
  for (const auto& p : hardware_presets()) {
    if (p.name == name) return p;
  }
  std::string names;
  for (const auto& p : hardware_presets()) {
    if (!names.empty()) names += ", ";
    names += p.name;
  }
  throw ValidationError("unknown hardware preset '" + name + "' (available: " + names + ")");
}

double end_to_end_efficiency(const ReceiverModel& rx, Basis basis, double transmittance) {
  require(transmittance >= 0.0 && transmittance <= 1.0,
          "transmittance must lie in [0, 1]");
  require(rx.detector.efficiency > 0.0 && rx.detector.efficiency <= 1.0,
          "detector efficiency must lie in (0, 1]");
  require(rx.basis_split > 0.0 && rx.basis_split < 1.0, "basis split must lie in (0, 1)");
  const double insertion_db = basis == Basis::Z ? rx.z_insertion_db : rx.x_insertion_db;
  require(insertion_db >= 0.0, "insertion loss must be non-negative");
  const double split = basis == Basis::Z ? rx.basis_split : 1.0 - rx.basis_split;
  return transmittance * split * std::pow(10.0, -insertion_db / 10.0) *
         rx.detector.efficiency;
}

double dark_click_probability(const DetectorModel& det, double clock_hz) {
  require(clock_hz > 0.0, "clock rate must be positive");
  require(det.dark_count_hz >= 0.0, "dark count rate must be non-negative");
  const double p = det.dark_count_hz / clock_hz;
  return p > 1.0 ? 1.0 : p;
}

double dead_time_factor(const DetectorModel& det, double click_rate_hz) {
  require(det.dead_time_s >= 0.0, "dead time must be non-negative");
  require(click_rate_hz >= 0.0, "click rate must be non-negative");
  return 1.0 / (1.0 + click_rate_hz * det.dead_time_s);
}

double intrinsic_error_rate(const ReceiverModel& rx, Basis basis, double misalignment) {
  require(misalignment >= 0.0 && misalignment <= 0.5, "misalignment must lie in [0, 0.5]");
  if (basis == Basis::Z) return misalignment;
  const double v = rx.interferometer_visibility;
  require(v > 0.0 && v <= 1.0, "interferometer visibility must lie in (0, 1]");
  return misalignment + (1.0 - v) / 2.0;
}

}  // namespace fsqkd::receiver
