#pragma once

#include <string>
#include <vector>

#include "fsqkd/atmosphere.hpp"

namespace fsqkd::receiver {

enum class Basis { Z = 0, X = 1 };

struct DetectorModel {
  double efficiency = 0.9;      // eta_det, in (0, 1]
  double dark_count_hz = 1.0;   // free-running dark count rate
  double dead_time_s = 25e-9;   // non-paralyzable
};

struct ReceiverModel {
  DetectorModel detector;
  double z_insertion_db = 1.0;
  double x_insertion_db = 3.0;              // extra interferometer loss
  double basis_split = 0.5;                 // passive coupler toward Z arm
  double interferometer_visibility = 0.98;  // time-bin interference contrast
};

/// Carrier plus matched receiver chain; what a --trace flag selects.
struct HardwarePreset {
  std::string name;
  atmosphere::OpticalCarrier carrier;
  ReceiverModel receiver;
  double absorption_db_per_km = 0.0;
};

const std::vector<HardwarePreset>& hardware_presets();

/// Lookup by name; throws ValidationError listing valid names when unknown.
const HardwarePreset& hardware_preset(const std::string& name);

/// Channel transmittance folded with the receiver chain for one basis arm:
/// tau * basis_split * 10^(-insertion/10) * eta_det. The passive splitter
/// probability is part of the arm efficiency, so gains downstream use it
/// inside the Poisson exponent.
double end_to_end_efficiency(const ReceiverModel& rx, Basis basis, double transmittance);

/// Dark count probability per clock slot, clamped to 1.
double dark_click_probability(const DetectorModel& det, double clock_hz);

/// Throughput retained by a non-paralyzable detector at the given click rate:
/// 1 / (1 + rate * dead_time).
double dead_time_factor(const DetectorModel& det, double click_rate_hz);

/// Error floor of one basis arm: misalignment for Z, misalignment plus
/// (1 - visibility)/2 for the interferometric X arm.
double intrinsic_error_rate(const ReceiverModel& rx, Basis basis, double misalignment);

}  // namespace fsqkd::receiver
