#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fsqkd/atmosphere.hpp"
#include "fsqkd/finitekey.hpp"
#include "fsqkd/mcsim.hpp"

namespace fsqkd::scenario {

struct SweepPlan {
  double start_km = 0.0;
  double end_km = 100.0;
  double step_km = 0.0;  // 0 selects the default graded grid
};

/// Fully resolved simulation input. Defaults reproduce the NIR1550 hardware
/// trace under CLEAR weather.
struct Scenario {
  std::string trace_name = "NIR1550";
  std::string weather_name = "CLEAR";
  atmosphere::OpticalCarrier carrier;
  atmosphere::PathGeometry geometry;
  atmosphere::WeatherScenario weather;
  atmosphere::AbsorptionTable absorption;
  receiver::ReceiverModel receiver;
  detstats::SourceModel source;
  finitekey::SecurityBudget security;
  SweepPlan sweep;
  std::uint64_t mc_pulses = 10'000'000;
  double mc_transmittance = 0.1;
  unsigned mc_threads = 0;
  std::uint64_t seed = 1;
  std::string output_format = "csv";  // csv | json
  std::string output_path = "-";      // "-" writes to stdout
};

Scenario default_scenario();

const std::vector<std::string>& weather_preset_names();

/// CLEAR/RAIN/FOG and their _TURB variants. Throws ValidationError listing
/// the names when unknown.
atmosphere::WeatherScenario weather_preset(const std::string& name);

/// Applies a hardware preset (carrier, receiver chain, absorption entry).
void apply_trace(Scenario& sc, const std::string& trace_name);

/// Applies a weather preset by name.
void apply_weather(Scenario& sc, const std::string& preset_name);

/// Parses the INI-style scenario grammar documented in the README. Unknown
/// sections or keys raise ParseError with the offending line number.
Scenario parse_scenario(std::istream& in, const std::string& origin = "<stream>");
Scenario parse_scenario_file(const std::string& path);

/// One evaluated sweep distance; the emitted column order is the field order.
struct SweepRow {
  double distance_km = 0.0;
  double geometric_db = 0.0;
  double mie_db = 0.0;
  double rain_db = 0.0;
  double rayleigh_db = 0.0;
  double turbulence_db = 0.0;
  double absorption_db = 0.0;
  double total_db = 0.0;
  double transmittance = 1.0;
  double qber_z = 0.5;
  double qber_x = 0.5;
  double s_z0_lower = 0.0;
  double s_z1_lower = 0.0;
  double phi_z_upper = 0.5;
  double skl_bits = 0.0;
  double skr_per_pulse = 0.0;
  bool feasible = false;
};

inline constexpr int kSweepColumns = 17;
extern const char* const kSweepHeader[kSweepColumns];

struct SweepResult {
  std::vector<SweepRow> rows;
  double cutoff_km = 0.0;  // largest feasible distance
  bool any_feasible = false;
};

/// Attenuation plus key analysis at a single distance. Infeasible points are
/// reported in the row, never thrown.
SweepRow evaluate_distance(const Scenario& sc, double distance_km);

/// Evaluates the whole grid (rows are independent and computed in parallel).
SweepResult run_sweep(const Scenario& sc);

/// Grid points the plan expands to: the explicit step when given, otherwise
/// 1 km spacing through 50 km and 10 km spacing beyond.
std::vector<double> grid_distances(const SweepPlan& plan);

struct IntensityChoice {
  double mu1 = 0.0;
  double mu2 = 0.0;
  double skr_per_pulse = 0.0;
  bool feasible = false;
};

/// Coarse grid search for the signal/decoy pair maximizing skr at one
/// distance. Ties resolve toward larger mu1, then larger mu2. Throws
/// InfeasibleError when no grid point yields key.
IntensityChoice optimize_intensities(const Scenario& sc, double distance_km,
                                     int grid_points = 24);

/// CSV with '#' metadata lines (version, seed, every parameter, cutoff).
/// Deterministic formatting: identical inputs give identical bytes.
std::string emit_csv(const SweepResult& result, const Scenario& sc);

/// JSON document {"metadata": {...}, "rows": [...]} carrying the same values.
std::string emit_json(const SweepResult& result, const Scenario& sc);

}  // namespace fsqkd::scenario
