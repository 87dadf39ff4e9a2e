#include "fsqkd/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fsqkd/error.hpp"
#include "fsqkd/version.hpp"

namespace fsqkd::scenario {

namespace {

using ojson = nlohmann::ordered_json;

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

[[noreturn]] void parse_fail(const std::string& origin, int line, const std::string& what) {
  throw ParseError(origin + ":" + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& origin, int line, const std::string& value) {
  try {
    size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    parse_fail(origin, line, "expected a number, got '" + value + "'");
  }
}

std::uint64_t parse_u64(const std::string& origin, int line, const std::string& value) {
  try {
    size_t used = 0;
    const double v = std::stod(value, &used);  // tolerate 1e7 style counts
    if (used != value.size() || v < 0.0 || v != std::floor(v) || v > 1.8e19) {
      throw std::invalid_argument(value);
    }
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    parse_fail(origin, line, "expected a non-negative integer, got '" + value + "'");
  }
}

bool parse_bool(const std::string& origin, int line, const std::string& value) {
  const std::string v = lower(value);
  if (v == "on" || v == "true" || v == "yes" || v == "1") return true;
  if (v == "off" || v == "false" || v == "no" || v == "0") return false;
  parse_fail(origin, line, "expected on/off, got '" + value + "'");
}

struct Entry {
  std::string section;
  std::string key;
  std::string value;
  int line;
};

/// Number formatting shared by CSV and JSON so both emit identical values.
std::string num(double v) { return nlohmann::json(v).dump(); }

ojson scenario_metadata(const Scenario& sc, const SweepResult* result) {
  ojson meta;
  meta["tool"] = std::string(kToolName) + " " + kVersion;
  meta["seed"] = sc.seed;
  meta["trace"] = sc.trace_name;
  meta["weather_preset"] = sc.weather_name;
  meta["carrier"]["label"] = sc.carrier.label;
  meta["carrier"]["wavelength_nm"] = sc.carrier.wavelength_nm;
  meta["geometry"]["telescope_radius_m"] = sc.geometry.telescope_radius_m;
  meta["weather"]["visibility_km"] = sc.weather.visibility_km;
  meta["weather"]["rain_mm_per_hour"] = sc.weather.rain_mm_per_hour;
  meta["weather"]["turbulence"] = sc.weather.turbulence_enabled;
  meta["weather"]["cn2"] = sc.weather.cn2;
  meta["hardware"]["detector_efficiency"] = sc.receiver.detector.efficiency;
  meta["hardware"]["dark_count_hz"] = sc.receiver.detector.dark_count_hz;
  meta["hardware"]["dead_time_ns"] = sc.receiver.detector.dead_time_s * 1e9;
  meta["hardware"]["z_insertion_db"] = sc.receiver.z_insertion_db;
  meta["hardware"]["x_insertion_db"] = sc.receiver.x_insertion_db;
  meta["hardware"]["basis_split"] = sc.receiver.basis_split;
  meta["hardware"]["interferometer_visibility"] = sc.receiver.interferometer_visibility;
  {
    const auto it = sc.absorption.find(sc.carrier.label);
    meta["hardware"]["absorption_db_per_km"] =
        it != sc.absorption.end() ? it->second : 0.0;
  }
  meta["source"]["mu1"] = sc.source.mu1;
  meta["source"]["mu2"] = sc.source.mu2;
  meta["source"]["p_z"] = sc.source.p_z;
  meta["source"]["p_mu1"] = sc.source.p_mu1;
  meta["source"]["clock_hz"] = sc.source.clock_hz;
  meta["source"]["misalignment"] = sc.source.misalignment;
  meta["security"]["eps_sec"] = sc.security.eps_sec;
  meta["security"]["eps_cor"] = sc.security.eps_cor;
  meta["security"]["n_z_block"] = sc.security.n_z_block;
  meta["security"]["ec_efficiency"] = sc.security.ec_efficiency;
  meta["security"]["eps_applications"] = sc.security.eps_applications;
  meta["sweep"]["start_km"] = sc.sweep.start_km;
  meta["sweep"]["end_km"] = sc.sweep.end_km;
  meta["sweep"]["step_km"] = sc.sweep.step_km;
  if (result != nullptr) {
    meta["cutoff_km"] = result->cutoff_km;
    meta["any_feasible"] = result->any_feasible;
  }
  return meta;
}

void flatten_metadata(const ojson& node, const std::string& prefix,
                      std::ostringstream& out) {
  for (const auto& [key, value] : node.items()) {
    const std::string name = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object()) {
      flatten_metadata(value, name, out);
    } else {
      out << "# " << name << " = " << value.dump() << "\n";
    }
  }
}

}  // namespace

const char* const kSweepHeader[kSweepColumns] = {
    "distance_km",   "geometric_db", "mie_db",       "rain_db",
    "rayleigh_db",   "turbulence_db", "absorption_db", "total_db",
    "transmittance", "qber_z",       "qber_x",       "s_z0_lower",
    "s_z1_lower",    "phi_z_upper",  "skl_bits",     "skr_per_pulse",
    "feasible"};

Scenario default_scenario() {
  Scenario sc;
  sc.absorption = atmosphere::default_absorption_table();
  apply_trace(sc, "NIR1550");
  apply_weather(sc, "CLEAR");
  return sc;
}

const std::vector<std::string>& weather_preset_names() {
  static const std::vector<std::string> names = {"CLEAR", "CLEAR_TURB", "RAIN",
                                                 "RAIN_TURB", "FOG", "FOG_TURB"};
  return names;
}

atmosphere::WeatherScenario weather_preset(const std::string& name) {
  atmosphere::WeatherScenario w;
  w.cn2 = 1e-14;
  if (name == "CLEAR" || name == "CLEAR_TURB") {
    w.visibility_km = 40.0;
    w.rain_mm_per_hour = 0.0;
  } else if (name == "RAIN" || name == "RAIN_TURB") {
    w.visibility_km = 6.0;
    w.rain_mm_per_hour = 2.5;
  } else if (name == "FOG" || name == "FOG_TURB") {
    w.visibility_km = 1.0;
    w.rain_mm_per_hour = 0.0;
  } else {
    std::string names;
    for (const auto& n : weather_preset_names()) {
      if (!names.empty()) names += ", ";
      names += n;
    }
    throw ValidationError("unknown weather preset '" + name + "' (available: " + names + ")");
  }
  w.turbulence_enabled = name.size() > 5 && name.substr(name.size() - 5) == "_TURB";
  return w;
}

void apply_trace(Scenario& sc, const std::string& trace_name) {
  const receiver::HardwarePreset& p = receiver::hardware_preset(trace_name);
  sc.trace_name = p.name;
  sc.carrier = p.carrier;
  sc.receiver = p.receiver;
  sc.absorption[p.carrier.label] = p.absorption_db_per_km;
}

void apply_weather(Scenario& sc, const std::string& preset_name) {
  sc.weather = weather_preset(preset_name);
  sc.weather_name = preset_name;
}

Scenario parse_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario file '" + path + "'");
  return parse_scenario(in, path);
}

Scenario parse_scenario(std::istream& in, const std::string& origin) {
  std::vector<Entry> entries;
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    const std::string text = trim(line);
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') parse_fail(origin, line_no, "unterminated section header");
      section = lower(trim(text.substr(1, text.size() - 2)));
      if (section.empty()) parse_fail(origin, line_no, "empty section name");
      continue;
    }
    const size_t eq = text.find('=');
    if (eq == std::string::npos) parse_fail(origin, line_no, "expected key = value");
    if (section.empty()) parse_fail(origin, line_no, "key outside any [section]");
    Entry e;
    e.section = section;
    e.key = lower(trim(text.substr(0, eq)));
    e.value = trim(text.substr(eq + 1));
    e.line = line_no;
    if (e.key.empty()) parse_fail(origin, line_no, "empty key");
    if (e.value.empty()) parse_fail(origin, line_no, "empty value for '" + e.key + "'");
    entries.push_back(std::move(e));
  }

  Scenario sc = default_scenario();

  // Presets first so explicit keys override them regardless of file order.
  for (const auto& e : entries) {
    if (e.section == "hardware" && e.key == "trace") {
      try {
        apply_trace(sc, e.value);
      } catch (const ValidationError& err) {
        parse_fail(origin, e.line, err.what());
      }
    } else if (e.section == "weather" && e.key == "preset") {
      try {
        apply_weather(sc, e.value);
      } catch (const ValidationError& err) {
        parse_fail(origin, e.line, err.what());
      }
    }
  }

  std::string carrier_label;
  double carrier_wavelength_nm = 0.0;
  bool absorption_given = false;
  double absorption_db_per_km = 0.0;

  for (const auto& e : entries) {
    if (e.section == "hardware") {
      if (e.key == "trace") continue;
      if (e.key == "wavelength_nm") {
        carrier_wavelength_nm = parse_double(origin, e.line, e.value);
      } else if (e.key == "label") {
        carrier_label = e.value;
      } else if (e.key == "detector_efficiency") {
        sc.receiver.detector.efficiency = parse_double(origin, e.line, e.value);
      } else if (e.key == "dark_count_hz") {
        sc.receiver.detector.dark_count_hz = parse_double(origin, e.line, e.value);
      } else if (e.key == "dead_time_ns") {
        sc.receiver.detector.dead_time_s = parse_double(origin, e.line, e.value) * 1e-9;
      } else if (e.key == "z_insertion_db") {
        sc.receiver.z_insertion_db = parse_double(origin, e.line, e.value);
      } else if (e.key == "x_insertion_db") {
        sc.receiver.x_insertion_db = parse_double(origin, e.line, e.value);
      } else if (e.key == "basis_split") {
        sc.receiver.basis_split = parse_double(origin, e.line, e.value);
      } else if (e.key == "interferometer_visibility") {
        sc.receiver.interferometer_visibility = parse_double(origin, e.line, e.value);
      } else if (e.key == "absorption_db_per_km") {
        absorption_given = true;
        absorption_db_per_km = parse_double(origin, e.line, e.value);
      } else {
        parse_fail(origin, e.line, "unknown [hardware] key '" + e.key + "'");
      }
    } else if (e.section == "geometry") {
      if (e.key == "telescope_radius_m") {
        sc.geometry.telescope_radius_m = parse_double(origin, e.line, e.value);
      } else {
        parse_fail(origin, e.line, "unknown [geometry] key '" + e.key + "'");
      }
    } else if (e.section == "weather") {
      if (e.key == "preset") continue;
      if (e.key == "visibility_km") {
        sc.weather.visibility_km = parse_double(origin, e.line, e.value);
      } else if (e.key == "rain_mm_per_hour") {
        sc.weather.rain_mm_per_hour = parse_double(origin, e.line, e.value);
      } else if (e.key == "turbulence") {
        sc.weather.turbulence_enabled = parse_bool(origin, e.line, e.value);
      } else if (e.key == "cn2") {
        sc.weather.cn2 = parse_double(origin, e.line, e.value);
      } else {
        parse_fail(origin, e.line, "unknown [weather] key '" + e.key + "'");
      }
    } else if (e.section == "source") {
      if (e.key == "mu1") {
        sc.source.mu1 = parse_double(origin, e.line, e.value);
      } else if (e.key == "mu2") {
        sc.source.mu2 = parse_double(origin, e.line, e.value);
      } else if (e.key == "p_z") {
        sc.source.p_z = parse_double(origin, e.line, e.value);
      } else if (e.key == "p_mu1") {
        sc.source.p_mu1 = parse_double(origin, e.line, e.value);
      } else if (e.key == "clock_hz") {
        sc.source.clock_hz = parse_double(origin, e.line, e.value);
      } else if (e.key == "misalignment") {
        sc.source.misalignment = parse_double(origin, e.line, e.value);
      } else {
        parse_fail(origin, e.line, "unknown [source] key '" + e.key + "'");
      }
    } else if (e.section == "security") {
      if (e.key == "eps_sec") {
        sc.security.eps_sec = parse_double(origin, e.line, e.value);
      } else if (e.key == "eps_cor") {
        sc.security.eps_cor = parse_double(origin, e.line, e.value);
      } else if (e.key == "n_z_block") {
        sc.security.n_z_block = parse_double(origin, e.line, e.value);
      } else if (e.key == "ec_efficiency") {
        sc.security.ec_efficiency = parse_double(origin, e.line, e.value);
      } else if (e.key == "eps_applications") {
        sc.security.eps_applications =
            static_cast<int>(parse_u64(origin, e.line, e.value));
      } else {
        parse_fail(origin, e.line, "unknown [security] key '" + e.key + "'");
      }
    } else if (e.section == "sweep") {
      if (e.key == "start_km") {
        sc.sweep.start_km = parse_double(origin, e.line, e.value);
      } else if (e.key == "end_km") {
        sc.sweep.end_km = parse_double(origin, e.line, e.value);
      } else if (e.key == "step_km") {
        sc.sweep.step_km = parse_double(origin, e.line, e.value);
      } else {
        parse_fail(origin, e.line, "unknown [sweep] key '" + e.key + "'");
      }
    } else if (e.section == "mc") {
      if (e.key == "pulses") {
        sc.mc_pulses = parse_u64(origin, e.line, e.value);
      } else if (e.key == "transmittance") {
        sc.mc_transmittance = parse_double(origin, e.line, e.value);
      } else if (e.key == "threads") {
        sc.mc_threads = static_cast<unsigned>(parse_u64(origin, e.line, e.value));
      } else {
        parse_fail(origin, e.line, "unknown [mc] key '" + e.key + "'");
      }
    } else if (e.section == "output") {
      if (e.key == "format") {
        const std::string f = lower(e.value);
        if (f != "csv" && f != "json") {
          parse_fail(origin, e.line, "format must be csv or json");
        }
        sc.output_format = f;
      } else if (e.key == "path") {
        sc.output_path = e.value;
      } else if (e.key == "seed") {
        sc.seed = parse_u64(origin, e.line, e.value);
      } else {
        parse_fail(origin, e.line, "unknown [output] key '" + e.key + "'");
      }
    } else {
      parse_fail(origin, e.line, "unknown section [" + e.section + "]");
    }
  }

  if (!carrier_label.empty() || carrier_wavelength_nm > 0.0) {
    const std::string label = carrier_label.empty() ? "CUSTOM" : carrier_label;
    const double wl =
        carrier_wavelength_nm > 0.0 ? carrier_wavelength_nm : sc.carrier.wavelength_nm;
    sc.carrier = atmosphere::make_carrier(label, wl);
  }
  if (absorption_given) {
    sc.absorption[sc.carrier.label] = absorption_db_per_km;
  } else if (sc.absorption.find(sc.carrier.label) == sc.absorption.end()) {
    sc.absorption[sc.carrier.label] = 0.0;  // untabulated carriers default clean
  }

  if (sc.sweep.start_km < 0.0 || sc.sweep.end_km < sc.sweep.start_km ||
      sc.sweep.step_km < 0.0) {
    throw ValidationError("sweep range must satisfy 0 <= start <= end, step >= 0");
  }
  return sc;
}

std::vector<double> grid_distances(const SweepPlan& plan) {
  std::vector<double> out;
  constexpr double kEps = 1e-9;
  if (plan.step_km > 0.0) {
    for (long long i = 0;; ++i) {
      const double d = plan.start_km + static_cast<double>(i) * plan.step_km;
      if (d > plan.end_km + kEps) break;
      out.push_back(d);
    }
    return out;
  }
  double d = plan.start_km;
  while (d <= plan.end_km + kEps) {
    out.push_back(d);
    d += d < 50.0 - kEps ? 1.0 : 10.0;
  }
  return out;
}

SweepRow evaluate_distance(const Scenario& sc, double distance_km) {
  atmosphere::PathGeometry geom = sc.geometry;
  geom.distance_km = distance_km;
  const atmosphere::AttenuationBudget budget =
      atmosphere::total_budget(sc.carrier, geom, sc.weather, sc.absorption);
  SweepRow row;
  row.distance_km = distance_km;
  row.geometric_db = budget.geometric_db;
  row.mie_db = budget.mie_db;
  row.rain_db = budget.rain_db;
  row.rayleigh_db = budget.rayleigh_db;
  row.turbulence_db = budget.turbulence_db;
  row.absorption_db = budget.absorption_db;
  row.total_db = budget.total_db;
  row.transmittance = budget.transmittance;

  const detstats::PulseObservables obs =
      detstats::observables(sc.source, sc.receiver, budget.transmittance);
  try {
    const detstats::ExpectedCounts counts = detstats::expected_counts(
        sc.source, sc.receiver, budget.transmittance, sc.security.n_z_block);
    const finitekey::KeyRateResult key =
        finitekey::secure_key_length(counts, sc.source, sc.security);
    row.qber_z = key.qber_z;
    row.qber_x = key.qber_x;
    row.s_z0_lower = key.bounds.s_z0_lower;
    row.s_z1_lower = key.bounds.s_z1_lower;
    row.phi_z_upper = key.bounds.phi_z_upper;
    row.skl_bits = key.skl_bits;
    row.skr_per_pulse = key.skr_per_pulse;
    row.feasible = key.feasible;
  } catch (const InfeasibleError&) {
    // No detections possible: report the detection-weighted error rates and
    // leave the key fields at their empty defaults.
    for (int b = 0; b < 2; ++b) {
      const double w1 = sc.source.p_mu1 * obs.gain[b][0];
      const double w2 = (1.0 - sc.source.p_mu1) * obs.gain[b][1];
      const double q = w1 + w2 > 0.0
                           ? (w1 * obs.qber[b][0] + w2 * obs.qber[b][1]) / (w1 + w2)
                           : 0.5;
      (b == 0 ? row.qber_z : row.qber_x) = q;
    }
    row.skl_bits = 0.0;
    row.skr_per_pulse = 0.0;
    row.feasible = false;
  }
  return row;
}

SweepResult run_sweep(const Scenario& sc) {
  const std::vector<double> grid = grid_distances(sc.sweep);
  SweepResult result;
  result.rows.resize(grid.size());
  unsigned workers = std::thread::hardware_concurrency();
  if (workers == 0) workers = 1;
  workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<size_t>(grid.size(), 1)));

  std::exception_ptr failure = nullptr;
  std::mutex failure_mutex;
  auto body = [&](unsigned offset) {
    try {
      for (size_t i = offset; i < grid.size(); i += workers) {
        result.rows[i] = evaluate_distance(sc, grid[i]);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };
  if (workers <= 1) {
    body(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body, w);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (const SweepRow& row : result.rows) {
    if (row.feasible) {
      result.any_feasible = true;
      result.cutoff_km = std::max(result.cutoff_km, row.distance_km);
    }
  }
  return result;
}

IntensityChoice optimize_intensities(const Scenario& sc, double distance_km,
                                     int grid_points) {
  if (grid_points < 2) throw ValidationError("intensity grid needs at least 2 points");
  IntensityChoice best;
  Scenario probe = sc;
  // mu1 spans (0, 1] photons/pulse; mu2 spans the decoy band below it.
  for (int i = grid_points; i >= 1; --i) {
    const double mu1 = static_cast<double>(i) / grid_points;
    for (int j = grid_points; j >= 1; --j) {
      const double mu2 = 0.8 * mu1 * static_cast<double>(j) / grid_points;
      if (!(mu2 > 0.0) || !(mu2 < mu1)) continue;
      probe.source.mu1 = mu1;
      probe.source.mu2 = mu2;
      const SweepRow row = evaluate_distance(probe, distance_km);
      if (!row.feasible) continue;
      // Strict inequality keeps the first (largest mu1, then mu2) of ties.
      if (!best.feasible || row.skr_per_pulse > best.skr_per_pulse) {
        best.mu1 = mu1;
        best.mu2 = mu2;
        best.skr_per_pulse = row.skr_per_pulse;
        best.feasible = true;
      }
    }
  }
  if (!best.feasible) {
    throw InfeasibleError("no intensity pair on the grid produces key at " +
                          num(distance_km) + " km");
  }
  return best;
}

std::string emit_csv(const SweepResult& result, const Scenario& sc) {
  std::ostringstream out;
  flatten_metadata(scenario_metadata(sc, &result), "", out);
  for (int c = 0; c < kSweepColumns; ++c) {
    out << kSweepHeader[c] << (c + 1 < kSweepColumns ? "," : "\n");
  }
  for (const SweepRow& r : result.rows) {
    out << num(r.distance_km) << ',' << num(r.geometric_db) << ',' << num(r.mie_db)
        << ',' << num(r.rain_db) << ',' << num(r.rayleigh_db) << ','
        << num(r.turbulence_db) << ',' << num(r.absorption_db) << ',' << num(r.total_db)
        << ',' << num(r.transmittance) << ',' << num(r.qber_z) << ',' << num(r.qber_x)
        << ',' << num(r.s_z0_lower) << ',' << num(r.s_z1_lower) << ','
        << num(r.phi_z_upper) << ',' << num(r.skl_bits) << ',' << num(r.skr_per_pulse)
        << ',' << (r.feasible ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string emit_json(const SweepResult& result, const Scenario& sc) {
  ojson doc;
  doc["metadata"] = scenario_metadata(sc, &result);
  doc["metadata"]["columns"] = ojson::array();
  for (int c = 0; c < kSweepColumns; ++c) doc["metadata"]["columns"].push_back(kSweepHeader[c]);
  doc["rows"] = ojson::array();
  for (const SweepRow& r : result.rows) {
    ojson jr;
    jr["distance_km"] = r.distance_km;
    jr["geometric_db"] = r.geometric_db;
    jr["mie_db"] = r.mie_db;
    jr["rain_db"] = r.rain_db;
    jr["rayleigh_db"] = r.rayleigh_db;
    jr["turbulence_db"] = r.turbulence_db;
    jr["absorption_db"] = r.absorption_db;
    jr["total_db"] = r.total_db;
    jr["transmittance"] = r.transmittance;
    jr["qber_z"] = r.qber_z;
    jr["qber_x"] = r.qber_x;
    jr["s_z0_lower"] = r.s_z0_lower;
    jr["s_z1_lower"] = r.s_z1_lower;
    jr["phi_z_upper"] = r.phi_z_upper;
    jr["skl_bits"] = r.skl_bits;
    jr["skr_per_pulse"] = r.skr_per_pulse;
    jr["feasible"] = r.feasible;
    doc["rows"].push_back(std::move(jr));
  }
  return doc.dump(2) + "\n";
}

}  // namespace fsqkd::scenario
