#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fsqkd/error.hpp"
#include "fsqkd/scenario.hpp"
#include "fsqkd/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitInfeasible = 2;

/// Counts accept both plain integers and 1e7-style notation, matching the
/// scenario grammar.
std::uint64_t parse_count(const std::string& text, const char* what) {
  try {
    size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || v < 0.0 || v != std::floor(v) || v > 1.8e19) {
      throw std::invalid_argument(text);
    }
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw fsqkd::ValidationError(std::string(what) + " must be a non-negative integer, got '" +
                                 text + "'");
  }
}

struct CommonOpts {
  std::string scenario_path;
  std::string weather;
  std::string trace;
  std::string out_path;
  std::string format;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--scenario", opts.scenario_path, "scenario file (INI grammar, see README)");
  cmd->add_option("--preset", opts.weather, "weather preset (CLEAR, RAIN, FOG, *_TURB)");
  cmd->add_option("--trace", opts.trace, "hardware preset (NIR800, NIR1550, MIR_*)");
  cmd->add_option("--out", opts.out_path, "output path ('-' for stdout)");
  cmd->add_option("--format", opts.format, "output format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--seed", opts.seed, "RNG seed recorded in metadata")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
}

fsqkd::scenario::Scenario resolve(const CommonOpts& opts) {
  fsqkd::scenario::Scenario sc = opts.scenario_path.empty()
                                     ? fsqkd::scenario::default_scenario()
                                     : fsqkd::scenario::parse_scenario_file(opts.scenario_path);
  if (!opts.trace.empty()) fsqkd::scenario::apply_trace(sc, opts.trace);
  if (!opts.weather.empty()) fsqkd::scenario::apply_weather(sc, opts.weather);
  if (!opts.out_path.empty()) sc.output_path = opts.out_path;
  if (!opts.format.empty()) sc.output_format = opts.format;
  if (opts.seed_set) sc.seed = opts.seed;
  return sc;
}

void write_output(const fsqkd::scenario::Scenario& sc, const std::string& text) {
  if (sc.output_path.empty() || sc.output_path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(sc.output_path, std::ios::binary);
  if (!out) throw fsqkd::ValidationError("cannot write '" + sc.output_path + "'");
  out << text;
}

int run_budget(const CommonOpts& opts, double distance_km) {
  using nlohmann::ordered_json;
  const auto sc = resolve(opts);
  const auto row = fsqkd::scenario::evaluate_distance(sc, distance_km);
  ordered_json j;
  j["distance_km"] = row.distance_km;
  j["geometric_db"] = row.geometric_db;
  j["mie_db"] = row.mie_db;
  j["rain_db"] = row.rain_db;
  j["rayleigh_db"] = row.rayleigh_db;
  j["turbulence_db"] = row.turbulence_db;
  j["absorption_db"] = row.absorption_db;
  j["total_db"] = row.total_db;
  j["transmittance"] = row.transmittance;
  j["qber_z"] = row.qber_z;
  j["qber_x"] = row.qber_x;
  j["skl_bits"] = row.skl_bits;
  j["skr_per_pulse"] = row.skr_per_pulse;
  j["feasible"] = row.feasible;
  write_output(sc, j.dump(2) + "\n");
  return kExitOk;
}

int run_sweep_cmd(const CommonOpts& opts) {
  const auto sc = resolve(opts);
  const auto result = fsqkd::scenario::run_sweep(sc);
  write_output(sc, sc.output_format == "json" ? fsqkd::scenario::emit_json(result, sc)
                                              : fsqkd::scenario::emit_csv(result, sc));
  if (!result.any_feasible) {
    std::cerr << "sweep produced no feasible distance\n";
    return kExitInfeasible;
  }
  return kExitOk;
}

int run_mc(const CommonOpts& opts, std::uint64_t pulses, double tau, unsigned threads,
           bool have_pulses, bool have_tau) {
  using nlohmann::ordered_json;
  const auto sc = resolve(opts);
  fsqkd::mcsim::McConfig cfg;
  cfg.source = sc.source;
  cfg.receiver = sc.receiver;
  cfg.transmittance = have_tau ? tau : sc.mc_transmittance;
  cfg.n_pulses = have_pulses ? pulses : sc.mc_pulses;
  cfg.seed = sc.seed;
  cfg.threads = threads != 0 ? threads : sc.mc_threads;
  const auto tally = fsqkd::mcsim::simulate_block(cfg);
  const auto cmp = fsqkd::mcsim::compare_to_analytic(tally, cfg);

  ordered_json j;
  j["pulses"] = cfg.n_pulses;
  j["transmittance"] = cfg.transmittance;
  j["seed"] = cfg.seed;
  const char* basis_name[2] = {"Z", "X"};
  const char* inten_name[2] = {"mu1", "mu2"};
  for (int b = 0; b < 2; ++b) {
    for (int i = 0; i < 2; ++i) {
      ordered_json cell;
      cell["sent"] = tally.sent[b][i];
      cell["sifted"] = tally.sifted[b][i];
      cell["errors"] = tally.errors[b][i];
      cell["z_gain"] = cmp.z_gain[b][i];
      cell["z_qber"] = cmp.z_qber[b][i];
      j["cells"][std::string(basis_name[b]) + "_" + inten_name[i]] = cell;
    }
  }
  j["max_abs_z"] = cmp.max_abs_z;
  j["within_5_sigma"] = cmp.max_abs_z <= 5.0;
  write_output(sc, j.dump(2) + "\n");
  return kExitOk;
}

int run_blackbody(const CommonOpts& opts, std::vector<double> temps, double lmin_um,
                  double lmax_um, int points) {
  const auto sc = resolve(opts);
  if (temps.empty()) temps = {5778.0, 288.0};
  if (!(lmin_um > 0.0) || !(lmax_um > lmin_um) || points < 2) {
    throw fsqkd::ValidationError("blackbody grid must satisfy 0 < min < max, points >= 2");
  }
  std::ostringstream out;
  out << "# " << fsqkd::kToolName << " " << fsqkd::kVersion << "\n";
  out << "# wien_peak_um =";
  for (double t : temps) out << " " << fsqkd::atmosphere::wien_peak_um(t);
  out << "\nwavelength_um";
  for (double t : temps) out << ",radiance_" << t << "K";
  out << "\n";
  // Log-spaced grid; the interesting span covers four decades.
  const double ratio = std::pow(lmax_um / lmin_um, 1.0 / (points - 1));
  double lam = lmin_um;
  for (int i = 0; i < points; ++i, lam *= ratio) {
    out << lam;
    for (double t : temps) {
      out << "," << fsqkd::atmosphere::blackbody_spectral_radiance(t, lam);
    }
    out << "\n";
  }
  write_output(sc, out.str());
  return kExitOk;
}

int run_presets() {
  using nlohmann::ordered_json;
  ordered_json j;
  for (const auto& p : fsqkd::receiver::hardware_presets()) {
    ordered_json t;
    t["wavelength_nm"] = p.carrier.wavelength_nm;
    t["carrier_label"] = p.carrier.label;
    t["detector_efficiency"] = p.receiver.detector.efficiency;
    t["dark_count_hz"] = p.receiver.detector.dark_count_hz;
    t["dead_time_ns"] = p.receiver.detector.dead_time_s * 1e9;
    t["absorption_db_per_km"] = p.absorption_db_per_km;
    j["traces"][p.name] = t;
  }
  for (const auto& name : fsqkd::scenario::weather_preset_names()) {
    const auto w = fsqkd::scenario::weather_preset(name);
    ordered_json t;
    t["visibility_km"] = w.visibility_km;
    t["rain_mm_per_hour"] = w.rain_mm_per_hour;
    t["turbulence"] = w.turbulence_enabled;
    t["cn2"] = w.cn2;
    j["weather"][name] = t;
  }
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("free-space QKD link simulator (") + fsqkd::kVersion + ")"};
  app.require_subcommand(1);

  CommonOpts budget_opts;
  double budget_distance = 0.0;
  auto* budget = app.add_subcommand("budget", "attenuation and key figures at one distance");
  add_common(budget, budget_opts);
  budget->add_option("--distance", budget_distance, "link distance [km]")->required();

  CommonOpts sweep_opts;
  auto* sweep = app.add_subcommand("sweep", "key rate vs distance table");
  add_common(sweep, sweep_opts);

  CommonOpts mc_opts;
  std::string mc_pulses_text;
  double mc_tau = 0.0;
  unsigned mc_threads = 0;
  auto* mc = app.add_subcommand("mc", "Monte Carlo block vs analytic model");
  add_common(mc, mc_opts);
  auto* pulses_opt =
      mc->add_option("--pulses", mc_pulses_text, "clock slots to simulate (e.g. 1e7)");
  auto* tau_opt = mc->add_option("--tau", mc_tau, "channel transmittance");
  mc->add_option("--threads", mc_threads, "worker threads (0 = hardware)");

  CommonOpts bb_opts;
  std::vector<double> bb_temps;
  double bb_lmin = 0.2, bb_lmax = 30.0;
  int bb_points = 200;
  auto* bb = app.add_subcommand("blackbody", "thermal background radiance table");
  add_common(bb, bb_opts);
  bb->add_option("--temperature", bb_temps, "temperatures [K] (default sun and earth)");
  bb->add_option("--lambda-min", bb_lmin, "start wavelength [um]");
  bb->add_option("--lambda-max", bb_lmax, "end wavelength [um]");
  bb->add_option("--points", bb_points, "table rows");

  auto* presets = app.add_subcommand("presets", "list hardware and weather presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (budget->parsed()) return run_budget(budget_opts, budget_distance);
    if (sweep->parsed()) return run_sweep_cmd(sweep_opts);
    if (mc->parsed()) {
      const bool have_pulses = pulses_opt->count() > 0;
      const std::uint64_t pulses = have_pulses ? parse_count(mc_pulses_text, "--pulses") : 0;
      return run_mc(mc_opts, pulses, mc_tau, mc_threads, have_pulses,
                    tau_opt->count() > 0);
    }
    if (bb->parsed()) return run_blackbody(bb_opts, bb_temps, bb_lmin, bb_lmax, bb_points);
    if (presets->parsed()) return run_presets();
  } catch (const fsqkd::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const fsqkd::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}
