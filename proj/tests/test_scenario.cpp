#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "fsqkd/error.hpp"
#include "fsqkd/scenario.hpp"

using namespace fsqkd;
using namespace fsqkd::scenario;

namespace {

doctest::Approx near(double v, double rel = 1e-9) {
  return doctest::Approx(v).epsilon(rel);
}

Scenario from_text(const std::string& text) {
  std::istringstream in(text);
  return parse_scenario(in, "inline");
}

std::string error_of(const std::string& text) {
  try {
    from_text(text);
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("defaults mirror the telecom trace under clear skies") {
  const Scenario sc = default_scenario();
  CHECK(sc.trace_name == "NIR1550");
  CHECK(sc.weather_name == "CLEAR");
  CHECK(sc.carrier.wavelength_nm == near(1557.7, 1e-12));
  CHECK(sc.weather.visibility_km == near(40.0, 1e-12));
  CHECK(sc.weather.rain_mm_per_hour == 0.0);
  CHECK_FALSE(sc.weather.turbulence_enabled);
  CHECK(sc.geometry.telescope_radius_m == near(0.25, 1e-12));
  CHECK(sc.source.mu1 == near(0.5, 1e-12));
  CHECK(sc.security.eps_sec == near(1e-15, 1e-12));
  CHECK(sc.output_format == "csv");
}

TEST_CASE("weather presets") {
  CHECK(weather_preset_names().size() == 6);
  const auto fog = weather_preset("FOG");
  CHECK(fog.visibility_km == near(1.0, 1e-12));
  CHECK_FALSE(fog.turbulence_enabled);
  const auto fog_t = weather_preset("FOG_TURB");
  CHECK(fog_t.turbulence_enabled);
  CHECK(fog_t.cn2 == near(1e-14, 1e-12));
  const auto rain = weather_preset("RAIN");
  CHECK(rain.visibility_km == near(6.0, 1e-12));
  CHECK(rain.rain_mm_per_hour == near(2.5, 1e-12));
  CHECK_THROWS_AS(weather_preset("SNOW"), ValidationError);
}

TEST_CASE("scenario grammar, happy path") {
  const Scenario sc = from_text(
      "# comment line\n"
      "[hardware]\n"
      "trace = MIR_UPCONV\n"
      "detector_efficiency = 0.2   ; explicit override wins over the trace\n"
      "[weather]\n"
      "preset = RAIN_TURB\n"
      "visibility_km = 8\n"
      "[geometry]\n"
      "telescope_radius_m = 0.30\n"
      "[source]\n"
      "mu1 = 0.6\n"
      "mu2 = 0.2\n"
      "[security]\n"
      "n_z_block = 1e6\n"
      "[sweep]\n"
      "start_km = 1\n"
      "end_km = 30\n"
      "step_km = 1\n"
      "[mc]\n"
      "pulses = 1e5\n"
      "threads = 3\n"
      "[output]\n"
      "format = JSON\n"
      "seed = 99\n");
  CHECK(sc.trace_name == "MIR_UPCONV");
  CHECK(sc.carrier.wavelength_nm == near(3998.6, 1e-12));
  CHECK(sc.receiver.detector.efficiency == near(0.2, 1e-12));  // override kept
  CHECK(sc.weather_name == "RAIN_TURB");
  CHECK(sc.weather.turbulence_enabled);
  CHECK(sc.weather.visibility_km == near(8.0, 1e-12));  // override kept
  CHECK(sc.weather.rain_mm_per_hour == near(2.5, 1e-12));  // preset remainder
  CHECK(sc.geometry.telescope_radius_m == near(0.30, 1e-12));
  CHECK(sc.source.mu1 == near(0.6, 1e-12));
  CHECK(sc.security.n_z_block == near(1e6, 1e-12));
  CHECK(sc.sweep.step_km == near(1.0, 1e-12));
  CHECK(sc.mc_pulses == 100000);
  CHECK(sc.mc_threads == 3);
  CHECK(sc.output_format == "json");
  CHECK(sc.seed == 99);
}

TEST_CASE("overrides win regardless of their position relative to the preset") {
  const Scenario sc = from_text(
      "[hardware]\n"
      "detector_efficiency = 0.33\n"
      "trace = NIR800\n");
  CHECK(sc.trace_name == "NIR800");
  CHECK(sc.receiver.detector.efficiency == near(0.33, 1e-12));
}

TEST_CASE("custom carriers") {
  SUBCASE("wavelength alone relabels to CUSTOM with clean absorption") {
    const Scenario sc = from_text(
        "[hardware]\n"
        "wavelength_nm = 2100\n");
    CHECK(sc.carrier.label == "CUSTOM");
    CHECK(sc.carrier.wavelength_nm == near(2100.0, 1e-12));
    CHECK(sc.absorption.at("CUSTOM") == 0.0);
  }
  SUBCASE("explicit absorption attaches to the custom label") {
    const Scenario sc = from_text(
        "[hardware]\n"
        "label = BAND2\n"
        "wavelength_nm = 2100\n"
        "absorption_db_per_km = 0.05\n");
    CHECK(sc.carrier.label == "BAND2");
    CHECK(sc.absorption.at("BAND2") == near(0.05, 1e-12));
  }
}

TEST_CASE("grammar failures carry the origin and line number") {
  CHECK(error_of("[hardware]\nbogus_key = 1\n").find("inline:2") != std::string::npos);
  CHECK(error_of("[nosuch]\nx = 1\n").find("unknown section") != std::string::npos);
  CHECK(error_of("key_without_section = 1\n").find("inline:1") != std::string::npos);
  CHECK(error_of("[hardware\ntrace = NIR800\n").find("unterminated") != std::string::npos);
  CHECK(error_of("[source]\nmu1 = abc\n").find("expected a number") != std::string::npos);
  CHECK(error_of("[source]\nmu1 =\n").find("empty value") != std::string::npos);
  CHECK(error_of("[mc]\npulses = -5\n").find("non-negative") != std::string::npos);
  CHECK(error_of("[output]\nformat = yaml\n").find("csv or json") != std::string::npos);
  CHECK(error_of("[sweep]\nstart_km = 5\nend_km = 1\n").find("sweep range") !=
        std::string::npos);
  CHECK_THROWS_AS(from_text("[hardware]\nbogus = 1\n"), ParseError);
  CHECK_THROWS_AS(parse_scenario_file("/no/such/file.ini"), ValidationError);
}

TEST_CASE("distance grids") {
  SUBCASE("explicit step") {
    SweepPlan plan{0.0, 10.0, 2.5};
    const std::vector<double> g = grid_distances(plan);
    REQUIRE(g.size() == 5);
    CHECK(g.front() == 0.0);
    CHECK(g.back() == near(10.0, 1e-12));
  }
  SUBCASE("default graded grid: fine to 50 km, coarse beyond") {
    SweepPlan plan{0.0, 100.0, 0.0};
    const std::vector<double> g = grid_distances(plan);
    REQUIRE(g.size() == 56);  // 0..50 in 1s, 60..100 in 10s
    CHECK(g[50] == near(50.0, 1e-12));
    CHECK(g[51] == near(60.0, 1e-12));
    CHECK(g.back() == near(100.0, 1e-12));
  }
  SUBCASE("floating point end points are kept") {
    SweepPlan plan{0.0, 1.0, 0.1};
    CHECK(grid_distances(plan).size() == 11);
  }
}

TEST_CASE("single distance evaluation matches the frozen pipeline") {
  const Scenario sc = default_scenario();
  SUBCASE("zero distance is lossless except the receiver") {
    const SweepRow row = evaluate_distance(sc, 0.0);
    CHECK(row.total_db == 0.0);
    CHECK(row.transmittance == 1.0);
    CHECK(row.feasible);
    CHECK(row.skl_bits == 42429626.0);
    CHECK(row.skr_per_pulse == near(0.0078548494903657087));
    CHECK(row.qber_z == near(0.009999990099999901));
    CHECK(row.s_z1_lower == near(64500672.7187846));
    CHECK(row.phi_z_upper == near(0.031505584786361854));
  }
  SUBCASE("100 km clear telecom link") {
    const SweepRow row = evaluate_distance(sc, 100.0);
    CHECK(row.total_db == near(11.0868224785813));
    CHECK(row.transmittance == near(0.077860601082654413));
    CHECK(row.feasible);
    CHECK(row.skl_bits == 37190643.0);
    CHECK(row.s_z1_lower == near(58485026.707312658));
    CHECK(row.phi_z_upper == near(0.033031196302005954));
  }
  SUBCASE("a hopeless distance reports infeasible instead of throwing") {
    Scenario fog = default_scenario();
    apply_weather(fog, "FOG");
    const SweepRow row = evaluate_distance(fog, 100.0);
    CHECK_FALSE(row.feasible);
    CHECK(row.skl_bits == 0.0);
    CHECK(row.skr_per_pulse == 0.0);
    CHECK(row.qber_z >= 0.0);
    CHECK(row.qber_z <= 0.5);
  }
}

TEST_CASE("sweeps") {
  Scenario sc = default_scenario();
  sc.sweep = SweepPlan{0.0, 30.0, 5.0};
  const SweepResult res = run_sweep(sc);
  REQUIRE(res.rows.size() == 7);
  CHECK(res.any_feasible);
  CHECK(res.cutoff_km == near(30.0, 1e-12));

  SUBCASE("rows carry their grid distance in order") {
    for (size_t i = 0; i < res.rows.size(); ++i) {
      CHECK(res.rows[i].distance_km == near(5.0 * static_cast<double>(i), 1e-12));
    }
  }
  SUBCASE("key rate decays with distance while feasible") {
    for (size_t i = 1; i < res.rows.size(); ++i) {
      CHECK(res.rows[i].skr_per_pulse <= res.rows[i - 1].skr_per_pulse);
    }
  }
  SUBCASE("an all-infeasible sweep says so") {
    Scenario fog = default_scenario();
    apply_weather(fog, "FOG");
    fog.sweep = SweepPlan{80.0, 100.0, 10.0};
    const SweepResult dead = run_sweep(fog);
    CHECK_FALSE(dead.any_feasible);
    CHECK(dead.cutoff_km == 0.0);
    for (const SweepRow& r : dead.rows) CHECK_FALSE(r.feasible);
  }
}

TEST_CASE("intensity optimization") {
  Scenario sc = default_scenario();
  SUBCASE("the optimum beats the defaults at 100 km") {
    const SweepRow base = evaluate_distance(sc, 100.0);
    const IntensityChoice pick = optimize_intensities(sc, 100.0, 12);
    CHECK(pick.feasible);
    CHECK(pick.mu2 < pick.mu1);
    CHECK(pick.skr_per_pulse >= base.skr_per_pulse);
  }
  SUBCASE("deterministic across calls") {
    const IntensityChoice a = optimize_intensities(sc, 50.0, 8);
    const IntensityChoice b = optimize_intensities(sc, 50.0, 8);
    CHECK(a.mu1 == b.mu1);
    CHECK(a.mu2 == b.mu2);
    CHECK(a.skr_per_pulse == b.skr_per_pulse);
  }
  SUBCASE("hopeless channels throw") {
    Scenario fog = default_scenario();
    apply_weather(fog, "FOG");
    CHECK_THROWS_AS(optimize_intensities(fog, 100.0, 6), InfeasibleError);
  }
  CHECK_THROWS_AS(optimize_intensities(sc, 10.0, 1), ValidationError);
}

TEST_CASE("csv emission") {
  Scenario sc = default_scenario();
  sc.sweep = SweepPlan{0.0, 10.0, 5.0};
  const SweepResult res = run_sweep(sc);
  const std::string csv = emit_csv(res, sc);

  SUBCASE("metadata lines then header then one line per row") {
    std::istringstream in(csv);
    std::string line;
    int meta = 0;
    while (std::getline(in, line) && !line.empty() && line[0] == '#') ++meta;
    CHECK(meta > 20);  // every parameter surfaces
    // `line` now holds the header.
    int commas = 0;
    for (char c : line) commas += c == ',';
    CHECK(commas == kSweepColumns - 1);
    CHECK(line.rfind("distance_km,", 0) == 0);
    int rows = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      ++rows;
      commas = 0;
      for (char c : line) commas += c == ',';
      CHECK(commas == kSweepColumns - 1);
    }
    CHECK(rows == 3);
  }
  SUBCASE("metadata records the run parameters") {
    CHECK(csv.find("# seed = 1\n") != std::string::npos);
    CHECK(csv.find("# trace = \"NIR1550\"\n") != std::string::npos);
    CHECK(csv.find("# source.mu1 = 0.5\n") != std::string::npos);
    CHECK(csv.find("# cutoff_km = 10.0\n") != std::string::npos);
  }
  SUBCASE("byte identical across repeated runs") {
    const SweepResult res2 = run_sweep(sc);
    CHECK(emit_csv(res2, sc) == csv);
  }
}

TEST_CASE("json emission round-trips") {
  Scenario sc = default_scenario();
  sc.sweep = SweepPlan{0.0, 10.0, 10.0};
  const SweepResult res = run_sweep(sc);
  const std::string text = emit_json(res, sc);
  const nlohmann::json doc = nlohmann::json::parse(text);

  REQUIRE(doc.contains("metadata"));
  REQUIRE(doc.contains("rows"));
  CHECK(doc["metadata"]["trace"] == "NIR1550");
  CHECK(doc["metadata"]["columns"].size() == kSweepColumns);
  REQUIRE(doc["rows"].size() == 2);
  const auto& r0 = doc["rows"][0];
  CHECK(r0["distance_km"].get<double>() == 0.0);
  CHECK(r0["feasible"].get<bool>());
  CHECK(r0["skl_bits"].get<double>() == res.rows[0].skl_bits);
  CHECK(r0["skr_per_pulse"].get<double>() == res.rows[0].skr_per_pulse);

  SUBCASE("csv and json agree on the numbers") {
    const std::string csv = emit_csv(res, sc);
    const std::string want = nlohmann::json(res.rows[1].skr_per_pulse).dump();
    CHECK(csv.find(want) != std::string::npos);
  }
}
