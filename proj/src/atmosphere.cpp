#include "fsqkd/atmosphere.hpp"

#include <cmath>

#include "fsqkd/error.hpp"

namespace fsqkd::atmosphere {

namespace {

constexpr double kTenLog10E = 4.342944819032518;  // 10*log10(e)

// Exact SI defining constants.
constexpr double kPlanck = 6.62607015e-34;   // [J s]
constexpr double kLightSpeed = 2.99792458e8;  // [m/s]
constexpr double kBoltzmann = 1.380649e-23;  // [J/K]
constexpr double kWienUmK = 2897.77;         // [um K]

void require(bool ok, const char* what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace

OpticalCarrier make_carrier(const std::string& label, double wavelength_nm) {
  require(std::isfinite(wavelength_nm) && wavelength_nm > 0.0,
          "carrier wavelength must be positive");
  OpticalCarrier c;
  c.label = label;
  c.wavelength_nm = wavelength_nm;
  c.wavelength_um = wavelength_nm * 1e-3;
  c.wavenumber_per_cm = 1e4 / c.wavelength_um;
  c.angular_wavenumber_per_m = 2.0 * M_PI / (wavelength_nm * 1e-9);
  return c;
}

AbsorptionTable default_absorption_table() {
  return {{"NIR800", 0.0}, {"NIR1550", 1e-3}, {"MIR3998", 1.9e-3}};
}

double rayleigh_range_km(const PathGeometry& geom, const OpticalCarrier& carrier) {
  require(geom.telescope_radius_m > 0.0, "telescope radius must be positive");
  const double wavelength_m = carrier.wavelength_nm * 1e-9;
  // r_rx = sqrt(2)*w0, hence pi*r^2 / (2*lambda) = pi*w0^2 / lambda.
  return M_PI * geom.telescope_radius_m * geom.telescope_radius_m /
         (2.0 * wavelength_m) / 1000.0;
}

double geometric_loss_db(double distance_km, const PathGeometry& geom,
                         const OpticalCarrier& carrier) {
  require(distance_km >= 0.0, "distance must be non-negative");
  const double z_km = rayleigh_range_km(geom, carrier);
  if (distance_km <= 2.0 * z_km) return 0.0;
  const double u = (distance_km - z_km) / z_km;
  return 10.0 * std::log10(0.5 * (1.0 + u * u));
}

double mie_loss_db_per_km(const OpticalCarrier& carrier, const WeatherScenario& weather) {
  const double v = weather.visibility_km;
  require(std::isfinite(v) && v > 0.0, "visibility must be positive");
  double p;
  if (v > 50.0) {
    p = 1.6;
  } else if (v >= 6.0) {
    p = 1.3;
  } else {
    p = 0.585 * std::cbrt(v);
  }
  return kTenLog10E * (3.91 / v) * std::pow(carrier.wavelength_nm / 550.0, -p);
}

double rain_loss_db_per_km(const WeatherScenario& weather) {
  const double r = weather.rain_mm_per_hour;
  require(std::isfinite(r) && r >= 0.0, "rain rate must be non-negative");
  if (r == 0.0) return 0.0;
  return 1.076 * std::pow(r, 0.67);
}

double rayleigh_scatter_db_per_km(const OpticalCarrier& carrier) {
  const double nu = carrier.wavenumber_per_cm;
  const double den = 9.26799e18 - 1.07123e9 * nu * nu;
  if (den <= 0.0) {
    throw ValidationError("carrier '" + carrier.label +
                          "' outside the molecular scattering fit domain");
  }
  return nu * nu * nu * nu / den;
}

double turbulence_loss_db(const OpticalCarrier& carrier, double distance_km, double cn2) {
  require(distance_km >= 0.0, "distance must be non-negative");
  require(std::isfinite(cn2) && cn2 >= 0.0, "cn2 must be non-negative");
  if (distance_km == 0.0 || cn2 == 0.0) return 0.0;
  const double k = carrier.angular_wavenumber_per_m;
  const double d_m = distance_km * 1000.0;
  const double rytov_var = 1.23 * std::pow(k, 7.0 / 6.0) * cn2 * std::pow(d_m, 11.0 / 6.0);
  return 2.0 * std::sqrt(rytov_var);
}

double absorption_db_per_km(const OpticalCarrier& carrier, const AbsorptionTable& table) {
  const auto it = table.find(carrier.label);
  if (it == table.end()) {
    throw ValidationError("no absorption entry for carrier '" + carrier.label + "'");
  }
  require(it->second >= 0.0, "absorption must be non-negative");
  return it->second;
}

AttenuationBudget total_budget(const OpticalCarrier& carrier, const PathGeometry& geom,
                               const WeatherScenario& weather, const AbsorptionTable& table) {
  const double d = geom.distance_km;
  require(d >= 0.0, "distance must be non-negative");
  AttenuationBudget b;
  b.distance_km = d;
  b.geometric_db = geometric_loss_db(d, geom, carrier);
  b.mie_db = mie_loss_db_per_km(carrier, weather) * d;
  b.rain_db = rain_loss_db_per_km(weather) * d;
  b.rayleigh_db = rayleigh_scatter_db_per_km(carrier) * d;
  b.turbulence_db =
      weather.turbulence_enabled ? turbulence_loss_db(carrier, d, weather.cn2) : 0.0;
  b.absorption_db = absorption_db_per_km(carrier, table) * d;
  b.total_db = b.geometric_db + b.mie_db + b.rain_db + b.rayleigh_db +
               b.turbulence_db + b.absorption_db;
  b.transmittance = std::pow(10.0, -b.total_db / 10.0);
  return b;
}

double blackbody_spectral_radiance(double temperature_k, double wavelength_um) {
  require(temperature_k > 0.0, "temperature must be positive");
  require(wavelength_um > 0.0, "wavelength must be positive");
  const double lam = wavelength_um * 1e-6;  // [m]
  const double x = kPlanck * kLightSpeed / (lam * kBoltzmann * temperature_k);
  const double per_m =
      2.0 * kPlanck * kLightSpeed * kLightSpeed / std::pow(lam, 5) / std::expm1(x);
  return per_m * 1e-6;  // [W m^-2 sr^-1 um^-1]
}

double wien_peak_um(double temperature_k) {
  require(temperature_k > 0.0, "temperature must be positive");
  return kWienUmK / temperature_k;
}

}  // namespace fsqkd::atmosphere
