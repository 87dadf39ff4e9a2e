#pragma once

#include <map>
#include <string>

namespace fsqkd::atmosphere {

/// Monochromatic optical carrier. Wavenumbers are derived on construction;
/// wavenumber_per_cm * wavelength_nm == 1e7 holds by definition.
struct OpticalCarrier {
  std::string label;
  double wavelength_nm = 0.0;
  double wavelength_um = 0.0;
  double wavenumber_per_cm = 0.0;        // spectroscopic, 1e4 / wavelength_um
  double angular_wavenumber_per_m = 0.0;  // 2*pi / wavelength_m
};

/// Builds a carrier and fills the derived wavenumbers. Throws ValidationError
/// for non-positive wavelengths.
OpticalCarrier make_carrier(const std::string& label, double wavelength_nm);

/// Link geometry. The receiver telescope radius equals sqrt(2) times the
/// beam waist placed at mid link, so the radius alone fixes the divergence.
struct PathGeometry {
  double distance_km = 0.0;
  double telescope_radius_m = 0.25;
};

struct WeatherScenario {
  double visibility_km = 40.0;
  double rain_mm_per_hour = 0.0;
  bool turbulence_enabled = false;
  double cn2 = 1e-14;  // refractive index structure constant [m^-2/3]
};

/// Molecular absorption [dB/km] keyed by carrier label.
using AbsorptionTable = std::map<std::string, double>;

/// Table for the built-in carriers. The 800 nm entry is pinned to exactly
/// 0 dB/km (no tabulated value for that window; choice recorded in README).
AbsorptionTable default_absorption_table();

/// Per-mechanism attenuation for one link distance. Component fields are the
/// totals over the path [dB], never negative, and sum to total_db.
struct AttenuationBudget {
  double distance_km = 0.0;
  double geometric_db = 0.0;
  double mie_db = 0.0;
  double rain_db = 0.0;
  double rayleigh_db = 0.0;
  double turbulence_db = 0.0;
  double absorption_db = 0.0;
  double total_db = 0.0;
  double transmittance = 1.0;  // 10^(-total_db/10)
};

/// Distance at which the beam cross section doubles [km].
double rayleigh_range_km(const PathGeometry& geom, const OpticalCarrier& carrier);

/// Diffraction spill-over past the receiver aperture [dB]. Zero through twice
/// the Rayleigh range, 10*log10(0.5*(1+((d-Z)/Z)^2)) beyond.
double geometric_loss_db(double distance_km, const PathGeometry& geom,
                         const OpticalCarrier& carrier);

/// Aerosol (Mie) extinction from visibility [dB/km]. Size-distribution
/// exponent: 1.6 above 50 km visibility, 1.3 from 6 to 50 km (boundaries
/// inclusive), 0.585*V^(1/3) below 6 km.
double mie_loss_db_per_km(const OpticalCarrier& carrier, const WeatherScenario& weather);

/// Rainfall extinction [dB/km]; wavelength independent. Zero for zero rate.
double rain_loss_db_per_km(const WeatherScenario& weather);

/// Molecular (Rayleigh) scattering [dB/km] from the spectroscopic wavenumber.
/// Throws ValidationError once the empirical denominator is non-positive
/// (wavelengths shorter than roughly 108 nm).
double rayleigh_scatter_db_per_km(const OpticalCarrier& carrier);

/// Scintillation loss over the whole path [dB], weak-fluctuation Rytov
/// scaling; not a per-km rate.
double turbulence_loss_db(const OpticalCarrier& carrier, double distance_km, double cn2);

/// Table lookup [dB/km]. Throws ValidationError naming the label when absent.
double absorption_db_per_km(const OpticalCarrier& carrier, const AbsorptionTable& table);

/// Full budget at geom.distance_km under the given weather.
AttenuationBudget total_budget(const OpticalCarrier& carrier, const PathGeometry& geom,
                               const WeatherScenario& weather, const AbsorptionTable& table);

/// Planck spectral radiance [W m^-2 sr^-1 um^-1]. Diagnostic output only;
/// background light is not folded into the detection model.
double blackbody_spectral_radiance(double temperature_k, double wavelength_um);

/// Wien displacement peak [um].
double wien_peak_um(double temperature_k);

}  // namespace fsqkd::atmosphere
