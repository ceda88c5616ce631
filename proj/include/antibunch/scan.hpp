#pragma once
#include <antibunch/emitter.hpp>

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace antibunch {

/// Confocal response and raster geometry. The point spread function is a
/// Gaussian core carrying 1 - halo_fraction of the collected energy plus a
/// uniform disk ("halo") carrying the rest.
struct OpticsModel {
  double psf_fwhm_nm = 500.0;
  double halo_fraction = 0.8;
  double halo_diameter_um = 3.0;
  double pixel_size_nm = 60.0;
  double dwell_time_ms = 32.0;
  int columns = 83;             ///< 5 um at 60 nm
  int rows = 83;
  double center_x_um = 0.0;     ///< position of the raster center
  double center_y_um = 0.0;

  double core_sigma_nm() const;
  double halo_radius_nm() const { return 500.0 * halo_diameter_um; }
  double dwell_time_s() const { return dwell_time_ms * 1e-3; }
  /// Pixel-center coordinates; pixel (r, c) sits at (x_nm(c), y_nm(r)).
  double x_nm(int column) const;
  double y_nm(int row) const;
  void validate() const;
};

/// PSF energy density (1/nm^2) at distance r; integrates to 1 over the plane.
double psf_core_density(const OpticsModel& optics, double r_nm);
double psf_halo_density(const OpticsModel& optics, double r_nm);
inline double psf_density(const OpticsModel& optics, double r_nm) {
  return psf_core_density(optics, r_nm) + psf_halo_density(optics, r_nm);
}
/// Fraction of the PSF energy inside radius r, core and halo parts.
double psf_core_energy(const OpticsModel& optics, double r_nm);
double psf_halo_energy(const OpticsModel& optics, double r_nm);

/// Rate seen at distance r from an emitter whose Gaussian-peak signal is
/// `signal`: signal * psf(r) / psf_core(0). The halo adds a plateau of
/// halo_plateau_ratio() * signal out to the halo radius.
double psf_response(const OpticsModel& optics, double r_nm);
double halo_plateau_ratio(const OpticsModel& optics);

/// One emitter in the scanned field. The pump follows the laser power
/// linearly (pump_per_mW); the detected Gaussian-peak signal is the emission
/// rate times collection_efficiency.
struct ScanEmitter {
  CalibratedEmitter emitter;
  double collection_efficiency = 0.0;

  Position position() const { return emitter.params.position; }
  /// Detected peak signal in 1/s at the given laser power.
  double signal_rate(double power_mW) const;
};

/// Row-major grid of photon counts.
struct ScanImage {
  int rows = 0;
  int columns = 0;
  double pixel_size_nm = 0.0;
  double dwell_time_ms = 0.0;
  std::vector<std::uint64_t> counts;

  std::uint64_t at(int row, int column) const { return counts[static_cast<std::size_t>(row * columns + column)]; }
  std::vector<double> row(int r) const;
  std::vector<double> column(int c) const;
  std::uint64_t total() const;

  friend bool operator==(const ScanImage&, const ScanImage&) = default;
};

/// Expected counts per pixel (rate times dwell), row-major like ScanImage.
struct RateMap {
  int rows = 0;
  int columns = 0;
  std::vector<double> expected_counts;

  double at(int row, int column) const { return expected_counts[static_cast<std::size_t>(row * columns + column)]; }
  double total() const;
};

/// Per pixel: sum over emitters of S(power) * psf_response(distance) plus a
/// uniform background background_coeff * power, times the dwell time.
RateMap expected_rate_map(std::span<const ScanEmitter> emitters, const OpticsModel& optics, double power_mW,
                          double background_coeff);

/// Poisson draw of expected_rate_map. Row r uses the substream
/// derive_seed(seed, scan, r), so the image depends only on (seed, layout).
ScanImage render_scan(std::span<const ScanEmitter> emitters, const OpticsModel& optics, double power_mW,
                      double background_coeff, std::uint64_t seed);

/// Gaussian-plus-constant fit of one line of a scan.
struct LineFit {
  bool peak_found = false;
  bool converged = false;
  double signal_per_s = 0.0;      ///< Gaussian amplitude
  double background_per_s = 0.0;  ///< constant offset
  double rho = 0.0;               ///< S / (S + B) at the peak
  double fwhm_nm = 0.0;
  double center_nm = 0.0;         ///< relative to the first sample
  double signal_sigma = 0.0;
  double background_sigma = 0.0;
  double fwhm_sigma = 0.0;
  std::size_t samples_used = 0;
};

/// Least-squares fit of A exp(-(x - x0)^2 / (2 s^2)) + B to the counts at
/// positions i * pixel_size. Only samples within window_nm of the brightest
/// sample enter the fit. A line without a sample at least 3 Poisson
/// standard deviations above its median gives peak_found = false and
/// rho = 0.
LineFit fit_line_profile(std::span<const double> line, double pixel_size_nm, double dwell_time_ms,
                         double window_nm = std::numeric_limits<double>::infinity());

/// Signal and background levels versus laser power.
struct SaturationPoint {
  double power_mW = 0.0;
  double signal_per_s = 0.0;
  double background_per_s = 0.0;
};

/// Everything needed to reproduce the reported raster scan.
struct ScanPreset {
  std::vector<ScanEmitter> emitters;
  OpticsModel optics;
  double power_mW = 15.0;
  double background_coeff = 0.0;  ///< uniform background, 1/s per mW
  /// Half-width of the line-fit window. Inside the halo the background is
  /// flat, so the Gaussian-plus-constant model is exact there.
  double fit_window_nm = 0.0;
};

/// One centered emitter of the default calibration, collected with the
/// reported efficiency summed over both photodiodes (2 x 0.0014), on a
/// 5 x 5 um raster with 60 nm pixels and 32 ms dwell at 15 mW. The uniform
/// background is chosen so that the fitted S/(S+B) at the peak is 0.34.
ScanPreset paper_scan_preset();

/// S(P) = S_max P / (P + P_sat) from the emitter's steady state and
/// B(P) = background_coeff * P. Uses the first emitter of the preset.
std::vector<SaturationPoint> saturation_curve(std::span<const double> powers_mW, const ScanPreset& preset);

/// Limits of the saturation law for the preset's first emitter: detected
/// S_max, saturation power, and the emission bound S_max / collection.
struct SaturationConstants {
  double signal_max_per_s = 0.0;
  double saturation_power_mW = 0.0;
  double emission_max_per_s = 0.0;
};
SaturationConstants saturation_constants(const ScanPreset& preset);

/// Ground-truth S/(S+B) at the first emitter's position, with the halo
/// plateau of all emitters and the uniform background counted as B.
double true_rho(const ScanPreset& preset);

ScanImage render_preset(const ScanPreset& preset, std::uint64_t seed);

/// Index of the row through the brightest 3x3-averaged pixel.
int brightest_row(const ScanImage& image);

/// Line fit of the row through the brightest spot.
LineFit fit_brightest_line(const ScanImage& image, double window_nm);

}  // namespace antibunch
