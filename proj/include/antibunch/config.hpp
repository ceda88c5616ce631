#pragma once
#include <antibunch/correlator.hpp>
#include <antibunch/detection.hpp>
#include <antibunch/emitter.hpp>
#include <antibunch/pipeline.hpp>
#include <antibunch/scan.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace antibunch {

/// `count` identical, co-located copies of one resolved emitter.
struct EmitterGroup {
  std::string preset = "paper";
  int count = 1;
  double power_mW = 15.0;
  EmitterParams params;
};

/// Fully resolved run description. Parsed from an INI-style file:
///
///   [run]        seed, duration_s, output
///   [emitter]    preset (paper | unshelved), count, power_mW, and overrides
///                pump_rate, lifetime_ns, shelve_rate, deshelve_rate,
///                laser_deshelve_coeff, x_um, y_um, z_um
///   [emitter_2]  ... further emitter groups
///   [detection]  preset (paper | ideal), eta_geom, eta_ab, eta_opt, eta_det,
///                bs_ratio, background_rate, dead_time_ns, jitter_sigma_ns
///   [correlator] bin_width_ns, t_max_ns, delay_ns, rho (number | auto),
///                start_stop, threads
///   [scan]       preset (paper | empty), power_mW, background_coeff,
///                pixel_size_nm, dwell_time_ms, columns, rows,
///                psf_fwhm_nm, halo_fraction, halo_diameter_um, fit_window_nm
///
/// Rates are in 1/ns; times given in ns are rounded to the nearest
/// picosecond, ties to even.
struct ExperimentConfig {
  std::optional<std::uint64_t> seed;
  double duration_s = 1.0;
  std::string output_dir = "out";
  std::vector<EmitterGroup> emitters;
  std::string detection_preset = "paper";
  DetectionConfig detection = paper_detection();
  CorrelatorSettings correlator{};
  std::optional<double> rho;  ///< unset: derived from the emitter and detection model
  bool start_stop = false;
  std::string scan_preset = "paper";
  ScanPreset scan = paper_scan_preset();

  /// Throws ParameterError when no seed was given.
  std::uint64_t require_seed() const;
  TimePs duration() const { return seconds_to_ps(duration_s); }
  std::vector<EmitterParams> emitter_list() const;
  PipelineSettings pipeline() const;
  /// Canonical INI text; parse_config(to_ini()) reproduces this config.
  std::string to_ini() const;
  void validate() const;
};

/// Defaults: one paper-preset emitter, paper detection, 1 ns bins over
/// +-200 ns, 1 s, no seed.
ExperimentConfig default_config();
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Emitter preset by name at a laser power. Throws ParameterError for an
/// unknown name.
EmitterParams emitter_preset(const std::string& name, double power_mW);

/// FNV-1a hash of the canonical parameter text of an emitter.
std::uint64_t preset_hash(const EmitterParams& params);

}  // namespace antibunch
