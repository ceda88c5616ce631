#pragma once
#include <antibunch/analysis.hpp>
#include <antibunch/config.hpp>
#include <antibunch/scan.hpp>

#include <json.hpp>

#include <filesystem>
#include <optional>

namespace antibunch {

using Json = nlohmann::ordered_json;

/// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> bin_width_ns;
  std::optional<double> t_max_ns;
  std::optional<double> delay_ns;
  std::optional<double> rho;
  bool start_stop = false;
};

void apply_overrides(ExperimentConfig& config, const Overrides& o);

/// Every command writes `manifest.json` into its output directory: the
/// command, its inputs, the resolved config (also saved as `config.ini`),
/// preset hashes and the results. Manifests hold no wall-clock data, so an
/// identical re-run writes identical bytes.

/// Emission + detection. Writes photons.bin (unless write_photons is false),
/// clicks_1.bin and clicks_2.bin with their sidecars.
Json cmd_simulate(const ExperimentConfig& config, const std::filesystem::path& out, bool write_photons = true);

/// Detection of a stored photon stream with the config's detection model and
/// seed; the clicks equal the ones cmd_simulate writes for the same seed.
Json cmd_detect(const ExperimentConfig& config, const std::filesystem::path& photons,
                const std::filesystem::path& out);

/// Writes correlation.csv. Throws DataError for records of different duration.
Json cmd_correlate(const std::filesystem::path& record_a, const std::filesystem::path& record_b,
                   const CorrelatorSettings& settings, double rho, bool start_stop,
                   const std::filesystem::path& out);

/// Fits a correlation CSV; writes fit.txt and fit.csv.
struct FitCommandResult {
  FitResult fit;
  Json manifest;
};
FitCommandResult cmd_fit(const std::filesystem::path& csv, const std::filesystem::path& out);

/// Renders the configured scan; writes scan.csv, scan.pgm, line.csv and
/// line_fit.txt.
struct ScanCommandResult {
  ScanImage image;
  LineFit fit;
  Json manifest;
};
ScanCommandResult cmd_scan(const ExperimentConfig& config, const std::filesystem::path& out);

/// simulate -> detect -> correlate -> fit without writing timestamp files;
/// writes correlation.csv, fit.txt, fit.csv.
struct PipelineCommandResult {
  PipelineResult run;
  FitResult fit;
  Json manifest;
};
PipelineCommandResult cmd_pipeline(const ExperimentConfig& config, const std::filesystem::path& out);

}  // namespace antibunch
