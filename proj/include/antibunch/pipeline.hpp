#pragma once
#include <antibunch/correlator.hpp>
#include <antibunch/detection.hpp>
#include <antibunch/emitter.hpp>

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace antibunch {

/// Seed of the detection stages for a run seeded with `seed`.
std::uint64_t detection_seed(std::uint64_t seed);

using PhotonSink = std::function<void(std::span<const Photon>)>;

/// Emission and detection without materializing the emitted stream: the
/// emitters are advanced in windows of `window` picoseconds and each window
/// is pushed through the detection front end. The result is identical to
///   detect(multi_emitter_stream(emitters, duration, seed), config, detection_seed(seed)).
/// `on_photons` sees every emitted window, in order.
struct StreamedDetection {
  DetectionResult detection;
  std::size_t emitted = 0;
};
StreamedDetection simulate_detection(std::span<const EmitterParams> emitters, const DetectionConfig& config,
                                     TimePs duration, std::uint64_t seed, const PhotonSink& on_photons = {},
                                     TimePs window = 10 * kPsPerSecond / 1000);

/// Signal fraction of the correlated light, sqrt(rho1 rho2) for the two
/// detectors, from the emitters' steady-state emission rates.
double expected_rho(std::span<const EmitterParams> emitters, const DetectionConfig& config);

struct PipelineSettings {
  std::vector<EmitterParams> emitters;
  DetectionConfig detection;
  CorrelatorSettings correlator;
  TimePs duration = 0;
  std::uint64_t seed = 0;
  bool start_stop = false;
  std::optional<double> rho;  ///< defaults to expected_rho
};

struct PipelineResult {
  DetectionResult detection;
  CorrelationResult correlation;
  std::size_t emitted = 0;
  double rho = 1.0;
};

/// simulate -> detect -> histogram -> normalize -> background correction.
PipelineResult run_pipeline(const PipelineSettings& settings);

}  // namespace antibunch
