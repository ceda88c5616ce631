#include "antibunch/pipeline.hpp"

#include <algorithm>
#include <cmath>

namespace antibunch {

std::uint64_t detection_seed(std::uint64_t seed) { return derive_seed(seed, StreamTag::detection); }

StreamedDetection simulate_detection(std::span<const EmitterParams> emitters, const DetectionConfig& config,
                                     TimePs duration, std::uint64_t seed, const PhotonSink& on_photons,
                                     TimePs window) {
  if (duration < 0) throw ParameterError("duration must be non-negative");
  if (window <= 0) throw ParameterError("window must be positive");
  MultiEmitterSource source(emitters, seed);
  DetectionFrontEnd front(config, detection_seed(seed));
  StreamedDetection out;
  std::vector<Photon> buffer;
  for (TimePs start = 0; start < duration;) {
    const TimePs end = duration - start > window ? start + window : duration;
    buffer.clear();
    source.generate_until(end, buffer);
    out.emitted += buffer.size();
    if (on_photons) on_photons(buffer);
    front.push(buffer);
    start = end;
  }
  out.detection = front.finish(duration);
  return out;
}

double expected_rho(std::span<const EmitterParams> emitters, const DetectionConfig& config) {
  double emission = 0.0;
  for (const auto& e : emitters) emission += emission_rate_per_s(e);
  const double r1 = expected_signal_fraction(config, emission, 1);
  const double r2 = expected_signal_fraction(config, emission, 2);
  return std::sqrt(r1 * r2);
}

PipelineResult run_pipeline(const PipelineSettings& s) {
  s.correlator.validate();
  PipelineResult r;
  auto streamed = simulate_detection(s.emitters, s.detection, s.duration, s.seed);
  r.detection = std::move(streamed.detection);
  r.emitted = streamed.emitted;
  r.rho = s.rho ? *s.rho : expected_rho(s.emitters, s.detection);
  const CoincidenceHistogram h = s.start_stop
                                     ? tac_start_stop(r.detection.first, r.detection.second, s.correlator)
                                     : cross_correlate(r.detection.first, r.detection.second, s.correlator);
  r.correlation = correlate(h, r.rho);
  return r;
}

}  // namespace antibunch
