#pragma once
#include <antibunch/random.hpp>
#include <antibunch/types.hpp>

#include <cstdint>
#include <span>
#include <utility>

namespace antibunch {

/// Efficiency chain and detector model of the two-detector correlation setup.
/// Detector 1 receives the fraction bs_ratio of the light, detector 2 the rest.
struct DetectionConfig {
  double eta_geom = 1.0;
  double eta_ab = 1.0;
  double eta_opt = 1.0;
  double eta_det = 1.0;
  double bs_ratio = 0.5;
  double background_rate_per_detector = 0.0;  ///< detected counts per second
  double dead_time_ns = 50.0;                 ///< non-paralyzable
  double jitter_sigma_ns = 0.35;

  /// Efficiency before the beamsplitter: eta_geom * eta_ab * eta_opt.
  double front_efficiency() const { return eta_geom * eta_ab * eta_opt; }
  /// Total efficiency from emission to detector 1 or 2, including the split.
  double arm_efficiency(int detector) const;
  void validate() const;
};

/// Reported efficiency factors (0.08 * 0.2 * 0.25 * 0.5 * 0.7 = 0.0014 per
/// detector). The per-detector background is set so that the default
/// emitter's signal fraction at the detectors is S/(S+B) = 0.34.
DetectionConfig paper_detection();

/// Unit efficiency, 50/50 split, no background, dead time or jitter.
DetectionConfig ideal_detection();

/// Background rate that gives signal fraction rho next to signal_rate.
double background_for_signal_fraction(double signal_rate_per_s, double rho);

/// Expected S/(S+B) at one detector for a source of the given emission rate.
double expected_signal_fraction(const DetectionConfig& config, double emission_rate_per_s, int detector);

/// Keeps each photon independently with probability eta; one uniform draw per
/// input photon.
PhotonStream thin(const PhotonStream& stream, double eta, std::uint64_t seed);

/// Routes each photon to the first output with probability ratio. The outputs
/// partition the input.
std::pair<PhotonStream, PhotonStream> beamsplit(const PhotonStream& stream, double ratio, std::uint64_t seed);

/// Merges a homogeneous Poisson process of rate_per_s over [0, duration) into
/// the stream. Background photons carry kBackgroundSource.
PhotonStream add_background(const PhotonStream& stream, double rate_per_s, TimePs duration, std::uint64_t seed);

ClickRecord to_clicks(const PhotonStream& stream, int detector_id);

/// Zero-mean Gaussian offsets rounded to picoseconds, clamped to
/// [0, duration], then re-sorted.
ClickRecord apply_jitter(const ClickRecord& clicks, double sigma_ns, std::uint64_t seed);

/// Drops any click closer than dead_time to the last accepted click.
ClickRecord apply_dead_time(const ClickRecord& clicks, double dead_time_ns);

struct DetectionResult {
  ClickRecord first;
  ClickRecord second;
  std::size_t signal_counts_first = 0;   ///< before background injection
  std::size_t signal_counts_second = 0;

  double rate1() const { return first.rate(); }
  double rate2() const { return second.rate(); }
};

/// Streaming form of the per-photon stages (front thinning, beamsplitter,
/// detector efficiency). Feeding a stream in any chunking gives the same
/// arms as one call with the whole stream.
class DetectionFrontEnd {
 public:
  DetectionFrontEnd(const DetectionConfig& config, std::uint64_t seed);

  void push(std::span<const Photon> photons);
  /// Background, jitter and dead time on both arms.
  DetectionResult finish(TimePs duration);

 private:
  DetectionConfig config_;
  std::uint64_t seed_;
  Engine front_, split_, det1_, det2_;
  PhotonStream arm1_, arm2_;
};

/// Fixed stage order:
///   thin(front) -> beamsplit -> thin(eta_det) per arm -> add_background
///   -> apply_jitter -> apply_dead_time.
/// Stage k draws from derive_seed(seed, detection, k).
DetectionResult detect(const PhotonStream& stream, const DetectionConfig& config, std::uint64_t seed);

}  // namespace antibunch
