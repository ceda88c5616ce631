#pragma once
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace antibunch {

/// Integer picoseconds. All timestamps, bin edges and delays use this unit.
using TimePs = std::int64_t;

inline constexpr TimePs kPsPerNs = 1000;
inline constexpr TimePs kPsPerSecond = 1'000'000'000'000;
inline constexpr TimePs kNever = std::numeric_limits<TimePs>::max();

/// Rounds to the nearest picosecond, ties to even.
inline TimePs ns_to_ps(double ns) {
  if (!std::isfinite(ns)) throw std::invalid_argument("time value is not finite");
  return static_cast<TimePs>(std::nearbyint(ns * static_cast<double>(kPsPerNs)));
}
inline TimePs seconds_to_ps(double s) {
  if (!std::isfinite(s)) throw std::invalid_argument("time value is not finite");
  return static_cast<TimePs>(std::nearbyint(s * static_cast<double>(kPsPerSecond)));
}
inline double ps_to_ns(TimePs ps) { return static_cast<double>(ps) / static_cast<double>(kPsPerNs); }
inline double ps_to_seconds(TimePs ps) { return static_cast<double>(ps) / static_cast<double>(kPsPerSecond); }

/// Invalid physical or numerical parameter.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input data violates a precondition (unsorted, mismatched, empty).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Source tag used for background photons.
inline constexpr std::uint32_t kBackgroundSource = 0xFFFF'FFFFu;

struct Photon {
  TimePs time;
  std::uint32_t source;

  friend bool operator==(const Photon&, const Photon&) = default;
};

/// Emission (or pre-detection) events, sorted by time, each tagged with the
/// emitter index that produced it or kBackgroundSource.
struct PhotonStream {
  std::vector<Photon> photons;
  TimePs duration = 0;

  std::size_t size() const { return photons.size(); }
  bool empty() const { return photons.empty(); }
  std::vector<TimePs> timestamps() const;
  std::size_t source_count() const;
  /// Sorted and inside [0, duration].
  bool valid() const;

  friend bool operator==(const PhotonStream&, const PhotonStream&) = default;
};

/// Detector clicks after dead time and jitter; timestamps sorted.
struct ClickRecord {
  std::vector<TimePs> timestamps;
  int detector_id = 0;
  TimePs duration = 0;

  std::size_t size() const { return timestamps.size(); }
  bool empty() const { return timestamps.empty(); }
  /// Counts per second over the record duration.
  double rate() const;
  bool valid() const;

  friend bool operator==(const ClickRecord&, const ClickRecord&) = default;
};

}  // namespace antibunch
