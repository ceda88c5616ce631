#include "antibunch/detection.hpp"

#include "antibunch/emitter.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace antibunch {

namespace {

enum Stage : std::uint64_t {
  kFront = 0,
  kSplit = 1,
  kDet1 = 2,
  kDet2 = 3,
  kBackground1 = 4,
  kBackground2 = 5,
  kJitter1 = 6,
  kJitter2 = 7,
};

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError(std::string(name) + " must lie in [0, 1]");
}

Engine stage_engine(std::uint64_t seed, Stage stage) {
  return Engine(derive_seed(seed, StreamTag::detection, stage));
}

PhotonStream thin_with(const PhotonStream& stream, double eta, Engine& eng) {
  PhotonStream out;
  out.duration = stream.duration;
  out.photons.reserve(static_cast<std::size_t>(static_cast<double>(stream.size()) * eta * 1.05) + 16);
  for (const auto& p : stream.photons) {
    if (uniform01(eng) < eta) out.photons.push_back(p);
  }
  return out;
}

}  // namespace

double DetectionConfig::arm_efficiency(int detector) const {
  const double split = detector == 1 ? bs_ratio : 1.0 - bs_ratio;
  return front_efficiency() * split * eta_det;
}

void DetectionConfig::validate() const {
  check_probability(eta_geom, "eta_geom");
  check_probability(eta_ab, "eta_ab");
  check_probability(eta_opt, "eta_opt");
  check_probability(eta_det, "eta_det");
  check_probability(bs_ratio, "bs_ratio");
  if (!(background_rate_per_detector >= 0.0) || !std::isfinite(background_rate_per_detector))
    throw ParameterError("background rate must be non-negative");
  if (!(dead_time_ns >= 0.0) || !std::isfinite(dead_time_ns))
    throw ParameterError("dead time must be non-negative");
  if (!(jitter_sigma_ns >= 0.0) || !std::isfinite(jitter_sigma_ns))
    throw ParameterError("jitter sigma must be non-negative");
}

double background_for_signal_fraction(double signal_rate_per_s, double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) throw ParameterError("rho must lie in (0, 1]");
  if (!(signal_rate_per_s >= 0.0)) throw ParameterError("signal rate must be non-negative");
  return signal_rate_per_s * (1.0 - rho) / rho;
}

double expected_signal_fraction(const DetectionConfig& config, double emission_rate_per_s, int detector) {
  const double s = config.arm_efficiency(detector) * emission_rate_per_s;
  const double total = s + config.background_rate_per_detector;
  if (!(total > 0.0)) throw ParameterError("no detected light");
  return s / total;
}

DetectionConfig paper_detection() {
  DetectionConfig c;
  c.eta_geom = 0.08;
  c.eta_ab = 0.2;
  c.eta_opt = 0.25;
  c.eta_det = 0.7;
  c.bs_ratio = 0.5;
  const double signal = c.arm_efficiency(1) * CalibrationTargets{}.emission_rate_per_s;
  c.background_rate_per_detector = background_for_signal_fraction(signal, 0.34);
  c.dead_time_ns = 50.0;
  c.jitter_sigma_ns = 0.35;
  return c;
}

DetectionConfig ideal_detection() {
  DetectionConfig c;
  c.dead_time_ns = 0.0;
  c.jitter_sigma_ns = 0.0;
  return c;
}

PhotonStream thin(const PhotonStream& stream, double eta, std::uint64_t seed) {
  check_probability(eta, "eta");
  Engine eng(seed);
  return thin_with(stream, eta, eng);
}

std::pair<PhotonStream, PhotonStream> beamsplit(const PhotonStream& stream, double ratio, std::uint64_t seed) {
  check_probability(ratio, "ratio");
  Engine eng(seed);
  std::pair<PhotonStream, PhotonStream> out;
  out.first.duration = stream.duration;
  out.second.duration = stream.duration;
  for (const auto& p : stream.photons) {
    if (uniform01(eng) < ratio) {
      out.first.photons.push_back(p);
    } else {
      out.second.photons.push_back(p);
    }
  }
  return out;
}

PhotonStream add_background(const PhotonStream& stream, double rate_per_s, TimePs duration, std::uint64_t seed) {
  if (!(rate_per_s >= 0.0) || !std::isfinite(rate_per_s)) throw ParameterError("background rate must be non-negative");
  if (duration < 0) throw ParameterError("duration must be non-negative");
  PhotonStream out;
  out.duration = std::max(stream.duration, duration);
  if (rate_per_s == 0.0 || duration == 0) {
    out.photons = stream.photons;
    return out;
  }
  Engine eng(seed);
  const double rate_per_ps = rate_per_s / static_cast<double>(kPsPerSecond);
  std::vector<Photon> bg;
  bg.reserve(static_cast<std::size_t>(rate_per_s * ps_to_seconds(duration) * 1.01) + 16);
  TimePs now = 0;
  double frac = 0.0;
  while (true) {
    const double total = frac + exponential(eng, rate_per_ps);
    const double whole = std::floor(total);
    if (whole >= static_cast<double>(duration - now)) break;
    now += static_cast<TimePs>(whole);
    frac = total - whole;
    bg.push_back({now, kBackgroundSource});
  }
  out.photons.resize(stream.size() + bg.size());
  std::merge(stream.photons.begin(), stream.photons.end(), bg.begin(), bg.end(), out.photons.begin(),
             [](const Photon& a, const Photon& b) { return a.time < b.time; });
  return out;
}

ClickRecord to_clicks(const PhotonStream& stream, int detector_id) {
  ClickRecord r;
  r.detector_id = detector_id;
  r.duration = stream.duration;
  r.timestamps = stream.timestamps();
  return r;
}

ClickRecord apply_jitter(const ClickRecord& clicks, double sigma_ns, std::uint64_t seed) {
  if (!(sigma_ns >= 0.0) || !std::isfinite(sigma_ns)) throw ParameterError("jitter sigma must be non-negative");
  if (sigma_ns == 0.0) return clicks;
  Engine eng(seed);
  std::normal_distribution<double> offset(0.0, sigma_ns * static_cast<double>(kPsPerNs));
  ClickRecord out = clicks;
  for (auto& t : out.timestamps) {
    const TimePs shifted = t + static_cast<TimePs>(std::nearbyint(offset(eng)));
    t = std::clamp<TimePs>(shifted, 0, out.duration);
  }
  std::sort(out.timestamps.begin(), out.timestamps.end());
  return out;
}

ClickRecord apply_dead_time(const ClickRecord& clicks, double dead_time_ns) {
  if (!(dead_time_ns >= 0.0) || !std::isfinite(dead_time_ns)) throw ParameterError("dead time must be non-negative");
  if (!std::is_sorted(clicks.timestamps.begin(), clicks.timestamps.end()))
    throw DataError("dead time needs sorted clicks");
  const TimePs dead = ns_to_ps(dead_time_ns);
  if (dead == 0) return clicks;
  ClickRecord out;
  out.detector_id = clicks.detector_id;
  out.duration = clicks.duration;
  out.timestamps.reserve(clicks.size());
  for (TimePs t : clicks.timestamps) {
    if (out.timestamps.empty() || t - out.timestamps.back() >= dead) out.timestamps.push_back(t);
  }
  return out;
}

DetectionFrontEnd::DetectionFrontEnd(const DetectionConfig& config, std::uint64_t seed)
    : config_(config),
      seed_(seed),
      front_(stage_engine(seed, kFront)),
      split_(stage_engine(seed, kSplit)),
      det1_(stage_engine(seed, kDet1)),
      det2_(stage_engine(seed, kDet2)) {
  config_.validate();
}

void DetectionFrontEnd::push(std::span<const Photon> photons) {
  const double front = config_.front_efficiency();
  for (const auto& p : photons) {
    if (!(uniform01(front_) < front)) continue;
    if (uniform01(split_) < config_.bs_ratio) {
      if (uniform01(det1_) < config_.eta_det) arm1_.photons.push_back(p);
    } else {
      if (uniform01(det2_) < config_.eta_det) arm2_.photons.push_back(p);
    }
  }
}

DetectionResult DetectionFrontEnd::finish(TimePs duration) {
  arm1_.duration = duration;
  arm2_.duration = duration;
  DetectionResult r;
  r.signal_counts_first = arm1_.size();
  r.signal_counts_second = arm2_.size();
  const double bg = config_.background_rate_per_detector;

  auto back_end = [&](PhotonStream& arm, int id, Stage bg_stage, Stage jitter_stage) {
    PhotonStream with_bg = add_background(arm, bg, duration, derive_seed(seed_, StreamTag::detection, bg_stage));
    std::vector<Photon>().swap(arm.photons);
    ClickRecord clicks = to_clicks(with_bg, id);
    with_bg = PhotonStream{};
    clicks = apply_jitter(clicks, config_.jitter_sigma_ns, derive_seed(seed_, StreamTag::detection, jitter_stage));
    return apply_dead_time(clicks, config_.dead_time_ns);
  };
  r.first = back_end(arm1_, 1, kBackground1, kJitter1);
  r.second = back_end(arm2_, 2, kBackground2, kJitter2);
  return r;
}

DetectionResult detect(const PhotonStream& stream, const DetectionConfig& config, std::uint64_t seed) {
  config.validate();
  PhotonStream front = thin(stream, config.front_efficiency(), derive_seed(seed, StreamTag::detection, kFront));
  auto [a, b] = beamsplit(front, config.bs_ratio, derive_seed(seed, StreamTag::detection, kSplit));
  a = thin(a, config.eta_det, derive_seed(seed, StreamTag::detection, kDet1));
  b = thin(b, config.eta_det, derive_seed(seed, StreamTag::detection, kDet2));

  DetectionResult r;
  r.signal_counts_first = a.size();
  r.signal_counts_second = b.size();
  const double bg = config.background_rate_per_detector;
  auto back_end = [&](const PhotonStream& arm, int id, Stage bg_stage, Stage jitter_stage) {
    const PhotonStream with_bg =
        add_background(arm, bg, stream.duration, derive_seed(seed, StreamTag::detection, bg_stage));
    const ClickRecord clicks = apply_jitter(to_clicks(with_bg, id), config.jitter_sigma_ns,
                                            derive_seed(seed, StreamTag::detection, jitter_stage));
    return apply_dead_time(clicks, config.dead_time_ns);
  };
  r.first = back_end(a, 1, kBackground1, kJitter1);
  r.second = back_end(b, 2, kBackground2, kJitter2);
  return r;
}

}  // namespace antibunch
