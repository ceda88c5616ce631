#include "antibunch/scan.hpp"

#include "antibunch/correlator.hpp"
#include "antibunch/detection.hpp"
#include "antibunch/least_squares.hpp"
#include "antibunch/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace antibunch {

namespace {

constexpr double kFwhmPerSigma = 2.3548200450309493;  // 2 sqrt(2 ln 2)

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  return m;
}

}  // namespace

double OpticsModel::core_sigma_nm() const { return psf_fwhm_nm / kFwhmPerSigma; }

double OpticsModel::x_nm(int column) const {
  return 1000.0 * center_x_um + (column - 0.5 * (columns - 1)) * pixel_size_nm;
}

double OpticsModel::y_nm(int row) const { return 1000.0 * center_y_um + (row - 0.5 * (rows - 1)) * pixel_size_nm; }

void OpticsModel::validate() const {
  if (!(psf_fwhm_nm > 0.0)) throw ParameterError("psf_fwhm must be positive");
  if (!(halo_fraction >= 0.0 && halo_fraction <= 1.0)) throw ParameterError("halo_fraction must be in [0, 1]");
  if (halo_fraction > 0.0 && !(halo_diameter_um > 0.0)) throw ParameterError("halo_diameter must be positive");
  if (halo_fraction >= 1.0) throw ParameterError("the PSF needs a core (halo_fraction < 1)");
  if (!(pixel_size_nm > 0.0)) throw ParameterError("pixel_size must be positive");
  if (!(dwell_time_ms >= 0.0)) throw ParameterError("dwell_time must be non-negative");
  if (rows <= 0 || columns <= 0) throw ParameterError("raster needs at least one pixel");
}

double psf_core_density(const OpticsModel& o, double r_nm) {
  const double s = o.core_sigma_nm();
  return (1.0 - o.halo_fraction) / (2.0 * std::numbers::pi * s * s) * std::exp(-0.5 * r_nm * r_nm / (s * s));
}

double psf_halo_density(const OpticsModel& o, double r_nm) {
  if (o.halo_fraction == 0.0) return 0.0;
  const double radius = o.halo_radius_nm();
  return std::abs(r_nm) <= radius ? o.halo_fraction / (std::numbers::pi * radius * radius) : 0.0;
}

double psf_core_energy(const OpticsModel& o, double r_nm) {
  const double s = o.core_sigma_nm();
  return (1.0 - o.halo_fraction) * -std::expm1(-0.5 * r_nm * r_nm / (s * s));
}

double psf_halo_energy(const OpticsModel& o, double r_nm) {
  if (o.halo_fraction == 0.0) return 0.0;
  const double u = r_nm / o.halo_radius_nm();
  return o.halo_fraction * std::min(u * u, 1.0);
}

double psf_response(const OpticsModel& o, double r_nm) { return psf_density(o, r_nm) / psf_core_density(o, 0.0); }

double halo_plateau_ratio(const OpticsModel& o) { return psf_halo_density(o, 0.0) / psf_core_density(o, 0.0); }

double ScanEmitter::signal_rate(double power_mW) const {
  if (!(power_mW >= 0.0)) throw ParameterError("laser power must be non-negative");
  return collection_efficiency * emission_rate_per_s(emitter.at_power(power_mW));
}

std::vector<double> ScanImage::row(int r) const {
  std::vector<double> out(static_cast<std::size_t>(columns));
  for (int c = 0; c < columns; ++c) out[static_cast<std::size_t>(c)] = static_cast<double>(at(r, c));
  return out;
}

std::vector<double> ScanImage::column(int c) const {
  std::vector<double> out(static_cast<std::size_t>(rows));
  for (int r = 0; r < rows; ++r) out[static_cast<std::size_t>(r)] = static_cast<double>(at(r, c));
  return out;
}

std::uint64_t ScanImage::total() const {
  std::uint64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

double RateMap::total() const {
  double t = 0.0;
  for (double c : expected_counts) t += c;
  return t;
}

RateMap expected_rate_map(std::span<const ScanEmitter> emitters, const OpticsModel& optics, double power_mW,
                          double background_coeff) {
  optics.validate();
  if (!(power_mW >= 0.0)) throw ParameterError("laser power must be non-negative");
  if (!(background_coeff >= 0.0)) throw ParameterError("background coefficient must be non-negative");
  std::vector<double> signal;
  for (const auto& e : emitters) signal.push_back(e.signal_rate(power_mW));
  const double dwell = optics.dwell_time_s();
  const double background = background_coeff * power_mW;

  RateMap map;
  map.rows = optics.rows;
  map.columns = optics.columns;
  map.expected_counts.resize(static_cast<std::size_t>(optics.rows) * static_cast<std::size_t>(optics.columns));
  for (int r = 0; r < optics.rows; ++r) {
    for (int c = 0; c < optics.columns; ++c) {
      double rate = background;
      for (std::size_t k = 0; k < emitters.size(); ++k) {
        const Position p = emitters[k].position();
        const double dx = optics.x_nm(c) - 1000.0 * p.x_um;
        const double dy = optics.y_nm(r) - 1000.0 * p.y_um;
        rate += signal[k] * psf_response(optics, std::hypot(dx, dy));
      }
      map.expected_counts[static_cast<std::size_t>(r * optics.columns + c)] = rate * dwell;
    }
  }
  return map;
}

ScanImage render_scan(std::span<const ScanEmitter> emitters, const OpticsModel& optics, double power_mW,
                      double background_coeff, std::uint64_t seed) {
  const RateMap map = expected_rate_map(emitters, optics, power_mW, background_coeff);
  ScanImage img;
  img.rows = optics.rows;
  img.columns = optics.columns;
  img.pixel_size_nm = optics.pixel_size_nm;
  img.dwell_time_ms = optics.dwell_time_ms;
  img.counts.resize(map.expected_counts.size());
  for (int r = 0; r < optics.rows; ++r) {
    Engine eng(derive_seed(seed, StreamTag::scan, static_cast<std::uint64_t>(r)));
    for (int c = 0; c < optics.columns; ++c) {
      const double mean = map.at(r, c);
      std::uint64_t k = 0;
      if (mean > 0.0) {
        std::poisson_distribution<std::int64_t> draw(mean);
        k = static_cast<std::uint64_t>(draw(eng));
      }
      img.counts[static_cast<std::size_t>(r * optics.columns + c)] = k;
    }
  }
  return img;
}

LineFit fit_line_profile(std::span<const double> line, double pixel_size_nm, double dwell_time_ms,
                         double window_nm) {
  if (!(pixel_size_nm > 0.0)) throw ParameterError("pixel_size must be positive");
  if (!(dwell_time_ms > 0.0)) throw ParameterError("dwell_time must be positive");
  if (line.size() < 5) throw ParameterError("line profile needs at least 5 samples");
  LineFit fit;

  const std::vector<double> all(line.begin(), line.end());
  const double level = median(all);
  const auto peak_it = std::max_element(line.begin(), line.end());
  const std::size_t peak = static_cast<std::size_t>(peak_it - line.begin());
  if (!(*peak_it - level > 3.0 * std::sqrt(std::max(level, 1.0)))) return fit;
  fit.peak_found = true;

  std::vector<double> x, y;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const double d = (static_cast<double>(i) - static_cast<double>(peak)) * pixel_size_nm;
    if (std::abs(d) <= window_nm) {
      x.push_back(static_cast<double>(i) * pixel_size_nm);
      y.push_back(line[i]);
    }
  }
  if (x.size() < 5) throw ParameterError("fit window holds fewer than 5 samples");
  fit.samples_used = x.size();

  const double amp0 = *peak_it - level;
  std::size_t above = 0;
  for (double v : y)
    if (v - level > 0.5 * amp0) ++above;
  Eigen::VectorXd p0(4);
  p0 << amp0, static_cast<double>(peak) * pixel_size_nm,
      std::max(static_cast<double>(above), 1.0) * pixel_size_nm / kFwhmPerSigma, level;

  const CurveModel model = [](double xi, const Eigen::VectorXd& p, Eigen::Ref<Eigen::VectorXd> grad) {
    const double d = xi - p[1];
    const double s2 = p[2] * p[2];
    const double g = std::exp(-0.5 * d * d / s2);
    grad[0] = g;
    grad[1] = p[0] * g * d / s2;
    grad[2] = p[0] * g * d * d / (s2 * p[2]);
    grad[3] = 1.0;
    return p[0] * g + p[3];
  };
  const ParamCheck check = [](const Eigen::VectorXd& p) { return p[2] > 0.0 && p.allFinite(); };
  // Equal weights at the Poisson level of the background; the estimates do
  // not depend on the common scale, only the stopping test does.
  const std::vector<double> flat(x.size(), std::sqrt(std::max(level, 1.0)));
  const CurveFitResult r = weighted_curve_fit(x, y, flat, p0, model, check);

  // scale the covariance by the reduced chi^2
  const double dof = static_cast<double>(x.size()) - 4.0;
  const double var = dof > 0.0 ? r.chi2 / dof : 0.0;
  const double to_rate = 1e3 / dwell_time_ms;
  fit.converged = r.converged;
  fit.signal_per_s = r.params[0] * to_rate;
  fit.center_nm = r.params[1];
  fit.fwhm_nm = kFwhmPerSigma * r.params[2];
  fit.background_per_s = r.params[3] * to_rate;
  fit.signal_sigma = std::sqrt(std::max(0.0, var * r.covariance(0, 0))) * to_rate;
  fit.fwhm_sigma = kFwhmPerSigma * std::sqrt(std::max(0.0, var * r.covariance(2, 2)));
  fit.background_sigma = std::sqrt(std::max(0.0, var * r.covariance(3, 3))) * to_rate;
  const double total = fit.signal_per_s + fit.background_per_s;
  fit.rho = total > 0.0 ? std::clamp(fit.signal_per_s / total, 0.0, 1.0) : 0.0;
  return fit;
}

ScanPreset paper_scan_preset() {
  ScanPreset p;
  ScanEmitter e;
  e.emitter = paper_emitter();
  e.collection_efficiency = 2.0 * paper_detection().arm_efficiency(1);
  p.emitters.push_back(e);
  p.optics = OpticsModel{};
  p.power_mW = 15.0;
  const double signal = e.signal_rate(p.power_mW);
  const double target_rho = 0.34;
  const double uniform = signal / target_rho - signal * (1.0 + halo_plateau_ratio(p.optics));
  p.background_coeff = uniform / p.power_mW;
  p.fit_window_nm = 0.9 * p.optics.halo_radius_nm();
  return p;
}

std::vector<SaturationPoint> saturation_curve(std::span<const double> powers_mW, const ScanPreset& preset) {
  if (preset.emitters.empty()) throw ParameterError("preset has no emitter");
  std::vector<SaturationPoint> out;
  for (double p : powers_mW) {
    if (!(p >= 0.0)) throw ParameterError("laser power must be non-negative");
    out.push_back({p, preset.emitters.front().signal_rate(p), preset.background_coeff * p});
  }
  return out;
}

SaturationConstants saturation_constants(const ScanPreset& preset) {
  if (preset.emitters.empty()) throw ParameterError("preset has no emitter");
  const ScanEmitter& e = preset.emitters.front();
  const EmitterParams& q = e.emitter.params;
  // Infinite pump empties the ground state; the excited/shelf balance then
  // decides the emission bound.
  double bound = q.radiative_rate;
  if (q.laser_deshelve_coeff == 0.0 && q.shelve_rate > 0.0)
    bound = q.radiative_rate * q.deshelve_rate / (q.deshelve_rate + q.shelve_rate);
  SaturationConstants s;
  s.emission_max_per_s = bound * 1e9;
  s.signal_max_per_s = e.collection_efficiency * s.emission_max_per_s;
  if (s.signal_max_per_s <= 0.0 || e.emitter.pump_per_mW <= 0.0) return s;

  // Half-saturation power by bisection; for pump-independent deshelving this
  // is (Gamma + k_s) k_d / (k_s + k_d) / pump_per_mW exactly.
  const double half = 0.5 * s.signal_max_per_s;
  double lo = 0.0, hi = 1.0;
  while (e.signal_rate(hi) < half) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (e.signal_rate(mid) < half ? lo : hi) = mid;
  }
  s.saturation_power_mW = 0.5 * (lo + hi);
  return s;
}

double true_rho(const ScanPreset& preset) {
  if (preset.emitters.empty()) return 0.0;
  const Position at = preset.emitters.front().position();
  const double signal = preset.emitters.front().signal_rate(preset.power_mW);
  double background = preset.background_coeff * preset.power_mW;
  for (std::size_t k = 0; k < preset.emitters.size(); ++k) {
    const Position p = preset.emitters[k].position();
    const double r = 1000.0 * std::hypot(at.x_um - p.x_um, at.y_um - p.y_um);
    const double s = preset.emitters[k].signal_rate(preset.power_mW);
    const double response = psf_response(preset.optics, r);
    // the first emitter's own Gaussian core is the signal
    background += k == 0 ? s * halo_plateau_ratio(preset.optics) : s * response;
  }
  return rho_from_levels(signal, background);
}

ScanImage render_preset(const ScanPreset& preset, std::uint64_t seed) {
  return render_scan(preset.emitters, preset.optics, preset.power_mW, preset.background_coeff, seed);
}

int brightest_row(const ScanImage& image) {
  if (image.rows <= 0 || image.columns <= 0) throw ParameterError("empty image");
  double best = -1.0, best_own = -1.0;
  int best_row = 0;
  for (int r = 0; r < image.rows; ++r) {
    for (int c = 0; c < image.columns; ++c) {
      double acc = 0.0;
      int n = 0;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= image.rows || cc >= image.columns) continue;
          acc += static_cast<double>(image.at(rr, cc));
          ++n;
        }
      }
      // ties between overlapping windows go to the brighter center pixel
      const double mean = acc / n;
      const double own = static_cast<double>(image.at(r, c));
      if (mean > best || (mean == best && own > best_own)) {
        best = mean;
        best_own = own;
        best_row = r;
      }
    }
  }
  return best_row;
}

LineFit fit_brightest_line(const ScanImage& image, double window_nm) {
  const std::vector<double> line = image.row(brightest_row(image));
  return fit_line_profile(line, image.pixel_size_nm, image.dwell_time_ms, window_nm);
}

}  // namespace antibunch
