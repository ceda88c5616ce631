#include <antibunch/scan.hpp>

#include <doctest.h>

#include <cmath>
#include <random>

using namespace antibunch;

TEST_CASE("PSF energy split") {
  const OpticsModel o;
  const double far = 1e6;
  CHECK(psf_core_energy(o, far) + psf_halo_energy(o, far) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(psf_core_energy(o, far) + psf_halo_energy(o, far) - 1.0) < 1e-9);
  CHECK(psf_core_energy(o, far) == doctest::Approx(0.2).epsilon(0.05));
  CHECK(psf_halo_energy(o, o.halo_radius_nm()) == doctest::Approx(0.8));
  // densities integrate to the energies (radial trapezoid)
  double core = 0.0, halo = 0.0;
  const double dr = 0.5;
  for (double r = 0.5 * dr; r < 3000.0; r += dr) {
    core += psf_core_density(o, r) * 2.0 * M_PI * r * dr;
    halo += psf_halo_density(o, r) * 2.0 * M_PI * r * dr;
  }
  CHECK(core == doctest::Approx(0.2).epsilon(1e-6));
  CHECK(halo == doctest::Approx(0.8).epsilon(1e-3));
  // the Gaussian core has the requested FWHM
  const double half = 0.5 * psf_core_density(o, 0.0);
  CHECK(psf_core_density(o, 250.0) == doctest::Approx(half).epsilon(1e-12));
  CHECK(halo_plateau_ratio(o) == doctest::Approx(0.1603).epsilon(1e-3));
}

TEST_CASE("optics validation") {
  OpticsModel o;
  o.halo_fraction = 1.2;
  CHECK_THROWS_AS(o.validate(), ParameterError);
  o = OpticsModel{};
  o.psf_fwhm_nm = 0;
  CHECK_THROWS_AS(o.validate(), ParameterError);
}

TEST_CASE("pixel geometry") {
  const OpticsModel o;
  CHECK(o.columns * o.pixel_size_nm == doctest::Approx(5000.0).epsilon(0.01));
  CHECK(o.x_nm(41) == 0.0);
  CHECK(o.x_nm(42) - o.x_nm(41) == doctest::Approx(60.0));
}

TEST_CASE("background-only scan is flat Poisson") {
  OpticsModel o;
  const ScanImage img = render_scan({}, o, 15.0, 400.0, 5);
  const double mean_expected = 400.0 * 15.0 * o.dwell_time_s();
  const double n = static_cast<double>(img.counts.size());
  const double mean = static_cast<double>(img.total()) / n;
  CHECK(std::abs(mean - mean_expected) < 4.0 * std::sqrt(mean_expected / n));
  double var = 0;
  for (auto c : img.counts) var += (static_cast<double>(c) - mean) * (static_cast<double>(c) - mean);
  CHECK(var / (n - 1) == doctest::Approx(mean_expected).epsilon(0.05));
  const LineFit f = fit_line_profile(img.row(10), o.pixel_size_nm, o.dwell_time_ms);
  CHECK_FALSE(f.peak_found);
  CHECK(f.rho == 0.0);
}

TEST_CASE("rendered totals follow the rate map") {
  const ScanPreset p = paper_scan_preset();
  const RateMap m = expected_rate_map(p.emitters, p.optics, p.power_mW, p.background_coeff);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const ScanImage img = render_preset(p, seed);
    CHECK(std::abs(static_cast<double>(img.total()) - m.total()) < 4.0 * std::sqrt(m.total()));
  }
  CHECK(render_preset(p, 4) == render_preset(p, 4));
  CHECK_FALSE(render_preset(p, 4) == render_preset(p, 5));
}

TEST_CASE("paper preset levels") {
  const ScanPreset p = paper_scan_preset();
  REQUIRE(p.emitters.size() == 1);
  CHECK(p.emitters[0].signal_rate(15.0) == doctest::Approx(3920.0).epsilon(1e-9));
  CHECK(true_rho(p) == doctest::Approx(0.34).epsilon(1e-12));
  // noise-free image: the windowed line fit is exact
  const RateMap m = expected_rate_map(p.emitters, p.optics, p.power_mW, p.background_coeff);
  std::vector<double> line;
  for (int c = 0; c < m.columns; ++c) line.push_back(m.at(m.rows / 2, c));
  const LineFit f = fit_line_profile(line, p.optics.pixel_size_nm, p.optics.dwell_time_ms, p.fit_window_nm);
  CHECK(f.converged);
  CHECK(f.fwhm_nm == doctest::Approx(500.0).epsilon(1e-6));
  CHECK(f.rho == doctest::Approx(0.34).epsilon(1e-6));
  CHECK(f.center_nm == doctest::Approx(41 * 60.0).epsilon(1e-9));
}

TEST_CASE("line fit recovers an exact Gaussian plus offset") {
  std::vector<double> line;
  for (int i = 0; i < 101; ++i) {
    const double x = i * 20.0 - 1013.0;
    line.push_back(250.0 * std::exp(-0.5 * x * x / (140.0 * 140.0)) + 40.0);
  }
  const LineFit f = fit_line_profile(line, 20.0, 10.0);
  CHECK(f.peak_found);
  CHECK(f.converged);
  CHECK(f.signal_per_s == doctest::Approx(25000.0).epsilon(1e-6));
  CHECK(f.background_per_s == doctest::Approx(4000.0).epsilon(1e-6));
  CHECK(f.fwhm_nm == doctest::Approx(140.0 * 2.3548200450309493).epsilon(1e-6));
  CHECK(f.center_nm == doctest::Approx(1013.0).epsilon(1e-6));
  CHECK(f.rho == doctest::Approx(250.0 / 290.0).epsilon(1e-6));

  const std::vector<double> flat(50, 12.0);
  const LineFit nf = fit_line_profile(flat, 60.0, 32.0);
  CHECK_FALSE(nf.peak_found);
  CHECK(nf.rho == 0.0);
  CHECK_THROWS_AS(fit_line_profile(std::vector<double>(3, 1.0), 60.0, 32.0), ParameterError);
}

TEST_CASE("saturation law") {
  const ScanPreset p = paper_scan_preset();
  const std::vector<double> powers{0.0, 2.0, 4.0, 15.0, 50.0, 1e7};
  const auto curve = saturation_curve(powers, p);
  CHECK(curve[0].signal_per_s == 0.0);
  CHECK(curve[0].background_per_s == 0.0);
  CHECK(curve[2].background_per_s == 2.0 * curve[1].background_per_s);
  const SaturationConstants k = saturation_constants(p);
  CHECK(k.saturation_power_mW == doctest::Approx(50.0).epsilon(1e-9));
  for (const auto& pt : curve) {
    const double law = k.signal_max_per_s * pt.power_mW / (pt.power_mW + k.saturation_power_mW);
    CHECK(pt.signal_per_s == doctest::Approx(law).epsilon(1e-9));
  }
  CHECK(curve.back().signal_per_s == doctest::Approx(k.signal_max_per_s).epsilon(1e-5));
  // the emission bound never exceeds the radiative rate, which is the
  // reported fully saturated value 9e7 /s to 5 %
  const double gamma = p.emitters[0].emitter.params.radiative_rate * 1e9;
  CHECK(k.emission_max_per_s <= gamma);
  CHECK(gamma == doctest::Approx(9e7).epsilon(0.05));
  ScanPreset unshelved = p;
  unshelved.emitters[0].emitter.params.shelve_rate = 0.0;
  CHECK(saturation_constants(unshelved).emission_max_per_s == doctest::Approx(gamma));
  CHECK_THROWS_AS(saturation_curve(std::vector<double>{-1.0}, p), ParameterError);
}

TEST_CASE("brightest row") {
  ScanImage img;
  img.rows = 7;
  img.columns = 7;
  img.pixel_size_nm = 60;
  img.dwell_time_ms = 1;
  img.counts.assign(49, 1);
  img.counts[3 * 7 + 3] = 200;
  img.counts[3 * 7 + 2] = 30;
  img.counts[6] = 60;  // a lone corner spike loses to the 3x3 average
  CHECK(brightest_row(img) == 3);
}
