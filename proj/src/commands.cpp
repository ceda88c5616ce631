#include "antibunch/commands.hpp"

#include "antibunch/io.hpp"
#include "antibunch/pipeline.hpp"

#include <cstdio>

namespace antibunch {

namespace fs = std::filesystem;

namespace {

std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Json base_manifest(const char* command, const ExperimentConfig* config) {
  Json m;
  m["command"] = command;
  m["format_version"] = 1;
  if (config) {
    if (config->seed) m["seed"] = *config->seed;
    Json hashes = Json::array();
    for (const auto& g : config->emitters) hashes.push_back(hex(preset_hash(g.params)));
    m["preset_hashes"] = hashes;
    m["config_ini"] = config->to_ini();
  }
  return m;
}

void finish(const fs::path& out, Json& manifest, const ExperimentConfig* config) {
  fs::create_directories(out);
  if (config) write_text(out / "config.ini", config->to_ini());
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
}

Json fit_json(const FitResult& f) {
  return Json{{"tau1_ns", f.tau1_ns},     {"tau1_sigma", f.tau1_sigma}, {"tau2_ns", f.tau2_ns},
              {"tau2_sigma", f.tau2_sigma}, {"a", f.a},                 {"a_sigma", f.a_sigma},
              {"g2_zero", f.g2_zero},     {"chi2", f.chi2},             {"dof", f.dof},
              {"iterations", f.iterations}, {"converged", f.converged}, {"degenerate", f.degenerate}};
}

Json detection_json(const DetectionResult& d, std::size_t emitted) {
  return Json{{"emitted", emitted},
              {"clicks_1", d.first.size()},
              {"clicks_2", d.second.size()},
              {"N1", d.rate1()},
              {"N2", d.rate2()},
              {"signal_counts_1", d.signal_counts_first},
              {"signal_counts_2", d.signal_counts_second}};
}

Json correlation_json(const CorrelationResult& r) {
  const CoincidenceHistogram& h = r.histogram;
  const std::size_t z = h.zero_bin();
  return Json{{"bin_width_ns", ps_to_ns(h.bin_width)},
              {"bins", h.size()},
              {"T_s", h.duration_s},
              {"N1", h.rate1},
              {"N2", h.rate2},
              {"rho", r.rho},
              {"mode", h.start_stop ? "start_stop" : "pairs"},
              {"poisson_level", h.poisson_level()},
              {"coincidences", h.total()},
              {"zero_bin_counts", h.counts[z]},
              {"zero_bin_C_N", r.cn[z]},
              {"zero_bin_g2", r.g2[z]},
              {"zero_bin_sigma_g2", r.g2_sigma[z]}};
}

}  // namespace

void apply_overrides(ExperimentConfig& c, const Overrides& o) {
  if (o.seed) c.seed = *o.seed;
  if (o.bin_width_ns) c.correlator.bin_width = ns_to_ps(*o.bin_width_ns);
  if (o.t_max_ns) c.correlator.t_max = ns_to_ps(*o.t_max_ns);
  if (o.delay_ns) c.correlator.delay = ns_to_ps(*o.delay_ns);
  if (o.rho) c.rho = *o.rho;
  if (o.start_stop) c.start_stop = true;
  c.validate();
}

Json cmd_simulate(const ExperimentConfig& config, const fs::path& out, bool write_photons) {
  config.validate();
  const std::uint64_t seed = config.require_seed();
  const auto emitters = config.emitter_list();
  fs::create_directories(out);

  PhotonStream photons;
  photons.duration = config.duration();
  PhotonSink sink;
  if (write_photons) {
    sink = [&](std::span<const Photon> chunk) { photons.photons.insert(photons.photons.end(), chunk.begin(), chunk.end()); };
  }
  const StreamedDetection s = simulate_detection(emitters, config.detection, config.duration(), seed, sink);
  Json outputs = Json::array();
  if (write_photons) {
    write_photon_stream(out / "photons.bin", photons, seed);
    outputs.push_back("photons.bin");
  }
  write_click_record(out / "clicks_1.bin", s.detection.first, seed);
  write_click_record(out / "clicks_2.bin", s.detection.second, seed);
  outputs.push_back("clicks_1.bin");
  outputs.push_back("clicks_2.bin");

  Json m = base_manifest("simulate", &config);
  m["outputs"] = outputs;
  Json results = detection_json(s.detection, s.emitted);
  double emission = 0.0;
  for (const auto& e : emitters) emission += emission_rate_per_s(e);
  results["emission_rate_per_s"] = emission;
  results["expected_rho"] = expected_rho(emitters, config.detection);
  m["results"] = results;
  finish(out, m, &config);
  return m;
}

Json cmd_detect(const ExperimentConfig& config, const fs::path& photons_path, const fs::path& out) {
  config.validate();
  const std::uint64_t seed = config.require_seed();
  const PhotonStream photons = read_photon_stream(photons_path);
  const DetectionResult d = detect(photons, config.detection, detection_seed(seed));
  write_click_record(out / "clicks_1.bin", d.first, seed);
  write_click_record(out / "clicks_2.bin", d.second, seed);
  Json m = base_manifest("detect", &config);
  m["inputs"] = Json::array({photons_path.string()});
  m["outputs"] = Json::array({"clicks_1.bin", "clicks_2.bin"});
  m["results"] = detection_json(d, photons.size());
  finish(out, m, &config);
  return m;
}

Json cmd_correlate(const fs::path& record_a, const fs::path& record_b, const CorrelatorSettings& settings,
                   double rho, bool start_stop, const fs::path& out) {
  settings.validate();
  const ClickRecord a = read_click_record(record_a);
  const ClickRecord b = read_click_record(record_b);
  const CoincidenceHistogram h = start_stop ? tac_start_stop(a, b, settings) : cross_correlate(a, b, settings);
  const CorrelationResult r = correlate(h, rho);
  fs::create_directories(out);
  write_correlation_csv(out / "correlation.csv", r);
  Json m = base_manifest("correlate", nullptr);
  m["inputs"] = Json::array({record_a.string(), record_b.string()});
  m["settings"] = Json{{"bin_width_ps", settings.bin_width},
                       {"t_max_ps", settings.t_max},
                       {"delay_ps", settings.delay},
                       {"rho", rho},
                       {"start_stop", start_stop}};
  m["outputs"] = Json::array({"correlation.csv"});
  m["results"] = correlation_json(r);
  finish(out, m, nullptr);
  return m;
}

FitCommandResult cmd_fit(const fs::path& csv, const fs::path& out) {
  const CorrelationTable table = read_correlation_csv(csv);
  FitCommandResult r;
  r.fit = fit_g2(table.curve());
  fs::create_directories(out);
  write_text(out / "fit.txt", fit_report(r.fit));
  write_fit_csv(out / "fit.csv", r.fit);
  r.manifest = base_manifest("fit", nullptr);
  r.manifest["inputs"] = Json::array({csv.string()});
  r.manifest["outputs"] = Json::array({"fit.txt", "fit.csv"});
  r.manifest["results"] = fit_json(r.fit);
  finish(out, r.manifest, nullptr);
  return r;
}

ScanCommandResult cmd_scan(const ExperimentConfig& config, const fs::path& out) {
  config.validate();
  const std::uint64_t seed = config.require_seed();
  ScanCommandResult r;
  r.image = render_preset(config.scan, seed);
  const int row = brightest_row(r.image);
  const std::vector<double> line = r.image.row(row);
  r.fit = fit_line_profile(line, r.image.pixel_size_nm, r.image.dwell_time_ms, config.scan.fit_window_nm);

  fs::create_directories(out);
  write_scan_csv(out / "scan.csv", r.image);
  write_pgm(out / "scan.pgm", r.image);
  write_line_csv(out / "line.csv", line, r.image.pixel_size_nm);
  write_text(out / "line_fit.txt", line_fit_report(r.fit));

  r.manifest = base_manifest("scan", &config);
  r.manifest["outputs"] = Json::array({"scan.csv", "scan.pgm", "line.csv", "line_fit.txt"});
  r.manifest["results"] = Json{{"line_row", row},
                               {"total_counts", r.image.total()},
                               {"peak_found", r.fit.peak_found},
                               {"rho", r.fit.rho},
                               {"signal_per_s", r.fit.signal_per_s},
                               {"background_per_s", r.fit.background_per_s},
                               {"fwhm_nm", r.fit.fwhm_nm},
                               {"true_rho", config.scan.emitters.empty() ? 0.0 : true_rho(config.scan)}};
  finish(out, r.manifest, &config);
  return r;
}

PipelineCommandResult cmd_pipeline(const ExperimentConfig& config, const fs::path& out) {
  config.validate();
  PipelineCommandResult r;
  r.run = run_pipeline(config.pipeline());
  r.fit = fit_g2(curve_from_correlation(r.run.correlation));
  fs::create_directories(out);
  write_correlation_csv(out / "correlation.csv", r.run.correlation);
  write_text(out / "fit.txt", fit_report(r.fit));
  write_fit_csv(out / "fit.csv", r.fit);

  r.manifest = base_manifest("pipeline", &config);
  r.manifest["outputs"] = Json::array({"correlation.csv", "fit.txt", "fit.csv"});
  Json results = detection_json(r.run.detection, r.run.emitted);
  results["correlation"] = correlation_json(r.run.correlation);
  results["fit"] = fit_json(r.fit);
  try {
    const G2Decomposition truth = g2_decomposition(config.emitters.front().params);
    results["truth"] = Json{{"tau1_ns", truth.tau1_ns}, {"tau2_ns", truth.tau2_ns}, {"a", truth.a}};
  } catch (const ParameterError&) {
  }
  r.manifest["results"] = results;
  finish(out, r.manifest, &config);
  return r;
}

}  // namespace antibunch
