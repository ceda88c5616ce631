// antibunch: simulate, detect, correlate, fit and scan from the command line.

#include <antibunch/commands.hpp>
#include <antibunch/io.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace ab = antibunch;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_path;
  std::string out_dir;
  ab::Overrides overrides;
  std::optional<std::uint64_t> seed;
  std::optional<double> bin_width_ns, t_max_ns, delay_ns, rho;
};

void add_common(CLI::App* cmd, Common& c, bool correlator_flags) {
  cmd->add_option("--config", c.config_path, "INI config file")->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out_dir, "output directory");
  cmd->add_option("--seed", c.seed, "root random seed (u64)");
  if (correlator_flags) {
    cmd->add_option("--bin-width-ns", c.bin_width_ns, "histogram bin width w");
    cmd->add_option("--t-max-ns", c.t_max_ns, "histogram half range");
    cmd->add_option("--delay-ns", c.delay_ns, "delay added to the second record");
    cmd->add_option("--rho", c.rho, "signal fraction S/(S+B) for background correction");
    cmd->add_flag("--start-stop", c.overrides.start_stop, "first-stop (TAC) estimator instead of all pairs");
  }
}

ab::ExperimentConfig resolve(Common& c) {
  ab::ExperimentConfig cfg = c.config_path.empty() ? ab::default_config() : ab::load_config(c.config_path);
  c.overrides.seed = c.seed;
  c.overrides.bin_width_ns = c.bin_width_ns;
  c.overrides.t_max_ns = c.t_max_ns;
  c.overrides.delay_ns = c.delay_ns;
  c.overrides.rho = c.rho;
  ab::apply_overrides(cfg, c.overrides);
  if (c.out_dir.empty()) c.out_dir = cfg.output_dir;
  return cfg;
}

void print_results(const ab::Json& manifest) {
  if (manifest.contains("results")) std::cout << manifest["results"].dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Photon antibunching simulation and analysis"};
  app.require_subcommand(1);

  Common sim_opts, det_opts, cor_opts, fit_opts, scan_opts, pipe_opts;
  bool no_photons = false;
  std::string photons_path, record_a, record_b, csv_path;

  auto* sim = app.add_subcommand("simulate", "emit photons and detect them in both arms");
  add_common(sim, sim_opts, false);
  sim->add_flag("--no-photons", no_photons, "do not write the emitted photon stream");

  auto* det = app.add_subcommand("detect", "detect a stored photon stream");
  add_common(det, det_opts, false);
  det->add_option("photons", photons_path, "photon stream (.bin)")->required();

  auto* cor = app.add_subcommand("correlate", "coincidence histogram, C_N and corrected g2");
  add_common(cor, cor_opts, true);
  cor->add_option("record_a", record_a, "start record (.bin)")->required();
  cor->add_option("record_b", record_b, "stop record (.bin)")->required();

  auto* fit = app.add_subcommand("fit", "fit a correlation CSV to the three-level model");
  fit->add_option("csv", csv_path, "correlation CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--out", fit_opts.out_dir, "output directory");

  auto* scan = app.add_subcommand("scan", "render a confocal raster scan and fit its line profile");
  add_common(scan, scan_opts, false);

  auto* pipe = app.add_subcommand("pipeline", "simulate, detect, correlate and fit in one run");
  add_common(pipe, pipe_opts, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      const auto cfg = resolve(sim_opts);
      print_results(ab::cmd_simulate(cfg, sim_opts.out_dir, !no_photons));
    } else if (*det) {
      const auto cfg = resolve(det_opts);
      print_results(ab::cmd_detect(cfg, photons_path, det_opts.out_dir));
    } else if (*cor) {
      const bool have_config = !cor_opts.config_path.empty();
      const auto cfg = resolve(cor_opts);
      double rho = 1.0;
      if (cfg.rho) {
        rho = *cfg.rho;
      } else if (have_config) {
        const auto emitters = cfg.emitter_list();
        rho = ab::expected_rho(emitters, cfg.detection);
      }
      print_results(ab::cmd_correlate(record_a, record_b, cfg.correlator, rho, cfg.start_stop, cor_opts.out_dir));
    } else if (*fit) {
      if (fit_opts.out_dir.empty()) fit_opts.out_dir = "out";
      const auto r = ab::cmd_fit(csv_path, fit_opts.out_dir);
      std::cout << ab::fit_report(r.fit);
      if (!r.fit.converged) {
        std::cerr << "fit did not converge; best parameters so far reported\n";
        return 2;
      }
    } else if (*scan) {
      const auto cfg = resolve(scan_opts);
      const auto r = ab::cmd_scan(cfg, scan_opts.out_dir);
      std::cout << ab::line_fit_report(r.fit);
    } else if (*pipe) {
      const auto cfg = resolve(pipe_opts);
      const auto r = ab::cmd_pipeline(cfg, pipe_opts.out_dir);
      print_results(r.manifest);
      if (!r.fit.converged) {
        std::cerr << "fit did not converge; best parameters so far reported\n";
        return 2;
      }
    }
  } catch (const ab::ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 64;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
