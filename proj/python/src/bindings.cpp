#include <antibunch/analysis.hpp>
#include <antibunch/commands.hpp>
#include <antibunch/config.hpp>
#include <antibunch/correlator.hpp>
#include <antibunch/detection.hpp>
#include <antibunch/emitter.hpp>
#include <antibunch/pipeline.hpp>
#include <antibunch/scan.hpp>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
namespace ab = antibunch;

namespace {

template <class T>
py::array_t<T> to_array(const std::vector<T>& v) {
  py::array_t<T> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

std::vector<std::int64_t> from_array(const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>& a) {
  return {a.data(), a.data() + a.size()};
}

ab::ClickRecord record(const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>& t,
                       std::int64_t duration_ps, int id) {
  ab::ClickRecord r;
  r.timestamps = from_array(t);
  r.duration = duration_ps;
  r.detector_id = id;
  if (!r.valid()) throw ab::DataError("timestamps must be sorted inside [0, duration]");
  return r;
}

py::dict histogram_dict(const ab::CoincidenceHistogram& h) {
  py::dict d;
  std::vector<double> edges(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) edges[i] = h.left_edge_ns(i);
  d["t_ns"] = to_array(edges);
  d["counts"] = to_array(h.counts);
  d["bin_width_ns"] = ab::ps_to_ns(h.bin_width);
  d["duration_s"] = h.duration_s;
  d["rate1"] = h.rate1;
  d["rate2"] = h.rate2;
  d["zero_bin"] = h.zero_bin();
  d["poisson_level"] = h.poisson_level();
  return d;
}

py::dict correlation_dict(const ab::CorrelationResult& r) {
  py::dict d = histogram_dict(r.histogram);
  d["cn"] = to_array(r.cn);
  d["cn_sigma"] = to_array(r.cn_sigma);
  d["g2"] = to_array(r.g2);
  d["g2_sigma"] = to_array(r.g2_sigma);
  d["rho"] = r.rho;
  return d;
}

ab::CorrelatorSettings settings(double bin_width_ns, double t_max_ns, double delay_ns, unsigned threads) {
  ab::CorrelatorSettings s;
  s.bin_width = ab::ns_to_ps(bin_width_ns);
  s.t_max = ab::ns_to_ps(t_max_ns);
  s.delay = ab::ns_to_ps(delay_ns);
  s.threads = threads;
  s.validate();
  return s;
}

}  // namespace

PYBIND11_MODULE(_antibunch, m) {
  m.doc() = "Photon antibunching simulation and g2 analysis";

  py::register_exception<ab::ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<ab::DataError>(m, "DataError", PyExc_RuntimeError);

  py::class_<ab::EmitterParams>(m, "EmitterParams")
      .def(py::init<>())
      .def_readwrite("pump_rate", &ab::EmitterParams::pump_rate)
      .def_readwrite("radiative_rate", &ab::EmitterParams::radiative_rate)
      .def_readwrite("shelve_rate", &ab::EmitterParams::shelve_rate)
      .def_readwrite("deshelve_rate", &ab::EmitterParams::deshelve_rate)
      .def_readwrite("laser_deshelve_coeff", &ab::EmitterParams::laser_deshelve_coeff)
      .def("with_pump", &ab::EmitterParams::with_pump)
      .def("lifetime_ns", &ab::EmitterParams::lifetime_ns)
      .def("__repr__", [](const ab::EmitterParams& p) {
        return "EmitterParams(pump_rate=" + std::to_string(p.pump_rate) +
               ", radiative_rate=" + std::to_string(p.radiative_rate) +
               ", shelve_rate=" + std::to_string(p.shelve_rate) +
               ", deshelve_rate=" + std::to_string(p.deshelve_rate) + ")";
      });

  py::class_<ab::G2Decomposition>(m, "G2Decomposition")
      .def_readonly("tau1_ns", &ab::G2Decomposition::tau1_ns)
      .def_readonly("tau2_ns", &ab::G2Decomposition::tau2_ns)
      .def_readonly("a", &ab::G2Decomposition::a);

  py::class_<ab::DetectionConfig>(m, "DetectionConfig")
      .def(py::init<>())
      .def_readwrite("eta_geom", &ab::DetectionConfig::eta_geom)
      .def_readwrite("eta_ab", &ab::DetectionConfig::eta_ab)
      .def_readwrite("eta_opt", &ab::DetectionConfig::eta_opt)
      .def_readwrite("eta_det", &ab::DetectionConfig::eta_det)
      .def_readwrite("bs_ratio", &ab::DetectionConfig::bs_ratio)
      .def_readwrite("background_rate_per_detector", &ab::DetectionConfig::background_rate_per_detector)
      .def_readwrite("dead_time_ns", &ab::DetectionConfig::dead_time_ns)
      .def_readwrite("jitter_sigma_ns", &ab::DetectionConfig::jitter_sigma_ns)
      .def("arm_efficiency", &ab::DetectionConfig::arm_efficiency);

  py::class_<ab::FitResult>(m, "FitResult")
      .def_readonly("tau1_ns", &ab::FitResult::tau1_ns)
      .def_readonly("tau2_ns", &ab::FitResult::tau2_ns)
      .def_readonly("a", &ab::FitResult::a)
      .def_readonly("g2_zero", &ab::FitResult::g2_zero)
      .def_readonly("chi2", &ab::FitResult::chi2)
      .def_readonly("tau1_sigma", &ab::FitResult::tau1_sigma)
      .def_readonly("tau2_sigma", &ab::FitResult::tau2_sigma)
      .def_readonly("a_sigma", &ab::FitResult::a_sigma)
      .def_readonly("iterations", &ab::FitResult::iterations)
      .def_readonly("converged", &ab::FitResult::converged)
      .def_readonly("degenerate", &ab::FitResult::degenerate);

  py::class_<ab::LineFit>(m, "LineFit")
      .def_readonly("peak_found", &ab::LineFit::peak_found)
      .def_readonly("converged", &ab::LineFit::converged)
      .def_readonly("signal_per_s", &ab::LineFit::signal_per_s)
      .def_readonly("background_per_s", &ab::LineFit::background_per_s)
      .def_readonly("rho", &ab::LineFit::rho)
      .def_readonly("fwhm_nm", &ab::LineFit::fwhm_nm)
      .def_readonly("center_nm", &ab::LineFit::center_nm);

  m.def("paper_emitter", [] { return ab::paper_emitter().params; },
        "Default calibrated emitter at the 15 mW reference power.");
  m.def("paper_emitter_at_power", [](double p) { return ab::paper_emitter().at_power(p); }, py::arg("power_mW"));
  m.def("paper_detection", &ab::paper_detection);
  m.def("ideal_detection", &ab::ideal_detection);
  m.def("emission_rate_per_s", &ab::emission_rate_per_s);
  m.def("g2_decomposition", &ab::g2_decomposition);
  m.def(
      "analytic_g2",
      [](const ab::EmitterParams& p, py::array_t<double, py::array::c_style | py::array::forcecast> t) {
        py::array_t<double> out(t.request().shape);
        for (py::ssize_t i = 0; i < t.size(); ++i) out.mutable_data()[i] = ab::analytic_g2(p, t.data()[i]);
        return out;
      },
      py::arg("params"), py::arg("t_ns"));
  m.def("model_g2",
        py::vectorize([](double t, double tau1, double tau2, double a) { return ab::model_g2(t, tau1, tau2, a); }),
        py::arg("t_ns"), py::arg("tau1_ns"), py::arg("tau2_ns"), py::arg("a"));
  m.def("multi_emitter_dip", &ab::multi_emitter_dip);

  m.def(
      "simulate_photon_stream",
      [](const std::vector<ab::EmitterParams>& emitters, double duration_s, std::uint64_t seed) {
        const ab::PhotonStream s = ab::multi_emitter_stream(emitters, ab::seconds_to_ps(duration_s), seed);
        std::vector<std::int64_t> t(s.size());
        std::vector<std::uint32_t> src(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
          t[i] = s.photons[i].time;
          src[i] = s.photons[i].source;
        }
        return py::make_tuple(to_array(t), to_array(src));
      },
      py::arg("emitters"), py::arg("duration_s"), py::arg("seed"),
      "Emission times in ps and emitter indices of the merged stream.");

  m.def(
      "simulate_detection",
      [](const std::vector<ab::EmitterParams>& emitters, const ab::DetectionConfig& config, double duration_s,
         std::uint64_t seed) {
        ab::StreamedDetection s;
        {
          py::gil_scoped_release release;
          s = ab::simulate_detection(emitters, config, ab::seconds_to_ps(duration_s), seed);
        }
        return py::make_tuple(to_array(s.detection.first.timestamps), to_array(s.detection.second.timestamps));
      },
      py::arg("emitters"), py::arg("config"), py::arg("duration_s"), py::arg("seed"),
      "Click times (ps) of both detectors.");

  m.def(
      "cross_correlate",
      [](py::array_t<std::int64_t, py::array::c_style | py::array::forcecast> a,
         py::array_t<std::int64_t, py::array::c_style | py::array::forcecast> b, std::int64_t duration_ps,
         double bin_width_ns, double t_max_ns, double delay_ns, double rho, unsigned threads) {
        const auto ra = record(a, duration_ps, 1);
        const auto rb = record(b, duration_ps, 2);
        const auto s = settings(bin_width_ns, t_max_ns, delay_ns, threads);
        ab::CorrelationResult r;
        {
          py::gil_scoped_release release;
          r = ab::correlate(ab::cross_correlate(ra, rb, s), rho);
        }
        return correlation_dict(r);
      },
      py::arg("a"), py::arg("b"), py::arg("duration_ps"), py::arg("bin_width_ns") = 1.0, py::arg("t_max_ns") = 200.0,
      py::arg("delay_ns") = 0.0, py::arg("rho") = 1.0, py::arg("threads") = 1u);

  m.def(
      "background_correct",
      [](const std::vector<double>& cn, double rho) { return to_array(ab::background_correct(cn, rho)); },
      py::arg("cn"), py::arg("rho"));

  m.def(
      "fit_g2",
      [](const std::vector<double>& t, const std::vector<double>& g2, const std::vector<double>& sigma) {
        ab::G2Curve c{t, g2, sigma};
        return ab::fit_g2(c);
      },
      py::arg("t_ns"), py::arg("g2"), py::arg("sigma"));

  m.def(
      "render_paper_scan",
      [](std::uint64_t seed) {
        const ab::ScanPreset p = ab::paper_scan_preset();
        const ab::ScanImage img = ab::render_preset(p, seed);
        py::array_t<std::uint64_t> out({img.rows, img.columns});
        std::copy(img.counts.begin(), img.counts.end(), out.mutable_data());
        return out;
      },
      py::arg("seed"), "Paper-preset raster scan, counts per pixel (rows x columns).");
  m.def("paper_scan_true_rho", [] { return ab::true_rho(ab::paper_scan_preset()); });
  m.def(
      "fit_line_profile",
      [](const std::vector<double>& line, double pixel_size_nm, double dwell_time_ms, double window_nm) {
        return ab::fit_line_profile(line, pixel_size_nm, dwell_time_ms, window_nm);
      },
      py::arg("line"), py::arg("pixel_size_nm"), py::arg("dwell_time_ms"),
      py::arg("window_nm") = std::numeric_limits<double>::infinity());

  m.def(
      "run_pipeline",
      [](const std::string& config_text, std::uint64_t seed) {
        ab::ExperimentConfig cfg = ab::parse_config(config_text);
        cfg.seed = seed;
        ab::PipelineResult r;
        {
          py::gil_scoped_release release;
          r = ab::run_pipeline(cfg.pipeline());
        }
        py::dict d = correlation_dict(r.correlation);
        d["emitted"] = r.emitted;
        d["clicks1"] = r.detection.first.size();
        d["clicks2"] = r.detection.second.size();
        return d;
      },
      py::arg("config_text"), py::arg("seed"), "Full pipeline from INI config text.");
}
