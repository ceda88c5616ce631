#include "antibunch/config.hpp"

#include "antibunch/io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

namespace antibunch {

namespace pt = boost::property_tree;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Typed access to one INI section that rejects unknown keys.
class Section {
 public:
  Section(std::string name, const pt::ptree& tree, std::set<std::string> allowed)
      : name_(std::move(name)), tree_(tree) {
    for (const auto& [key, value] : tree_) {
      if (!value.empty()) throw ParameterError("[" + name_ + "] nested sections are not supported");
      if (!allowed.count(key)) throw ParameterError("[" + name_ + "] unknown key '" + key + "'");
    }
  }

  std::optional<std::string> text(const std::string& key) const {
    if (auto v = tree_.get_optional<std::string>(key)) return trim(*v);
    return std::nullopt;
  }

  std::optional<double> number(const std::string& key) const {
    const auto t = text(key);
    if (!t) return std::nullopt;
    try {
      std::size_t used = 0;
      const double v = std::stod(*t, &used);
      if (used == t->size()) return v;
    } catch (const std::exception&) {
    }
    throw ParameterError("[" + name_ + "] " + key + " is not a number: '" + *t + "'");
  }

  std::optional<std::uint64_t> unsigned_integer(const std::string& key) const {
    const auto t = text(key);
    if (!t) return std::nullopt;
    try {
      std::size_t used = 0;
      const auto v = std::stoull(*t, &used, 0);
      if (used == t->size() && t->find('-') == std::string::npos) return v;
    } catch (const std::exception&) {
    }
    throw ParameterError("[" + name_ + "] " + key + " is not an unsigned integer: '" + *t + "'");
  }

  std::optional<int> integer(const std::string& key) const {
    const auto v = unsigned_integer(key);
    if (!v) return std::nullopt;
    if (*v > 1'000'000'000ull) throw ParameterError("[" + name_ + "] " + key + " is too large");
    return static_cast<int>(*v);
  }

  std::optional<bool> boolean(const std::string& key) const {
    const auto t = text(key);
    if (!t) return std::nullopt;
    std::string s = *t;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
    if (s == "false" || s == "no" || s == "0" || s == "off") return false;
    throw ParameterError("[" + name_ + "] " + key + " is not a boolean: '" + *t + "'");
  }

  template <class T>
  void set(const std::string& key, T& out) const {
    if constexpr (std::is_same_v<T, double>) {
      if (auto v = number(key)) out = *v;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (auto v = boolean(key)) out = *v;
    } else if constexpr (std::is_same_v<T, int>) {
      if (auto v = integer(key)) out = *v;
    } else {
      if (auto v = text(key)) out = *v;
    }
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  }

  std::string name_;
  const pt::ptree& tree_;
};

EmitterGroup parse_emitter(const std::string& name, const pt::ptree& tree) {
  const Section s(name, tree,
                  {"preset", "count", "power_mW", "pump_rate", "lifetime_ns", "radiative_rate", "shelve_rate",
                   "deshelve_rate", "laser_deshelve_coeff", "x_um", "y_um", "z_um"});
  EmitterGroup g;
  s.set("preset", g.preset);
  s.set("count", g.count);
  s.set("power_mW", g.power_mW);
  EmitterParams& p = g.params;
  p = emitter_preset(g.preset, g.power_mW);
  if (auto v = s.number("laser_deshelve_coeff")) p.laser_deshelve_coeff = *v;
  s.set("pump_rate", p.pump_rate);
  if (auto v = s.number("lifetime_ns")) {
    if (!(*v > 0.0)) throw ParameterError("[" + name + "] lifetime_ns must be positive");
    p.radiative_rate = 1.0 / *v;
  }
  s.set("radiative_rate", p.radiative_rate);
  s.set("shelve_rate", p.shelve_rate);
  s.set("deshelve_rate", p.deshelve_rate);
  s.set("x_um", p.position.x_um);
  s.set("y_um", p.position.y_um);
  s.set("z_um", p.position.z_um);
  if (g.count < 1) throw ParameterError("[" + name + "] count must be at least 1");
  p.validate();
  return g;
}

DetectionConfig detection_preset(const std::string& name) {
  if (name == "paper") return paper_detection();
  if (name == "ideal") return ideal_detection();
  throw ParameterError("unknown detection preset '" + name + "'");
}

}  // namespace

EmitterParams emitter_preset(const std::string& name, double power_mW) {
  if (!(power_mW >= 0.0)) throw ParameterError("laser power must be non-negative");
  const CalibratedEmitter paper = paper_emitter();
  if (name == "paper") return paper.at_power(power_mW);
  if (name == "unshelved") {
    EmitterParams p = paper.at_power(power_mW);
    p.shelve_rate = 0.0;
    p.deshelve_rate = 0.0;
    return p;
  }
  throw ParameterError("unknown emitter preset '" + name + "'");
}

std::uint64_t preset_hash(const EmitterParams& p) {
  const std::string text = "pump_rate=" + num(p.pump_rate) + ";radiative_rate=" + num(p.radiative_rate) +
                           ";shelve_rate=" + num(p.shelve_rate) + ";deshelve_rate=" + num(p.deshelve_rate) +
                           ";laser_deshelve_coeff=" + num(p.laser_deshelve_coeff) + ";x_um=" +
                           num(p.position.x_um) + ";y_um=" + num(p.position.y_um) + ";z_um=" + num(p.position.z_um);
  return fnv1a(text);
}

std::uint64_t ExperimentConfig::require_seed() const {
  if (!seed) throw ParameterError("a seed is required ([run] seed or --seed)");
  return *seed;
}

std::vector<EmitterParams> ExperimentConfig::emitter_list() const {
  std::vector<EmitterParams> out;
  for (const auto& g : emitters)
    for (int i = 0; i < g.count; ++i) out.push_back(g.params);
  return out;
}

PipelineSettings ExperimentConfig::pipeline() const {
  PipelineSettings s;
  s.emitters = emitter_list();
  s.detection = detection;
  s.correlator = correlator;
  s.duration = duration();
  s.seed = require_seed();
  s.start_stop = start_stop;
  s.rho = rho;
  return s;
}

void ExperimentConfig::validate() const {
  if (!(duration_s >= 0.0) || !std::isfinite(duration_s)) throw ParameterError("duration_s must be non-negative");
  if (emitters.empty()) throw ParameterError("at least one emitter is required");
  for (const auto& g : emitters) {
    if (g.count < 1) throw ParameterError("emitter count must be at least 1");
    g.params.validate();
  }
  detection.validate();
  correlator.validate();
  if (rho && !(*rho > 0.0 && *rho <= 1.0)) throw ParameterError("rho must be in (0, 1]");
  scan.optics.validate();
}

std::string ExperimentConfig::to_ini() const {
  std::ostringstream s;
  s << "[run]\n";
  if (seed) s << "seed = " << *seed << "\n";
  s << "duration_s = " << num(duration_s) << "\n"
    << "output = " << output_dir << "\n";
  for (std::size_t i = 0; i < emitters.size(); ++i) {
    const EmitterGroup& g = emitters[i];
    s << "\n[" << (i == 0 ? std::string("emitter") : "emitter_" + std::to_string(i + 1)) << "]\n"
      << "preset = " << g.preset << "\n"
      << "count = " << g.count << "\n"
      << "power_mW = " << num(g.power_mW) << "\n"
      << "pump_rate = " << num(g.params.pump_rate) << "\n"
      << "radiative_rate = " << num(g.params.radiative_rate) << "\n"
      << "shelve_rate = " << num(g.params.shelve_rate) << "\n"
      << "deshelve_rate = " << num(g.params.deshelve_rate) << "\n"
      << "laser_deshelve_coeff = " << num(g.params.laser_deshelve_coeff) << "\n"
      << "x_um = " << num(g.params.position.x_um) << "\n"
      << "y_um = " << num(g.params.position.y_um) << "\n"
      << "z_um = " << num(g.params.position.z_um) << "\n";
  }
  const DetectionConfig& d = detection;
  s << "\n[detection]\n"
    << "preset = " << detection_preset << "\n"
    << "eta_geom = " << num(d.eta_geom) << "\n"
    << "eta_ab = " << num(d.eta_ab) << "\n"
    << "eta_opt = " << num(d.eta_opt) << "\n"
    << "eta_det = " << num(d.eta_det) << "\n"
    << "bs_ratio = " << num(d.bs_ratio) << "\n"
    << "background_rate = " << num(d.background_rate_per_detector) << "\n"
    << "dead_time_ns = " << num(d.dead_time_ns) << "\n"
    << "jitter_sigma_ns = " << num(d.jitter_sigma_ns) << "\n";
  s << "\n[correlator]\n"
    << "bin_width_ns = " << num(ps_to_ns(correlator.bin_width)) << "\n"
    << "t_max_ns = " << num(ps_to_ns(correlator.t_max)) << "\n"
    << "delay_ns = " << num(ps_to_ns(correlator.delay)) << "\n"
    << "rho = " << (rho ? num(*rho) : std::string("auto")) << "\n"
    << "start_stop = " << (start_stop ? "true" : "false") << "\n"
    << "threads = " << correlator.threads << "\n";
  const OpticsModel& o = scan.optics;
  s << "\n[scan]\n"
    << "preset = " << scan_preset << "\n"
    << "power_mW = " << num(scan.power_mW) << "\n"
    << "background_coeff = " << num(scan.background_coeff) << "\n"
    << "psf_fwhm_nm = " << num(o.psf_fwhm_nm) << "\n"
    << "halo_fraction = " << num(o.halo_fraction) << "\n"
    << "halo_diameter_um = " << num(o.halo_diameter_um) << "\n"
    << "pixel_size_nm = " << num(o.pixel_size_nm) << "\n"
    << "dwell_time_ms = " << num(o.dwell_time_ms) << "\n"
    << "columns = " << o.columns << "\n"
    << "rows = " << o.rows << "\n"
    << "fit_window_nm = " << num(scan.fit_window_nm) << "\n";
  return s.str();
}

ExperimentConfig default_config() {
  ExperimentConfig c;
  EmitterGroup g;
  g.params = emitter_preset(g.preset, g.power_mW);
  c.emitters.push_back(g);
  return c;
}

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParameterError(std::string("config: ") + e.what());
  }
  ExperimentConfig c = default_config();
  bool have_emitters = false;
  std::set<std::string> known{"run", "detection", "correlator", "scan"};
  for (const auto& [name, section] : tree) {
    if (name == "emitter" || name.rfind("emitter_", 0) == 0) {
      if (!have_emitters) c.emitters.clear();
      have_emitters = true;
      c.emitters.push_back(parse_emitter(name, section));
    } else if (!known.count(name)) {
      throw ParameterError("config: unknown section [" + name + "]");
    }
  }
  const pt::ptree empty;
  auto sub = [&](const std::string& n) -> const pt::ptree& {
    const auto it = tree.find(n);
    return it == tree.not_found() ? empty : it->second;
  };

  const Section run("run", sub("run"), {"seed", "duration_s", "output"});
  if (auto v = run.unsigned_integer("seed")) c.seed = *v;
  run.set("duration_s", c.duration_s);
  run.set("output", c.output_dir);

  const Section det("detection", sub("detection"),
                    {"preset", "eta_geom", "eta_ab", "eta_opt", "eta_det", "bs_ratio", "background_rate",
                     "dead_time_ns", "jitter_sigma_ns"});
  det.set("preset", c.detection_preset);
  c.detection = detection_preset(c.detection_preset);
  det.set("eta_geom", c.detection.eta_geom);
  det.set("eta_ab", c.detection.eta_ab);
  det.set("eta_opt", c.detection.eta_opt);
  det.set("eta_det", c.detection.eta_det);
  det.set("bs_ratio", c.detection.bs_ratio);
  det.set("background_rate", c.detection.background_rate_per_detector);
  det.set("dead_time_ns", c.detection.dead_time_ns);
  det.set("jitter_sigma_ns", c.detection.jitter_sigma_ns);

  const Section cor("correlator", sub("correlator"),
                    {"bin_width_ns", "t_max_ns", "delay_ns", "rho", "start_stop", "threads"});
  if (auto v = cor.number("bin_width_ns")) c.correlator.bin_width = ns_to_ps(*v);
  if (auto v = cor.number("t_max_ns")) c.correlator.t_max = ns_to_ps(*v);
  if (auto v = cor.number("delay_ns")) c.correlator.delay = ns_to_ps(*v);
  if (auto t = cor.text("rho"); t && *t != "auto") c.rho = cor.number("rho");
  cor.set("start_stop", c.start_stop);
  if (auto v = cor.integer("threads")) c.correlator.threads = static_cast<unsigned>(std::max(*v, 1));

  const Section sc("scan", sub("scan"),
                   {"preset", "power_mW", "background_coeff", "psf_fwhm_nm", "halo_fraction", "halo_diameter_um",
                    "pixel_size_nm", "dwell_time_ms", "columns", "rows", "fit_window_nm"});
  sc.set("preset", c.scan_preset);
  if (c.scan_preset == "paper") {
    c.scan = paper_scan_preset();
  } else if (c.scan_preset == "empty") {
    c.scan = paper_scan_preset();
    c.scan.emitters.clear();
  } else {
    throw ParameterError("unknown scan preset '" + c.scan_preset + "'");
  }
  sc.set("power_mW", c.scan.power_mW);
  sc.set("background_coeff", c.scan.background_coeff);
  sc.set("psf_fwhm_nm", c.scan.optics.psf_fwhm_nm);
  sc.set("halo_fraction", c.scan.optics.halo_fraction);
  sc.set("halo_diameter_um", c.scan.optics.halo_diameter_um);
  sc.set("pixel_size_nm", c.scan.optics.pixel_size_nm);
  sc.set("dwell_time_ms", c.scan.optics.dwell_time_ms);
  sc.set("columns", c.scan.optics.columns);
  sc.set("rows", c.scan.optics.rows);
  sc.set("fit_window_nm", c.scan.fit_window_nm);

  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) { return parse_config(read_text(path)); }

}  // namespace antibunch
