#include "antibunch/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace antibunch {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

fs::path sidecar(const fs::path& path, const char* ext) { return fs::path(path.string() + ext); }

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

template <class T>
void write_le(const fs::path& path, std::span<const T> values) {
  std::vector<unsigned char> bytes(values.size() * sizeof(T));
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto v = static_cast<std::uint64_t>(values[i]);
    for (std::size_t b = 0; b < sizeof(T); ++b) bytes[i * sizeof(T) + b] = static_cast<unsigned char>(v >> (8 * b));
  }
  auto out = open_out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

template <class T>
std::vector<T> read_le(const fs::path& path, std::uint64_t expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() != expected * sizeof(T))
    throw DataError(path.string() + ": size does not match the header count");
  std::vector<T> values(expected);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t v = 0;
    for (std::size_t b = 0; b < sizeof(T); ++b) v |= static_cast<std::uint64_t>(bytes[i * sizeof(T) + b]) << (8 * b);
    values[i] = static_cast<T>(v);
  }
  return values;
}

void write_header(const fs::path& path, const BinaryHeader& h) {
  std::ostringstream s;
  s << "format = antibunch-timestamps\n"
    << "version = 1\n"
    << "kind = " << h.kind << "\n"
    << "encoding = u64le-ps\n"
    << "count = " << h.count << "\n"
    << "duration_ps = " << h.duration << "\n"
    << "source_count = " << h.source_count << "\n";
  if (h.seed) s << "seed = " << *h.seed << "\n";
  if (h.kind == "clicks") s << "detector_id = " << h.detector_id << "\n";
  write_text(sidecar(path, ".hdr"), s.str());
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (trim(s.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw DataError("malformed number for " + what + ": '" + s + "'");
}

std::uint64_t to_u64(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (trim(s.substr(used)).empty() && s.find('-') == std::string::npos) return v;
  } catch (const std::exception&) {
  }
  throw DataError("malformed integer for " + what + ": '" + s + "'");
}

}  // namespace

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

BinaryHeader read_header(const fs::path& path) {
  std::istringstream in(read_text(sidecar(path, ".hdr")));
  std::map<std::string, std::string> kv;
  for (std::string line; std::getline(in, line);) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("malformed header line: " + line);
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  if (kv["format"] != "antibunch-timestamps") throw DataError(path.string() + ": not a timestamp file");
  if (kv["version"] != "1") throw DataError(path.string() + ": unsupported version");
  BinaryHeader h;
  h.kind = kv["kind"];
  h.count = to_u64(kv["count"], "count");
  const auto d = to_u64(kv["duration_ps"], "duration_ps");
  h.duration = static_cast<TimePs>(d);
  if (kv.count("source_count")) h.source_count = to_u64(kv["source_count"], "source_count");
  if (kv.count("seed")) h.seed = to_u64(kv["seed"], "seed");
  if (kv.count("detector_id")) h.detector_id = static_cast<int>(to_u64(kv["detector_id"], "detector_id"));
  return h;
}

void write_photon_stream(const fs::path& path, const PhotonStream& stream, std::optional<std::uint64_t> seed) {
  if (!stream.valid()) throw DataError("photon stream is not sorted inside [0, duration]");
  std::vector<std::uint64_t> t(stream.size());
  std::vector<std::uint32_t> src(stream.size());
  for (std::size_t i = 0; i < stream.size(); ++i) {
    t[i] = static_cast<std::uint64_t>(stream.photons[i].time);
    src[i] = stream.photons[i].source;
  }
  write_le<std::uint64_t>(path, t);
  write_le<std::uint32_t>(sidecar(path, ".src"), src);
  write_header(path, {"photons", stream.size(), stream.duration, stream.source_count(), seed, 0});
}

PhotonStream read_photon_stream(const fs::path& path) {
  const BinaryHeader h = read_header(path);
  if (h.kind != "photons") throw DataError(path.string() + ": not a photon stream");
  const auto t = read_le<std::uint64_t>(path, h.count);
  const auto src = read_le<std::uint32_t>(sidecar(path, ".src"), h.count);
  PhotonStream s;
  s.duration = h.duration;
  s.photons.resize(h.count);
  for (std::size_t i = 0; i < h.count; ++i) s.photons[i] = {static_cast<TimePs>(t[i]), src[i]};
  if (!s.valid()) throw DataError(path.string() + ": timestamps unsorted or outside the duration");
  return s;
}

void write_click_record(const fs::path& path, const ClickRecord& record, std::optional<std::uint64_t> seed) {
  if (!record.valid()) throw DataError("click record is not sorted inside [0, duration]");
  std::vector<std::uint64_t> t(record.timestamps.begin(), record.timestamps.end());
  write_le<std::uint64_t>(path, t);
  write_header(path, {"clicks", record.size(), record.duration, 1, seed, record.detector_id});
}

ClickRecord read_click_record(const fs::path& path) {
  const BinaryHeader h = read_header(path);
  if (h.kind != "clicks") throw DataError(path.string() + ": not a click record");
  const auto t = read_le<std::uint64_t>(path, h.count);
  ClickRecord r;
  r.duration = h.duration;
  r.detector_id = h.detector_id;
  r.timestamps.assign(t.begin(), t.end());
  if (!r.valid()) throw DataError(path.string() + ": timestamps unsorted or outside the duration");
  return r;
}

void write_correlation_csv(const fs::path& path, const CorrelationResult& r) {
  const CoincidenceHistogram& h = r.histogram;
  std::ostringstream s;
  s << "# w_ns = " << num(ps_to_ns(h.bin_width)) << "\n"
    << "# T_s = " << num(h.duration_s) << "\n"
    << "# N1 = " << num(h.rate1) << "\n"
    << "# N2 = " << num(h.rate2) << "\n"
    << "# rho = " << num(r.rho) << "\n"
    << "# delay_ns = " << num(ps_to_ns(h.delay)) << "\n"
    << "# mode = " << (h.start_stop ? "start_stop" : "pairs") << "\n"
    << "t_ns,c,C_N,g2,sigma_g2\n";
  for (std::size_t i = 0; i < r.size(); ++i) {
    s << num(h.left_edge_ns(i)) << ',' << h.counts[i] << ',' << num(r.cn[i]) << ',' << num(r.g2[i]) << ','
      << num(r.g2_sigma[i]) << '\n';
  }
  write_text(path, s.str());
}

double CorrelationTable::bin_width_ns() const {
  const auto it = metadata.find("w_ns");
  if (it != metadata.end()) return to_double(it->second, "w_ns");
  if (t_ns.size() >= 2) return t_ns[1] - t_ns[0];
  throw DataError("bin width unknown");
}

G2Curve CorrelationTable::curve() const {
  const double half = 0.5 * bin_width_ns();
  G2Curve c;
  for (double t : t_ns) c.t_ns.push_back(t + half);
  c.g2 = g2;
  c.sigma = sigma_g2;
  return c;
}

CorrelationTable read_correlation_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  CorrelationTable t;
  bool header = false;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) t.metadata[trim(line.substr(1, eq - 1))] = trim(line.substr(eq + 1));
      continue;
    }
    if (!header) {
      if (line != "t_ns,c,C_N,g2,sigma_g2") throw DataError(path.string() + ": unexpected CSV header");
      header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    if (cells.size() != 5) throw DataError(path.string() + ": line " + std::to_string(line_no) + " needs 5 columns");
    const std::string where = "line " + std::to_string(line_no);
    t.t_ns.push_back(to_double(cells[0], where));
    t.c.push_back(to_double(cells[1], where));
    t.cn.push_back(to_double(cells[2], where));
    t.g2.push_back(to_double(cells[3], where));
    t.sigma_g2.push_back(to_double(cells[4], where));
  }
  if (!header) throw DataError(path.string() + ": missing CSV header");
  return t;
}

std::string fit_report(const FitResult& f) {
  std::ostringstream s;
  s << "converged: " << (f.converged ? "yes" : "no") << "\n"
    << "degenerate: " << (f.degenerate ? "yes" : "no") << "\n"
    << "tau1_ns: " << num(f.tau1_ns) << " +- " << num(f.tau1_sigma) << "\n"
    << "tau2_ns: " << num(f.tau2_ns) << " +- " << num(f.tau2_sigma) << "\n"
    << "a: " << num(f.a) << " +- " << num(f.a_sigma) << "\n"
    << "g2_zero: " << num(f.g2_zero) << "\n"
    << "chi2: " << num(f.chi2) << "\n"
    << "dof: " << f.dof << "\n"
    << "residual_norm: " << num(f.residual_norm) << "\n"
    << "gradient_norm: " << num(f.gradient_norm) << "\n"
    << "iterations: " << f.iterations << "\n";
  return s.str();
}

void write_fit_csv(const fs::path& path, const FitResult& f) {
  std::ostringstream s;
  s << "tau1_ns,tau1_sigma,tau2_ns,tau2_sigma,a,a_sigma,g2_zero,chi2,dof,residual_norm,iterations,converged,"
       "degenerate\n"
    << num(f.tau1_ns) << ',' << num(f.tau1_sigma) << ',' << num(f.tau2_ns) << ',' << num(f.tau2_sigma) << ','
    << num(f.a) << ',' << num(f.a_sigma) << ',' << num(f.g2_zero) << ',' << num(f.chi2) << ',' << f.dof << ','
    << num(f.residual_norm) << ',' << f.iterations << ',' << (f.converged ? 1 : 0) << ',' << (f.degenerate ? 1 : 0)
    << '\n';
  write_text(path, s.str());
}

void write_scan_csv(const fs::path& path, const ScanImage& image) {
  std::ostringstream s;
  s << "# pixel_size_nm = " << num(image.pixel_size_nm) << "\n"
    << "# dwell_time_ms = " << num(image.dwell_time_ms) << "\n";
  for (int r = 0; r < image.rows; ++r) {
    for (int c = 0; c < image.columns; ++c) s << (c ? "," : "") << image.at(r, c);
    s << '\n';
  }
  write_text(path, s.str());
}

void write_pgm(const fs::path& path, const ScanImage& image) {
  const std::uint64_t peak = image.counts.empty() ? 0 : *std::max_element(image.counts.begin(), image.counts.end());
  const unsigned maxval = static_cast<unsigned>(std::clamp<std::uint64_t>(peak, 1, 65535));
  std::ostringstream head;
  head << "P5\n" << image.columns << ' ' << image.rows << '\n' << maxval << '\n';
  std::string data = head.str();
  for (auto c : image.counts) {
    const auto v = static_cast<unsigned>(std::min<std::uint64_t>(c, 65535));
    if (maxval > 255) data.push_back(static_cast<char>(v >> 8));
    data.push_back(static_cast<char>(v & 0xFF));
  }
  auto out = open_out(path, std::ios::binary);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

void write_line_csv(const fs::path& path, std::span<const double> line, double pixel_size_nm) {
  std::ostringstream s;
  s << "x_nm,counts\n";
  for (std::size_t i = 0; i < line.size(); ++i) s << num(static_cast<double>(i) * pixel_size_nm) << ',' << num(line[i]) << '\n';
  write_text(path, s.str());
}

std::string line_fit_report(const LineFit& f) {
  std::ostringstream s;
  s << "peak_found: " << (f.peak_found ? "yes" : "no") << "\n"
    << "converged: " << (f.converged ? "yes" : "no") << "\n"
    << "signal_per_s: " << num(f.signal_per_s) << " +- " << num(f.signal_sigma) << "\n"
    << "background_per_s: " << num(f.background_per_s) << " +- " << num(f.background_sigma) << "\n"
    << "rho: " << num(f.rho) << "\n"
    << "fwhm_nm: " << num(f.fwhm_nm) << " +- " << num(f.fwhm_sigma) << "\n"
    << "center_nm: " << num(f.center_nm) << "\n"
    << "samples_used: " << f.samples_used << "\n";
  return s.str();
}

}  // namespace antibunch
