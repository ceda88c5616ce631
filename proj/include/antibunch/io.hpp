#pragma once
#include <antibunch/analysis.hpp>
#include <antibunch/correlator.hpp>
#include <antibunch/scan.hpp>
#include <antibunch/types.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace antibunch {

/// Error reading or writing a file.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sidecar header of a binary timestamp file (`<name>.bin.hdr`), one
/// `key = value` per line.
struct BinaryHeader {
  std::string kind;        ///< "photons" or "clicks"
  std::uint64_t count = 0;
  TimePs duration = 0;
  std::uint64_t source_count = 0;
  std::optional<std::uint64_t> seed;
  int detector_id = 0;     ///< clicks only
};

/// Timestamps as little-endian u64 in `path`, header in `path.hdr`. Photon
/// streams also write their u32 source tags to `path.src`.
void write_photon_stream(const std::filesystem::path& path, const PhotonStream& stream,
                         std::optional<std::uint64_t> seed = std::nullopt);
PhotonStream read_photon_stream(const std::filesystem::path& path);
void write_click_record(const std::filesystem::path& path, const ClickRecord& record,
                        std::optional<std::uint64_t> seed = std::nullopt);
ClickRecord read_click_record(const std::filesystem::path& path);
BinaryHeader read_header(const std::filesystem::path& path);

/// Correlation CSV: `#` lines with w, T, N1, N2, rho, delay and mode, then a
/// header row `t_ns,c,C_N,g2,sigma_g2` with t_ns the left bin edge.
void write_correlation_csv(const std::filesystem::path& path, const CorrelationResult& result);

struct CorrelationTable {
  std::map<std::string, std::string> metadata;
  std::vector<double> t_ns;
  std::vector<double> c;
  std::vector<double> cn;
  std::vector<double> g2;
  std::vector<double> sigma_g2;

  double bin_width_ns() const;
  /// Curve at bin centers, ready for fit_g2.
  G2Curve curve() const;
};
CorrelationTable read_correlation_csv(const std::filesystem::path& path);

/// Plain `key: value` report and a one-row CSV of the fit.
std::string fit_report(const FitResult& fit);
void write_fit_csv(const std::filesystem::path& path, const FitResult& fit);

void write_scan_csv(const std::filesystem::path& path, const ScanImage& image);
/// 16-bit binary PGM, counts clamped to 65535.
void write_pgm(const std::filesystem::path& path, const ScanImage& image);
void write_line_csv(const std::filesystem::path& path, std::span<const double> line, double pixel_size_nm);
std::string line_fit_report(const LineFit& fit);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data);

}  // namespace antibunch
