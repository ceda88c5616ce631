#pragma once
#include <antibunch/types.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace antibunch {

/// Binning of the coincidence histogram. All values in picoseconds.
struct CorrelatorSettings {
  TimePs bin_width = 1000;
  TimePs t_max = 200'000;
  TimePs delay = 0;
  unsigned threads = 1;

  std::size_t bin_count() const { return static_cast<std::size_t>(2 * t_max / bin_width); }
  void validate() const;
};

/// Raw coincidence counts c(t) over half-open bins [t, t + w), with the
/// acquisition metadata needed for Poissonian normalization.
struct CoincidenceHistogram {
  TimePs bin_width = 0;
  TimePs first_edge = 0;   ///< left edge of bin 0; t = 0 is always an edge
  TimePs delay = 0;        ///< delay setting the histogram was built with
  std::vector<std::uint64_t> counts;
  double duration_s = 0.0;
  double rate1 = 0.0;      ///< N1, 1/s
  double rate2 = 0.0;      ///< N2, 1/s
  bool start_stop = false;

  std::size_t size() const { return counts.size(); }
  TimePs left_edge(std::size_t i) const { return first_edge + static_cast<TimePs>(i) * bin_width; }
  double left_edge_ns(std::size_t i) const { return ps_to_ns(left_edge(i)); }
  double center_ns(std::size_t i) const { return ps_to_ns(left_edge(i)) + 0.5 * ps_to_ns(bin_width); }
  /// Index of the bin [0, w), i.e. the zero-delay bin.
  std::size_t zero_bin() const;
  std::uint64_t total() const;
  /// N1 N2 w T: the expected count per bin for uncorrelated light.
  double poisson_level() const;
};

/// Normalized C_N(t), background-corrected g2(t) and their standard errors.
struct CorrelationResult {
  CoincidenceHistogram histogram;
  std::vector<double> cn;
  std::vector<double> cn_sigma;
  std::vector<double> g2;
  std::vector<double> g2_sigma;
  double rho = 1.0;

  std::size_t size() const { return cn.size(); }
};

/// Counts every pair with (t_b + delay - t_a) in [-t_max, t_max) using a
/// sliding window over both sorted records; O(n_a + n_b + matches). With
/// threads > 1 record a is split into contiguous chunks whose histograms are
/// summed; the result is identical to the serial one. Rates N1, N2 are taken
/// from the records and T from their common duration.
CoincidenceHistogram cross_correlate(const ClickRecord& a, const ClickRecord& b, const CorrelatorSettings& s);

/// All ordered pairs i != j of one record with t_j - t_i in range. The delay
/// setting must be zero.
CoincidenceHistogram auto_correlate(const ClickRecord& a, const CorrelatorSettings& s);

/// Start-stop emulation of a time-to-amplitude converter: for each start on a
/// only the first stop on b (delayed by `delay`) is converted, if it falls in
/// the converter range [0, 2 t_max). The histogram is returned in delay
/// coordinates t = t_stop - t_start, so bin edges run from -delay to
/// 2 t_max - delay.
CoincidenceHistogram tac_start_stop(const ClickRecord& a, const ClickRecord& b, const CorrelatorSettings& s);

/// Override the measured singles rates with externally measured ones.
void set_rates(CoincidenceHistogram& h, double rate1, double rate2);

/// C_N(t) = c(t) / (N1 N2 w T), exact per bin. sigma is sqrt(c)/(N1 N2 w T)
/// with empty bins counted as one.
struct Normalized {
  std::vector<double> cn;
  std::vector<double> sigma;
};
Normalized normalize(const CoincidenceHistogram& h);

/// g2 = (C_N - (1 - rho^2)) / rho^2 per bin.
std::vector<double> background_correct(std::span<const double> cn, double rho);
std::vector<double> background_correct_sigma(std::span<const double> cn_sigma, double rho);

/// normalize + background_correct.
CorrelationResult correlate(const CoincidenceHistogram& h, double rho);

/// S / (S + B).
double rho_from_levels(double signal, double background);

/// Zero-delay value 1 - 1/n for n unresolved identical emitters.
double multi_emitter_dip(int n);

}  // namespace antibunch
