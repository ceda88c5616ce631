#include "antibunch/correlator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace antibunch {

namespace {

void check_sorted(const ClickRecord& r, const char* name) {
  if (!std::is_sorted(r.timestamps.begin(), r.timestamps.end()))
    throw DataError(std::string("record ") + name + " is not sorted");
}

double common_duration_s(const ClickRecord& a, const ClickRecord& b) {
  if (a.duration != b.duration) throw DataError("records have mismatched durations");
  return ps_to_seconds(a.duration);
}

// Pair counting for starts a[begin, end). `lo` is the first candidate in b.
void count_pairs(std::span<const TimePs> a, std::span<const TimePs> b, std::size_t begin, std::size_t end,
                 const CorrelatorSettings& s, bool skip_self, std::vector<std::uint64_t>& counts) {
  const TimePs w = s.bin_width;
  const TimePs span = 2 * s.t_max;
  const std::size_t nb = b.size();
  std::size_t lo = 0;
  if (begin < end) {
    const TimePs first_lower = a[begin] - s.t_max - s.delay;
    lo = static_cast<std::size_t>(std::lower_bound(b.begin(), b.end(), first_lower) - b.begin());
  }
  for (std::size_t i = begin; i < end; ++i) {
    const TimePs ta = a[i];
    const TimePs lower = ta - s.t_max - s.delay;
    while (lo < nb && b[lo] < lower) ++lo;
    const TimePs offset = s.delay - ta + s.t_max;
    for (std::size_t j = lo; j < nb; ++j) {
      const TimePs d = b[j] + offset;
      if (d >= span) break;
      if (skip_self && j == i) continue;
      ++counts[static_cast<std::size_t>(d / w)];
    }
  }
}

CoincidenceHistogram run_pairs(const ClickRecord& a, const ClickRecord& b, const CorrelatorSettings& s,
                               bool skip_self) {
  CoincidenceHistogram h;
  h.bin_width = s.bin_width;
  h.first_edge = -s.t_max;
  h.delay = s.delay;
  h.duration_s = common_duration_s(a, b);
  h.rate1 = a.rate();
  h.rate2 = b.rate();
  h.counts.assign(s.bin_count(), 0);

  const std::span<const TimePs> ta(a.timestamps);
  const std::span<const TimePs> tb(b.timestamps);
  const unsigned threads = std::max(1u, s.threads);
  if (threads == 1 || ta.size() < 2 * static_cast<std::size_t>(threads)) {
    count_pairs(ta, tb, 0, ta.size(), s, skip_self, h.counts);
    return h;
  }
  std::vector<std::vector<std::uint64_t>> partial(threads, std::vector<std::uint64_t>(h.counts.size(), 0));
  std::vector<std::thread> pool;
  const std::size_t chunk = (ta.size() + threads - 1) / threads;
  for (unsigned k = 0; k < threads; ++k) {
    const std::size_t begin = std::min(ta.size(), k * chunk);
    const std::size_t end = std::min(ta.size(), begin + chunk);
    pool.emplace_back(
        [&, k, begin, end] { count_pairs(ta, tb, begin, end, s, skip_self, partial[k]); });
  }
  for (auto& t : pool) t.join();
  for (const auto& p : partial)
    for (std::size_t i = 0; i < p.size(); ++i) h.counts[i] += p[i];
  return h;
}

}  // namespace

void CorrelatorSettings::validate() const {
  if (bin_width <= 0) throw ParameterError("bin width must be positive");
  if (t_max <= 0) throw ParameterError("t_max must be positive");
  if (t_max % bin_width != 0) throw ParameterError("t_max must be a multiple of the bin width");
}

std::size_t CoincidenceHistogram::zero_bin() const {
  if (bin_width <= 0 || first_edge > 0 || (-first_edge) % bin_width != 0)
    throw DataError("histogram has no zero-delay bin edge");
  const auto idx = static_cast<std::size_t>(-first_edge / bin_width);
  if (idx >= counts.size()) throw DataError("histogram range does not include t = 0");
  return idx;
}

std::uint64_t CoincidenceHistogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

double CoincidenceHistogram::poisson_level() const {
  return rate1 * rate2 * ps_to_seconds(bin_width) * duration_s;
}

CoincidenceHistogram cross_correlate(const ClickRecord& a, const ClickRecord& b, const CorrelatorSettings& s) {
  s.validate();
  check_sorted(a, "a");
  check_sorted(b, "b");
  return run_pairs(a, b, s, false);
}

CoincidenceHistogram auto_correlate(const ClickRecord& a, const CorrelatorSettings& s) {
  s.validate();
  if (s.delay != 0) throw ParameterError("autocorrelation takes no delay");
  check_sorted(a, "a");
  return run_pairs(a, a, s, true);
}

CoincidenceHistogram tac_start_stop(const ClickRecord& a, const ClickRecord& b, const CorrelatorSettings& s) {
  s.validate();
  check_sorted(a, "a");
  check_sorted(b, "b");
  CoincidenceHistogram h;
  h.bin_width = s.bin_width;
  h.first_edge = -s.delay;
  h.delay = s.delay;
  h.start_stop = true;
  h.duration_s = common_duration_s(a, b);
  h.rate1 = a.rate();
  h.rate2 = b.rate();
  h.counts.assign(s.bin_count(), 0);

  const TimePs range = 2 * s.t_max;
  const auto& tb = b.timestamps;
  std::size_t j = 0;
  for (TimePs start : a.timestamps) {
    // first stop with t_b + delay >= t_start
    while (j < tb.size() && tb[j] + s.delay < start) ++j;
    if (j == tb.size()) break;
    const TimePs raw = tb[j] + s.delay - start;
    if (raw < range) ++h.counts[static_cast<std::size_t>(raw / s.bin_width)];
  }
  return h;
}

void set_rates(CoincidenceHistogram& h, double rate1, double rate2) {
  if (!(rate1 > 0.0) || !(rate2 > 0.0)) throw ParameterError("rates must be positive");
  h.rate1 = rate1;
  h.rate2 = rate2;
}

Normalized normalize(const CoincidenceHistogram& h) {
  const double denom = h.poisson_level();
  if (!(denom > 0.0) || !std::isfinite(denom))
    throw DataError("normalization needs positive N1, N2, w and T");
  Normalized out;
  out.cn.resize(h.size());
  out.sigma.resize(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double c = static_cast<double>(h.counts[i]);
    out.cn[i] = c / denom;
    out.sigma[i] = std::sqrt(std::max(c, 1.0)) / denom;
  }
  return out;
}

std::vector<double> background_correct(std::span<const double> cn, double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) throw ParameterError("rho must lie in (0, 1]");
  const double r2 = rho * rho;
  std::vector<double> g2(cn.size());
  for (std::size_t i = 0; i < cn.size(); ++i) g2[i] = (cn[i] - (1.0 - r2)) / r2;
  return g2;
}

std::vector<double> background_correct_sigma(std::span<const double> cn_sigma, double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) throw ParameterError("rho must lie in (0, 1]");
  std::vector<double> out(cn_sigma.begin(), cn_sigma.end());
  for (double& v : out) v /= rho * rho;
  return out;
}

CorrelationResult correlate(const CoincidenceHistogram& h, double rho) {
  CorrelationResult r;
  r.histogram = h;
  auto n = normalize(h);
  r.cn = std::move(n.cn);
  r.cn_sigma = std::move(n.sigma);
  r.g2 = background_correct(r.cn, rho);
  r.g2_sigma = background_correct_sigma(r.cn_sigma, rho);
  r.rho = rho;
  return r;
}

double rho_from_levels(double signal, double background) {
  if (!(signal >= 0.0) || !(background >= 0.0)) throw ParameterError("levels must be non-negative");
  if (!(signal + background > 0.0)) throw ParameterError("S + B must be positive");
  return signal / (signal + background);
}

double multi_emitter_dip(int n) {
  if (n < 1) throw ParameterError("emitter count must be at least 1");
  return 1.0 - 1.0 / static_cast<double>(n);
}

}  // namespace antibunch
