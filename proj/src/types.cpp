#include "antibunch/types.hpp"

#include <algorithm>
#include <set>

namespace antibunch {

std::vector<TimePs> PhotonStream::timestamps() const {
  std::vector<TimePs> out;
  out.reserve(photons.size());
  for (const auto& p : photons) out.push_back(p.time);
  return out;
}

std::size_t PhotonStream::source_count() const {
  std::set<std::uint32_t> ids;
  for (const auto& p : photons) ids.insert(p.source);
  return ids.size();
}

bool PhotonStream::valid() const {
  if (duration < 0) return false;
  TimePs last = 0;
  for (const auto& p : photons) {
    if (p.time < last || p.time > duration) return false;
    last = p.time;
  }
  return true;
}

double ClickRecord::rate() const {
  if (duration <= 0) return 0.0;
  return static_cast<double>(timestamps.size()) / ps_to_seconds(duration);
}

bool ClickRecord::valid() const {
  if (duration < 0) return false;
  if (!std::is_sorted(timestamps.begin(), timestamps.end())) return false;
  return timestamps.empty() || (timestamps.front() >= 0 && timestamps.back() <= duration);
}

}  // namespace antibunch
