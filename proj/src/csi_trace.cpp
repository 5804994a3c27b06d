#include "fmargin/csi_trace.hpp"

#include <algorithm>
#include <charconv>
#include <string_view>

#include "fmargin/errors.hpp"

namespace fmargin {

CsiTrace::CsiTrace(long timestamps, long antennas, long subcarriers, Data data, TraceMeta meta)
    : t_(timestamps), m_(antennas), k_(subcarriers), data_(std::move(data)), meta_(std::move(meta)) {
  if (t_ < 1 || m_ < 1 || k_ < 1) throw DimensionError("trace dimensions must be >= 1");
  if (data_.rows() != t_ || data_.cols() != m_ * k_) {
    throw DimensionError("trace data does not match T x (M*K)");
  }
  if (!data_.allFinite()) throw DomainError("trace entries must be finite");
}

CsiTrace CsiTrace::scaled(double factor) const {
  return CsiTrace(t_, m_, k_, data_ * factor, meta_);
}

std::vector<long> CsiTrace::excluded_antennas() const {
  std::vector<long> out;
  const auto it = meta_.find(kExcludedAntennasKey);
  if (it == meta_.end()) return out;
  std::string_view rest = it->second;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    std::string_view token = rest.substr(0, comma);
    rest = (comma == std::string_view::npos) ? std::string_view{} : rest.substr(comma + 1);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    if (token.empty()) continue;
    long index = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), index);
    if (ec != std::errc{} || ptr != token.data() + token.size() || index < 0 || index >= m_) {
      throw MalformedError("invalid excluded antenna index '" + std::string(token) + "'");
    }
    out.push_back(index);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<long> CsiTrace::antenna_pool() const {
  const std::vector<long> excluded = excluded_antennas();
  std::vector<long> pool;
  pool.reserve(m_);
  for (long m = 0; m < m_; ++m) {
    if (!std::binary_search(excluded.begin(), excluded.end(), m)) pool.push_back(m);
  }
  return pool;
}

}  // namespace fmargin
