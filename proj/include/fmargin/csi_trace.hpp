#pragma once

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <string>
#include <vector>

namespace fmargin {

using TraceMeta = std::map<std::string, std::string>;

/// Meta key holding a comma-separated list of antenna indices to ignore.
inline constexpr const char* kExcludedAntennasKey = "excluded_antennas";

/// Frequency-domain channel tensor H_m[t, k] over T timestamps, M antennas
/// and K subcarriers.
///
/// Row t of the data matrix holds the M x K snapshot of timestamp t,
/// antenna-major, subcarrier-minor (the on-disk order).
class CsiTrace {
 public:
  using Snapshot = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Data = Snapshot;

  CsiTrace(long timestamps, long antennas, long subcarriers, Data data, TraceMeta meta = {});

  long timestamps() const { return t_; }
  long antennas() const { return m_; }
  long subcarriers() const { return k_; }
  long size() const { return t_ * m_ * k_; }

  std::complex<double> operator()(long t, long m, long k) const { return data_(t, m * k_ + k); }

  /// M x K view of one timestamp.
  Eigen::Map<const Snapshot> snapshot(long t) const {
    return Eigen::Map<const Snapshot>(data_.row(t).data(), m_, k_);
  }

  const Data& data() const { return data_; }
  const TraceMeta& meta() const { return meta_; }
  TraceMeta& meta() { return meta_; }

  /// Copy with every entry multiplied by `factor`.
  CsiTrace scaled(double factor) const;

  /// Antenna indices listed under kExcludedAntennasKey, sorted and unique.
  std::vector<long> excluded_antennas() const;
  /// All antenna indices not excluded, ascending.
  std::vector<long> antenna_pool() const;

 private:
  long t_;
  long m_;
  long k_;
  Data data_;
  TraceMeta meta_;
};

}  // namespace fmargin
