#pragma once

// Empirical distributions of channel gain and the trace-to-table pipeline:
// normalize a CSI trace by its large-scale coefficient, form narrowband and
// wideband coherent gains per sub-array, and read fading margins off ECDFs.

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fmargin/csi_trace.hpp"
#include "fmargin/gamma.hpp"

namespace fmargin {

/// Step ECDF over sorted samples.
class Ecdf {
 public:
  /// Throws DomainError for empty input or negative / non-finite samples.
  explicit Ecdf(std::vector<double> samples);

  long count() const { return static_cast<long>(sorted_.size()); }
  const std::vector<double>& sorted_values() const { return sorted_; }

  /// Fraction of samples <= x.
  double operator()(double x) const;

 private:
  std::vector<double> sorted_;
};

Ecdf build_ecdf(std::span<const double> samples);

/// 1-based rank ceil(p * count) of the type-1 quantile.
long quantile_rank(double p, long count);
/// True when p >= 1 / count, i.e. the rank is at least one.
bool is_resolvable(double p, long count);

/// Smallest sorted value at rank ceil(p * count). Throws UnresolvableError when p < 1/count.
double empirical_quantile(const Ecdf& ecdf, Probability p);

struct FadingMarginReport {
  Probability p;
  /// NaN when unresolvable.
  double margin_db;
  long n_samples;
  bool resolvable;
  double q_median_linear;
  /// NaN when unresolvable.
  double q_p_linear;
};

/// Median-referenced fading margin read off the ECDF. Unresolvable tails are
/// flagged in the report rather than thrown. Throws DegenerateError when the
/// median is zero.
FadingMarginReport fading_margin_empirical(const Ecdf& ecdf, Probability p);
FadingMarginReport fading_margin_empirical(std::span<const double> samples, Probability p);

struct LargeScaleEstimate {
  double beta_hat;
  CsiTrace normalized;
};

/// beta_hat = mean |H|^2 over all entries (or over the given antennas only);
/// the normalized trace is the input divided by sqrt(beta_hat).
LargeScaleEstimate estimate_large_scale(const CsiTrace& trace);
LargeScaleEstimate estimate_large_scale(const CsiTrace& trace, std::span<const long> antennas);

/// One sample per (timestamp, subcarrier), ordered timestamp-major:
/// sum over the antenna subset of |H_m[t, k]|^2.
Eigen::VectorXd narrowband_gains(const CsiTrace& trace, std::span<const long> antennas);

/// One sample per timestamp: sum over the subset of (1/K) sum_k |H_m[t, k]|^2,
/// which equals the delay-domain tap energy by Parseval.
Eigen::VectorXd wideband_gains(const CsiTrace& trace, std::span<const long> antennas);

enum class Band { narrowband, wideband };

std::string to_string(Band band);

struct GainTableRow {
  long array_size;
  Band band;
  std::vector<long> antennas;
  FadingMarginReport report;
};

struct GainTable {
  double beta_hat;
  std::vector<GainTableRow> rows;
};

enum class SubarraySelection { prefix, random };

struct CaseStudyOptions {
  /// Divide by sqrt(beta_hat) first; margins are scale-free either way but
  /// the reported beta_hat is 1 for an already normalized trace.
  bool normalize = true;
  SubarraySelection selection = SubarraySelection::prefix;
  std::uint64_t seed = 0;
  bool narrowband = true;
  bool wideband = true;
};

/// Antennas used for a sub-array of `size` elements drawn from `pool`.
std::vector<long> select_subarray(std::span<const long> pool, long size, SubarraySelection selection,
                                  std::uint64_t seed);

/// Fading margins for each array size and band. Sizes must be strictly
/// increasing and no larger than the number of non-excluded antennas.
GainTable case_study(const CsiTrace& trace, std::span<const long> array_sizes, Probability p,
                     const CaseStudyOptions& options = {});

}  // namespace fmargin
