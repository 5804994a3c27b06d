#include "fmargin/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fmargin/channel.hpp"
#include "fmargin/errors.hpp"
#include "fmargin/random.hpp"
#include "parallel.hpp"

namespace fmargin {

namespace {

// p * count, snapped to the nearest integer within floating-point noise
// (1e-3 * 1e6 -> 1000).
double snapped_rank(double p, long count) {
  const double r = p * static_cast<double>(count);
  const double nearest = std::round(r);
  if (std::abs(r - nearest) <= 1e-9 * std::max(1.0, r)) return nearest;
  return r;
}

void check_antennas(const CsiTrace& trace, std::span<const long> antennas) {
  if (antennas.empty()) throw DomainError("antenna subset must not be empty");
  for (const long m : antennas) {
    if (m < 0 || m >= trace.antennas()) {
      throw DimensionError("antenna index " + std::to_string(m) + " out of range");
    }
  }
}

}  // namespace

Ecdf::Ecdf(std::vector<double> samples) : sorted_(std::move(samples)) {
  if (sorted_.empty()) throw DomainError("ECDF needs at least one sample");
  for (const double x : sorted_) {
    if (!std::isfinite(x) || x < 0.0) throw DomainError("ECDF samples must be finite and >= 0");
  }
  std::sort(sorted_.begin(), sorted_.end());
}

double Ecdf::operator()(double x) const {
  const auto upper = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(upper - sorted_.begin()) / static_cast<double>(sorted_.size());
}

Ecdf build_ecdf(std::span<const double> samples) {
  return Ecdf(std::vector<double>(samples.begin(), samples.end()));
}

long quantile_rank(double p, long count) {
  return static_cast<long>(std::ceil(snapped_rank(p, count)));
}

bool is_resolvable(double p, long count) { return snapped_rank(p, count) >= 1.0; }

double empirical_quantile(const Ecdf& ecdf, Probability p) {
  if (!is_resolvable(p, ecdf.count())) {
    throw UnresolvableError("probability " + std::to_string(p.value()) + " is below the ECDF resolution 1/" +
                            std::to_string(ecdf.count()));
  }
  const long rank = std::min(quantile_rank(p, ecdf.count()), ecdf.count());
  return ecdf.sorted_values()[static_cast<std::size_t>(rank - 1)];
}

FadingMarginReport fading_margin_empirical(const Ecdf& ecdf, Probability p) {
  const double median = empirical_quantile(ecdf, Probability(0.5));
  if (!(median > 0.0)) throw DegenerateError("median gain is zero; fading margin undefined");
  FadingMarginReport report{p,     std::numeric_limits<double>::quiet_NaN(),
                            ecdf.count(), false,
                            median, std::numeric_limits<double>::quiet_NaN()};
  if (!is_resolvable(p, ecdf.count())) return report;
  report.resolvable = true;
  report.q_p_linear = empirical_quantile(ecdf, p);
  report.margin_db = 10.0 * std::log10(median / report.q_p_linear);
  return report;
}

FadingMarginReport fading_margin_empirical(std::span<const double> samples, Probability p) {
  return fading_margin_empirical(build_ecdf(samples), p);
}

LargeScaleEstimate estimate_large_scale(const CsiTrace& trace) {
  std::vector<long> all(static_cast<std::size_t>(trace.antennas()));
  std::iota(all.begin(), all.end(), 0L);
  return estimate_large_scale(trace, all);
}

LargeScaleEstimate estimate_large_scale(const CsiTrace& trace, std::span<const long> antennas) {
  check_antennas(trace, antennas);
  double total = 0.0;
  for (long t = 0; t < trace.timestamps(); ++t) {
    const auto snap = trace.snapshot(t);
    for (const long m : antennas) total += snap.row(m).squaredNorm();
  }
  const double beta_hat =
      total / (static_cast<double>(trace.timestamps()) * static_cast<double>(antennas.size()) *
               static_cast<double>(trace.subcarriers()));
  if (!(beta_hat > 0.0)) throw DegenerateError("trace has zero power; large-scale coefficient undefined");
  return {beta_hat, trace.scaled(1.0 / std::sqrt(beta_hat))};
}

Eigen::VectorXd narrowband_gains(const CsiTrace& trace, std::span<const long> antennas) {
  check_antennas(trace, antennas);
  const long k = trace.subcarriers();
  Eigen::VectorXd gains(trace.timestamps() * k);
  detail::parallel_for(trace.timestamps(), default_thread_count(), [&](long begin, long end) {
    for (long t = begin; t < end; ++t) {
      const auto snap = trace.snapshot(t);
      Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(k);
      for (const long m : antennas) sum += snap.row(m).cwiseAbs2();
      gains.segment(t * k, k) = sum.transpose();
    }
  });
  return gains;
}

Eigen::VectorXd wideband_gains(const CsiTrace& trace, std::span<const long> antennas) {
  check_antennas(trace, antennas);
  const double inv_k = 1.0 / static_cast<double>(trace.subcarriers());
  Eigen::VectorXd gains(trace.timestamps());
  detail::parallel_for(trace.timestamps(), default_thread_count(), [&](long begin, long end) {
    for (long t = begin; t < end; ++t) {
      const auto snap = trace.snapshot(t);
      double sum = 0.0;
      for (const long m : antennas) sum += snap.row(m).squaredNorm();
      gains(t) = sum * inv_k;
    }
  });
  return gains;
}

std::string to_string(Band band) { return band == Band::narrowband ? "nb" : "wb"; }

std::vector<long> select_subarray(std::span<const long> pool, long size, SubarraySelection selection,
                                  std::uint64_t seed) {
  if (size < 1 || size > static_cast<long>(pool.size())) {
    throw DimensionError("sub-array size " + std::to_string(size) + " exceeds the " +
                         std::to_string(pool.size()) + " available antennas");
  }
  std::vector<long> chosen(pool.begin(), pool.end());
  if (selection == SubarraySelection::prefix) {
    chosen.resize(static_cast<std::size_t>(size));
    return chosen;
  }
  // Partial Fisher-Yates on a stream private to this size.
  CounterRng stream(seed, static_cast<std::uint64_t>(size));
  for (long i = 0; i < size; ++i) {
    const auto remaining = static_cast<std::uint64_t>(chosen.size() - i);
    const long j = i + static_cast<long>(stream.next_u64() % remaining);
    std::swap(chosen[i], chosen[j]);
  }
  chosen.resize(static_cast<std::size_t>(size));
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

GainTable case_study(const CsiTrace& trace, std::span<const long> array_sizes, Probability p,
                     const CaseStudyOptions& options) {
  if (array_sizes.empty()) throw DomainError("no array sizes requested");
  for (std::size_t i = 1; i < array_sizes.size(); ++i) {
    if (array_sizes[i] <= array_sizes[i - 1]) throw DomainError("array sizes must be strictly increasing");
  }
  const std::vector<long> pool = trace.antenna_pool();
  if (pool.empty()) throw DimensionError("every antenna of the trace is excluded");
  if (array_sizes.front() < 1 || array_sizes.back() > static_cast<long>(pool.size())) {
    throw DimensionError("array sizes must lie in [1, " + std::to_string(pool.size()) + "]");
  }

  LargeScaleEstimate estimate = estimate_large_scale(trace, pool);
  const CsiTrace& working = options.normalize ? estimate.normalized : trace;

  GainTable table{estimate.beta_hat, {}};
  for (const long size : array_sizes) {
    std::vector<long> antennas = select_subarray(pool, size, options.selection, options.seed);
    if (options.narrowband) {
      const Eigen::VectorXd gains = narrowband_gains(working, antennas);
      table.rows.push_back({size, Band::narrowband, antennas,
                            fading_margin_empirical(std::span(gains.data(), gains.size()), p)});
    }
    if (options.wideband) {
      const Eigen::VectorXd gains = wideband_gains(working, antennas);
      table.rows.push_back({size, Band::wideband, antennas,
                            fading_margin_empirical(std::span(gains.data(), gains.size()), p)});
    }
  }
  return table;
}

}  // namespace fmargin
