#include "fmargin/channel.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>
#include <thread>

#include "fmargin/errors.hpp"
#include "parallel.hpp"

namespace fmargin {

TapChannel::TapChannel(Eigen::MatrixXcd taps) : taps_(std::move(taps)) {
  if (taps_.rows() < 1 || taps_.cols() < 1) {
    throw DimensionError("tap channel needs at least one antenna and one tap");
  }
  if (!taps_.allFinite()) throw DomainError("tap channel entries must be finite");
}

PrecodingWeights::PrecodingWeights(Eigen::MatrixXcd weights) : weights_(std::move(weights)) {
  if (weights_.rows() < 1 || weights_.cols() < 1) {
    throw DimensionError("precoder needs at least one antenna and one tap");
  }
  if (std::abs(weights_.squaredNorm() - 1.0) > 1e-9) {
    throw DomainError("precoding weights must have unit total energy");
  }
}

EffectiveChannel::EffectiveChannel(Eigen::VectorXcd taps) : taps_(std::move(taps)) {
  if (taps_.size() < 1 || taps_.size() % 2 == 0) {
    throw DimensionError("effective channel length must be odd (2n - 1)");
  }
}

Complex EffectiveChannel::at(Eigen::Index delay) const {
  if (std::abs(delay) > max_delay()) {
    throw DimensionError("delay " + std::to_string(delay) + " outside effective channel support");
  }
  return taps_(max_delay() + delay);
}

double EffectiveChannel::hermitian_defect() const {
  double defect = 0.0;
  for (Eigen::Index l = 1; l <= max_delay(); ++l) {
    defect = std::max(defect, std::abs(at(-l) - std::conj(at(l))));
  }
  return std::max(defect, std::abs(zero_delay().imag()));
}

double SinrResult::sinr_db() const { return 10.0 * std::log10(sinr_linear); }

double SinrResult::interference_limited() const {
  if (isi_power == 0.0) return std::numeric_limits<double>::infinity();
  return signal_power / isi_power;
}

double GainSamples::mean() const { return values.mean(); }

double GainSamples::variance() const {
  if (values.size() < 2) return 0.0;
  const double mu = values.mean();
  return (values.array() - mu).square().sum() / static_cast<double>(values.size() - 1);
}

TapChannel gen_rayleigh_channel(long m, long n, CounterRng& stream) {
  if (m < 1 || n < 1) throw DomainError("antenna and tap counts must be >= 1");
  const double tap_power = 1.0 / static_cast<double>(n);
  Eigen::MatrixXcd taps(m, n);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index t = 0; t < n; ++t) taps(a, t) = stream.complex_normal(tap_power);
  }
  return TapChannel(std::move(taps));
}

PrecodingWeights time_reversal_weights(const TapChannel& channel) {
  const double norm = channel.taps().norm();
  if (norm == 0.0) throw DegenerateError("time-reversal weights undefined for an all-zero channel");
  return PrecodingWeights(channel.taps().conjugate() / norm);
}

EffectiveChannel effective_channel(const TapChannel& channel, const PrecodingWeights& weights) {
  if (channel.antennas() != weights.antennas() || channel.tap_count() != weights.tap_count()) {
    throw DimensionError("channel and precoder dimensions differ");
  }
  const Eigen::MatrixXcd& h = channel.taps();
  const Eigen::MatrixXcd& w = weights.weights();
  const Eigen::Index n = channel.tap_count();
  Eigen::VectorXcd out(2 * n - 1);
  // h[l] = sum_m sum_j h_m[j] w_m[l - j]; weight column i sits at delay -i.
  for (Eigen::Index lag = 0; lag < n; ++lag) {
    const Eigen::Index overlap = n - lag;
    out(n - 1 + lag) = h.rightCols(overlap).cwiseProduct(w.leftCols(overlap)).sum();
    out(n - 1 - lag) = h.leftCols(overlap).cwiseProduct(w.rightCols(overlap)).sum();
  }
  return EffectiveChannel(std::move(out));
}

double zero_delay_tap(const TapChannel& channel) { return channel.taps().norm(); }

SinrResult instantaneous_sinr(const EffectiveChannel& effective, double mean_snr_linear) {
  if (!(mean_snr_linear > 0.0)) throw DomainError("mean SNR must be positive");
  const double signal = effective.signal_power();
  const double isi = effective.isi_power();
  return {signal / (isi + 1.0 / mean_snr_linear), signal, isi, mean_snr_linear};
}

unsigned default_thread_count() {
  if (const char* env = std::getenv("THREADS")) {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end != env && value > 0) return static_cast<unsigned>(value);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

void check_request(long m, long n, long realizations, const MonteCarloConfig& config) {
  if (m < 1 || n < 1) throw DomainError("antenna and tap counts must be >= 1");
  if (realizations < 1) throw DomainError("realization count must be >= 1");
  if (realizations > config.realization_cap) {
    throw ResourceError("requested " + std::to_string(realizations) +
                        " realizations, cap is " + std::to_string(config.realization_cap));
  }
}

unsigned resolve_threads(const MonteCarloConfig& config) {
  return config.threads ? config.threads : default_thread_count();
}

}  // namespace

GainSamples monte_carlo_gains(long m, long n, long realizations, std::uint64_t seed,
                              const MonteCarloConfig& config) {
  check_request(m, n, realizations, config);
  GainSamples samples{Eigen::VectorXd(realizations), m, n, seed, realizations};
  detail::parallel_for(realizations, resolve_threads(config), [&](long begin, long end) {
    for (long r = begin; r < end; ++r) {
      CounterRng stream(seed, static_cast<std::uint64_t>(r));
      samples.values(r) = gen_rayleigh_channel(m, n, stream).energy();
    }
  });
  return samples;
}

SinrSamples monte_carlo_sinr(long m, long n, long realizations, std::uint64_t seed,
                             double mean_snr_linear, const MonteCarloConfig& config) {
  check_request(m, n, realizations, config);
  if (!(mean_snr_linear > 0.0)) throw DomainError("mean SNR must be positive");
  SinrSamples out{{Eigen::VectorXd(realizations), m, n, seed, realizations},
                  Eigen::VectorXd(realizations),
                  mean_snr_linear};
  detail::parallel_for(realizations, resolve_threads(config), [&](long begin, long end) {
    for (long r = begin; r < end; ++r) {
      CounterRng stream(seed, static_cast<std::uint64_t>(r));
      const TapChannel channel = gen_rayleigh_channel(m, n, stream);
      const EffectiveChannel eff = effective_channel(channel, time_reversal_weights(channel));
      const SinrResult sinr = instantaneous_sinr(eff, mean_snr_linear);
      out.gains.values(r) = sinr.signal_power;
      out.sinr_linear(r) = sinr.sinr_linear;
    }
  });
  return out;
}

}  // namespace fmargin
