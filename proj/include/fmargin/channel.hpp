#pragma once

// Tapped-delay-line Rayleigh channels, time-reversal precoding and the
// resulting effective channel / SINR.
//
// Conventions: a TapChannel is an M x N complex matrix, row m holding the
// delay taps h_m[0..N-1] of antenna m, each entry CN(0, 1/N) under the
// reference model. Effective channels are stored over delays -(N-1)..(N-1).

#include <Eigen/Dense>
#include <complex>
#include <cstdint>

#include "fmargin/random.hpp"

namespace fmargin {

using Complex = std::complex<double>;

class TapChannel {
 public:
  explicit TapChannel(Eigen::MatrixXcd taps);

  Eigen::Index antennas() const { return taps_.rows(); }
  Eigen::Index tap_count() const { return taps_.cols(); }
  const Eigen::MatrixXcd& taps() const { return taps_; }
  Complex operator()(Eigen::Index m, Eigen::Index n) const { return taps_(m, n); }

  /// Sum over antennas and taps of |h_m[n]|^2.
  double energy() const { return taps_.squaredNorm(); }

 private:
  Eigen::MatrixXcd taps_;
};

/// Per-antenna precoding filters. Column i holds the weight applied at delay -i,
/// so a time-reversal filter has the same layout as the channel it inverts.
class PrecodingWeights {
 public:
  /// Throws DomainError unless the total weight energy is 1 (within 1e-9).
  explicit PrecodingWeights(Eigen::MatrixXcd weights);

  Eigen::Index antennas() const { return weights_.rows(); }
  Eigen::Index tap_count() const { return weights_.cols(); }
  const Eigen::MatrixXcd& weights() const { return weights_; }
  double energy() const { return weights_.squaredNorm(); }

 private:
  Eigen::MatrixXcd weights_;
};

class EffectiveChannel {
 public:
  /// taps has odd length 2n-1, entry n-1 is delay zero.
  explicit EffectiveChannel(Eigen::VectorXcd taps);

  Eigen::Index tap_count() const { return (taps_.size() + 1) / 2; }
  Eigen::Index max_delay() const { return tap_count() - 1; }
  const Eigen::VectorXcd& taps() const { return taps_; }

  /// Tap at delay l, |l| <= n-1.
  Complex at(Eigen::Index delay) const;
  Complex zero_delay() const { return taps_(max_delay()); }

  double signal_power() const { return std::norm(zero_delay()); }
  /// Energy in all off-centre taps.
  double isi_power() const {
    return taps_.head(max_delay()).squaredNorm() + taps_.tail(max_delay()).squaredNorm();
  }

  /// max_l |h[-l] - conj(h[l])|
  double hermitian_defect() const;

 private:
  Eigen::VectorXcd taps_;
};

struct SinrResult {
  double sinr_linear;
  double signal_power;
  double isi_power;
  double mean_snr_linear;

  double sinr_db() const;
  /// Gamma -> 0 asymptote, Gamma * |h[0]|^2.
  double noise_limited() const { return mean_snr_linear * signal_power; }
  /// Gamma -> infinity asymptote, signal / ISI (infinite without ISI).
  double interference_limited() const;
};

struct GainSamples {
  Eigen::VectorXd values;
  long m = 0;
  long n = 0;
  std::uint64_t seed = 0;
  long realizations = 0;

  double mean() const;
  /// Unbiased sample variance.
  double variance() const;
  double scv() const { return variance() / (mean() * mean()); }
};

struct SinrSamples {
  GainSamples gains;
  Eigen::VectorXd sinr_linear;
  double mean_snr_linear = 0.0;
};

struct MonteCarloConfig {
  long realization_cap = 100'000'000;
  /// 0 selects the THREADS environment variable, else hardware concurrency.
  unsigned threads = 0;
};

/// One i.i.d. Rayleigh draw, entries CN(0, 1/n).
TapChannel gen_rayleigh_channel(long m, long n, CounterRng& stream);

/// w_m[-i] = conj(h_m[i]) / ||H||_F. Throws DegenerateError for an all-zero channel.
PrecodingWeights time_reversal_weights(const TapChannel& channel);

/// sum_m h_m * w_m (full linear convolution), delays -(n-1)..(n-1).
EffectiveChannel effective_channel(const TapChannel& channel, const PrecodingWeights& weights);

/// Closed form of the time-reversal zero-delay tap: the Frobenius norm of the taps.
double zero_delay_tap(const TapChannel& channel);

/// gamma = |h[0]|^2 / (sum_{l != 0} |h[l]|^2 + 1 / Gamma).
SinrResult instantaneous_sinr(const EffectiveChannel& effective, double mean_snr_linear);

/// |h[0]|^2 for `realizations` independent reference channels. Realization r
/// draws from stream (seed, r); the output is identical for any thread count.
GainSamples monte_carlo_gains(long m, long n, long realizations, std::uint64_t seed,
                              const MonteCarloConfig& config = {});

/// Same channels as monte_carlo_gains, additionally precoded and evaluated for SINR.
SinrSamples monte_carlo_sinr(long m, long n, long realizations, std::uint64_t seed,
                             double mean_snr_linear, const MonteCarloConfig& config = {});

/// Worker count used when config.threads == 0.
unsigned default_thread_count();

}  // namespace fmargin
