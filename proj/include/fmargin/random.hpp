#pragma once

#include <array>
#include <complex>
#include <cstdint>

namespace fmargin {

/// Counter-based Philox4x32-10 generator.
///
/// A stream is keyed by (seed, stream index); the i-th draw of a stream is a
/// pure function of (seed, stream, i). Monte Carlo realizations each get
/// their own stream, so results do not depend on evaluation order or thread
/// count.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept;

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;

  /// Uniform in (0, 1), 53-bit resolution.
  double uniform() noexcept;

  /// Standard normal via Box-Muller.
  double normal() noexcept;

  /// Circularly-symmetric complex normal CN(0, variance).
  std::complex<double> complex_normal(double variance) noexcept;

 private:
  void refill() noexcept;

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace fmargin
