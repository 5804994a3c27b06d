#pragma once

// CSITRC01 trace files and synthetic trace generation.
//
// Layout, all integers little-endian:
//
//   offset  size  field
//   0       8     magic "CSITRC01" (last two digits: format version)
//   8       4     u32 T (timestamps)
//   12      4     u32 M (antennas)
//   16      4     u32 K (subcarriers)
//   20      4     u32 meta_len
//   24      L     UTF-8 JSON object of string values (absent when L = 0)
//   24+L    8TMK  (re, im) float32 pairs, t-major, antenna-middle, subcarrier-minor
//
// Files hold single precision; traces are promoted to double on read.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>

#include "fmargin/channel.hpp"
#include "fmargin/csi_trace.hpp"

namespace fmargin {

inline constexpr char kTraceMagic[9] = "CSITRC01";
inline constexpr std::size_t kTraceHeaderBytes = 24;

/// Writes `trace` and returns the number of bytes written. Throws IoError on sink failure.
std::uint64_t write_trace(const CsiTrace& trace, std::ostream& sink);
std::uint64_t write_trace(const CsiTrace& trace, const std::filesystem::path& path);

/// Inverse of write_trace. Throws BadMagicError, VersionMismatchError,
/// TruncatedError, NonFiniteError or MalformedError.
CsiTrace read_trace(std::istream& source);
CsiTrace read_trace(const std::filesystem::path& path);

/// CSV import with a header row and columns t,m,k,re,im. Every (t, m, k)
/// cell of the dense tensor must appear exactly once.
CsiTrace read_trace_csv(std::istream& source);
CsiTrace read_trace_csv(const std::filesystem::path& path);

/// Loads CSV when the extension is .csv, CSITRC01 otherwise.
CsiTrace load_trace(const std::filesystem::path& path);

/// Entries i.i.d. CN(0, power), rounded to float32 (file precision).
/// Timestamp t draws from stream (seed, t).
CsiTrace synth_iid_trace(long t, long m, long k, double power, std::uint64_t seed);

/// H_m[t, j] = sum_n h_m[n] exp(-2 pi i j n / k) for the taps produced by
/// `taps_at(t)`; requires n <= k, giving (1/k) sum_j |H|^2 = sum_n |h|^2.
CsiTrace synth_from_taps(long t, long k, const std::function<TapChannel(long)>& taps_at);

/// synth_from_taps over i.i.d. reference channels (m antennas, n taps), one
/// independent draw per timestamp from stream (seed, t).
CsiTrace synth_tdl_trace(long t, long m, long n, long k, std::uint64_t seed);

}  // namespace fmargin
