#include "fmargin/csi_io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fmargin/errors.hpp"

namespace fmargin {

namespace {

void put_u32(std::vector<char>& out, std::uint32_t value) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<char>((value >> shift) & 0xFFu));
}

std::uint32_t get_u32(const unsigned char* bytes) {
  return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
}

std::uint32_t checked_u32(long value, const char* what) {
  if (value < 0 || static_cast<unsigned long>(value) > std::numeric_limits<std::uint32_t>::max()) {
    throw DimensionError(std::string(what) + " does not fit the u32 header field");
  }
  return static_cast<std::uint32_t>(value);
}

std::string encode_meta(const TraceMeta& meta) {
  if (meta.empty()) return {};
  nlohmann::json object = nlohmann::json::object();
  for (const auto& [key, value] : meta) object[key] = value;
  return object.dump();
}

TraceMeta decode_meta(const std::string& text) {
  TraceMeta meta;
  if (text.empty()) return meta;
  nlohmann::json object;
  try {
    object = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedError(std::string("trace meta is not valid JSON: ") + e.what());
  }
  if (!object.is_object()) throw MalformedError("trace meta must be a JSON object");
  for (const auto& [key, value] : object.items()) {
    if (!value.is_string()) throw MalformedError("trace meta value for '" + key + "' is not a string");
    meta.emplace(key, value.get<std::string>());
  }
  return meta;
}

// Reads exactly `count` bytes or throws TruncatedError naming `what`.
void read_exact(std::istream& source, char* dst, std::size_t count, const char* what) {
  source.read(dst, static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(source.gcount()) != count) {
    throw TruncatedError(std::string("trace truncated in ") + what);
  }
}

}  // namespace

std::uint64_t write_trace(const CsiTrace& trace, std::ostream& sink) {
  const std::string meta = encode_meta(trace.meta());
  std::vector<char> header;
  header.reserve(kTraceHeaderBytes);
  header.insert(header.end(), kTraceMagic, kTraceMagic + 8);
  put_u32(header, checked_u32(trace.timestamps(), "timestamp count"));
  put_u32(header, checked_u32(trace.antennas(), "antenna count"));
  put_u32(header, checked_u32(trace.subcarriers(), "subcarrier count"));
  put_u32(header, checked_u32(static_cast<long>(meta.size()), "meta length"));

  sink.write(header.data(), static_cast<std::streamsize>(header.size()));
  sink.write(meta.data(), static_cast<std::streamsize>(meta.size()));

  const CsiTrace::Data& data = trace.data();
  const long row_values = trace.antennas() * trace.subcarriers();
  std::vector<char> row(static_cast<std::size_t>(row_values) * 8);
  for (long t = 0; t < trace.timestamps(); ++t) {
    char* out = row.data();
    for (long i = 0; i < row_values; ++i) {
      const std::complex<double> value = data(t, i);
      for (const float part : {static_cast<float>(value.real()), static_cast<float>(value.imag())}) {
        const std::uint32_t bits = std::bit_cast<std::uint32_t>(part);
        for (int shift = 0; shift < 32; shift += 8) *out++ = static_cast<char>((bits >> shift) & 0xFFu);
      }
    }
    sink.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
  if (!sink) throw IoError("failed writing trace to sink");
  return kTraceHeaderBytes + meta.size() + 8ull * static_cast<std::uint64_t>(trace.size());
}

std::uint64_t write_trace(const CsiTrace& trace, const std::filesystem::path& path) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open '" + path.string() + "' for writing");
  const std::uint64_t bytes = write_trace(trace, file);
  file.close();
  if (!file) throw IoError("failed closing '" + path.string() + "'");
  return bytes;
}

CsiTrace read_trace(std::istream& source) {
  std::array<unsigned char, kTraceHeaderBytes> header{};
  source.read(reinterpret_cast<char*>(header.data()), header.size());
  const auto got = static_cast<std::size_t>(source.gcount());
  if (got < 6 || std::memcmp(header.data(), kTraceMagic, 6) != 0) {
    if (got < 6 && std::memcmp(header.data(), kTraceMagic, got) == 0) {
      throw TruncatedError("trace truncated in header");
    }
    throw BadMagicError("not a CSITRC trace (bad magic)");
  }
  if (got < 8) throw TruncatedError("trace truncated in header");
  if (std::memcmp(header.data() + 6, kTraceMagic + 6, 2) != 0) {
    throw VersionMismatchError("unsupported trace version '" +
                               std::string(reinterpret_cast<const char*>(header.data()) + 6, 2) +
                               "', expected '" + std::string(kTraceMagic + 6, 2) + "'");
  }
  if (got < kTraceHeaderBytes) throw TruncatedError("trace truncated in header");

  const std::uint32_t t = get_u32(header.data() + 8);
  const std::uint32_t m = get_u32(header.data() + 12);
  const std::uint32_t k = get_u32(header.data() + 16);
  const std::uint32_t meta_len = get_u32(header.data() + 20);
  if (t == 0 || m == 0 || k == 0) throw MalformedError("trace header declares an empty dimension");
  const std::uint64_t values = static_cast<std::uint64_t>(t) * m * k;
  if (values > (std::uint64_t{1} << 40)) throw MalformedError("trace header declares an implausible size");

  std::string meta_text(meta_len, '\0');
  read_exact(source, meta_text.data(), meta_len, "meta");
  TraceMeta meta = decode_meta(meta_text);

  const long row_values = static_cast<long>(m) * static_cast<long>(k);
  CsiTrace::Data data(static_cast<Eigen::Index>(t), row_values);
  std::vector<unsigned char> row(static_cast<std::size_t>(row_values) * 8);
  for (std::uint32_t ti = 0; ti < t; ++ti) {
    read_exact(source, reinterpret_cast<char*>(row.data()), row.size(), "payload");
    const unsigned char* in = row.data();
    for (long i = 0; i < row_values; ++i, in += 8) {
      const float re = std::bit_cast<float>(get_u32(in));
      const float im = std::bit_cast<float>(get_u32(in + 4));
      if (!std::isfinite(re) || !std::isfinite(im)) {
        throw NonFiniteError("non-finite value at timestamp " + std::to_string(ti));
      }
      data(ti, i) = {re, im};
    }
  }
  if (source.peek() != std::char_traits<char>::eof()) {
    throw MalformedError("trailing bytes after declared payload");
  }
  return CsiTrace(t, m, k, std::move(data), std::move(meta));
}

CsiTrace read_trace(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open '" + path.string() + "'");
  return read_trace(file);
}

CsiTrace read_trace_csv(std::istream& source) {
  struct Cell {
    long t, m, k;
    double re, im;
  };
  std::vector<Cell> cells;
  std::string line;
  long line_no = 0;
  long t_max = -1, m_max = -1, k_max = -1;
  while (std::getline(source, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.find_first_not_of("0123456789+-.eE, \t") != std::string::npos) {
      continue;  // header row
    }
    for (char& c : line) {
      if (c == ',') c = ' ';
    }
    std::istringstream fields(line);
    Cell cell{};
    if (!(fields >> cell.t >> cell.m >> cell.k >> cell.re >> cell.im)) {
      throw MalformedError("csv line " + std::to_string(line_no) + ": expected t,m,k,re,im");
    }
    if (cell.t < 0 || cell.m < 0 || cell.k < 0) {
      throw MalformedError("csv line " + std::to_string(line_no) + ": negative index");
    }
    if (!std::isfinite(cell.re) || !std::isfinite(cell.im)) {
      throw NonFiniteError("csv line " + std::to_string(line_no) + ": non-finite value");
    }
    t_max = std::max(t_max, cell.t);
    m_max = std::max(m_max, cell.m);
    k_max = std::max(k_max, cell.k);
    cells.push_back(cell);
  }
  if (cells.empty()) throw MalformedError("csv trace has no data rows");
  const long t = t_max + 1, m = m_max + 1, k = k_max + 1;
  if (static_cast<long>(cells.size()) != t * m * k) {
    throw MalformedError("csv trace does not cover the dense " + std::to_string(t) + "x" +
                         std::to_string(m) + "x" + std::to_string(k) + " tensor");
  }
  CsiTrace::Data data(t, m * k);
  std::vector<bool> seen(cells.size(), false);
  for (const Cell& c : cells) {
    const long flat = (c.t * m + c.m) * k + c.k;
    if (seen[flat]) throw MalformedError("csv trace repeats a (t, m, k) cell");
    seen[flat] = true;
    data(c.t, c.m * k + c.k) = {c.re, c.im};
  }
  return CsiTrace(t, m, k, std::move(data));
}

CsiTrace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) throw IoError("cannot open '" + path.string() + "'");
  return read_trace_csv(file);
}

CsiTrace load_trace(const std::filesystem::path& path) {
  if (path.extension() == ".csv") return read_trace_csv(path);
  return read_trace(path);
}

CsiTrace synth_iid_trace(long t, long m, long k, double power, std::uint64_t seed) {
  if (t < 1 || m < 1 || k < 1) throw DimensionError("trace dimensions must be >= 1");
  if (!(power > 0.0) || !std::isfinite(power)) throw DomainError("trace power must be positive");
  CsiTrace::Data data(t, m * k);
  for (long ti = 0; ti < t; ++ti) {
    CounterRng stream(seed, static_cast<std::uint64_t>(ti));
    for (long i = 0; i < m * k; ++i) data(ti, i) = stream.complex_normal(power);
  }
  Eigen::Map<Eigen::ArrayXd> parts(reinterpret_cast<double*>(data.data()), 2 * data.size());
  parts = parts.cast<float>().cast<double>();
  return CsiTrace(t, m, k, std::move(data));
}

CsiTrace synth_from_taps(long t, long k, const std::function<TapChannel(long)>& taps_at) {
  if (t < 1 || k < 1) throw DimensionError("trace dimensions must be >= 1");
  CsiTrace::Data data;
  Eigen::MatrixXcd twiddle;
  long m = 0;
  for (long ti = 0; ti < t; ++ti) {
    const TapChannel channel = taps_at(ti);
    if (ti == 0) {
      m = channel.antennas();
      const long n = channel.tap_count();
      if (n > k) throw DimensionError("tap count exceeds subcarrier count");
      data.resize(t, m * k);
      twiddle.resize(n, k);
      for (long tap = 0; tap < n; ++tap) {
        for (long j = 0; j < k; ++j) {
          // j*tap reduced mod k before forming the angle.
          const double angle = -2.0 * std::numbers::pi * static_cast<double>((j * tap) % k) /
                               static_cast<double>(k);
          twiddle(tap, j) = std::polar(1.0, angle);
        }
      }
    } else if (channel.antennas() != m || channel.tap_count() != twiddle.rows()) {
      throw DimensionError("tap generator changed dimensions between timestamps");
    }
    CsiTrace::Snapshot spectrum = channel.taps() * twiddle;
    data.row(ti) = Eigen::Map<const Eigen::RowVectorXcd>(spectrum.data(), m * k);
  }
  return CsiTrace(t, m, k, std::move(data));
}

CsiTrace synth_tdl_trace(long t, long m, long n, long k, std::uint64_t seed) {
  return synth_from_taps(t, k, [&](long ti) {
    CounterRng stream(seed, static_cast<std::uint64_t>(ti));
    return gen_rayleigh_channel(m, n, stream);
  });
}

}  // namespace fmargin
