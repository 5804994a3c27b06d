#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "fmargin/channel.hpp"
#include "fmargin/csi_io.hpp"
#include "fmargin/empirical.hpp"
#include "fmargin/errors.hpp"
#include "fmargin/gamma.hpp"

namespace fmargin::cli {

namespace {

std::string fixed(double value, int precision) {
  if (std::isnan(value)) return "nan";
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << value;
  return s.str();
}

std::string general(double value) {
  std::ostringstream s;
  s << std::setprecision(10) << value;
  return s.str();
}

// Error raised for bad flag values after CLI11 has accepted them.
struct UsageError : Error {
  using Error::Error;
};

// Writes to --out when given, stdout otherwise.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::trunc);
      if (!file_) throw IoError("cannot open '" + path + "' for writing");
    }
    stream_ = path.empty() ? &fallback : &file_;
  }
  std::ostream& operator*() { return *stream_; }
  void finish() {
    stream_->flush();
    if (!*stream_) throw IoError("failed writing output");
  }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> bounds;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ':')) {
    try {
      std::size_t used = 0;
      bounds.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw UsageError("grid '" + spec + "' is not min:max:step");
    }
  }
  if (bounds.size() != 3) throw UsageError("grid '" + spec + "' is not min:max:step");
  const double lo = bounds[0], hi = bounds[1], step = bounds[2];
  if (!std::isfinite(lo) || !std::isfinite(hi) || !std::isfinite(step)) {
    throw UsageError("grid bounds must be finite");
  }
  if (!(step > 0.0)) throw UsageError("grid step must be positive");
  if (hi < lo) throw UsageError("grid max must not be below grid min");
  const long count = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
  if (count > 10'000'000) throw UsageError("grid has too many points");
  std::vector<double> grid(static_cast<std::size_t>(count));
  for (long i = 0; i < count; ++i) grid[i] = lo + static_cast<double>(i) * step;
  return grid;
}

Probability to_probability(double p) {
  try {
    return Probability(p);
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
}

struct MarginArgs {
  std::vector<long> m, n;
  double p = 1e-3;
  std::vector<double> p_list;
  int precision = 2;
};

void cmd_margin(const MarginArgs& a, std::ostream& out) {
  std::vector<double> ps = a.p_list.empty() ? std::vector<double>{a.p} : a.p_list;
  for (const long v : a.m) {
    if (v < 1) throw UsageError("--m values must be >= 1");
  }
  for (const long v : a.n) {
    if (v < 1) throw UsageError("--n values must be >= 1");
  }
  out << "m,n,dof,p,margin_db\n";
  for (const double pv : ps) {
    const Probability p = to_probability(pv);
    for (const long n : a.n) {
      for (const long m : a.m) {
        out << m << ',' << n << ',' << m * n << ',' << general(pv) << ','
            << fixed(fading_margin_analytic(m, n, p).margin_db, a.precision) << '\n';
      }
    }
  }
}

struct Table1Args {
  double p = 1e-3;
  int precision = 2;
};

void cmd_table1(const Table1Args& a, std::ostream& out) {
  const Probability p = to_probability(a.p);
  constexpr long kAntennas[] = {1, 2, 4, 8};
  out << "N,M=1,M=2,M=4,M=8\n";
  for (long n = 1; n <= 4; ++n) {
    out << n;
    for (const long m : kAntennas) out << ',' << fixed(fading_margin_analytic(m, n, p).margin_db, a.precision);
    out << '\n';
  }
}

struct CdfArgs {
  long m = 1, n = 1;
  std::string grid;
  bool analytic = false;
  long simulate = 0;
  std::uint64_t seed = 1;
  std::string out;
};

void cmd_cdf(const CdfArgs& a, std::ostream& stdout_stream) {
  if (a.m < 1 || a.n < 1) throw UsageError("--m and --n must be >= 1");
  const std::vector<double> grid = parse_grid(a.grid);
  Sink sink(a.out, stdout_stream);
  *sink << "gain_db,cdf\n";
  if (a.simulate > 0) {
    const GainSamples gains = monte_carlo_gains(a.m, a.n, a.simulate, a.seed);
    const Ecdf ecdf = build_ecdf(std::span(gains.values.data(), gains.values.size()));
    for (const double g : grid) *sink << general(g) << ',' << general(ecdf(from_db(g))) << '\n';
  } else {
    const auto curve = analytic_cdf_curve(GammaParams::reference(a.m, a.n), std::span<const double>(grid));
    for (const CurvePoint& point : curve) *sink << general(point.gain_db) << ',' << general(point.cdf) << '\n';
  }
  sink.finish();
}

struct SimulateArgs {
  long m = 1, n = 1;
  long realizations = 1'000'000;
  std::uint64_t seed = 1;
  double snr_db = 10.0;
  bool emit_sinr = false;
  std::string out;
  unsigned threads = 0;
  int precision = 6;
};

void cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  if (a.m < 1 || a.n < 1) throw UsageError("--m and --n must be >= 1");
  if (a.realizations < 1) throw UsageError("--realizations must be >= 1");
  MonteCarloConfig config;
  config.threads = a.threads;
  const double snr_linear = from_db(a.snr_db);

  GainSamples gains;
  Eigen::VectorXd sinr;
  if (a.emit_sinr) {
    SinrSamples s = monte_carlo_sinr(a.m, a.n, a.realizations, a.seed, snr_linear, config);
    gains = std::move(s.gains);
    sinr = std::move(s.sinr_linear);
  } else {
    gains = monte_carlo_gains(a.m, a.n, a.realizations, a.seed, config);
  }

  const HardeningCoefficient theory = scv(a.m, a.n);
  const int prec = a.precision;
  out << "key,value\n";
  out << "m," << a.m << "\nn," << a.n << "\nrealizations," << a.realizations << "\nseed," << a.seed << '\n';
  out << "mean," << fixed(gains.mean(), prec) << '\n';
  out << "mean_theory," << fixed(static_cast<double>(a.m), prec) << '\n';
  out << "variance," << fixed(gains.variance(), prec) << '\n';
  out << "variance_theory," << fixed(static_cast<double>(a.m) / static_cast<double>(a.n), prec) << '\n';
  out << "scv," << fixed(gains.scv(), prec) << '\n';
  out << "scv_theory," << fixed(theory.scv, prec) << '\n';
  out << "hardened," << (theory.hardened ? "true" : "false") << '\n';
  if (a.emit_sinr) {
    out << "snr_db," << fixed(a.snr_db, prec) << '\n';
    std::vector<double> sinr_db(static_cast<std::size_t>(sinr.size()));
    for (Eigen::Index i = 0; i < sinr.size(); ++i) sinr_db[i] = to_db(sinr(i));
    std::sort(sinr_db.begin(), sinr_db.end());
    for (const double q : {1e-3, 1e-2, 1e-1, 0.5}) {
      if (!is_resolvable(q, static_cast<long>(sinr_db.size()))) continue;
      const long rank = quantile_rank(q, static_cast<long>(sinr_db.size()));
      out << "sinr_db_p" << general(q) << ',' << fixed(sinr_db[rank - 1], prec) << '\n';
    }
  }
  if (!a.out.empty()) {
    Sink sink(a.out, out);
    *sink << (a.emit_sinr ? "index,gain,sinr_db\n" : "index,gain\n");
    *sink << std::setprecision(17);
    for (Eigen::Index i = 0; i < gains.values.size(); ++i) {
      *sink << i << ',' << gains.values(i);
      if (a.emit_sinr) *sink << ',' << to_db(sinr(i));
      *sink << '\n';
    }
    sink.finish();
  }
}

struct EmpiricalArgs {
  std::string trace;
  std::vector<long> sizes{1};
  double p = 1e-3;
  std::string band = "both";
  std::string out;
  std::string dataset;
  std::string selection = "prefix";
  std::uint64_t seed = 0;
  bool no_normalize = false;
  int precision = 2;
};

int cmd_empirical(const EmpiricalArgs& a, std::ostream& stdout_stream, std::ostream& err) {
  const Probability p = to_probability(a.p);
  std::optional<CsiTrace> trace;
  try {
    trace.emplace(load_trace(a.trace));
  } catch (const Error& e) {
    err << "error: cannot load trace '" << a.trace << "': " << e.what() << '\n';
    return kIo;
  }

  CaseStudyOptions options;
  options.normalize = !a.no_normalize;
  options.narrowband = a.band != "wb";
  options.wideband = a.band != "nb";
  options.selection = a.selection == "random" ? SubarraySelection::random : SubarraySelection::prefix;
  options.seed = a.seed;

  std::vector<long> sizes = a.sizes;
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  const long available = static_cast<long>(trace->antenna_pool().size());
  if (sizes.front() < 1 || sizes.back() > available) {
    throw UsageError("array sizes must lie in [1, " + std::to_string(available) + "]");
  }

  std::string label = a.dataset;
  if (label.empty()) {
    const auto it = trace->meta().find("dataset");
    label = it != trace->meta().end() ? it->second : std::filesystem::path(a.trace).stem().string();
  }

  const GainTable table = case_study(*trace, sizes, p, options);
  Sink sink(a.out, stdout_stream);
  *sink << "dataset,size,band,margin_db,n_samples,resolvable\n";
  for (const GainTableRow& row : table.rows) {
    *sink << label << ',' << row.array_size << ',' << to_string(row.band) << ','
          << fixed(row.report.margin_db, a.precision) << ',' << row.report.n_samples << ','
          << (row.report.resolvable ? "true" : "false") << '\n';
  }
  sink.finish();
  return kOk;
}

struct SynthArgs {
  long t = 1, m = 1, k = 1;
  double power = 1.0;
  std::uint64_t seed = 1;
  std::string out;
  long taps = 0;
  std::vector<std::string> meta;
  std::vector<long> exclude;
};

void cmd_synth(const SynthArgs& a, std::ostream& out) {
  if (a.t < 1 || a.m < 1 || a.k < 1) throw UsageError("--t, --m and --k must be >= 1");
  if (!(a.power > 0.0)) throw UsageError("--power must be positive");
  if (a.taps < 0 || a.taps > a.k) throw UsageError("--taps must lie in [1, k]");
  TraceMeta meta;
  for (const std::string& entry : a.meta) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--meta expects key=value, got '" + entry + "'");
    meta[entry.substr(0, eq)] = entry.substr(eq + 1);
  }
  if (!a.exclude.empty()) {
    std::string list;
    for (const long idx : a.exclude) {
      if (idx < 0 || idx >= a.m) throw UsageError("--exclude index out of range");
      list += (list.empty() ? "" : ",") + std::to_string(idx);
    }
    meta[kExcludedAntennasKey] = list;
  }

  CsiTrace trace = a.taps > 0 ? synth_tdl_trace(a.t, a.m, a.taps, a.k, a.seed)
                              : synth_iid_trace(a.t, a.m, a.k, a.power, a.seed);
  if (a.taps > 0 && a.power != 1.0) trace = trace.scaled(std::sqrt(a.power));
  trace.meta() = std::move(meta);
  const std::uint64_t bytes = write_trace(trace, std::filesystem::path(a.out));
  out << "wrote " << bytes << " bytes to " << a.out << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fading-margin analysis of large-scale antenna systems", "fmtool"};
  app.require_subcommand(1);

  MarginArgs margin;
  auto* margin_cmd = app.add_subcommand("margin", "Analytic fading margin of the M-antenna, N-tap reference channel");
  margin_cmd->add_option("--m", margin.m, "Antenna count(s)")->required()->delimiter(',');
  margin_cmd->add_option("--n", margin.n, "Tap count(s)")->required()->delimiter(',');
  auto* p_opt = margin_cmd->add_option("--p", margin.p, "Outage probability")->capture_default_str();
  margin_cmd->add_option("--p-list", margin.p_list, "Comma-separated probabilities")->delimiter(',')->excludes(p_opt);
  margin_cmd->add_option("--precision", margin.precision, "Decimals for dB values")->capture_default_str();

  Table1Args table1;
  auto* table1_cmd = app.add_subcommand("table1", "Analytic fading margins for M in {1,2,4,8}, N in {1..4}");
  table1_cmd->add_option("--p", table1.p, "Outage probability")->capture_default_str();
  table1_cmd->add_option("--precision", table1.precision, "Decimals for dB values")->capture_default_str();

  CdfArgs cdf;
  auto* cdf_cmd = app.add_subcommand("cdf", "CDF of |h[0]|^2 on a dB grid");
  cdf_cmd->add_option("--m", cdf.m, "Antenna count")->required();
  cdf_cmd->add_option("--n", cdf.n, "Tap count")->required();
  cdf_cmd->add_option("--grid-db", cdf.grid, "Grid min:max:step in dB")->required();
  auto* analytic_flag = cdf_cmd->add_flag("--analytic", cdf.analytic, "Gamma-law CDF (default)");
  cdf_cmd->add_option("--simulate", cdf.simulate, "ECDF of this many Monte Carlo realizations")
      ->excludes(analytic_flag);
  cdf_cmd->add_option("--seed", cdf.seed, "Monte Carlo seed")->capture_default_str();
  cdf_cmd->add_option("--out", cdf.out, "Write CSV here instead of stdout");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo statistics of time-reversal precoded channels");
  sim_cmd->add_option("--m", sim.m, "Antenna count")->required();
  sim_cmd->add_option("--n", sim.n, "Tap count")->required();
  sim_cmd->add_option("--realizations", sim.realizations, "Channel draws")->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "Seed")->capture_default_str();
  sim_cmd->add_option("--snr-db", sim.snr_db, "Mean SNR in dB for SINR")->capture_default_str();
  sim_cmd->add_flag("--emit-sinr", sim.emit_sinr, "Also compute instantaneous SINR");
  sim_cmd->add_option("--out", sim.out, "Per-sample CSV output");
  sim_cmd->add_option("--threads", sim.threads, "Worker threads (default: THREADS env or all cores)");
  sim_cmd->add_option("--precision", sim.precision, "Decimals in the summary")->capture_default_str();

  EmpiricalArgs emp;
  auto* emp_cmd = app.add_subcommand("empirical", "Empirical fading margins of a CSI trace per sub-array size");
  emp_cmd->add_option("--trace", emp.trace, "CSITRC01 trace, or .csv with t,m,k,re,im")->required();
  emp_cmd->add_option("--sizes", emp.sizes, "Sub-array sizes")->delimiter(',')->capture_default_str();
  emp_cmd->add_option("--p", emp.p, "Outage probability")->capture_default_str();
  emp_cmd->add_option("--band", emp.band, "nb, wb or both")
      ->check(CLI::IsMember({"nb", "wb", "both"}))
      ->capture_default_str();
  emp_cmd->add_option("--out", emp.out, "Write CSV here instead of stdout");
  emp_cmd->add_option("--dataset", emp.dataset, "Dataset label (default: meta 'dataset' or file stem)");
  emp_cmd->add_option("--selection", emp.selection, "Sub-array selection")
      ->check(CLI::IsMember({"prefix", "random"}))
      ->capture_default_str();
  emp_cmd->add_option("--seed", emp.seed, "Seed for random selection")->capture_default_str();
  emp_cmd->add_flag("--no-normalize", emp.no_normalize, "Skip large-scale normalization");
  emp_cmd->add_option("--precision", emp.precision, "Decimals for dB values")->capture_default_str();

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic CSITRC01 trace");
  synth_cmd->add_option("--t", synth.t, "Timestamps")->required();
  synth_cmd->add_option("--m", synth.m, "Antennas")->required();
  synth_cmd->add_option("--k", synth.k, "Subcarriers")->required();
  synth_cmd->add_option("--power", synth.power, "Mean entry power")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Seed")->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "Output file")->required();
  synth_cmd->add_option("--taps", synth.taps, "Synthesize from i.i.d. n-tap channels instead of i.i.d. entries");
  synth_cmd->add_option("--meta", synth.meta, "key=value metadata (repeatable)");
  synth_cmd->add_option("--exclude", synth.exclude, "Antennas to mark as excluded")->delimiter(',');

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  const std::int64_t precisions[] = {margin.precision, table1.precision, sim.precision, emp.precision};
  for (const auto prec : precisions) {
    if (prec < 0 || prec > 17) {
      err << "error: --precision must lie in [0, 17]\n";
      return kUsage;
    }
  }

  try {
    if (*margin_cmd) cmd_margin(margin, out);
    if (*table1_cmd) cmd_table1(table1, out);
    if (*cdf_cmd) cmd_cdf(cdf, out);
    if (*sim_cmd) cmd_simulate(sim, out);
    if (*emp_cmd) return cmd_empirical(emp, out, err);
    if (*synth_cmd) cmd_synth(synth, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const DegenerateError& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const Error& e) {
    // Domain, dimension and resource errors all stem from flag values.
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kOk;
}

}  // namespace fmargin::cli
