// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "fmargin/channel.hpp"
#include "fmargin/csi_io.hpp"
#include "fmargin/empirical.hpp"
#include "fmargin/gamma.hpp"
#include "oracles.hpp"

using namespace fmargin;
using cd = std::complex<double>;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool condition, const std::string& what) {
    if (!condition) {
      ok = false;
      detail << (detail.tellp() > 0 ? "; " : "") << what;
    }
  }
  Outcome result(const std::string& summary) const { return {ok, ok ? summary : detail.str()}; }
};

std::string num(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

int run_cli(const std::vector<std::string>& args, std::string& out) {
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  out = o.str();
  if (code != 0) std::cerr << e.str();
  return code;
}

const double kReferenceMargins[4][4] = {
    {28.41, 15.68, 9.33, 5.90},
    {15.68, 9.33, 5.90, 3.88},
    {11.47, 7.09, 4.60, 3.08},
    {9.33, 5.90, 3.88, 2.62},
};

Outcome reference_table(double& seconds) {
  Check c;
  std::string out;
  const auto start = std::chrono::steady_clock::now();
  const int code = run_cli({"table1"}, out);
  seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  c.expect(code == 0, "exit code " + std::to_string(code));
  const auto rows = parse_csv(out);
  c.expect(rows.size() == 5, "expected 5 CSV rows");
  double worst = 0.0;
  for (int n = 0; n < 4 && rows.size() == 5; ++n) {
    for (int m = 0; m < 4; ++m) {
      const double got = std::stod(rows[n + 1][m + 1]);
      const double exact = fading_margin_analytic(1 << m, n + 1, Probability(1e-3)).margin_db;
      worst = std::max(worst, std::abs(exact - kReferenceMargins[n][m]));
      c.expect(std::abs(got - kReferenceMargins[n][m]) <= 0.01,
               "cell N=" + std::to_string(n + 1) + " M=" + std::to_string(1 << m) + " = " + rows[n + 1][m + 1]);
    }
  }
  c.expect(seconds < 1.0, "runtime " + num(seconds) + " s");
  return c.result("16/16 cells within 0.01 dB (max unrounded deviation " + num(worst, 3) + " dB)");
}

Outcome two_tap_anchor() {
  const double v = fading_margin_analytic(1, 2, Probability(5e-3)).margin_db;
  return {std::abs(v - 12.1) <= 0.05, "F_M(5e-3; M=1, N=2) = " + num(v, 6) + " dB"};
}

Outcome narrative_anchors() {
  Check c;
  std::ostringstream summary;
  const struct {
    double dof, expected;
  } anchors[] = {{2, 30.7}, {20, 5.6}, {60, 3.0}};
  for (const auto& a : anchors) {
    const double v = fading_margin(GammaParams(a.dof, 1.0), Probability(1e-6)).margin_db;
    summary << "DoF " << a.dof << ": " << num(v, 5) << " dB  ";
    c.expect(std::abs(v - a.expected) <= 0.1, "DoF " + num(a.dof) + " gave " + num(v, 5));
  }
  return c.result(summary.str());
}

Outcome distribution_law(double& seconds) {
  Check c;
  std::ostringstream summary;
  const auto start = std::chrono::steady_clock::now();
  const long realizations = 100'000;
  const struct {
    long m, n;
  } configs[] = {{1, 1}, {4, 2}, {16, 4}};
  for (const auto& cfg : configs) {
    const GainSamples g = monte_carlo_gains(cfg.m, cfg.n, realizations, 20240 + static_cast<std::uint64_t>(cfg.m));
    const double shape = static_cast<double>(cfg.m * cfg.n);
    const double scale = 1.0 / static_cast<double>(cfg.n);
    std::vector<double> values(g.values.data(), g.values.data() + g.values.size());
    const double d = oracle::ks_statistic(values, [&](double x) { return oracle::boost_gamma_p(shape, x / scale); });
    const double critical = oracle::ks_critical_1pct(values.size());

    const double mean = static_cast<double>(cfg.m);
    const double var = static_cast<double>(cfg.m) / static_cast<double>(cfg.n);
    const double r = static_cast<double>(realizations);
    const double se_mean = std::sqrt(var / r);
    // Sample-variance standard error using the Gamma excess kurtosis 6/shape.
    const double se_var = var * std::sqrt((2.0 + 6.0 / shape) / r);
    const double z_mean = std::abs(g.mean() - mean) / se_mean;
    const double z_var = std::abs(g.variance() - var) / se_var;

    const std::string tag = "(" + std::to_string(cfg.m) + "," + std::to_string(cfg.n) + ")";
    summary << tag << " KS " << num(d, 3) << "<" << num(critical, 3) << " z_mean " << num(z_mean, 2) << " z_var "
            << num(z_var, 2) << "  ";
    c.expect(d < critical, tag + " KS " + num(d) + " >= " + num(critical));
    c.expect(z_mean <= 4.0, tag + " mean off by " + num(z_mean) + " SE");
    c.expect(z_var <= 4.0, tag + " variance off by " + num(z_var) + " SE");
  }
  seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  c.expect(seconds < 30.0, "runtime " + num(seconds) + " s");
  return c.result(summary.str());
}

// Effective taps built from explicit per-antenna convolutions, delays -(n-1)..n-1.
std::vector<cd> convolution_path(const TapChannel& ch) {
  const long n = ch.tap_count();
  const double norm = std::sqrt(ch.energy());
  std::vector<cd> total(static_cast<std::size_t>(2 * n - 1), cd{});
  for (long m = 0; m < ch.antennas(); ++m) {
    std::vector<cd> h(n), w(n);
    for (long j = 0; j < n; ++j) {
      h[j] = ch(m, j);
      w[j] = std::conj(ch(m, n - 1 - j)) / norm;
    }
    const auto conv = oracle::convolve(h, w);
    for (std::size_t i = 0; i < conv.size(); ++i) total[i] += conv[i];
  }
  return total;
}

Outcome zero_delay_identity() {
  Check c;
  double worst_peak = 0.0, worst_herm = 0.0;
  for (std::uint64_t draw = 0; draw < 100; ++draw) {
    CounterRng dims(777, draw);
    const long m = 1 + static_cast<long>(dims.next_u32() % 64);
    const long n = 1 + static_cast<long>(dims.next_u32() % 32);
    CounterRng stream(778, draw);
    const TapChannel ch = gen_rayleigh_channel(m, n, stream);
    const std::vector<cd> taps = convolution_path(ch);
    const cd peak = taps[static_cast<std::size_t>(n - 1)];
    const double closed = ch.taps().norm();
    const double peak_err = std::abs(peak - closed) / closed;
    double herm = 0.0;
    for (long l = 1; l < n; ++l) {
      herm = std::max(herm, std::abs(taps[n - 1 - l] - std::conj(taps[n - 1 + l])));
    }
    herm /= std::abs(peak);
    // The library path must agree with the convolution path as well.
    const EffectiveChannel eff = effective_channel(ch, time_reversal_weights(ch));
    const double lib_err = std::abs(eff.zero_delay() - zero_delay_tap(ch)) / closed;
    worst_peak = std::max({worst_peak, peak_err, lib_err});
    worst_herm = std::max({worst_herm, herm, eff.hermitian_defect() / closed});
  }
  c.expect(worst_peak <= 1e-12, "zero-delay relative error " + num(worst_peak));
  c.expect(worst_herm <= 1e-12, "Hermitian defect " + num(worst_herm));
  return c.result("100 draws: max zero-delay rel. error " + num(worst_peak, 3) + ", max Hermitian defect " +
                  num(worst_herm, 3));
}

Outcome sinr_decomposition() {
  Check c;
  double worst = 0.0, worst_low = 0.0, worst_high = 0.0;
  for (std::uint64_t draw = 0; draw < 100; ++draw) {
    CounterRng params(901, draw);
    const long m = 1 + static_cast<long>(params.next_u32() % 32);
    const long n = 2 + static_cast<long>(params.next_u32() % 15);
    const double beta = 1e-4 + params.uniform();
    const double px = 0.01 + 100.0 * params.uniform();
    const double pe = 1e-4 + params.uniform();
    CounterRng stream(902, draw);
    const TapChannel ch = gen_rayleigh_channel(m, n, stream);
    const std::vector<cd> taps = convolution_path(ch);

    // Three isolated received-power terms: desired symbol, ISI, noise.
    double signal = 0.0, isi = 0.0;
    for (long l = -(n - 1); l <= n - 1; ++l) {
      const double p = beta * std::norm(taps[static_cast<std::size_t>(l + n - 1)]) * px;
      (l == 0 ? signal : isi) += p;
    }
    const double noise = pe;
    const double expected = signal / (isi + noise);

    const EffectiveChannel eff = effective_channel(ch, time_reversal_weights(ch));
    const double gamma = beta * px / pe;
    worst = std::max(worst, std::abs(instantaneous_sinr(eff, gamma).sinr_linear - expected) / expected);

    const double h0 = std::norm(eff.zero_delay());
    const double low = instantaneous_sinr(eff, 1e-6).sinr_linear;
    worst_low = std::max(worst_low, std::abs(low - 1e-6 * h0) / (1e-6 * h0));
    const double high = instantaneous_sinr(eff, 1e9).sinr_linear;
    const double ratio = h0 / eff.isi_power();
    worst_high = std::max(worst_high, std::abs(high - ratio) / ratio);
  }
  c.expect(worst <= 1e-12, "three-term recomputation error " + num(worst));
  c.expect(worst_low <= 1e-3, "noise-limited deviation " + num(worst_low));
  c.expect(worst_high <= 1e-3, "interference-limited deviation " + num(worst_high));
  return c.result("100 channels: rel. error " + num(worst, 3) + "; Gamma=1e-6 dev " + num(worst_low, 3) +
                  "; Gamma=1e9 dev " + num(worst_high, 3));
}

struct PipelineRow {
  long size;
  std::string band;
  double margin;
};

std::vector<PipelineRow> parse_rows(const std::string& csv) {
  std::vector<PipelineRow> rows;
  const auto table = parse_csv(csv);
  for (std::size_t i = 1; i < table.size(); ++i) {
    rows.push_back({std::stol(table[i][1]), table[i][2], std::stod(table[i][3])});
  }
  return rows;
}

double margin_of(const std::vector<PipelineRow>& rows, long size, const std::string& band) {
  for (const auto& r : rows) {
    if (r.size == size && r.band == band) return r.margin;
  }
  return NAN;
}

Outcome pipeline_equivalence(const fs::path& dir, double& seconds, std::vector<PipelineRow>& rows) {
  Check c;
  const auto start = std::chrono::steady_clock::now();
  const std::string trace = (dir / "iid.csitrc").string();
  std::string out;
  c.expect(run_cli({"synth", "--t", "50000", "--m", "8", "--k", "52", "--seed", "2024", "--out", trace}, out) == 0,
           "synth failed");
  c.expect(run_cli({"empirical", "--trace", trace, "--sizes", "1,2,4,8", "--p", "1e-3", "--band", "both",
                    "--precision", "6"},
                   out) == 0,
           "empirical failed");
  seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!c.ok) return c.result("");
  rows = parse_rows(out);
  std::ostringstream summary;
  const long sizes[] = {1, 2, 4, 8};
  for (int i = 0; i < 4; ++i) {
    const double nb = margin_of(rows, sizes[i], "nb");
    const double wb = margin_of(rows, sizes[i], "wb");
    summary << "M=" << sizes[i] << " nb " << num(nb, 4) << " (ref " << kReferenceMargins[0][i] << ") wb " << num(wb, 3)
            << "  ";
    c.expect(std::abs(nb - kReferenceMargins[0][i]) <= 0.3, "size " + std::to_string(sizes[i]) + " nb " + num(nb));
    c.expect(wb < nb, "size " + std::to_string(sizes[i]) + " wb not below nb");
  }
  c.expect(seconds < 60.0, "runtime " + num(seconds) + " s");
  return c.result(summary.str());
}

Outcome scale_invariance() {
  Check c;
  double worst = 0.0;
  const std::vector<long> sizes{1, 2, 4, 8};
  const CsiTrace traces[] = {synth_iid_trace(4000, 8, 16, 1.0, 5), synth_tdl_trace(4000, 8, 4, 16, 6),
                             synth_iid_trace(2000, 8, 4, 3.7e-5, 7)};
  for (const CsiTrace& trace : traces) {
    for (const double p : {1e-3, 1e-2, 0.1}) {
      const GainTable base = case_study(trace, sizes, Probability(p), {});
      const GainTable scaled = case_study(trace.scaled(1e3), sizes, Probability(p), {});
      for (std::size_t i = 0; i < base.rows.size(); ++i) {
        const double a = base.rows[i].report.margin_db, b = scaled.rows[i].report.margin_db;
        if (std::isnan(a) || std::isnan(b)) {
          c.expect(std::isnan(a) && std::isnan(b), "resolvability changed under scaling");
          continue;
        }
        worst = std::max(worst, std::abs(a - b));
      }
    }
  }
  c.expect(worst <= 1e-9, "max margin change " + num(worst) + " dB");
  return c.result("max margin change under x1e3 scaling: " + num(worst, 3) + " dB");
}

Outcome qualitative_trends(const std::vector<PipelineRow>& iid_rows) {
  Check c;
  std::ostringstream summary;
  const std::vector<long> sizes{1, 2, 4, 8, 16, 32};
  const CsiTrace tdl = synth_tdl_trace(20000, 32, 4, 52, 99);
  const GainTable table = case_study(tdl, sizes, Probability(1e-3), {});

  const auto check_trends = [&](const std::string& name, const std::vector<long>& sz,
                                const std::function<double(long, const std::string&)>& get) {
    double prev_nb = INFINITY, prev_wb = INFINITY, prev_gap = INFINITY;
    summary << name << " gaps:";
    for (const long s : sz) {
      const double nb = get(s, "nb"), wb = get(s, "wb"), gap = nb - wb;
      c.expect(nb <= prev_nb, name + " nb margin rises at size " + std::to_string(s));
      c.expect(wb <= prev_wb, name + " wb margin rises at size " + std::to_string(s));
      c.expect(gap < prev_gap, name + " NB/WB gap does not shrink at size " + std::to_string(s));
      summary << ' ' << num(gap, 3);
      prev_nb = nb;
      prev_wb = wb;
      prev_gap = gap;
    }
    summary << "  ";
  };
  check_trends("iid", {1, 2, 4, 8}, [&](long s, const std::string& b) { return margin_of(iid_rows, s, b); });
  check_trends("tdl", sizes, [&](long s, const std::string& b) -> double {
    for (const auto& row : table.rows) {
      if (row.array_size == s && to_string(row.band) == b) return row.report.margin_db;
    }
    return NAN;
  });
  return c.result(summary.str() + "dB");
}

Outcome quantile_round_trips() {
  double worst = 0.0;
  for (const double shape : {1.0, 2.0, 4.0, 8.0, 93.0, 372.0}) {
    for (const double scale : {1.0, 1.0 / 4.0}) {
      const GammaParams params(shape, scale);
      for (const double p : {1e-6, 1e-4, 1e-3, 1e-2, 0.5, 0.9}) {
        const double x = gamma_quantile(params, Probability(p));
        worst = std::max(worst, std::abs(gamma_cdf(params, x) - p));
      }
    }
  }
  return {worst <= 1e-10, "max |cdf(quantile(p)) - p| = " + num(worst, 3)};
}

}  // namespace

int main() {
  const fs::path dir = fs::temp_directory_path() / "fmargin_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);

  int failures = 0;
  const auto report = [&](int id, const std::string& title, const Outcome& outcome, double seconds = -1.0) {
    std::printf("criterion %2d: %s  %s: %s", id, outcome.pass ? "PASS" : "FAIL", title.c_str(),
                outcome.detail.c_str());
    if (seconds >= 0.0) std::printf(" [%.2f s]", seconds);
    std::printf("\n");
    std::fflush(stdout);
    failures += outcome.pass ? 0 : 1;
  };
  const auto guarded = [](const std::function<Outcome()>& fn) -> Outcome {
    try {
      return fn();
    } catch (const std::exception& e) {
      return {false, std::string("exception: ") + e.what()};
    }
  };

  double t1 = 0, t4 = 0, t7 = 0;
  std::vector<PipelineRow> iid_rows;
  const Outcome o1 = guarded([&] { return reference_table(t1); });
  report(1, "Reference margin table", o1, t1);
  report(2, "Single-antenna two-tap anchor", guarded(two_tap_anchor));
  report(3, "Hardening anchors at p=1e-6", guarded(narrative_anchors));
  const Outcome o4 = guarded([&] { return distribution_law(t4); });
  report(4, "Gamma distribution law", o4, t4);
  report(5, "Zero-delay identity and Hermitian symmetry", guarded(zero_delay_identity));
  report(6, "SINR decomposition and limits", guarded(sinr_decomposition));
  const Outcome o7 = guarded([&] { return pipeline_equivalence(dir, t7, iid_rows); });
  report(7, "Pipeline oracle equivalence", o7, t7);
  report(8, "Scale invariance", guarded(scale_invariance));
  report(9, "Qualitative array-size trends", guarded([&]() -> Outcome {
           if (iid_rows.empty()) return {false, "pipeline rows unavailable"};
           return qualitative_trends(iid_rows);
         }));
  report(10, "Quantile round trips", guarded(quantile_round_trips));

  fs::remove_all(dir);
  std::printf("%d/10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
