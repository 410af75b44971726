// Copyright (c) 2026 The intq Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "intq/bench.hpp"
#include "intq/encoder.hpp"
#include "intq/nonlinear.hpp"
#include "intq/oracles.hpp"
#include "intq/poly.hpp"
#include "intq/purity.hpp"

namespace intq::cli {
namespace {

// Thrown for bad flag values that CLI11 cannot validate on its own.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  double lo = -4.0;
  double hi = 4.0;
  std::size_t points = kDefaultGridPoints;
  uint64_t seed = 0;
  std::string out;
  std::string dims = EncoderDims{}.to_string();
  int samples = 128;
  std::string function;
  int layers = 1;
  int held_out = 32;
  int threads = 1;
  std::string save_weights;
  std::string load_weights;
  std::string op;
  std::vector<std::string> sizes;
  int reps = bench::kMinRepetitions;
};

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

void check_interval(double lo, double hi, std::size_t points) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    throw UsageError(fmt("bad interval [%g, %g]: need finite lo < hi", lo, hi));
  }
  if (points < 2) throw UsageError("--points must be at least 2");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  return f;
}

// ---------------------------------------------------------------------------

struct ApproxRow {
  std::string method;
  bool integer_only;
  ErrorReport report;
};

int cmd_approx_error(const RunConfig& c, bool interval_given, std::ostream& out) {
  const std::string which = c.function.empty() ? "gelu" : c.function;
  std::vector<ApproxRow> rows;
  bool ok = true;
  if (which == "gelu") {
    check_interval(c.lo, c.hi, c.points);
    auto row = [&](const char* name, bool int_only, const std::function<double(double)>& f) {
      rows.push_back({name, int_only, error_report(f, oracle_gelu, c.lo, c.hi, c.points)});
    };
    row("sigmoid-GELU", false, sigmoid_gelu);
    row("h-GELU", true, h_gelu_real);
    row("i-GELU", true, i_gelu_real);
    row("h-GELU (int8 kernel)", true, quantized_h_gelu(8, 4.0));
    row("i-GELU (int8 kernel)", true, quantized_i_gelu(8, 4.0));
    row("i-GELU (int32 kernel)", true, quantized_i_gelu(32, 4.0));
    // i-exp is always reported on its own range.
    rows.push_back({"i-exp vs exp [-10, 0]", true,
                    error_report(i_exp_real, oracle_exp, -10.0, 0.0, c.points)});
    ok = rows[2].report.l2 < rows[0].report.l2 && rows[0].report.l2 < rows[1].report.l2;
  } else if (which == "exp") {
    const double lo = interval_given ? c.lo : -10.0;
    const double hi = interval_given ? c.hi : 0.0;
    check_interval(lo, hi, c.points);
    if (hi > 0.0) throw UsageError("i-exp is defined for x <= 0; got hi > 0");
    rows.push_back({"i-exp", true, error_report(i_exp_real, oracle_exp, lo, hi, c.points)});
    for (double s : {1e-2, 1e-3, 1e-4}) {
      rows.push_back({fmt("i-exp (kernel, S=%g)", s), true,
                      error_report(quantized_i_exp(s), oracle_exp, lo, hi, c.points)});
    }
  } else {
    throw UsageError("--function must be 'gelu' or 'exp' for approx-error, got '" + which + "'");
  }

  out << fmt("%-24s %-9s %-12s %-12s %s\n", "method", "int-only", "L2(rms)", "Linf", "argmax");
  for (const auto& r : rows) {
    out << fmt("%-24s %-9s %-12.6f %-12.6f %.4f\n", r.method.c_str(), r.integer_only ? "yes" : "no",
               r.report.l2, r.report.linf, r.report.argmax);
  }
  if (which == "gelu") {
    out << "ordering i-GELU < sigmoid-GELU < h-GELU (L2): " << (ok ? "holds" : "VIOLATED") << "\n";
  }
  if (!c.out.empty()) {
    auto f = open_out(c.out);
    f << "method,int_only,l2,linf,argmax,lo,hi,points\n";
    for (const auto& r : rows) {
      f << r.method << ',' << (r.integer_only ? 1 : 0)
        << fmt(",%.17g,%.17g,%.17g,%.17g,%.17g,%zu\n", r.report.l2, r.report.linf, r.report.argmax,
               r.report.lo, r.report.hi, r.report.n_points);
    }
  }
  return ok ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string p;
  while (std::getline(ss, p, ',')) {
    if (!p.empty()) parts.push_back(p);
  }
  return parts;
}

int cmd_curves(const RunConfig& c, std::ostream& out) {
  check_interval(c.lo, c.hi, c.points);
  const auto names = split(c.function.empty() ? "relu,gelu,h_gelu,i_gelu" : c.function);
  if (names.empty()) throw UsageError("--function lists no functions");
  std::vector<NamedFunction> fns;
  for (const auto& n : names) {
    auto f = named_function(n);
    if (!f) throw UsageError("unknown function '" + n + "'");
    fns.push_back(std::move(*f));
  }
  const auto table = curve_dump(fns, c.lo, c.hi, c.points);
  if (c.out.empty()) {
    write_csv(out, table);
  } else {
    auto f = open_out(c.out);
    write_csv(f, table);
    out << "wrote " << table.rows.size() << " rows x " << table.header.size() << " columns to "
        << c.out << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_isqrt_verify(const RunConfig& c, int random_samples, std::ostream& out) {
  long long failures = 0, squares = 0, squares_exact = 0, checked = 0;
  int max_iter = 0;
  int64_t max_iter_at = 0;
  auto check = [&](int64_t n) {
    const auto r = kernels::i_sqrt_counted(n);
    ++checked;
    if (!(r.root * r.root <= n && (r.root + 1) * (r.root + 1) > n)) ++failures;
    if (r.iterations > kernels::kSqrtIterationCap) ++failures;
    if (r.iterations > max_iter) {
      max_iter = r.iterations;
      max_iter_at = n;
    }
  };
  constexpr int64_t kExhaustive = int64_t{1} << 20;
  for (int64_t n = 0; n <= kExhaustive; ++n) check(n);
  for (int64_t k = 0; k * k <= kExhaustive; ++k) {
    ++squares;
    if (kernels::i_sqrt(static_cast<int32_t>(k * k)) == k) ++squares_exact;
  }
  const int exhaustive_max = max_iter;
  std::mt19937_64 rng(c.seed);
  std::uniform_int_distribution<int32_t> u(0, INT32_MAX);
  for (int i = 0; i < random_samples; ++i) check(u(rng));
  check(INT32_MAX);

  out << "checked: " << checked << " (exhaustive [0, 2^20] plus " << random_samples
      << " random 32-bit samples, seed " << c.seed << ")\n";
  out << "correctness failures: " << failures << "\n";
  out << "perfect squares exact: " << squares_exact << " / " << squares << "\n";
  out << "max iterations (exhaustive range): " << exhaustive_max << "\n";
  out << "max iterations overall: " << max_iter << " (first at n = " << max_iter_at << ")\n";
  out << "iteration cap: " << kernels::kSqrtIterationCap
      << "; count includes the final update that triggers the stop test\n";
  return failures == 0 && squares_exact == squares ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------

int cmd_encoder_demo(const RunConfig& c, bool dims_given, std::ostream& out) {
  if (c.samples < 1) throw UsageError("--samples must be positive");
  if (c.layers < 1) throw UsageError("--layers must be positive");
  if (c.held_out < 1) throw UsageError("--held-out must be positive");
  if (c.threads < 1) throw UsageError("--threads must be positive");
  EncoderDims dims;
  try {
    dims = EncoderDims::parse(c.dims);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }

  std::vector<EncoderWeights> weights;
  std::vector<LayerParams> params;
  if (!c.load_weights.empty()) {
    weights = load_weights(c.load_weights);
    if (dims_given && weights.front().dims != dims) {
      throw UsageError("--dims " + dims.to_string() + " does not match the weight file (" +
                       weights.front().dims.to_string() + ")");
    }
    dims = weights.front().dims;
    for (const auto& w : weights) params.push_back(w.dequantized());
  } else {
    auto m = build_demo_model(dims, c.layers, c.samples, c.seed);
    weights = std::move(m.weights);
    params = std::move(m.params);
  }
  const auto enc = IntegerEncoder::compile(weights);
  if (!c.save_weights.empty()) save_weights(c.save_weights, weights);

  const auto inputs = random_inputs(dims, c.held_out, c.seed + 0x9e3779b9ULL);
  double worst = 0.0, mean = 0.0, max_abs = 0.0;
  std::size_t float_ops = 0;
  const std::vector<std::size_t> shape{static_cast<std::size_t>(dims.seq),
                                       static_cast<std::size_t>(dims.hidden)};
  for (const auto& x : inputs) {
    auto ref = x;
    for (const auto& p : params) ref = fp32_reference_layer(ref, p);
    const auto q = quantize(x, enc.input_params(), shape);
    QTensor y = [&] {
      purity::Probe probe;
      auto r = enc.run(q, c.threads);
      float_ops += probe.count();
      return r;
    }();
    const auto got = dequantize(y);
    const double r = relative_l2(got, ref);
    worst = std::max(worst, r);
    mean += r / static_cast<double>(inputs.size());
    for (std::size_t i = 0; i < got.size(); ++i) max_abs = std::max(max_abs, std::fabs(got[i] - ref[i]));
  }

  constexpr double kBudget = 5e-2;
  out << "dims " << dims.to_string() << ", layers " << weights.size() << ", calibration samples "
      << (c.load_weights.empty() ? std::to_string(c.samples) : std::string("(loaded)"))
      << ", held-out inputs " << inputs.size() << ", seed " << c.seed << "\n";
  out << fmt("relative L2: mean %.6f, max %.6f (budget %.2g)\n", mean, worst, kBudget);
  out << fmt("max abs deviation: %.6f\n", max_abs);
  out << "float ops in the integer path: " << float_ops << "\n";
  const bool ok = float_ops == 0 && worst <= kBudget;
  out << "result: " << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------

int cmd_fit(std::ostream& out) {
  const FitInterval exp_iv{-std::numbers::ln2, 0.0, true, false};
  const auto e = lsq_fit_quadratic(oracle_exp, exp_iv);
  const auto erf_plain = lsq_fit_quadratic(oracle_erf, {0.0, -GeluConstants::b});
  const auto erf_gelu = fit_erf_for_gelu();

  auto rel = [](double got, double want) { return std::fabs(got / want - 1.0); };
  out << fmt("%-34s %10s %10s %10s\n", "fit", "a", "b", "c");
  out << fmt("%-34s %10.5f %10.5f %10.5f\n", "exp on (-ln2, 0]", e.a, e.b, e.c);
  out << fmt("%-34s %10.5f %10.5f %10.5f\n", "  reference constants", ExpConstants::a,
             ExpConstants::b, ExpConstants::c);
  out << fmt("%-34s %10.5f %10.5f %10.5f\n", "erf on [0, 1.769], unconstrained", erf_plain.a,
             erf_plain.b, erf_plain.c);
  out << fmt("%-34s %10.5f %10.5f %10.5f\n", "erf via GELU objective, c = 1", erf_gelu.a,
             erf_gelu.b, erf_gelu.c);
  out << fmt("%-34s %10.5f %10.5f %10.5f\n", "  reference constants", GeluConstants::a,
             GeluConstants::b, GeluConstants::c);

  const double exp_worst = std::max({rel(e.a, ExpConstants::a), rel(e.b, ExpConstants::b),
                                     rel(e.c, ExpConstants::c)});
  const double erf_b = rel(erf_gelu.b, GeluConstants::b);
  out << fmt("exp coefficients: max relative deviation %.4f (limit 0.02)\n", exp_worst);
  out << fmt("erf b: relative deviation %.4f (limit 0.02)\n", erf_b);
  const bool ok = exp_worst <= 0.02 && erf_b <= 0.02;
  out << "result: " << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------

int cmd_microbench(const RunConfig& c, std::ostream& out) {
  std::vector<std::string> ops;
  if (c.op.empty() || c.op == "all") {
    ops = bench::known_ops();
  } else {
    ops = split(c.op);
  }
  std::vector<bench::BenchRow> rows;
  try {
    for (const auto& op : ops) {
      const auto sizes = c.sizes.empty() ? bench::default_sizes(op) : c.sizes;
      auto r = bench::microbench(op, sizes, c.reps, c.seed);
      rows.insert(rows.end(), r.begin(), r.end());
    }
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  out << fmt("%-10s %-12s %16s %16s %8s\n", "op", "size", "int median ns", "float median ns",
             "speedup");
  for (const auto& r : rows) {
    out << fmt("%-10s %-12s %16.0f %16.0f %8.3f\n", r.op.c_str(), r.size.c_str(), r.int_median_ns,
               r.float_median_ns, r.speedup);
  }
  if (!c.out.empty()) {
    auto f = open_out(c.out);
    bench::write_csv(f, rows);
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Integer-only transformer kernels: accuracy, curves, verification and demos",
               "intq-cli"};
  app.require_subcommand(1);
  RunConfig c;
  int isqrt_samples = 1000000;

  auto interval = [&](CLI::App* s) {
    s->add_option("--lo", c.lo, "Interval start");
    s->add_option("--hi", c.hi, "Interval end");
    s->add_option("--points", c.points, "Grid points (>= 2)");
  };
  auto* approx = app.add_subcommand("approx-error", "Error table of GELU / exp approximations");
  interval(approx);
  approx->add_option("--function", c.function, "gelu (default) or exp");
  approx->add_option("--out", c.out, "CSV output path");

  auto* curves = app.add_subcommand("curves", "Dump function curves as CSV");
  interval(curves);
  curves->add_option("--function", c.function,
                     "Comma-separated names (default relu,gelu,h_gelu,i_gelu)");
  curves->add_option("--out", c.out, "CSV output path (default: standard output)");

  auto* isqrt = app.add_subcommand("isqrt-verify", "Check the integer square root");
  isqrt->add_option("--seed", c.seed, "Random seed");
  isqrt->add_option("--samples", isqrt_samples, "Random 32-bit samples")->check(CLI::NonNegativeNumber);

  auto* demo = app.add_subcommand("encoder-demo", "Calibrate and run the integer encoder");
  demo->add_option("--dims", c.dims, "TxHxhxF");
  demo->add_option("--samples", c.samples, "Calibration samples");
  demo->add_option("--seed", c.seed, "Random seed");
  demo->add_option("--layers", c.layers, "Number of layers");
  demo->add_option("--held-out", c.held_out, "Held-out evaluation inputs");
  demo->add_option("--threads", c.threads, "GEMM threads");
  demo->add_option("--save-weights", c.save_weights, "Write the quantized weights here");
  demo->add_option("--load-weights", c.load_weights, "Read quantized weights instead of building");

  auto* fit = app.add_subcommand("fit", "Least-squares fits of the polynomial coefficients");

  auto* mb = app.add_subcommand("microbench", "Integer vs float kernel timings");
  mb->add_option("--op", c.op, "gemm, gelu, softmax, layernorm, exp or all");
  mb->add_option("--sizes", c.sizes, "Sizes, e.g. 128x768x768")->delimiter(',');
  mb->add_option("--reps", c.reps, "Repetitions (>= 30)");
  mb->add_option("--seed", c.seed, "Random seed");
  mb->add_option("--out", c.out, "CSV output path");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    err << "run with --help for usage\n";
    return kExitUsage;
  }

  try {
    if (approx->parsed()) {
      return cmd_approx_error(c, approx->count("--lo") + approx->count("--hi") > 0, out);
    }
    if (curves->parsed()) return cmd_curves(c, out);
    if (isqrt->parsed()) return cmd_isqrt_verify(c, isqrt_samples, out);
    if (demo->parsed()) return cmd_encoder_demo(c, demo->count("--dims") > 0, out);
    if (fit->parsed()) return cmd_fit(out);
    if (mb->parsed()) return cmd_microbench(c, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
  return kExitUsage;
}

}  // namespace intq::cli
