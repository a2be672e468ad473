// Command-line driver: one subcommand per experiment, CSV/JSON reports.

#include <chrono>
#include <cmath>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cfdev/cf_core.hpp"
#include "cfdev/constants.hpp"
#include "cfdev/deviation.hpp"
#include "cfdev/errors.hpp"
#include "cfdev/pressure.hpp"
#include "cfdev/rates.hpp"
#include "cfdev/report.hpp"
#include "cfdev/verification.hpp"

namespace {

using namespace cfdev;

constexpr int kExitError = 1;
constexpr int kExitCheckFailed = 2;
constexpr int kExitPartial = 3;

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string current;
  for (const char c : text) {
    if (c == sep) {
      parts.push_back(current);
      current.clear();
    } else {
      current += c;
    }
  }
  parts.push_back(current);
  return parts;
}

long double parse_real(const std::string& text) {
  try {
    std::size_t used = 0;
    const long double v = std::stold(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::logic_error&) {
    throw InvalidInput("not a number: '" + text + "'");
  }
}

// "0.6,0.8,1" or "start:stop:step" (inclusive).
std::vector<long double> parse_grid(const std::string& text) {
  const auto range = split(text, ':');
  if (range.size() == 3) {
    const long double start = parse_real(range[0]);
    const long double stop = parse_real(range[1]);
    const long double step = parse_real(range[2]);
    if (!(step > 0) || stop < start) throw InvalidInput("bad grid '" + text + "'");
    const long count = std::lround(std::floor((stop - start) / step + 1e-9L)) + 1;
    std::vector<long double> out;
    for (long i = 0; i < count; ++i) out.push_back(start + i * step);
    return out;
  }
  if (range.size() != 1) throw InvalidInput("bad grid '" + text + "'");
  std::vector<long double> out;
  for (const auto& part : split(text, ',')) out.push_back(parse_real(part));
  return out;
}

// "2..8" or "1,2,5".
std::vector<unsigned> parse_levels(const std::string& text) {
  std::vector<unsigned> out;
  const auto dots = text.find("..");
  const auto to_level = [&](const std::string& s) {
    const long double v = parse_real(s);
    if (v < 1 || v != std::floor(v)) throw InvalidInput("bad level '" + s + "'");
    return static_cast<unsigned>(v);
  };
  if (dots != std::string::npos) {
    const unsigned lo = to_level(text.substr(0, dots));
    const unsigned hi = to_level(text.substr(dots + 2));
    if (hi < lo) throw InvalidInput("bad level range '" + text + "'");
    for (unsigned n = lo; n <= hi; ++n) out.push_back(n);
    return out;
  }
  for (const auto& part : split(text, ',')) out.push_back(to_level(part));
  return out;
}

PrecisionReal parse_point(const std::string& text, const CounterRng& rng) {
  if (text == "golden") return golden_point();
  if (text == "random") return lebesgue_point(rng);
  const Rational x = parse_rational(text);
  if (sgn(x) < 0 || x >= 1) throw InvalidInput("point must lie in [0, 1): '" + text + "'");
  return PrecisionReal::exact(x);
}

struct Globals {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::uint64_t budget = kDefaultBudget;
  unsigned precision_bits = kWorkingPrecision;
  std::string out;
  std::string format = "csv";
};

// Records every option of a subcommand (given or default) into the config.
ExperimentConfig resolve(const CLI::App& sub, const Globals& g) {
  ExperimentConfig cfg;
  cfg.command = sub.get_name();
  cfg.seed = g.seed;
  cfg.threads = g.threads;
  cfg.budget = g.budget;
  cfg.precision_bits = g.precision_bits;
  cfg.out = resolve_out_dir(g.out);
  cfg.format = g.format;
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_name() == "--help") continue;
    std::string key = opt->get_single_name();
    std::string value;
    if (opt->get_expected_min() == 0) {
      value = opt->count() > 0 ? "true" : "false";
    } else if (opt->count() > 0) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
    } else {
      value = opt->get_default_str();
    }
    cfg.parameters[key] = value;
  }
  return cfg;
}

PressureConfig pressure_config(const Globals& g, unsigned n, unsigned long A,
                               const std::string& method, unsigned cells) {
  PressureConfig c;
  c.level = n;
  c.truncation = A;
  c.method = parse_pressure_method(method);
  c.cells = cells;
  c.threads = g.threads;
  c.budget = g.budget;
  c.precision_bits = g.precision_bits;
  return c;
}

void print_written(const std::vector<std::string>& paths) {
  for (const auto& p : paths) std::cerr << "wrote " << p << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Large-deviation laboratory for continued-fraction convergents"};
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
  app.set_config("--config", "", "Config file (key = value lines; [command] sections); flags override it");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random stream")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--budget", g.budget, "Node budget for enumerations and searches")->capture_default_str();
  app.add_option("--precision-bits", g.precision_bits, "Working precision of logarithms")
      ->capture_default_str()
      ->check(CLI::Range(53u, 65536u));
  app.add_option("--out", g.out, "Output directory (default: $CFDEV_OUT_DIR, else stdout)");
  app.add_option("--format", g.format, "csv, json or both")
      ->capture_default_str()
      ->check(CLI::IsMember({"csv", "json", "both"}));

  // expand
  auto* expand = app.add_subcommand("expand", "Partial quotients and convergents of a point");
  std::string rational, point_name;
  std::size_t terms = 20;
  bool allow_deep = false;
  auto* rational_opt = expand->add_option("--rational", rational, "Exact point p/q in [0, 1)");
  expand->add_option("--x", point_name, "golden or random (Lebesgue point from --seed)")
      ->excludes(rational_opt);
  expand->add_option("--terms", terms, "Digits to certify for irrational points")->capture_default_str();
  expand->add_flag("--allow-deep", allow_deep, "Permit more than 10^4 digits");

  // pressure
  auto* pressure = app.add_subcommand("pressure", "Finite-level pressure brackets over a theta grid");
  std::string theta_grid = "0.6:2:0.1";
  unsigned level = 10;
  unsigned long truncation = 60;
  std::string pmethod = "auto";
  unsigned cells = 4096;
  bool record_timing = false;
  pressure->add_option("--theta", theta_grid, "Grid: a,b,c or start:stop:step")->capture_default_str();
  pressure->add_option("--n", level, "Level")->capture_default_str();
  pressure->add_option("--A", truncation, "Digit truncation")->capture_default_str();
  pressure->add_option("--method", pmethod, "auto, enumerate or transfer")->capture_default_str();
  pressure->add_option("--cells", cells, "Envelope cells of the transfer route")->capture_default_str();
  pressure->add_flag("--record-timing", record_timing, "Fill the wallclock_ms column (not reproducible)");

  // tau
  auto* tau = app.add_subcommand("tau", "Spectrum tau(gamma) from the pressure estimates");
  std::string gamma_grid = "1.0:3.6:0.2";
  tau->add_option("--gamma", gamma_grid, "Grid of gamma values")->capture_default_str();
  tau->add_option("--n", level, "Level")->capture_default_str();
  tau->add_option("--A", truncation, "Digit truncation")->capture_default_str();
  tau->add_option("--cells", cells, "Envelope cells of the transfer route")->capture_default_str();

  // rates
  auto* rates = app.add_subcommand("rates", "Rate functions theta_1 and theta_2");
  std::string eps_grid = "0.1,0.2,0.4";
  std::string side_name = "upper";
  std::string rmethod = "both";
  rates->add_option("--eps", eps_grid, "Grid of epsilon values")->capture_default_str();
  rates->add_option("--side", side_name, "upper, lower or both")->capture_default_str();
  rates->add_option("--method", rmethod, "direct, via-tau or both")
      ->capture_default_str()
      ->check(CLI::IsMember({"direct", "via-tau", "both"}));
  rates->add_option("--n", level, "Level of the pressure table")->capture_default_str();
  rates->add_option("--A", truncation, "Digit truncation")->capture_default_str();
  rates->add_option("--cells", cells, "Envelope cells of the transfer route")->capture_default_str();

  // deviate
  auto* deviate = app.add_subcommand("deviate", "Measures of the deviation sets of log q_n / n");
  std::string levels = "1";
  std::string eps_text = "0.1";
  std::string dside = "upper";
  std::string dmethod = "exact";
  std::uint64_t samples = 10000;
  bool fit = false, markov = false;
  deviate->add_option("--n", levels, "Levels: 2..8 or 1,2,5")->capture_default_str();
  deviate->add_option("--eps", eps_text, "Epsilon")->capture_default_str();
  deviate->add_option("--side", dside, "upper, lower or two-sided")->capture_default_str();
  deviate->add_option("--method", dmethod, "exact, certified, mc or auto")->capture_default_str();
  deviate->add_option("--samples", samples, "Monte Carlo samples")->capture_default_str();
  deviate->add_flag("--fit", fit, "Fit the decay line and envelopes (needs 3+ levels)");
  deviate->add_flag("--markov", markov, "Fill bound_upper with the Markov bound");

  // orbit
  auto* orbit = app.add_subcommand("orbit", "Lyapunov, approximation and cylinder rates along an orbit");
  std::string orbit_x = "golden";
  std::size_t orbit_n = 50;
  std::size_t orbit_samples = 1;
  orbit->add_option("--x", orbit_x, "golden, random or p/q")->capture_default_str();
  orbit->add_option("--n", orbit_n, "Level")->capture_default_str();
  orbit->add_option("--samples", orbit_samples, "Random points (with --x random)")->capture_default_str();

  // verify
  auto* verify = app.add_subcommand("verify", "Run the verification suite");
  std::string vlevel = "quick";
  verify->add_option("--level", vlevel, "quick or full")
      ->capture_default_str()
      ->check(CLI::IsMember({"quick", "full"}));

  CLI11_PARSE(app, argc, argv);

  try {
    const CounterRng root(g.seed);

    if (*expand) {
      const ExperimentConfig cfg = resolve(*expand, g);
      PartialQuotients digits;
      if (!rational.empty()) {
        const Rational x = parse_rational(rational);
        digits = expand_rational(x.get_num(), x.get_den(), kDefaultMaxTerms, allow_deep);
      } else {
        if (point_name.empty()) throw InvalidInput("expand needs --rational or --x");
        digits = expand_real(parse_point(point_name, root.named("expand")), terms, allow_deep);
      }
      if (digits.empty()) throw InvalidInput("the point 0 has no partial quotients");
      print_written(emit_report(expansion_report(digits), cfg, std::cout));
      return 0;
    }

    if (*pressure) {
      const ExperimentConfig cfg = resolve(*pressure, g);
      const PressureConfig pc = pressure_config(g, level, truncation, pmethod, cells);
      std::vector<PressureEstimate> estimates;
      std::vector<double> timings;
      for (const long double theta : parse_grid(theta_grid)) {
        const auto start = std::chrono::steady_clock::now();
        estimates.push_back(pressure_partial(theta, pc));
        timings.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                              .count());
      }
      print_written(emit_report(pressure_report(estimates, record_timing ? &timings : nullptr), cfg,
                                std::cout));
      return 0;
    }

    if (*tau) {
      const ExperimentConfig cfg = resolve(*tau, g);
      const PressureTable table(pressure_config(g, level, truncation, "auto", cells));
      std::vector<SpectrumValue> values;
      for (const long double gamma : parse_grid(gamma_grid)) values.push_back(tau_spectrum(gamma, table));
      print_written(emit_report(tau_report(values, table.config()), cfg, std::cout));
      return 0;
    }

    if (*rates) {
      const ExperimentConfig cfg = resolve(*rates, g);
      const PressureTable table(pressure_config(g, level, truncation, "auto", cells));
      std::vector<Side> sides;
      if (side_name == "both") {
        sides = {Side::upper, Side::lower};
      } else {
        sides = {parse_side(side_name)};
      }
      std::vector<RateResult> results;
      for (const Side side : sides) {
        for (const long double eps : parse_grid(eps_grid)) {
          if (rmethod != "via-tau") results.push_back(side == Side::upper ? theta1(eps, table) : theta2(eps, table));
          if (rmethod != "direct") results.push_back(theta_via_tau(eps, side, table));
        }
      }
      print_written(emit_report(rates_report(results), cfg, std::cout));
      return 0;
    }

    if (*deviate) {
      const ExperimentConfig cfg = resolve(*deviate, g);
      const long double eps = parse_real(eps_text);
      const Side side = parse_side(dside);
      DeviationConfig dc;
      dc.method = parse_measure_method(dmethod);
      dc.exact_budget = g.budget;
      dc.certified_budget = g.budget;
      dc.samples = samples;
      dc.seed = g.seed;
      dc.threads = g.threads;
      dc.markov_bounds = markov;
      dc.pressure = pressure_config(g, 1, 40, "auto", 1024);
      const std::vector<unsigned> ns = parse_levels(levels);
      std::vector<DeviationMeasurement> points;
      bool partial = false;
      for (const unsigned n : ns) {
        try {
          points.push_back(measure(n, eps, side, dc));
        } catch (const BudgetExceeded& e) {
          partial = true;
          std::cerr << "budget exceeded at n=" << n << ": " << e.what() << "\n";
          points.push_back(partial_measurement(n, eps, side, dc.method, e));
        }
      }
      Report report;
      if (fit && !partial) {
        DecaySeries series;
        series.points = points;
        for (const auto& m : points) {
          if (!(m.estimate > 0)) series.excluded.push_back(m.n);
        }
        series.fit = fit_decay(points);
        try {
          series.rate_lower_bound =
              lower_bound_constant(eps, side == Side::lower ? Side::lower : Side::upper).bound;
        } catch (const OutOfDomain&) {
          series.rate_lower_bound = std::nan("");
        }
        std::optional<RateResult> rate;
        if (side != Side::two_sided) {
          const PressureTable table(pressure_config(g, 10, 60, "auto", 4096));
          try {
            rate = side == Side::upper ? theta1(eps, table) : theta2(eps, table);
          } catch (const Error& e) {
            std::cerr << "rate function unavailable: " << e.what() << "\n";
          }
        }
        report = decay_report(series, fit_envelope_constants(points), rate);
      } else {
        report = deviation_report(points);
      }
      print_written(emit_report(report, cfg, std::cout));
      return partial ? kExitPartial : 0;
    }

    if (*orbit) {
      const ExperimentConfig cfg = resolve(*orbit, g);
      std::vector<std::pair<std::string, OrbitStatistics>> rows;
      if (orbit_x == "random") {
        const CounterRng rng = root.named("orbit");
        for (std::size_t i = 0; i < orbit_samples; ++i) {
          rows.emplace_back("random#" + std::to_string(i),
                            orbit_statistics(lebesgue_point(rng.substream(i)), orbit_n, g.precision_bits));
        }
      } else {
        rows.emplace_back(orbit_x, orbit_statistics(parse_point(orbit_x, root), orbit_n, g.precision_bits));
      }
      print_written(emit_report(orbit_report(rows), cfg, std::cout));
      return 0;
    }

    if (*verify) {
      const ExperimentConfig cfg = resolve(*verify, g);
      VerifyOptions vo;
      vo.level = parse_verify_level(vlevel);
      vo.seed = g.seed;
      vo.threads = g.threads;
      vo.precision_bits = g.precision_bits;
      vo.on_result = [](const CheckResult& r) {
        std::cerr << "[" << to_string(r.status) << "] " << r.id << " " << r.name << ": " << r.measured
                  << "\n";
      };
      const VerificationReport report = run_verification(vo);
      print_written(emit_report(verification_report(report, vo), cfg, std::cout));
      return report.ok() ? 0 : kExitCheckFailed;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return 0;
}
