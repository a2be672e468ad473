#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cfdev/cf_core.hpp"
#include "cfdev/csv.hpp"
#include "cfdev/cylinders.hpp"
#include "cfdev/deviation.hpp"
#include "cfdev/pressure.hpp"
#include "cfdev/rates.hpp"

namespace cfdev {

inline constexpr const char* kToolName = "cfdev";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

/// Environment variable naming the output directory when --out is absent.
inline constexpr const char* kOutDirVariable = "CFDEV_OUT_DIR";

/// Resolved settings of one run. Command parameters keep the text the user
/// gave (or the default), sorted by key, so every report can echo them.
struct ExperimentConfig {
  std::string command;
  std::map<std::string, std::string> parameters;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::uint64_t budget = kDefaultBudget;
  unsigned precision_bits = kWorkingPrecision;
  std::string out;             // output directory; empty writes CSV to stdout
  std::string format = "csv";  // csv, json or both

  /// "command=... budget=... key=value ..." with keys in a fixed order.
  std::string describe() const;
  /// All settings as one sorted key-value map.
  std::map<std::string, std::string> settings() const;
};

/// --out if given, otherwise the CFDEV_OUT_DIR variable, otherwise empty.
std::string resolve_out_dir(const std::string& flag_value);

/// One output table plus scalar summary entries for the JSON form.
struct Report {
  std::string name;  // file stem
  CsvTable table;
  std::vector<std::pair<std::string, std::string>> summary;
};

/// Table with the version and config comment lines prepended.
CsvTable stamped_table(const Report& report, const ExperimentConfig& config);
std::string render_csv(const Report& report, const ExperimentConfig& config);
/// {"schema_version", "tool", "version", "report", "config", "columns", "rows", "summary"}.
std::string render_json(const Report& report, const ExperimentConfig& config);

/// Writes <out>/<name>.csv and/or .json, or the CSV to `fallback` when no
/// output directory is configured. Returns the paths written.
std::vector<std::string> emit_report(const Report& report, const ExperimentConfig& config,
                                     std::ostream& fallback);

/// Deterministic text for a real number ("inf", "-inf", "nan" included).
std::string format_number(long double value);

Report expansion_report(const PartialQuotients& digits);
/// wallclock_ms is filled only when timings are given.
Report pressure_report(const std::vector<PressureEstimate>& estimates,
                       const std::vector<double>* wallclock_ms = nullptr);
Report tau_report(const std::vector<SpectrumValue>& values, const PressureConfig& config);
Report rates_report(const std::vector<RateResult>& results);
Report deviation_report(const std::vector<DeviationMeasurement>& measurements);
/// Deviation rows followed by the regression and envelope lines.
Report decay_report(const DecaySeries& series, const std::optional<EnvelopeFit>& envelopes,
                    const std::optional<RateResult>& rate);
Report orbit_report(const std::vector<std::pair<std::string, OrbitStatistics>>& rows);

}  // namespace cfdev
