#include "cfdev/report.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "cfdev/constants.hpp"
#include "cfdev/errors.hpp"

namespace cfdev {

namespace {

void require_rows(const Report& report) {
  if (report.table.rows.empty()) throw InvalidInput("report '" + report.name + "' has no rows");
}

std::string flag(bool value) { return value ? "true" : "false"; }

}  // namespace

std::string format_number(long double value) {
  return format_real(static_cast<double>(value));
}

std::map<std::string, std::string> ExperimentConfig::settings() const {
  std::map<std::string, std::string> all = parameters;
  all["command"] = command;
  all["seed"] = std::to_string(seed);
  all["threads"] = std::to_string(threads);
  all["budget"] = std::to_string(budget);
  all["precision_bits"] = std::to_string(precision_bits);
  return all;
}

std::string ExperimentConfig::describe() const {
  std::string out;
  for (const auto& [key, value] : settings()) {
    if (!out.empty()) out += ' ';
    out += key + "=" + value;
  }
  return out;
}

std::string resolve_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv(kOutDirVariable)) return env;
  return "";
}

CsvTable stamped_table(const Report& report, const ExperimentConfig& config) {
  require_rows(report);
  CsvTable table = report.table;
  table.comments.insert(table.comments.begin(),
                        {std::string(kToolName) + " " + kToolVersion, "config: " + config.describe()});
  return table;
}

std::string render_csv(const Report& report, const ExperimentConfig& config) {
  std::ostringstream out;
  write_csv(out, stamped_table(report, config));
  return out.str();
}

std::string render_json(const Report& report, const ExperimentConfig& config) {
  require_rows(report);
  nlohmann::ordered_json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["tool"] = kToolName;
  doc["version"] = kToolVersion;
  doc["report"] = report.name;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [key, value] : config.settings()) cfg[key] = value;
  doc["config"] = cfg;
  doc["notes"] = report.table.comments;
  doc["columns"] = report.table.header;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : report.table.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < report.table.header.size(); ++i) obj[report.table.header[i]] = row[i];
    rows.push_back(std::move(obj));
  }
  doc["rows"] = std::move(rows);
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
  for (const auto& [key, value] : report.summary) summary[key] = value;
  doc["summary"] = summary;
  return doc.dump(2) + "\n";
}

std::vector<std::string> emit_report(const Report& report, const ExperimentConfig& config,
                                     std::ostream& fallback) {
  require_rows(report);
  if (config.format != "csv" && config.format != "json" && config.format != "both") {
    throw InvalidInput("unknown format '" + config.format + "'");
  }
  if (config.out.empty()) {
    fallback << (config.format == "json" ? render_json(report, config) : render_csv(report, config));
    return {};
  }
  std::error_code ec;
  std::filesystem::create_directories(config.out, ec);
  if (ec) throw Error("cannot create output directory " + config.out + ": " + ec.message());
  std::vector<std::string> written;
  const auto write = [&](const std::string& ext, const std::string& text) {
    const std::string path = (std::filesystem::path(config.out) / (report.name + ext)).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << text;
    if (!out) throw Error("write failed for " + path);
    written.push_back(path);
  };
  if (config.format != "json") write(".csv", render_csv(report, config));
  if (config.format != "csv") write(".json", render_json(report, config));
  return written;
}

Report expansion_report(const PartialQuotients& digits) {
  Report r;
  r.name = "expand";
  r.table.comments.push_back("digits: " + digits.to_string());
  r.table.header = {"k", "digit", "p", "q"};
  for (const Convergent& c : convergents(digits)) {
    r.table.rows.push_back({std::to_string(c.index), digits[c.index - 1].get_str(), c.p.get_str(),
                            c.q.get_str()});
  }
  r.summary.emplace_back("digits", digits.to_string());
  r.summary.emplace_back("length", std::to_string(digits.size()));
  return r;
}

Report pressure_report(const std::vector<PressureEstimate>& estimates,
                       const std::vector<double>* wallclock_ms) {
  Report r;
  r.name = "pressure";
  r.table.comments.push_back("lower = log(E_n lower)/n, upper = log(S_n upper)/n; central = midpoint of log(E_n)/n");
  r.table.header = {"theta", "n", "A", "method", "lower", "upper", "central", "sum_lower",
                    "sum_upper", "expectation_lower", "expectation_upper", "wallclock_ms"};
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const PressureEstimate& e = estimates[i];
    r.table.rows.push_back({format_number(e.theta), std::to_string(e.level_n),
                            std::to_string(e.truncation_A), to_string(e.method),
                            format_number(e.lower), format_number(e.upper),
                            format_number(e.central()), format_number(e.sum.lower),
                            format_number(e.sum.upper), format_number(e.expectation.lower),
                            format_number(e.expectation.upper),
                            wallclock_ms ? format_real((*wallclock_ms)[i]) : ""});
  }
  return r;
}

Report tau_report(const std::vector<SpectrumValue>& values, const PressureConfig& config) {
  Report r;
  r.name = "tau";
  r.table.header = {"gamma", "tau", "minimizer_theta", "n", "A"};
  for (const SpectrumValue& v : values) {
    r.table.rows.push_back({format_number(v.gamma), format_number(v.tau),
                            format_number(v.minimizer_theta), std::to_string(config.level),
                            std::to_string(config.truncation)});
  }
  r.summary.emplace_back("levy_constant", constants().levy_decimal);
  return r;
}

Report rates_report(const std::vector<RateResult>& results) {
  Report r;
  r.name = "rates";
  r.table.header = {"epsilon", "side", "method", "value", "minimizer_t", "lower_bound",
                    "b_eps_integer", "boundary_hit", "in_range"};
  for (const RateResult& x : results) {
    std::string bound, integer;
    try {
      const LowerBoundConstant c = lower_bound_constant(x.epsilon, x.side);
      bound = format_number(c.bound);
      integer = c.integer_constant.get_str();
    } catch (const OutOfDomain&) {
    }
    r.table.rows.push_back({format_number(x.epsilon), to_string(x.side), to_string(x.method),
                            format_number(x.value), format_number(x.minimizer_t), bound, integer,
                            flag(x.boundary_hit), flag(x.in_range)});
  }
  return r;
}

namespace {

std::vector<std::string> deviation_row(const DeviationMeasurement& m) {
  std::string num, den, decimal;
  if (m.exact_value) {
    num = m.exact_value->get_num().get_str();
    den = m.exact_value->get_den().get_str();
    decimal = format_number(to_real(*m.exact_value));
  }
  return {std::to_string(m.n),
          format_number(m.epsilon),
          to_string(m.side),
          to_string(m.method),
          m.complete ? "complete" : "partial",
          num,
          den,
          decimal,
          format_number(m.estimate),
          format_number(m.ci_lower),
          format_number(m.ci_upper),
          format_number(m.rate()),
          format_number(m.bound_lower),
          format_number(m.bound_upper),
          m.constant.get_str(),
          std::to_string(m.nodes),
          std::to_string(m.samples),
          std::to_string(m.hits)};
}

const std::vector<std::string> kDeviationHeader = {
    "n",        "epsilon", "side",        "method",      "status", "value_num",
    "value_den", "value_decimal_lossy", "estimate", "ci_lo", "ci_hi", "rate",
    "bound_lower", "bound_upper", "constant", "nodes", "samples", "hits"};

}  // namespace

Report deviation_report(const std::vector<DeviationMeasurement>& measurements) {
  Report r;
  r.name = "deviate";
  r.table.comments.push_back("value_num/value_den exact; value_decimal_lossy rounded for reading only");
  r.table.header = kDeviationHeader;
  for (const auto& m : measurements) r.table.rows.push_back(deviation_row(m));
  return r;
}

Report decay_report(const DecaySeries& series, const std::optional<EnvelopeFit>& envelopes,
                    const std::optional<RateResult>& rate) {
  Report r = deviation_report(series.points);
  r.name = "decay";
  const auto line = [](const DecayFit& f) {
    return "fit " + to_string(f.kind) + ": slope=" + format_number(f.slope) +
           " intercept=" + format_number(f.intercept) + " residual=" + format_number(f.residual) +
           " n=" + std::to_string(f.n_min) + ".." + std::to_string(f.n_max);
  };
  r.table.comments.push_back(line(series.fit));
  r.summary.emplace_back("slope", format_number(series.fit.slope));
  r.summary.emplace_back("intercept", format_number(series.fit.intercept));
  r.summary.emplace_back("residual", format_number(series.fit.residual));
  r.summary.emplace_back("sandwich_lower", format_number(series.rate_lower_bound));
  if (rate) r.summary.emplace_back("sandwich_upper", format_number(rate->value));
  std::string excluded;
  for (const unsigned n : series.excluded) excluded += (excluded.empty() ? "" : ",") + std::to_string(n);
  r.summary.emplace_back("excluded_n", excluded);
  if (envelopes) {
    r.table.comments.push_back(line(envelopes->upper));
    r.table.comments.push_back(line(envelopes->lower));
    r.summary.emplace_back("alpha", format_number(envelopes->alpha()));
    r.summary.emplace_back("beta", format_number(envelopes->beta()));
    r.summary.emplace_back("A", format_number(envelopes->A()));
    r.summary.emplace_back("B", format_number(envelopes->B()));
    bool all = true;
    for (const auto& m : series.points) all = all && (!(m.estimate > 0) || envelopes->holds(m));
    r.summary.emplace_back("envelopes_hold", flag(all));
  }
  return r;
}

Report orbit_report(const std::vector<std::pair<std::string, OrbitStatistics>>& rows) {
  Report r;
  r.name = "orbit";
  r.table.header = {"x",           "n",
                    "lyapunov",    "lyapunov_identity",
                    "identity_gap", "identity_exact",
                    "approx_rate", "cylinder_rate_lebesgue",
                    "cylinder_rate_gauss"};
  for (const auto& [label, s] : rows) {
    r.table.rows.push_back({label, std::to_string(s.n), format_number(s.lyapunov),
                            format_number(s.lyapunov_identity), format_number(s.identity_gap),
                            s.identity_exact ? flag(*s.identity_exact) : "",
                            format_number(s.approx_rate), format_number(s.cylinder_rate_lebesgue),
                            format_number(s.cylinder_rate_gauss)});
  }
  return r;
}

}  // namespace cfdev
