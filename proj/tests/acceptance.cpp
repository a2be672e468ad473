// Acceptance run: every verification check at the full level, one PASS/FAIL
// line per criterion. Criterion 12 additionally runs the command-line tool
// twice into separate directories and compares the written bytes.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "cfdev/verification.hpp"

using namespace cfdev;
namespace fs = std::filesystem;

namespace {

// Wall-clock limits in seconds; 0 means no limit.
constexpr double kLimits[kCheckCount] = {60, 60, 300, 1800, 600, 1, 1800, 300, 1800, 0, 600, 0};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Runs `cfdev verify --level quick` twice; returns an empty string on success.
std::string cli_determinism() {
  const fs::path root = fs::temp_directory_path() / "cfdev_acceptance";
  fs::remove_all(root);
  std::string first;
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = root / ("run" + std::to_string(run));
    const std::string cmd = std::string(CFDEV_EXECUTABLE) +
                            " --seed 12345 --threads 2 verify --level quick --format both --out " +
                            dir.string() + " > " + (root / "log").string() + " 2>&1";
    fs::create_directories(root);
    const int status = std::system(cmd.c_str());
    if (status != 0) return "cli run " + std::to_string(run) + " exited with " + std::to_string(status);
    const std::string bytes = slurp(dir / "verify.csv") + slurp(dir / "verify.json");
    if (bytes.empty()) return "cli run wrote nothing";
    if (run == 0) first = bytes;
    else if (bytes != first) return "cli outputs differ between runs";
  }
  fs::remove_all(root);
  return "";
}

}  // namespace

int main() {
  VerifyOptions options;
  options.level = VerifyLevel::full;
  options.seed = 12345;
  options.threads = 1;

  int failures = 0;
  auto last = std::chrono::steady_clock::now();
  options.on_result = [&](const CheckResult& r) {
    const auto now = std::chrono::steady_clock::now();
    const double seconds = std::chrono::duration<double>(now - last).count();
    last = now;
    bool pass = r.status == CheckStatus::pass;
    std::string detail = "measured=" + r.measured + " bound=" + r.bound + " tol=" + r.tolerance;
    if (!r.detail.empty()) detail += " | " + r.detail;
    const double limit = kLimits[r.id - 1];
    if (limit > 0 && seconds > limit) {
      pass = false;
      detail += " | runtime over limit";
    }
    if (r.id == 12 && pass) {
      const std::string cli = cli_determinism();
      if (!cli.empty()) {
        pass = false;
        detail += " | " + cli;
      } else {
        detail += " | cli verify output byte-identical";
      }
    }
    if (!pass) ++failures;
    char time_text[32];
    std::snprintf(time_text, sizeof time_text, "%.1fs", seconds);
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << r.id << " " << r.name << " ["
              << time_text << "] " << detail << std::endl;
    last = std::chrono::steady_clock::now();
  };

  const VerificationReport report = run_verification(options);
  if (report.checks.size() != static_cast<std::size_t>(kCheckCount)) {
    std::cout << "FAIL expected " << kCheckCount << " checks, got " << report.checks.size() << "\n";
    return 1;
  }
  std::cout << (failures == 0 ? "ALL PASS" : "FAILURES: " + std::to_string(failures)) << std::endl;
  return failures == 0 ? 0 : 1;
}
