// Acceptance driver: runs the full diagnostic suite twice through the same
// entry point the CLI uses, compares the two artifact trees byte for byte,
// and prints one verdict line per criterion.

#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "kwc/checks.hpp"
#include "kwc/io.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is.good()) return {};
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int count_regular_files(const fs::path& root) {
  int n = 0;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) ++n;
  }
  return n;
}

}  // namespace

int main() {
  using nlohmann::json;
  const fs::path base = fs::temp_directory_path() / "kwcopt_acceptance";
  std::error_code ec;
  fs::remove_all(base, ec);

  kwc::RunConfig cfg;  // stock configuration, every suite enabled
  const auto t0 = std::chrono::steady_clock::now();

  int rc_a = -1;
  int rc_b = -1;
  try {
    cfg.out_dir = (base / "runA").string();
    rc_a = kwc::run_subcommand("check", cfg);
    cfg.out_dir = (base / "runB").string();
    rc_b = kwc::run_subcommand("check", cfg);
  } catch (const std::exception& e) {
    std::printf("acceptance: check run threw: %s\n", e.what());
    return 1;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  // Repeat-run determinism at the artifact level: every file written by the
  // first run must exist with identical bytes in the second, and neither
  // tree may contain files the other lacks.
  bool bytes_equal = true;
  int files_a = 0;
  for (const auto& entry : fs::recursive_directory_iterator(base / "runA")) {
    if (!entry.is_regular_file()) continue;
    ++files_a;
    const fs::path rel = fs::relative(entry.path(), base / "runA");
    const fs::path other = base / "runB" / rel;
    if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) {
      bytes_equal = false;
      std::printf("acceptance: artifact mismatch at %s\n", rel.string().c_str());
    }
  }
  if (count_regular_files(base / "runB") != files_a) bytes_equal = false;
  const bool repeat_ok =
      rc_a == rc_b && bytes_equal && files_a > 0;

  json diag;
  try {
    diag = json::parse(slurp(base / "runA" / "diagnostics.json"));
  } catch (const std::exception& e) {
    std::printf("acceptance: diagnostics unreadable: %s\n", e.what());
    return 1;
  }

  const std::vector<std::string> names = kwc::check_names();
  int passed = 0;
  for (std::size_t i = 0; i < names.size(); ++i) {
    bool ok = false;
    std::vector<std::string> notes;
    if (diag.contains("checks")) {
      for (const auto& row : diag["checks"]) {
        if (row.value("name", std::string()) != names[i]) continue;
        ok = row.value("passed", false);
        if (row.contains("notes")) {
          for (const auto& note : row["notes"])
            notes.push_back(note.get<std::string>());
        }
        break;
      }
    }
    // the determinism criterion additionally covers the artifact trees
    if (names[i] == "determinism") ok = ok && repeat_ok;
    if (ok) ++passed;
    std::printf("A%-2d %-22s %s\n", static_cast<int>(i + 1), names[i].c_str(),
                ok ? "PASS" : "FAIL");
    for (const std::string& note : notes)
      std::printf("      note: %s\n", note.c_str());
  }
  if (!repeat_ok) {
    std::printf("      note: repeat run rc %d vs %d, %s\n", rc_a, rc_b,
                bytes_equal ? "artifacts identical" : "artifacts differ");
  }

  std::printf("acceptance: %d/%d criteria passed in %.1f s\n", passed,
              static_cast<int>(names.size()), secs);
  return passed == static_cast<int>(names.size()) ? 0 : 1;
}
