#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "breaklab/parallel.hpp"
#include "breaklab/report.hpp"

namespace {

namespace fs = std::filesystem;
using breaklab::report::Json;

constexpr int kOk = 0;
constexpr int kFindings = 1;
constexpr int kSchema = 2;
constexpr int kSolver = 3;

int schema_failure(const std::string& msg) {
  std::cerr << "breaklab: invalid scenario: " << msg << "\n";
  return kSchema;
}

// Applies BREAKLAB_THREADS; returns false when it is malformed.
bool apply_threads() {
  const char* env = std::getenv("BREAKLAB_THREADS");
  if (!env || !*env) return true;
  const std::string v(env);
  if (v.find_first_not_of("0123456789") != std::string::npos || v.size() > 6) return false;
  breaklab::thread_limit() = static_cast<unsigned>(std::stoul(v));
  return true;
}

template <class Command>
int execute(const std::string& file, const std::string& out, std::optional<std::uint64_t> seed, bool strict,
            Command&& command) {
  breaklab::scenario::Scenario s;
  std::uint64_t used = 0;
  try {
    s = breaklab::scenario::load(file);
    used = breaklab::report::resolve_seed(seed, s);
  } catch (const breaklab::scenario::SchemaError& e) {
    return schema_failure(e.what());
  }
  const auto start = std::chrono::steady_clock::now();
  breaklab::report::Outcome o;
  try {
    o = command(s, used);
  } catch (const breaklab::scenario::SchemaError& e) {
    return schema_failure(e.what());
  } catch (const breaklab::ConvergenceError& e) {
    const Json failure = {{"error", e.what()}, {"residual", e.residual()}, {"residuals", e.residuals()}};
    std::cerr << "breaklab: solver failure: " << e.what() << " (residual " << e.residual() << ")\n";
    fs::create_directories(out);
    std::ofstream(fs::path(out) / "failure.json") << breaklab::report::dump(failure);
    return kSolver;
  } catch (const std::exception& e) {
    std::cerr << "breaklab: solver failure: " << e.what() << "\n";
    return kSolver;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  try {
    breaklab::report::write(o, out);
    // Timing lives outside report.json so the report stays reproducible.
    std::ofstream(fs::path(out) / "run_info.json")
        << breaklab::report::dump({{"wall_time_s", seconds}, {"threads", breaklab::worker_count()}});
  } catch (const std::exception& e) {
    std::cerr << "breaklab: " << e.what() << "\n";
    return kSolver;
  }
  const auto& summary = o.report.at("summary");
  std::cout << s.name << ": " << summary.at("pass") << " pass, " << summary.at("fail") << " fail, "
            << summary.at("not-applicable") << " not-applicable -> " << out << "\n";
  return strict && o.findings_failed ? kFindings : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Piecewise affine potentials, monotone flows and polar factorization checks"};
  app.require_subcommand(1);

  std::string file;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool strict = false;

  auto* run = app.add_subcommand("run", "Run every check that applies to a scenario");
  auto* sdot = app.add_subcommand("solve-sdot", "Solve a semidiscrete transport scenario");
  auto* polar = app.add_subcommand("polar", "Run the polar factorization experiment of a field scenario");
  auto* validate = app.add_subcommand("validate", "Validate a scenario file");
  for (auto* c : {run, sdot, polar}) {
    c->add_option("scenario", file, "Scenario JSON file")->required();
    c->add_option("--out", out, "Output directory")->required();
    c->add_option("--seed", seed, "Seed (overrides the scenario and BREAKLAB_SEED)");
  }
  for (auto* c : {run, polar}) c->add_flag("--strict", strict, "Exit 1 when a check fails");
  validate->add_option("scenario", file, "Scenario JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kSchema;
  }
  if (!apply_threads()) return schema_failure("$BREAKLAB_THREADS: expected a non-negative integer");

  if (validate->parsed()) {
    try {
      const auto s = breaklab::scenario::load(file);
      std::cout << file << ": valid " << breaklab::scenario::kind_name(s.kind) << " scenario\n";
      return kOk;
    } catch (const breaklab::scenario::SchemaError& e) {
      return schema_failure(e.what());
    }
  }
  if (run->parsed()) return execute(file, out, seed, strict, breaklab::report::run);
  if (sdot->parsed()) return execute(file, out, seed, false, breaklab::report::solve_sdot);
  return execute(file, out, seed, strict, breaklab::report::polar);
}
