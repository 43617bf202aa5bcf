// seqlab: config-driven experiment runner.
//
//   seqlab <experiment> --config <file> [--output <path>] [--format json|csv]
//   seqlab suite <dir> [--output-dir <dir>]
//
// Exit codes: 0 all checks pass, 1 a check failed, 2 usage or config error.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>

#include "seqlab/runner.hpp"

namespace {

constexpr int kPass = 0;
constexpr int kCheckFailure = 1;
constexpr int kUsageError = 2;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void print_failed_checks(const seqlab::RunReport& r) {
  for (const auto& c : r.checks)
    if (!c.pass) std::cerr << "  FAILED " << r.name << ": " << c.name << "\n";
}

int run_one(const std::string& experiment, const std::string& config_path, const std::string& output,
            const std::string& format) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::filesystem::path p(config_path);
  seqlab::ExperimentConfig cfg = seqlab::parse_config(seqlab::read_json_file(p), p.stem().string(), experiment);
  if (!format.empty()) cfg.format = format;
  if (!output.empty()) cfg.output = output;
  const seqlab::RunReport report = seqlab::run_config(cfg);
  const std::string text = report.render(cfg.format);
  if (cfg.output) seqlab::write_file_atomic(*cfg.output, text);
  else std::cout << text;
  print_failed_checks(report);
  std::cerr << report.name << ": " << (report.pass ? "pass" : "FAIL") << " (" << seconds_since(t0) << " s)\n";
  return report.pass ? kPass : kCheckFailure;
}

int run_suite(const std::string& dir, const std::string& output_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  std::optional<std::filesystem::path> out;
  if (!output_dir.empty()) out = output_dir;
  auto last = t0;
  const auto suite = seqlab::run_suite(dir, out, [&](const seqlab::SuiteEntry& e) {
    std::cerr << (e.report.pass ? "pass " : "FAIL ") << e.file << " (" << seconds_since(last) << " s)\n";
    print_failed_checks(e.report);
    last = std::chrono::steady_clock::now();
  });
  std::cout << suite.to_json().dump(2) << "\n";
  std::cerr << "suite: " << (suite.pass ? "pass" : "FAIL") << " (" << seconds_since(t0) << " s)\n";
  return suite.pass ? kPass : kCheckFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian sequence model experiment runner"};
  app.require_subcommand(1);

  std::string suite_dir, suite_out;
  auto* suite = app.add_subcommand("suite", "Run every *.json config in a directory");
  suite->add_option("dir", suite_dir, "Directory of configs")->required();
  suite->add_option("--output-dir", suite_out, "Write each report to <dir>/<config stem>.<format>");

  std::string config, output, format;
  for (const auto& name : seqlab::experiment_names()) {
    auto* sub = app.add_subcommand(name, "Run the '" + name + "' experiment");
    sub->add_option("--config", config, "Experiment config (JSON)")->required();
    sub->add_option("--output", output, "Report path (default: stdout)");
    sub->add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsageError;
  }

  try {
    if (suite->parsed()) return run_suite(suite_dir, suite_out);
    return run_one(app.get_subcommands().front()->get_name(), config, output, format);
  } catch (const seqlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kCheckFailure;
  }
}
