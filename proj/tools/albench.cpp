#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "albench/error.hpp"
#include "albench/harness.hpp"
#include "albench/io.hpp"
#include "albench/version.hpp"

namespace {

using albench::harness::ExperimentConfig;

// One machine-readable line on stderr so callers can dispatch on the code.
void print_error(const char* code, const std::string& message) {
  std::fprintf(stderr, "error: {\"code\":\"%s\",\"message\":\"%s\"}\n", code,
               albench::io::json_escape(message).c_str());
}

ExperimentConfig load(const std::string& config_path,
                      const std::optional<std::string>& out_override) {
  ExperimentConfig config = albench::harness::load_config(config_path);
  if (out_override) {
    config.out_dir = *out_override;
  } else if (auto env = albench::harness::env_out_dir()) {
    config.out_dir = *env;
  }
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pool-based active-learning benchmark"};
  app.set_version_flag("--version", std::string("albench ") + albench::kVersion);
  app.require_subcommand(1);

  std::string config_path, in_dir, out_dir;
  std::optional<std::string> out_override, strategy;
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "Execute a single seeded run");
  run->add_option("--config", config_path, "Experiment config file")->required();
  run->add_option("--seed", seed, "Override the run seed");
  run->add_option("--strategy", strategy, "Override the strategy");
  run->add_option("--out", out_override, "Override the output directory");

  auto* suite = app.add_subcommand("suite", "Run every strategy x seed pair");
  suite->add_option("--config", config_path, "Experiment config file")->required();
  suite->add_option("--out", out_override, "Override the output directory");

  auto* report = app.add_subcommand("report", "Rebuild reports from run files");
  report->add_option("--in", in_dir, "Directory with per-run files")->required();
  report->add_option("--out", out_dir, "Report output directory")->required();

  auto* validate =
      app.add_subcommand("validate-config", "Parse and validate a config file");
  validate->add_option("--config", config_path, "Experiment config file")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(run)) {
      return albench::harness::run_single(load(config_path, out_override),
                                          strategy, seed) == 0
                 ? 0
                 : 1;
    }
    if (app.got_subcommand(suite)) {
      const int failed = albench::harness::run_suite(load(config_path, out_override));
      if (failed > 0) {
        print_error("run_failed", std::to_string(failed) + " run(s) failed");
        return 1;
      }
      return 0;
    }
    if (app.got_subcommand(report)) {
      albench::harness::report_from_dir(in_dir, out_dir);
      return 0;
    }
    if (app.got_subcommand(validate)) {
      ExperimentConfig config = albench::harness::load_config(config_path);
      std::printf("valid\nconfig_hash: %s\n",
                  albench::harness::config_hash(config).c_str());
      return 0;
    }
  } catch (const albench::Error& e) {
    print_error(e.code_name(), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 0;
}
