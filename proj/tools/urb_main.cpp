// urb: batch driver for the urban vibrancy / safety analysis pipeline.
//
// Subcommands: synth, ingest, metrics, regress, match, report.
// Exit codes: 0 ok, 1 usage, 2 data validation, 3 numerical failure.

#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "urb/config.hpp"
#include "urb/error.hpp"
#include "urb/log.hpp"
#include "urb/pipeline.hpp"
#include "urb/synth.hpp"

namespace {

urb::RunConfig load_with_overrides(const std::string& config_path,
                                   const std::vector<std::string>& overrides,
                                   const std::string& out_dir_flag) {
  nlohmann::json j;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw urb::UsageError("cannot open config " + config_path);
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw urb::ValidationError(config_path + ": invalid JSON: " + std::string(e.what()));
    }
  } else {
    j = urb::to_json(urb::default_config());
  }
  for (const std::string& ov : overrides) {
    urb::apply_override(j, ov);
  }
  if (!out_dir_flag.empty()) {
    urb::apply_override(j, "paths.out_dir=" + out_dir_flag);
  }
  return urb::config_from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"urban vibrancy and safety analysis pipeline"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand name

  std::string config_path;
  std::string out_dir_flag;
  std::vector<std::string> overrides;
  app.add_option("--config,-c", config_path, "run configuration JSON");
  app.add_option("--out-dir,-o", out_dir_flag, "override paths.out_dir");
  app.add_option("--set", overrides, "override a config key, e.g. --set matching.alpha=0.01");

  auto* cmd_synth = app.add_subcommand("synth", "generate a synthetic city");
  std::string spec_path, synth_out;
  cmd_synth->add_option("--spec", spec_path, "synthetic city spec JSON (defaults when omitted)");
  cmd_synth->add_option("--out", synth_out, "output directory for the generated city")
      ->required();

  auto* cmd_ingest = app.add_subcommand("ingest", "load, validate and normalize the datasets");
  auto* cmd_metrics = app.add_subcommand("metrics", "per-unit and per-location measures");
  auto* cmd_regress = app.add_subcommand("regress", "robust regressions and excess crime");
  auto* cmd_match = app.add_subcommand("match", "within-unit matched-pairs studies");
  auto* cmd_report = app.add_subcommand("report", "assemble figure-ready tables");
  auto* cmd_config = app.add_subcommand("print-config", "print the effective configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (cmd_synth->parsed()) {
      urb::synth::SynthSpec spec;
      if (!spec_path.empty()) spec = urb::synth::load_synth_spec(spec_path);
      urb::synth::generate(spec, synth_out);
      std::cout << "city written to " << synth_out << "\n";
      return 0;
    }
    urb::RunConfig config = load_with_overrides(config_path, overrides, out_dir_flag);
    if (cmd_config->parsed()) {
      std::cout << urb::to_json(config).dump(2) << "\n";
    } else if (cmd_ingest->parsed()) {
      urb::pipeline::run_ingest(config);
      std::cout << "ingest ok; see " << config.paths.out_dir << "/ingest_report.json\n";
    } else if (cmd_metrics->parsed()) {
      urb::pipeline::run_metrics(config);
      std::cout << "metrics written to " << config.paths.out_dir << "\n";
    } else if (cmd_regress->parsed()) {
      urb::pipeline::run_regress(config);
      std::cout << "regression outputs written to " << config.paths.out_dir << "\n";
    } else if (cmd_match->parsed()) {
      urb::pipeline::run_match(config);
      std::cout << "matched-pairs tables written to " << config.paths.out_dir << "\n";
    } else if (cmd_report->parsed()) {
      urb::pipeline::run_report(config);
      std::cout << "figure tables written to " << config.paths.out_dir << "/figures\n";
    }
    return 0;
  } catch (const urb::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const urb::ValidationError& e) {
    std::cerr << "data validation error: " << e.what() << "\n";
    return 2;
  } catch (const urb::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
