// phononlab: run, validate and summarize phonon network scenarios.
#include <iostream>

#include <CLI11.hpp>

#include "phonon/lab.hpp"

using namespace phonon;
using lab::json;

namespace {

enum Exit { kOk = 0, kSchema = 2, kEngine = 3, kFs = 4 };

int cmd_run(const std::string& scenario, const std::string& config_path, const std::vector<std::string>& sets,
            std::string out, const std::optional<std::int64_t>& seed, const std::optional<std::int64_t>& shots,
            const std::string& carrier) {
  json cfg;
  try {
    cfg = lab::merge_defaults(config_path.empty() ? json::object() : lab::read_config_file(config_path));
    cfg["scenario"] = scenario;
    if (!carrier.empty()) cfg["carrier"] = carrier;
    if (seed) cfg["seed"] = *seed;
    if (shots) cfg["shots"] = *shots;
    for (const auto& s : sets) lab::apply_override(cfg, s);
  } catch (const lab::SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSchema;
  } catch (const lab::FilesystemError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFs;
  }
  auto diags = lab::validate(cfg);
  for (const auto& d : diags) std::cerr << d.str() << "\n";
  if (lab::has_errors(diags)) return kSchema;
  if (out.empty()) out = cfg.value("output_dir", std::string("phononlab_out"));

  try {
    auto rep = lab::run(cfg, out);
    std::cout << lab::report_summary(out);
    std::cerr << "wrote " << rep.files.size() + 1 << " files to " << out << " in " << rep.wall_seconds << " s\n";
  } catch (const lab::SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSchema;
  } catch (const lab::FilesystemError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFs;
  } catch (const std::exception& e) {
    std::cerr << "engine error: " << e.what() << "\n";
    return kEngine;
  }
  return kOk;
}

int cmd_validate(const std::string& path) {
  json cfg;
  try {
    cfg = lab::merge_defaults(lab::read_config_file(path));
  } catch (const lab::FilesystemError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFs;
  } catch (const lab::SchemaError& e) {
    std::cout << "error: " << e.what() << "\n";
    return kSchema;
  }
  auto diags = lab::validate(cfg);
  for (const auto& d : diags) std::cout << d.str() << "\n";
  if (diags.empty()) std::cout << "ok: no diagnostics\n";
  return lab::has_errors(diags) ? kSchema : kOk;
}

int cmd_report(const std::string& dir) {
  try {
    std::cout << lab::report_summary(dir);
  } catch (const lab::FilesystemError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFs;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulate phonon-mediated state transfer between two superconducting qubits"};
  app.require_subcommand(1);

  std::string scenario, config_path, out, carrier;
  std::vector<std::string> sets;
  std::optional<std::int64_t> seed, shots;
  auto* run = app.add_subcommand("run", "Run a named scenario");
  run->add_option("scenario", scenario, "Scenario name")->required()->check(CLI::IsMember(lab::scenario_names()));
  run->add_option("--config", config_path, "JSON configuration file");
  run->add_option("--set", sets, "Override, key.path=value")->take_all();
  run->add_option("--out", out, "Output directory");
  run->add_option("--seed", seed, "Random seed for shot sampling");
  run->add_option("--shots", shots, "Shots per tomography setting, 0 for exact probabilities");
  run->add_option("--carrier", carrier, "uni or bi")->check(CLI::IsMember({"uni", "bi"}));

  std::string vpath;
  auto* val = app.add_subcommand("validate", "Check a configuration file without running it");
  val->add_option("file", vpath, "Configuration file")->required();

  std::string rdir;
  auto* rep = app.add_subcommand("report", "Summarize a finished run");
  rep->add_option("dir", rdir, "Run directory")->required();

  auto* defs = app.add_subcommand("defaults", "Print the default configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kSchema;
  }

  if (*run) return cmd_run(scenario, config_path, sets, out, seed, shots, carrier);
  if (*val) return cmd_validate(vpath);
  if (*rep) return cmd_report(rdir);
  if (*defs) {
    std::cout << lab::default_config().dump(2) << "\n";
    return kOk;
  }
  return kOk;
}
