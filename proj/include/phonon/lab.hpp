#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "phonon/experiments.hpp"
#include "phonon/sawmodel.hpp"

namespace phonon::lab {

using json = nlohmann::json;
using qmath::cd;
using qmath::DensityMatrix;

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FilesystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kManifestName = "manifest.json";

const std::vector<std::string>& scenario_names();

// ---- Configuration ----

struct Diagnostic {
  enum class Level { error, warning };
  Level level = Level::error;
  std::string path;
  std::string message;

  std::string str() const;
};

// Full default configuration, device values from the characterization table.
json default_config();

json read_config_file(const std::filesystem::path& p);
// Defaults with the user's keys laid over them; unknown keys survive so validate can name them.
json merge_defaults(const json& user);
// "a.b.c=value"; the value is parsed as JSON and taken as a string otherwise.
void apply_override(json& cfg, const std::string& assignment);

std::vector<Diagnostic> validate(const json& cfg);
bool has_errors(const std::vector<Diagnostic>& d);

// Typed view of a validated configuration.
struct Experiment {
  std::string scenario;
  netsim::Carrier carrier = netsim::Carrier::uni;
  netsim::DeviceSetup setup;
  saw::UDTParams udt;
  bool model_directivity = true;
  tomo::Readout readout = tomo::Readout::ideal;
  Eigen::Matrix4d visibility_rows;
  bool virtual_z = true;
  std::int64_t shots = 0;
  std::uint64_t seed = 1;

  // Dispersive probes, frequencies in Hz
  double kappa_q_interferometer = 0;
  double kappa_udt = 0;
  double detuning = 0;
  double interferometer_dt = 0;
  double g_ramsey = 0;
  double kappa_q_ramsey = 0;
  double ramsey_dt = 0;

  // Sweep
  std::string sweep_variable;
  double sweep_start = 0, sweep_stop = 0;
  int sweep_steps = 0;

  // Frequency map
  double fm_t_end = 0, fm_sample = 0, fm_kappa = 0, fm_saw_df = 0;
  double fm_revival_threshold = 0;
  int fm_branch_bin_steps = 32;  // coarser dephasing restarts over the long window

  int loss_round_trips = 4;
  bool plots = true;
};

Experiment build_experiment(const json& cfg);

// ---- Runs ----

struct Metric {
  double value = 0;
  std::string definition;
};

struct RunReport {
  json config;
  std::map<std::string, Metric> metrics;
  std::vector<std::string> files;
  double wall_seconds = 0;
};

// Runs the configured scenario and writes its files into out_dir.
RunReport run(const json& cfg, const std::filesystem::path& out_dir);

// Condensed key/value table of a finished run.
std::string report_summary(const std::filesystem::path& dir);

// ---- Output helpers ----

std::string trajectory_csv(const netsim::Trajectory& t);

struct Series {
  std::string label;
  std::vector<double> x, y;
};

// Minimal line plot.
std::string svg_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                     const std::vector<Series>& series);

json complex_matrix_json(const qmath::Mat& m);

}  // namespace phonon::lab
