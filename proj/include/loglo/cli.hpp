#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "loglo/datagen.hpp"
#include "loglo/operator.hpp"
#include "loglo/train.hpp"

namespace loglo {

/// Generator parameters, or a path to an existing dataset.
struct DataConfig {
  std::string path;  // existing FLDB directory; empty: generate from the fields below
  Index n_traj = 60;
  Index train_traj = 50;  // leading trajectories used for training, the rest for testing
  Index nx = 32;
  Index ny = 32;
  Index n_t = 11;
  double dt = 0.01;
  double nu = 1e-2;
  std::array<double, 2> velocity{1.0, 0.5};
  double re = 200.0;
  int forcing_n = 4;
  Index substeps = 1;
  double ic_scale = 4.0;
};

struct RunConfig {
  std::string pde = "heat";  // heat | advdiff | kolmogorov
  std::uint64_t seed = 0;
  std::string out_dir = "run";
  DataConfig data;
  ModelConfig model;
  TrainConfig train;  // train.loss holds the "loss" section

  void validate() const;
  nlohmann::json to_json() const;
  /// Strict: unknown keys and out-of-range values raise ConfigError naming the field.
  static RunConfig from_json(const nlohmann::json& j);
};

/// Reads and validates a config file (IoError when missing).
RunConfig parse_config(const std::string& path);
/// Writes resolved_config.json into `dir`; returns its path.
std::string write_resolved_config(const RunConfig& cfg, const std::string& dir);

/// Generates the dataset described by cfg.data for cfg.pde.
Dataset generate_dataset(const RunConfig& cfg);

/// Budget table for (d_c, K, L, p) as printed by `loglo budget`.
std::string budget_report(std::int64_t width, std::int64_t modes, std::int64_t layers, std::int64_t patch,
                          int dim = 2);

/// Entry point of the `loglo` tool. Errors are one line on `err`:
/// "error: <Kind>: <message>". Returns the process exit code.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_command(int argc, char** argv);

}  // namespace loglo
