#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lrb/config.hpp"
#include "lrb/env.hpp"
#include "lrb/rtp.hpp"

namespace lrb {

// LBL_LOG: 0 quiet, 1 progress lines (default), 2 debug. Messages go to
// stderr.
int log_level();
void log_info(const std::string& message);
void log_debug(const std::string& message);

// Loads the model file or generates the instance described inline.
LatentModel resolve_model(const ModelSource& source);

struct CellOutput {
  std::string label;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::vector<double> cumulative;  // regret curve
};

// Runs every (policy, seed) cell, cell-level parallelism. Output order is
// config order regardless of scheduling.
std::vector<CellOutput> run_experiment(const LatentModel& model, const ExperimentConfig& cfg);

// summary rows: policy,t,mean_regret,std_regret with sample statistics across
// the seeds of each policy, in config order.
std::string summary_csv(const ExperimentConfig& cfg, const std::vector<CellOutput>& cells);

struct SimulateOptions {
  std::string config_path;
  std::string out_dir;                       // empty = config value
  std::vector<std::uint64_t> seeds;          // empty = config value
  int parallelism = -1;                      // -1 = config value
  bool literal_gate = false;
  bool rebuild_on_refresh = false;
};

struct DecomposeOptions {
  std::string input_path;  // model JSON, moments JSON, or interaction-record CSV
  int num_classes = 0;     // 0 = model's class count (model input only)
  RtpConfig rtp;
  std::string out_path;    // empty = stdout
  bool report_bounds = false;
  double delta = 0.05;
  long bound_sessions = 0;  // n for the reported bounds; 0 = input's session count
};

struct DiagnoseOptions {
  std::string model_path;
  int user = -1;  // -1 = all users
  double delta = 0.05;
};

// Exit codes: 0 success; 2 config/input error; 3 some cell failed;
// 4 rank-deficient moments; 5 separation assumption violated.
int cmd_simulate(const SimulateOptions& options);
int cmd_decompose(const DecomposeOptions& options);
int cmd_diagnose(const DiagnoseOptions& options);

}  // namespace lrb
