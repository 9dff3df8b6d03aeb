#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "imm/cli/run_config.hpp"
#include "imm/data/manifest.hpp"
#include "imm/data/window_sample.hpp"

namespace imm::cli {

/// Process exit codes.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitData = 3, kExitNumeric = 4 };

/// Windows of every split on the normalized scale, plus what is needed to
/// rebuild them.
struct Dataset {
  std::vector<data::WindowSample> train, val, test;
  data::DatasetManifest manifest;
  std::size_t time_features = 0;
  std::size_t subjects = 1;
  std::vector<std::string> warnings;

  const std::vector<data::WindowSample>& split(const std::string& name) const;
};

/// Loads the configured dataset: synthetic CSVs under `data`, or the CGM
/// CSV segmented and split with the run seed. Throws DataError when files
/// are missing or no window fits enc_len + pred_len.
Dataset load_dataset(const RunConfig& config);

/// Model configuration with data-derived fields (time features, subject
/// rows) filled in.
model::ModelConfig model_config_for(const RunConfig& config, const Dataset& data);

/// synth: train.csv, val.csv, test.csv and dataset_manifest.txt.
void cmd_synth(const RunConfig& config, std::ostream& log);
/// train: checkpoint.bin, train_log.csv and dataset_manifest.txt.
void cmd_train(const RunConfig& config, std::ostream& log);
/// predict: predictions.csv for the configured split.
void cmd_predict(const RunConfig& config, std::ostream& log);
/// eval: metrics, calibration, sharpness and log-likelihood reports.
void cmd_eval(const RunConfig& config, std::ostream& log);

/// Full command line: `imm <synth|train|predict|eval> [flags]`. Returns an
/// ExitCode; diagnostics go to err.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err,
            const EnvLookup& env = {});

}  // namespace imm::cli
