#pragma once

#include <cstdint>
#include <string>

#include "zscore/blueprint_config.hpp"
#include "zscore/feature_engine.hpp"
#include "zscore/neural_core.hpp"

namespace zscore {

// Everything a pipeline run needs. Defaults reproduce the reference pipeline.
struct RunConfig {
  Role role = Role::Lp;
  std::uint64_t seed = 42;
  double sigma = 25.0;
  double val_fraction = 0.2;
  // 0 means "latest event timestamp in the log".
  std::int64_t observation_end = 0;
  BlueprintConfig blueprint;
  ModelConfig model;
  TrainConfig train;

  // Throws Error(Config) for any out-of-range value. input_dim may be 0
  // (resolved from the data).
  void validate() const;
};

// Environment variable naming the default config file.
inline constexpr const char* kConfigEnvVar = "ZSCORE_CONFIG";

// Merges a JSON document onto `base`. A top-level "seed" also seeds the model
// and trainer unless their sections set their own. Throws Error(Config).
RunConfig apply_config_json(RunConfig base, const std::string& json_text);
RunConfig load_run_config(const std::string& path, RunConfig base = {});
std::string dump_run_config(const RunConfig& cfg);

}  // namespace zscore
