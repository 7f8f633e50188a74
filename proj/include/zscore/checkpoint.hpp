#pragma once

#include <string>
#include <vector>

#include "zscore/feature_engine.hpp"
#include "zscore/neural_core.hpp"

namespace zscore {

struct Checkpoint {
  ModelParams params;
  TrainConfig train_config;
  Role role = Role::Lp;
  std::vector<std::string> feature_names;
  double val_mse = 0.0;
  int best_epoch = 0;
};

// Path of the binary blob paired with a manifest ("model.json" -> "model.bin").
std::string blob_path_for(const std::string& manifest_path);

// Writes a JSON manifest (tensor names, shapes, row-major element offsets,
// configs, normalizer, seed) and a little-endian float64 blob next to it.
void save_checkpoint(const Checkpoint& checkpoint, const std::string& manifest_path);

// Throws Error(Io) for unreadable files and Error(ShapeMismatch) when the
// manifest and blob disagree.
Checkpoint load_checkpoint(const std::string& manifest_path);

}  // namespace zscore
