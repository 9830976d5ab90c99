#pragma once

#include <optional>
#include <string>

#include "hoir/nn/adam.hpp"

namespace hoir::nn {

struct OptimizerState {
  int64_t step = 0;
  std::vector<std::vector<float>> m, v;  // aligned with the param blocks
};

struct Checkpoint {
  ModelConfig config;
  ParamStore<float> params;
  std::optional<OptimizerState> opt;
};

// Binary checkpoint, little-endian: magic "HOCK", u32 format version, a
// length-prefixed JSON descriptor of the architecture, then each named
// float32 block (u32 name length, name bytes, u32 rows, u32 cols, values).
// A trailing flag byte marks optimizer state: u64 step count plus first and
// second moment arrays per block, in block order.
void save_checkpoint(const std::string& path, const ModelConfig& cfg,
                     const ParamStore<float>& params, const Adam<float>* opt = nullptr);

// Loads and validates: block names and shapes must match what the stored
// descriptor declares. Throws IoError on malformed files.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace hoir::nn
