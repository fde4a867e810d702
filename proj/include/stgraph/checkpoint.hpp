#pragma once

#include <string>

#include "stgraph/model.hpp"
#include "stgraph/training.hpp"

namespace stgraph {

struct Checkpoint {
  ModelParams params;
  Scaler scaler;
};

// Versioned textual container: the model config, the normalization
// statistics, every trainable matrix keyed by name, and the realized
// assignment matrices when available. Doubles are stored with %.17g so a
// save/load round trip is exact.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);

// Rejects unknown container versions and shape mismatches.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace stgraph
