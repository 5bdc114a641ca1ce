#pragma once

#include <string>

#include <json.hpp>

#include "deceptlab/data.hpp"
#include "deceptlab/model.hpp"

namespace deceptlab {

// Single-file checkpoint: magic "DLCP", version u32, metadata JSON (model
// config, vocabulary, free-form extras), then named parameter entries
// (name, rows, cols) followed by their row-major float64 data. Loading
// rebuilds the model from the embedded config and rejects any shape
// mismatch.
void save_checkpoint(const std::string& path, const Model& model,
                     const data::Vocabulary& vocab, const nlohmann::json& extra = {});

struct LoadedCheckpoint {
  Model model;
  data::Vocabulary vocab;
  nlohmann::json extra;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace deceptlab
