#pragma once

#include <json.hpp>

#include "deceptlab/model.hpp"
#include "deceptlab/train.hpp"

namespace deceptlab {

nlohmann::json model_config_to_json(const ModelConfig& cfg);
nlohmann::json train_config_to_json(const train::TrainConfig& cfg);

// One JSON document mirrors both field sets; unknown keys are rejected.
struct ExperimentConfig {
  ModelConfig model;
  train::TrainConfig train;
  std::string data_format = "paired";  // or "open_domain"
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);
nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg);

}  // namespace deceptlab
