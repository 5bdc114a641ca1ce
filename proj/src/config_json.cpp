#include "deceptlab/config_json.hpp"

#include <fstream>

namespace deceptlab {

using nlohmann::json;

json model_config_to_json(const ModelConfig& cfg) {
  json j;
  j["architecture"] = to_string(cfg.architecture);
  j["d"] = cfg.d;
  j["k"] = cfg.k;
  j["heads"] = cfg.heads;
  j["encoder_layers"] = cfg.encoder_layers;
  j["base_layers"] = cfg.base_layers;
  j["head_widths"] = cfg.head_widths;
  j["vocab_size"] = cfg.vocab_size;
  j["max_len_q1"] = cfg.max_len_q1;
  j["max_len_q2"] = cfg.max_len_q2;
  j["lexicon_dim"] = cfg.lexicon_dim;
  return j;
}

json train_config_to_json(const train::TrainConfig& cfg) {
  json j;
  j["lr_initial"] = cfg.lr_initial;
  j["optimizer"] = train::to_string(cfg.optimizer);
  j["es_patience_phase1"] = cfg.es_patience_phase1;
  j["es_patience_phase2"] = cfg.es_patience_phase2;
  j["plateau_patience"] = cfg.plateau_patience;
  j["plateau_factor"] = cfg.plateau_factor;
  j["folds"] = cfg.folds;
  j["repetitions"] = cfg.repetitions;
  j["val_fraction"] = cfg.val_fraction;
  j["seed"] = cfg.seed;
  j["batch_size"] = cfg.batch_size;
  j["max_epochs_per_phase"] = cfg.max_epochs_per_phase;
  j["parallel_runs"] = cfg.parallel_runs;
  return j;
}

ExperimentConfig experiment_config_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("config: expected a JSON object");
  ExperimentConfig cfg;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& key = it.key();
      const json& v = it.value();
      if (key == "architecture")
        cfg.model.architecture = architecture_from_string(v.get<std::string>());
      else if (key == "d")
        cfg.model.d = v.get<int>();
      else if (key == "k")
        cfg.model.k = v.get<int>();
      else if (key == "heads")
        cfg.model.heads = v.get<int>();
      else if (key == "encoder_layers")
        cfg.model.encoder_layers = v.get<int>();
      else if (key == "base_layers")
        cfg.model.base_layers = v.get<int>();
      else if (key == "head_widths")
        cfg.model.head_widths = v.get<std::vector<int>>();
      else if (key == "vocab_size")
        cfg.model.vocab_size = v.get<int>();
      else if (key == "max_len_q1")
        cfg.model.max_len_q1 = v.get<int>();
      else if (key == "max_len_q2")
        cfg.model.max_len_q2 = v.get<int>();
      else if (key == "lexicon_dim")
        cfg.model.lexicon_dim = v.get<int>();
      else if (key == "lr_initial")
        cfg.train.lr_initial = v.get<double>();
      else if (key == "optimizer")
        cfg.train.optimizer = train::optimizer_from_string(v.get<std::string>());
      else if (key == "es_patience_phase1")
        cfg.train.es_patience_phase1 = v.get<int>();
      else if (key == "es_patience_phase2")
        cfg.train.es_patience_phase2 = v.get<int>();
      else if (key == "plateau_patience")
        cfg.train.plateau_patience = v.get<int>();
      else if (key == "plateau_factor")
        cfg.train.plateau_factor = v.get<double>();
      else if (key == "folds")
        cfg.train.folds = v.get<int>();
      else if (key == "repetitions")
        cfg.train.repetitions = v.get<int>();
      else if (key == "val_fraction")
        cfg.train.val_fraction = v.get<double>();
      else if (key == "seed")
        cfg.train.seed = v.get<std::uint64_t>();
      else if (key == "batch_size")
        cfg.train.batch_size = v.get<int>();
      else if (key == "max_epochs_per_phase")
        cfg.train.max_epochs_per_phase = v.get<int>();
      else if (key == "parallel_runs")
        cfg.train.parallel_runs = v.get<bool>();
      else if (key == "data_format")
        cfg.data_format = v.get<std::string>();
      else
        throw ParseError("config: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (cfg.data_format != "paired" && cfg.data_format != "open_domain")
    throw ParseError("config: data_format must be 'paired' or 'open_domain'");
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("config " + path + ": " + e.what());
  }
  return experiment_config_from_json(j);
}

json experiment_config_to_json(const ExperimentConfig& cfg) {
  json j = model_config_to_json(cfg.model);
  j.update(train_config_to_json(cfg.train));
  j["data_format"] = cfg.data_format;
  return j;
}

}  // namespace deceptlab
