#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace deceptlab::cli {

// Exit codes: 0 success, 1 internal, 2 input file, 3 lookup, 4 parse.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInputFile = 2;
inline constexpr int kExitLookup = 3;
inline constexpr int kExitParse = 4;

struct TrainArgs {
  std::string config_path;
  std::string data_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> arch;
  std::string dict_path;  // lexicon features for coatt_liwc
};

struct EvaluateArgs {
  std::string checkpoint_path;
  std::string data_path;
  std::string out_dir;
  std::string embeddings_path;
  std::string dict_path;
};

struct ExplainArgs {
  std::string checkpoint_path;
  std::string data_path;
  std::string doc_id;
  std::string out_dir;
  std::size_t n_samples = 5000;
  std::uint64_t seed = 0;
  std::string target = "both";
  std::string dict_path;
};

struct AnalyzeArgs {
  std::string data_path;
  std::string dict_path;
  std::string features_path;
  std::string out_dir;
  double alpha = 0.05;
};

int cmd_train(const TrainArgs& args);
int cmd_evaluate(const EvaluateArgs& args);
int cmd_explain(const ExplainArgs& args);
int cmd_analyze(const AnalyzeArgs& args);

int run_cli(int argc, char** argv);

}  // namespace deceptlab::cli
