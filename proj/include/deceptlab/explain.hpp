#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "deceptlab/data.hpp"
#include "deceptlab/model.hpp"
#include "deceptlab/rng.hpp"

namespace deceptlab::explain {

struct PerturbationSample {
  std::vector<std::uint8_t> mask;  // over interpretable tokens, 1 = kept
  double model_prob = 0;
  double proximity_weight = 1;
};

// First mask is the identity; the rest drop a uniformly drawn number of
// positions (1..n), chosen uniformly without replacement. Dropped tokens
// are deleted from the text fed to the model.
std::vector<std::vector<std::uint8_t>> perturb(std::size_t n_tokens, std::size_t n_samples,
                                               Rng& rng);

// exp(-D^2 / sigma^2), D = cosine distance between mask and all-ones.
double proximity(const std::vector<std::uint8_t>& mask, double sigma = 0.75);

struct TokenWeight {
  std::string token;
  double weight = 0;       // positive pushes toward deceptive
  std::size_t index = 0;   // position in the joint token space
  int statement = 0;       // 0 = q1, 1 = q2
};

struct Explanation {
  std::vector<TokenWeight> token_weights;  // selected features only
  double intercept = 0;
  double local_fidelity_r2 = 0;
  double predicted_prob = 0;  // model probability on the unperturbed input
};

inline constexpr const char* kClassNames[2] = {"truthful", "deceptive"};

// Forward selection of up to max_features tokens on the locality-weighted
// fit, then weighted ridge regression (unpenalized intercept) of the model
// probability on mask bits.
Explanation fit_surrogate(const std::vector<PerturbationSample>& samples,
                          const std::vector<std::string>& tokens, std::size_t max_features,
                          double ridge_lambda = 1e-3);

enum class Target { q1, q2, both };
Target target_from_string(const std::string& name);
std::string to_string(Target t);

struct ExplainOptions {
  std::size_t n_samples = 5000;
  std::uint64_t seed = 0;
  Target target = Target::both;
  std::size_t max_features = 10;
  double kernel_sigma = 0.75;
  double ridge_lambda = 1e-3;
  // Required for coatt_liwc: lexicon features of the (perturbed) Q1 text.
  std::function<std::vector<double>(const std::string&)> lexicon_features;
};

// Explains Q1 and Q2 jointly over the concatenated token space; perturbing
// a Q1 token re-encodes only Q1. Weights are grouped by source statement.
Explanation explain_pair(const Model& model, const data::Vocabulary& vocab,
                         const data::StatementPair& pair, const ExplainOptions& options);

nlohmann::json explanation_to_json(const Explanation& e, const data::StatementPair& pair,
                                   const ExplainOptions& options);
// Standalone page: orange = deceptive-leaning tokens, blue = truthful,
// intensity proportional to |weight|.
std::string explanation_to_html(const Explanation& e, const data::StatementPair& pair,
                                const ExplainOptions& options);

}  // namespace deceptlab::explain
