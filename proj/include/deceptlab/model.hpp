#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "deceptlab/coattention.hpp"
#include "deceptlab/layers.hpp"

namespace deceptlab {

enum class Architecture { dense, mha, transformer, coatt, coatt_liwc, transformer_coatt };

Architecture architecture_from_string(const std::string& name);
std::string to_string(Architecture a);

struct ModelConfig {
  Architecture architecture = Architecture::coatt;
  int d = 64;
  int k = 0;  // co-attention hidden size; 0 means "use d"
  int heads = 6;
  int encoder_layers = 6;  // depth of the transformer head stacks
  int base_layers = 1;     // depth of the trainable base encoder
  std::vector<int> head_widths = {512, 128, 64};
  int vocab_size = 0;
  int max_len_q1 = 64;
  int max_len_q2 = 64;
  int lexicon_dim = 0;  // required > 0 only for coatt_liwc

  bool paired() const {
    return architecture == Architecture::coatt || architecture == Architecture::coatt_liwc ||
           architecture == Architecture::transformer_coatt;
  }
  int resolved_k() const { return k > 0 ? k : d; }
  void validate() const;
};

struct EncodedStatement {
  std::vector<int> ids;
  ops::Mask mask;
};

struct ModelOutput {
  double probability = 0.0;  // probability of the deceptive class
  std::optional<CoAttentionOutput> coattention;
};

// The six architectures assembled from the shared building blocks. The two
// statement encoders of paired architectures are the same parameter objects
// (siamese weight sharing), never copies.
class Model {
 public:
  Model() = default;

  static Model build(const ModelConfig& config, std::uint64_t seed);

  struct Graph {
    TensorPtr prob;
    std::optional<CoAttentionOutput> coattention;
  };

  // Differentiable forward. q2 is ignored by single-statement architectures
  // and required by paired ones; lexicon is required exactly for coatt_liwc.
  Graph forward_graph(const EncodedStatement& q1, const EncodedStatement* q2 = nullptr,
                      const std::vector<double>* lexicon = nullptr) const;

  // Forward from precomputed contextual embedding matrices (d x N / d x T),
  // bypassing the internal encoder.
  Graph forward_embedded_graph(const TensorPtr& c, const TensorPtr& s = nullptr,
                               const std::vector<double>* lexicon = nullptr) const;

  ModelOutput forward(const EncodedStatement& q1, const EncodedStatement* q2 = nullptr,
                      const std::vector<double>* lexicon = nullptr) const;
  ModelOutput forward_embedded(const TensorPtr& c, const TensorPtr& s = nullptr,
                               const std::vector<double>* lexicon = nullptr) const;

  // All parameter groups, each exactly once, in a stable order.
  std::vector<LayerParamsPtr> parameters() const;
  // The freeze set of the two-phase protocol: embedding plus base encoder.
  std::vector<LayerParamsPtr> encoder_parameters() const;
  void set_encoder_frozen(bool frozen);

  std::vector<std::pair<std::string, TensorPtr>> named_parameters() const;

  const ModelConfig& config() const { return config_; }
  const LayerParamsPtr& embedding() const { return embedding_; }
  const std::optional<CoAttentionParams>& coattention_params() const { return coattention_; }

 private:
  TensorPtr encode(const EncodedStatement& st) const;
  TensorPtr dense_head(const TensorPtr& x) const;
  Graph headless_forward(const TensorPtr& c, const ops::Mask& mask_c, const TensorPtr& s,
                         const ops::Mask& mask_s, const std::vector<double>* lexicon) const;

  ModelConfig config_;
  LayerParamsPtr embedding_;
  std::vector<LayerParamsPtr> base_blocks_;
  LayerParamsPtr mha_head_;
  std::vector<LayerParamsPtr> head_blocks_;
  std::vector<LayerParamsPtr> branch1_blocks_;
  std::vector<LayerParamsPtr> branch2_blocks_;
  std::optional<CoAttentionParams> coattention_;
  std::vector<LayerParamsPtr> dense_stack_;
  LayerParamsPtr liwc_pre_, liwc_mid_, liwc_out_;
};

}  // namespace deceptlab
