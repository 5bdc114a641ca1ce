#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "deceptlab/ops.hpp"
#include "deceptlab/rng.hpp"
#include "deceptlab/tensor.hpp"

namespace deceptlab {

// Named parameter group. Frozen groups are skipped by optimizer steps.
struct LayerParams {
  std::string name;
  std::map<std::string, TensorPtr> weights;  // ordered for deterministic iteration
  bool frozen = false;

  TensorPtr& at(const std::string& key);
  const TensorPtr& at(const std::string& key) const;
};

using LayerParamsPtr = std::shared_ptr<LayerParams>;

// Glorot-uniform matrix in +-sqrt(6 / (fan_in + fan_out)).
TensorPtr glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng);

namespace layers {

// Fully connected 1 x in -> 1 x out; weights "w" (in x out) and "b" (1 x out).
LayerParamsPtr dense_init(const std::string& name, std::size_t in, std::size_t out, Rng& rng);
TensorPtr dense(const TensorPtr& x, const LayerParams& params, ops::Activation act);

// Scaled dot-product self-attention over token columns of x[d x N].
LayerParamsPtr attention_init(const std::string& name, std::size_t d, Rng& rng);
TensorPtr multi_head_attention(const TensorPtr& x, const LayerParams& params,
                               std::size_t heads, const ops::Mask* mask = nullptr);

// One encoder block: self-attention + residual + layer norm, then a
// position-wise feed-forward (inner width 4d) + residual + layer norm.
LayerParamsPtr encoder_block_init(const std::string& name, std::size_t d, Rng& rng);
TensorPtr encoder_block(const TensorPtr& x, const LayerParams& params, std::size_t heads,
                        const ops::Mask* mask = nullptr);

// Stack of encoder blocks; an empty stack returns the input unchanged.
TensorPtr transformer_encoder(const TensorPtr& x, const std::vector<LayerParamsPtr>& blocks,
                              std::size_t heads, const ops::Mask* mask = nullptr);

// Token embedding table "table" (vocab x d).
LayerParamsPtr embedding_init(const std::string& name, std::size_t vocab, std::size_t d,
                              Rng& rng);
// Embeds ids as columns and adds fixed sinusoidal position encodings.
TensorPtr embed_tokens(const LayerParams& params, const std::vector<int>& ids);

// Fixed sinusoidal position encoding, d x n, position along columns.
TensorPtr positional_encoding(std::size_t d, std::size_t n);

}  // namespace layers
}  // namespace deceptlab
