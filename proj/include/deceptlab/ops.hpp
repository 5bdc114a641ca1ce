#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "deceptlab/tensor.hpp"

namespace deceptlab::ops {

using Mask = std::vector<std::uint8_t>;  // 1 = real token, 0 = pad

enum class Activation { linear, relu, tanh, sigmoid };
Activation activation_from_string(const std::string& name);

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
TensorPtr transpose(const TensorPtr& a);
TensorPtr add(const TensorPtr& a, const TensorPtr& b);
// x[m x n] + v[m x 1] broadcast over columns
TensorPtr add_col(const TensorPtr& x, const TensorPtr& v);
TensorPtr scale(const TensorPtr& x, double c);
TensorPtr elementwise(Activation act, const TensorPtr& x);

// Row-wise softmax; masked columns get -1e9 added before the (max-subtracted)
// exponentiation, which drives their probability to exactly zero.
TensorPtr row_softmax(const TensorPtr& x, const Mask* col_mask = nullptr);
// Single-row convenience with the shape contract of a 1 x n input.
TensorPtr softmax(const TensorPtr& x);

// Mean over unmasked columns of x[d x N] -> 1 x d.
TensorPtr mean_pool(const TensorPtr& x, const Mask& mask);
// Zero out pad columns of x[d x N].
TensorPtr zero_cols(const TensorPtr& x, const Mask& mask);
// Attention-weighted column sum: x[d x N], a[1 x N] -> 1 x d, pairwise-summed.
TensorPtr attend(const TensorPtr& x, const TensorPtr& a);

TensorPtr hconcat(const TensorPtr& a, const TensorPtr& b);
TensorPtr vconcat(const std::vector<TensorPtr>& parts);
TensorPtr slice_rows(const TensorPtr& x, std::size_t r0, std::size_t r1);

// Per-column normalization of x[d x N] with affine gamma/beta[d x 1].
TensorPtr layer_norm_cols(const TensorPtr& x, const TensorPtr& gamma,
                          const TensorPtr& beta, double eps = 1e-5);

// Column j of the output is row ids[j] of the embedding table E[V x d].
TensorPtr embedding_cols(const TensorPtr& table, const std::vector<int>& ids);

// -w * [y log p + (1-y) log(1-p)] with p clamped to [1e-7, 1-1e-7].
TensorPtr bce_loss(const TensorPtr& prob, int label, double weight);
TensorPtr mean_scalars(const std::vector<TensorPtr>& items);

}  // namespace deceptlab::ops
