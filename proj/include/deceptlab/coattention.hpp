#pragma once

#include <cstdint>

#include "deceptlab/layers.hpp"
#include "deceptlab/ops.hpp"
#include "deceptlab/tensor.hpp"

namespace deceptlab {

// Parameters of the co-attention fusion. Bias-free by construction:
//   F   = tanh(C^T W_l S)                        (N x T affinity)
//   H^s = tanh(W_s S + (W_c C) F)                (k x T)
//   H^c = tanh(W_c C + (W_s S) F^T)              (k x N)
//   a^s = softmax(w_hs^T H^s), a^c = softmax(w_hc^T H^c)
//   s_hat = sum_i a_i^s s^i,  c_hat = sum_j a_j^c c^j
//   z = [s_hat, c_hat]                           (1 x 2d)
struct CoAttentionParams {
  LayerParamsPtr layer;  // holds w_l (d x d), w_s/w_c (k x d), w_hs/w_hc (k x 1)
  std::size_t d = 0;
  std::size_t k = 0;

  static CoAttentionParams init(std::size_t d, std::size_t k, Rng& rng,
                                const std::string& name = "coattention");
};

struct CoAttentionOutput {
  TensorPtr affinity;  // F, N x T, entries in (-1, 1)
  TensorPtr a_s;       // 1 x T attention over the second statement
  TensorPtr a_c;       // 1 x N attention over the first statement
  TensorPtr s_hat;     // 1 x d
  TensorPtr c_hat;     // 1 x d
  TensorPtr z;         // 1 x 2d, exactly [s_hat, c_hat]
};

// C: d x N encoding of the first statement, S: d x T of the second. Pad
// columns are zeroed before the affinity product and masked out of both
// softmaxes, so attended vectors carry no padding.
CoAttentionOutput coattend(const TensorPtr& c, const TensorPtr& s,
                           const CoAttentionParams& params, const ops::Mask& mask_c,
                           const ops::Mask& mask_s);

// Max relative error between analytic and central finite-difference
// gradients over all five parameter tensors and both inputs.
double coattend_gradcheck(std::size_t d, std::size_t n, std::size_t t, std::size_t k,
                          std::uint64_t seed, double step = 1e-5);

}  // namespace deceptlab
