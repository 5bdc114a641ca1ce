#include "deceptlab/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace deceptlab {

double max_rel_grad_error(const std::function<TensorPtr()>& loss_builder,
                          const std::vector<TensorPtr>& leaves, double step) {
  for (const auto& leaf : leaves) leaf->zero_grad();
  auto loss = loss_builder();
  backward(loss);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(leaves.size());
  for (const auto& leaf : leaves) {
    leaf->ensure_grad();
    analytic.push_back(leaf->grad);
  }

  double worst = 0.0;
  NoGradGuard guard;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    Tensor& leaf = *leaves[li];
    for (std::size_t i = 0; i < leaf.size(); ++i) {
      const double saved = leaf.data[i];
      leaf.data[i] = saved + step;
      const double above = loss_builder()->data[0];
      leaf.data[i] = saved - step;
      const double below = loss_builder()->data[0];
      leaf.data[i] = saved;
      const double numeric = (above - below) / (2.0 * step);
      const double a = analytic[li][i];
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-4});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace deceptlab
