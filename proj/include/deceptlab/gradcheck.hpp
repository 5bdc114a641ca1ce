#pragma once

#include <functional>
#include <vector>

#include "deceptlab/tensor.hpp"

namespace deceptlab {

// Central finite-difference gradient check. `loss_builder` must rebuild the
// scalar loss graph from the current contents of `leaves`; it is evaluated
// twice per leaf component with the component nudged by +-step. Returns the
// maximum relative error max(|analytic - numeric| / max(|analytic|,
// |numeric|, 1e-4)) over every component of every leaf.
double max_rel_grad_error(const std::function<TensorPtr()>& loss_builder,
                          const std::vector<TensorPtr>& leaves, double step = 1e-5);

}  // namespace deceptlab
