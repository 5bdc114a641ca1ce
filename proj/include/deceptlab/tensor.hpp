#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "deceptlab/error.hpp"

namespace deceptlab {

struct Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

// Dense row-major float64 array with an optional gradient buffer. Computed
// tensors carry their parents and a pull-gradient closure; backward() walks
// the graph once in reverse topological order.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;

  std::vector<TensorPtr> parents;
  std::function<void()> grad_fn;

  std::size_t size() const { return data.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
  void zero_grad() { grad.assign(data.size(), 0.0); }

  static TensorPtr create(std::vector<std::size_t> shape, bool requires_grad = false);
  static TensorPtr zeros(std::size_t r, std::size_t c, bool requires_grad = false);
  static TensorPtr from(std::size_t r, std::size_t c, std::vector<double> values,
                        bool requires_grad = false);
  static TensorPtr scalar(double v);
};

std::string shape_str(const Tensor& t);

// Accumulates d(loss)/d(node) for every reachable node; `loss` must hold a
// single element. Leaf gradients add up across calls until zeroed.
void backward(const TensorPtr& loss);

// While alive on a thread, newly built ops do not record the graph.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

bool grad_enabled();

}  // namespace deceptlab
