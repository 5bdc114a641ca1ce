#include "deceptlab/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

namespace deceptlab {

namespace {
thread_local int g_no_grad_depth = 0;
}

NoGradGuard::NoGradGuard() { ++g_no_grad_depth; }
NoGradGuard::~NoGradGuard() { --g_no_grad_depth; }

bool grad_enabled() { return g_no_grad_depth == 0; }

TensorPtr Tensor::create(std::vector<std::size_t> shape, bool requires_grad) {
  auto t = std::make_shared<Tensor>();
  std::size_t total = 1;
  for (std::size_t d : shape) total *= d;
  t->shape = std::move(shape);
  t->data.assign(total, 0.0);
  t->requires_grad = requires_grad;
  return t;
}

TensorPtr Tensor::zeros(std::size_t r, std::size_t c, bool requires_grad) {
  return create({r, c}, requires_grad);
}

TensorPtr Tensor::from(std::size_t r, std::size_t c, std::vector<double> values,
                       bool requires_grad) {
  if (values.size() != r * c)
    throw ShapeError("tensor from: " + std::to_string(values.size()) +
                     " values for shape " + std::to_string(r) + "x" + std::to_string(c));
  auto t = std::make_shared<Tensor>();
  t->shape = {r, c};
  t->data = std::move(values);
  t->requires_grad = requires_grad;
  return t;
}

TensorPtr Tensor::scalar(double v) { return from(1, 1, {v}); }

std::string shape_str(const Tensor& t) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < t.shape.size(); ++i) {
    if (i) os << "x";
    os << t.shape[i];
  }
  os << ")";
  return os.str();
}

void backward(const TensorPtr& loss) {
  if (!loss || loss->size() != 1)
    throw ContractError("backward requires a scalar loss tensor");

  // Iterative post-order DFS: children first, then the node itself.
  std::vector<Tensor*> order;
  std::unordered_set<Tensor*> visited;
  std::vector<std::pair<Tensor*, std::size_t>> stack;
  stack.emplace_back(loss.get(), 0);
  visited.insert(loss.get());
  while (!stack.empty()) {
    auto& [node, next_child] = stack.back();
    if (next_child < node->parents.size()) {
      Tensor* child = node->parents[next_child].get();
      ++next_child;
      if (visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Allocate every buffer first: a consumer may legitimately skip
  // accumulating into a node (clamped losses), whose own grad_fn still
  // reads its buffer.
  for (Tensor* node : order) node->ensure_grad();
  loss->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->grad_fn) (*it)->grad_fn();
  }
}

}  // namespace deceptlab
