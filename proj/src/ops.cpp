#include "deceptlab/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "deceptlab/kernels.hpp"

namespace deceptlab::ops {

namespace {

constexpr double kMaskPenalty = 1e9;
constexpr double kProbClamp = 1e-7;

void require_2d(const TensorPtr& t, const char* who) {
  if (!t || t->shape.size() != 2)
    throw ShapeError(std::string(who) + ": expected a 2-d tensor");
}

bool wants_graph(std::initializer_list<const TensorPtr*> ins) {
  if (!grad_enabled()) return false;
  for (const TensorPtr* p : ins)
    if (*p && (*p)->requires_grad) return true;
  return false;
}

}  // namespace

Activation activation_from_string(const std::string& name) {
  if (name == "linear") return Activation::linear;
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  throw ConfigError("unknown activation: " + name);
}

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  const std::size_t m = a->rows(), k = a->cols(), n = b->cols();
  if (b->rows() != k)
    throw ShapeError("matmul: inner dimensions disagree, " + shape_str(*a) + " vs " +
                     shape_str(*b));
  auto out = Tensor::create({m, n});
  kernels::matmul(a->data.data(), b->data.data(), out->data.data(), m, k, n);
  if (wants_graph({&a, &b})) {
    out->requires_grad = true;
    out->parents = {a, b};
    Tensor* ap = a.get();
    Tensor* bp = b.get();
    Tensor* op = out.get();
    out->grad_fn = [ap, bp, op, m, k, n]() {
      if (ap->requires_grad) {
        ap->ensure_grad();
        kernels::matmul_nt(op->grad.data(), bp->data.data(), ap->grad.data(), m, n, k, true);
      }
      if (bp->requires_grad) {
        bp->ensure_grad();
        kernels::matmul_tn(ap->data.data(), op->grad.data(), bp->grad.data(), k, m, n, true);
      }
    };
  }
  return out;
}

TensorPtr transpose(const TensorPtr& a) {
  require_2d(a, "transpose");
  const std::size_t m = a->rows(), n = a->cols();
  auto out = Tensor::create({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out->data[j * m + i] = a->data[i * n + j];
  if (wants_graph({&a})) {
    out->requires_grad = true;
    out->parents = {a};
    Tensor* ap = a.get();
    Tensor* op = out.get();
    out->grad_fn = [ap, op, m, n]() {
      if (!ap->requires_grad) return;
      ap->ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) ap->grad[i * n + j] += op->grad[j * m + i];
    };
  }
  return out;
}

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
  require_2d(a, "add");
  require_2d(b, "add");
  if (a->shape != b->shape)
    throw ShapeError("add: shape mismatch " + shape_str(*a) + " vs " + shape_str(*b));
  auto out = Tensor::create(a->shape);
  for (std::size_t i = 0; i < a->size(); ++i) out->data[i] = a->data[i] + b->data[i];
  if (wants_graph({&a, &b})) {
    out->requires_grad = true;
    out->parents = {a, b};
    Tensor* ap = a.get();
    Tensor* bp = b.get();
    Tensor* op = out.get();
    out->grad_fn = [ap, bp, op]() {
      for (Tensor* t : {ap, bp}) {
        if (!t->requires_grad) continue;
        t->ensure_grad();
        for (std::size_t i = 0; i < t->grad.size(); ++i) t->grad[i] += op->grad[i];
      }
    };
  }
  return out;
}

TensorPtr add_col(const TensorPtr& x, const TensorPtr& v) {
  require_2d(x, "add_col");
  require_2d(v, "add_col");
  const std::size_t m = x->rows(), n = x->cols();
  if (v->rows() != m || v->cols() != 1)
    throw ShapeError("add_col: bias " + shape_str(*v) + " does not broadcast over " +
                     shape_str(*x));
  auto out = Tensor::create({m, n});
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t j = 0; j < n; ++j) out->data[r * n + j] = x->data[r * n + j] + v->data[r];
  if (wants_graph({&x, &v})) {
    out->requires_grad = true;
    out->parents = {x, v};
    Tensor* xp = x.get();
    Tensor* vp = v.get();
    Tensor* op = out.get();
    out->grad_fn = [xp, vp, op, m, n]() {
      if (xp->requires_grad) {
        xp->ensure_grad();
        for (std::size_t i = 0; i < xp->grad.size(); ++i) xp->grad[i] += op->grad[i];
      }
      if (vp->requires_grad) {
        vp->ensure_grad();
        for (std::size_t r = 0; r < m; ++r) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += op->grad[r * n + j];
          vp->grad[r] += acc;
        }
      }
    };
  }
  return out;
}

TensorPtr scale(const TensorPtr& x, double c) {
  require_2d(x, "scale");
  auto out = Tensor::create(x->shape);
  for (std::size_t i = 0; i < x->size(); ++i) out->data[i] = c * x->data[i];
  if (wants_graph({&x})) {
    out->requires_grad = true;
    out->parents = {x};
    Tensor* xp = x.get();
    Tensor* op = out.get();
    out->grad_fn = [xp, op, c]() {
      if (!xp->requires_grad) return;
      xp->ensure_grad();
      for (std::size_t i = 0; i < xp->grad.size(); ++i) xp->grad[i] += c * op->grad[i];
    };
  }
  return out;
}

TensorPtr elementwise(Activation act, const TensorPtr& x) {
  require_2d(x, "elementwise");
  auto out = Tensor::create(x->shape);
  for (std::size_t i = 0; i < x->size(); ++i) {
    const double v = x->data[i];
    switch (act) {
      case Activation::linear: out->data[i] = v; break;
      case Activation::relu: out->data[i] = v > 0.0 ? v : 0.0; break;
      case Activation::tanh: out->data[i] = std::tanh(v); break;
      case Activation::sigmoid: out->data[i] = 1.0 / (1.0 + std::exp(-v)); break;
    }
  }
  if (wants_graph({&x})) {
    out->requires_grad = true;
    out->parents = {x};
    Tensor* xp = x.get();
    Tensor* op = out.get();
    out->grad_fn = [xp, op, act]() {
      if (!xp->requires_grad) return;
      xp->ensure_grad();
      for (std::size_t i = 0; i < xp->grad.size(); ++i) {
        const double y = op->data[i];
        double local = 1.0;
        switch (act) {
          case Activation::linear: local = 1.0; break;
          case Activation::relu: local = xp->data[i] > 0.0 ? 1.0 : 0.0; break;
          case Activation::tanh: local = 1.0 - y * y; break;
          case Activation::sigmoid: local = y * (1.0 - y); break;
        }
        xp->grad[i] += local * op->grad[i];
      }
    };
  }
  return out;
}

TensorPtr row_softmax(const TensorPtr& x, const Mask* col_mask) {
  require_2d(x, "row_softmax");
  const std::size_t m = x->rows(), n = x->cols();
  if (n == 0) throw ShapeError("row_softmax: empty input " + shape_str(*x));
  if (col_mask && col_mask->size() != n)
    throw ShapeError("row_softmax: mask length " + std::to_string(col_mask->size()) +
                     " for " + shape_str(*x));
  auto out = Tensor::create({m, n});
  for (std::size_t r = 0; r < m; ++r) {
    const double* xr = x->data.data() + r * n;
    double* yr = out->data.data() + r * n;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      const double s = xr[j] - (col_mask && !(*col_mask)[j] ? kMaskPenalty : 0.0);
      yr[j] = s;
      mx = std::max(mx, s);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      yr[j] = std::exp(yr[j] - mx);
      sum += yr[j];
    }
    for (std::size_t j = 0; j < n; ++j) yr[j] /= sum;
  }
  if (wants_graph({&x})) {
    out->requires_grad = true;
    out->parents = {x};
    Tensor* xp = x.get();
    Tensor* op = out.get();
    out->grad_fn = [xp, op, m, n]() {
      if (!xp->requires_grad) return;
      xp->ensure_grad();
      for (std::size_t r = 0; r < m; ++r) {
        const double* y = op->data.data() + r * n;
        const double* g = op->grad.data() + r * n;
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += y[j] * g[j];
        for (std::size_t j = 0; j < n; ++j) xp->grad[r * n + j] += y[j] * (g[j] - dot);
      }
    };
  }
  return out;
}

TensorPtr softmax(const TensorPtr& x) {
  require_2d(x, "softmax");
  if (x->rows() != 1 || x->cols() == 0)
    throw ShapeError("softmax: expected a non-empty 1 x n tensor, got " + shape_str(*x));
  return row_softmax(x, nullptr);
}

TensorPtr mean_pool(const TensorPtr& x, const Mask& mask) {
  require_2d(x, "mean_pool");
  const std::size_t d = x->rows(), n = x->cols();
  if (mask.size() != n)
    throw ShapeError("mean_pool: mask length " + std::to_string(mask.size()) + " for " +
                     shape_str(*x));
  std::size_t active = 0;
  for (auto m : mask) active += m ? 1 : 0;
  if (active == 0) throw DomainError("mean_pool: all columns are masked");
  auto out = Tensor::create({1, d});
  for (std::size_t r = 0; r < d; ++r) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (mask[j]) acc += x->data[r * n + j];
    out->data[r] = acc / static_cast<double>(active);
  }
  if (wants_graph({&x})) {
    out->requires_grad = true;
    out->parents = {x};
    Tensor* xp = x.get();
    Tensor* op = out.get();
    out->grad_fn = [xp, op, d, n, mask, active]() {
      if (!xp->requires_grad) return;
      xp->ensure_grad();
      const double inv = 1.0 / static_cast<double>(active);
      for (std::size_t r = 0; r < d; ++r)
        for (std::size_t j = 0; j < n; ++j)
          if (mask[j]) xp->grad[r * n + j] += op->grad[r] * inv;
    };
  }
  return out;
}

TensorPtr zero_cols(const TensorPtr& x, const Mask& mask) {
  require_2d(x, "zero_cols");
  const std::size_t d = x->rows(), n = x->cols();
  if (mask.size() != n)
    throw ShapeError("zero_cols: mask length " + std::to_string(mask.size()) + " for " +
                     shape_str(*x));
  auto out = Tensor::create({d, n});
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t j = 0; j < n; ++j)
      out->data[r * n + j] = mask[j] ? x->data[r * n + j] : 0.0;
  if (wants_graph({&x})) {
    out->requires_grad = true;
    out->parents = {x};
    Tensor* xp = x.get();
    Tensor* op = out.get();
    out->grad_fn = [xp, op, d, n, mask]() {
      if (!xp->requires_grad) return;
      xp->ensure_grad();
      for (std::size_t r = 0; r < d; ++r)
        for (std::size_t j = 0; j < n; ++j)
          if (mask[j]) xp->grad[r * n + j] += op->grad[r * n + j];
    };
  }
  return out;
}

TensorPtr attend(const TensorPtr& x, const TensorPtr& a) {
  require_2d(x, "attend");
  require_2d(a, "attend");
  const std::size_t d = x->rows(), n = x->cols();
  if (a->rows() != 1 || a->cols() != n)
    throw ShapeError("attend: weights " + shape_str(*a) + " for features " + shape_str(*x));
  auto out = Tensor::create({1, d});
  std::vector<double> terms(n);
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t j = 0; j < n; ++j) terms[j] = a->data[j] * x->data[r * n + j];
    out->data[r] = kernels::pairwise_sum(terms.data(), n);
  }
  if (wants_graph({&x, &a})) {
    out->requires_grad = true;
    out->parents = {x, a};
    Tensor* xp = x.get();
    Tensor* ap = a.get();
    Tensor* op = out.get();
    out->grad_fn = [xp, ap, op, d, n]() {
      if (xp->requires_grad) {
        xp->ensure_grad();
        for (std::size_t r = 0; r < d; ++r)
          for (std::size_t j = 0; j < n; ++j)
            xp->grad[r * n + j] += op->grad[r] * ap->data[j];
      }
      if (ap->requires_grad) {
        ap->ensure_grad();
        for (std::size_t j = 0; j < n; ++j) {
          double acc = 0.0;
          for (std::size_t r = 0; r < d; ++r) acc += op->grad[r] * xp->data[r * n + j];
          ap->grad[j] += acc;
        }
      }
    };
  }
  return out;
}

TensorPtr hconcat(const TensorPtr& a, const TensorPtr& b) {
  require_2d(a, "hconcat");
  require_2d(b, "hconcat");
  if (a->rows() != b->rows())
    throw ShapeError("hconcat: row mismatch " + shape_str(*a) + " vs " + shape_str(*b));
  const std::size_t m = a->rows(), na = a->cols(), nb = b->cols();
  auto out = Tensor::create({m, na + nb});
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t j = 0; j < na; ++j) out->data[r * (na + nb) + j] = a->data[r * na + j];
    for (std::size_t j = 0; j < nb; ++j) out->data[r * (na + nb) + na + j] = b->data[r * nb + j];
  }
  if (wants_graph({&a, &b})) {
    out->requires_grad = true;
    out->parents = {a, b};
    Tensor* ap = a.get();
    Tensor* bp = b.get();
    Tensor* op = out.get();
    out->grad_fn = [ap, bp, op, m, na, nb]() {
      if (ap->requires_grad) {
        ap->ensure_grad();
        for (std::size_t r = 0; r < m; ++r)
          for (std::size_t j = 0; j < na; ++j)
            ap->grad[r * na + j] += op->grad[r * (na + nb) + j];
      }
      if (bp->requires_grad) {
        bp->ensure_grad();
        for (std::size_t r = 0; r < m; ++r)
          for (std::size_t j = 0; j < nb; ++j)
            bp->grad[r * nb + j] += op->grad[r * (na + nb) + na + j];
      }
    };
  }
  return out;
}

TensorPtr vconcat(const std::vector<TensorPtr>& parts) {
  if (parts.empty()) throw ShapeError("vconcat: no parts");
  const std::size_t n = parts[0]->cols();
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_2d(p, "vconcat");
    if (p->cols() != n)
      throw ShapeError("vconcat: column mismatch " + shape_str(*p));
    total += p->rows();
  }
  auto out = Tensor::create({total, n});
  std::size_t offset = 0;
  for (const auto& p : parts) {
    std::copy(p->data.begin(), p->data.end(), out->data.begin() + offset);
    offset += p->size();
  }
  bool track = grad_enabled();
  if (track) {
    track = false;
    for (const auto& p : parts) track = track || p->requires_grad;
  }
  if (track) {
    out->requires_grad = true;
    out->parents = parts;
    Tensor* op = out.get();
    std::vector<Tensor*> raw;
    raw.reserve(parts.size());
    for (const auto& p : parts) raw.push_back(p.get());
    out->grad_fn = [raw, op]() {
      std::size_t offset = 0;
      for (Tensor* p : raw) {
        if (p->requires_grad) {
          p->ensure_grad();
          for (std::size_t i = 0; i < p->size(); ++i) p->grad[i] += op->grad[offset + i];
        }
        offset += p->size();
      }
    };
  }
  return out;
}

TensorPtr slice_rows(const TensorPtr& x, std::size_t r0, std::size_t r1) {
  require_2d(x, "slice_rows");
  if (r0 >= r1 || r1 > x->rows())
    throw ShapeError("slice_rows: range [" + std::to_string(r0) + "," + std::to_string(r1) +
                     ") for " + shape_str(*x));
  const std::size_t n = x->cols();
  auto out = Tensor::create({r1 - r0, n});
  std::copy(x->data.begin() + r0 * n, x->data.begin() + r1 * n, out->data.begin());
  if (wants_graph({&x})) {
    out->requires_grad = true;
    out->parents = {x};
    Tensor* xp = x.get();
    Tensor* op = out.get();
    out->grad_fn = [xp, op, r0, n]() {
      if (!xp->requires_grad) return;
      xp->ensure_grad();
      for (std::size_t i = 0; i < op->size(); ++i) xp->grad[r0 * n + i] += op->grad[i];
    };
  }
  return out;
}

TensorPtr layer_norm_cols(const TensorPtr& x, const TensorPtr& gamma,
                          const TensorPtr& beta, double eps) {
  require_2d(x, "layer_norm_cols");
  const std::size_t d = x->rows(), n = x->cols();
  if (gamma->rows() != d || gamma->cols() != 1 || beta->rows() != d || beta->cols() != 1)
    throw ShapeError("layer_norm_cols: affine params must be d x 1 for " + shape_str(*x));
  auto out = Tensor::create({d, n});
  std::vector<double> mean(n), inv_std(n);
  for (std::size_t j = 0; j < n; ++j) {
    double mu = 0.0;
    for (std::size_t r = 0; r < d; ++r) mu += x->data[r * n + j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t r = 0; r < d; ++r) {
      const double diff = x->data[r * n + j] - mu;
      var += diff * diff;
    }
    var /= static_cast<double>(d);
    mean[j] = mu;
    inv_std[j] = 1.0 / std::sqrt(var + eps);
    for (std::size_t r = 0; r < d; ++r) {
      const double xhat = (x->data[r * n + j] - mu) * inv_std[j];
      out->data[r * n + j] = gamma->data[r] * xhat + beta->data[r];
    }
  }
  if (wants_graph({&x, &gamma, &beta})) {
    out->requires_grad = true;
    out->parents = {x, gamma, beta};
    Tensor* xp = x.get();
    Tensor* gp = gamma.get();
    Tensor* bp = beta.get();
    Tensor* op = out.get();
    out->grad_fn = [xp, gp, bp, op, d, n, mean, inv_std]() {
      for (std::size_t j = 0; j < n; ++j) {
        double sum_dg = 0.0, sum_dg_xhat = 0.0;
        for (std::size_t r = 0; r < d; ++r) {
          const double xhat = (xp->data[r * n + j] - mean[j]) * inv_std[j];
          const double dy = op->grad[r * n + j];
          if (gp->requires_grad) {
            gp->ensure_grad();
            gp->grad[r] += dy * xhat;
          }
          if (bp->requires_grad) {
            bp->ensure_grad();
            bp->grad[r] += dy;
          }
          sum_dg += dy * gp->data[r];
          sum_dg_xhat += dy * gp->data[r] * xhat;
        }
        if (xp->requires_grad) {
          xp->ensure_grad();
          const double m1 = sum_dg / static_cast<double>(d);
          const double m2 = sum_dg_xhat / static_cast<double>(d);
          for (std::size_t r = 0; r < d; ++r) {
            const double xhat = (xp->data[r * n + j] - mean[j]) * inv_std[j];
            const double dy = op->grad[r * n + j];
            xp->grad[r * n + j] += inv_std[j] * (dy * gp->data[r] - m1 - xhat * m2);
          }
        }
      }
    };
  }
  return out;
}

TensorPtr embedding_cols(const TensorPtr& table, const std::vector<int>& ids) {
  require_2d(table, "embedding_cols");
  const std::size_t vocab = table->rows(), d = table->cols(), n = ids.size();
  if (n == 0) throw ShapeError("embedding_cols: empty id sequence");
  for (int id : ids)
    if (id < 0 || static_cast<std::size_t>(id) >= vocab)
      throw ContractError("embedding_cols: token id " + std::to_string(id) +
                          " outside vocabulary of size " + std::to_string(vocab));
  auto out = Tensor::create({d, n});
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t r = 0; r < d; ++r)
      out->data[r * n + j] = table->data[static_cast<std::size_t>(ids[j]) * d + r];
  if (wants_graph({&table})) {
    out->requires_grad = true;
    out->parents = {table};
    Tensor* tp = table.get();
    Tensor* op = out.get();
    out->grad_fn = [tp, op, ids, d, n]() {
      if (!tp->requires_grad) return;
      tp->ensure_grad();
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t r = 0; r < d; ++r)
          tp->grad[static_cast<std::size_t>(ids[j]) * d + r] += op->grad[r * n + j];
    };
  }
  return out;
}

TensorPtr bce_loss(const TensorPtr& prob, int label, double weight) {
  if (!prob || prob->size() != 1) throw ShapeError("bce_loss: probability must be scalar");
  if (label != 0 && label != 1)
    throw ContractError("bce_loss: label must be 0 or 1, got " + std::to_string(label));
  const double raw = prob->data[0];
  const double p = std::clamp(raw, kProbClamp, 1.0 - kProbClamp);
  const double y = static_cast<double>(label);
  auto out = Tensor::create({1, 1});
  out->data[0] = -weight * (y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
  if (wants_graph({&prob})) {
    out->requires_grad = true;
    out->parents = {prob};
    Tensor* pp = prob.get();
    Tensor* op = out.get();
    const bool in_range = raw > kProbClamp && raw < 1.0 - kProbClamp;
    out->grad_fn = [pp, op, p, y, weight, in_range]() {
      if (!pp->requires_grad || !in_range) return;
      pp->ensure_grad();
      pp->grad[0] += op->grad[0] * (-weight) * (y / p - (1.0 - y) / (1.0 - p));
    };
  }
  return out;
}

TensorPtr mean_scalars(const std::vector<TensorPtr>& items) {
  if (items.empty()) throw ShapeError("mean_scalars: empty list");
  auto out = Tensor::create({1, 1});
  double acc = 0.0;
  for (const auto& t : items) {
    if (!t || t->size() != 1) throw ShapeError("mean_scalars: non-scalar item");
    acc += t->data[0];
  }
  const double inv = 1.0 / static_cast<double>(items.size());
  out->data[0] = acc * inv;
  bool track = false;
  if (grad_enabled())
    for (const auto& t : items) track = track || t->requires_grad;
  if (track) {
    out->requires_grad = true;
    out->parents = items;
    Tensor* op = out.get();
    std::vector<Tensor*> raw;
    raw.reserve(items.size());
    for (const auto& t : items) raw.push_back(t.get());
    out->grad_fn = [raw, op, inv]() {
      for (Tensor* t : raw) {
        if (!t->requires_grad) continue;
        t->ensure_grad();
        t->grad[0] += op->grad[0] * inv;
      }
    };
  }
  return out;
}

}  // namespace deceptlab::ops
