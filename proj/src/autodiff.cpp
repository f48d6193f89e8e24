// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparse_evolve/autodiff.hpp"

#include <cmath>

#include "sparse_evolve/error.hpp"

namespace sparse_evolve {

namespace {

void accumulate(Tensor& dst, const Tensor& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

NodeId Graph::push(std::string op, std::vector<NodeId> inputs, Tensor value,
                   std::function<void(const Tensor&)> backward) {
  if (!value.all_finite()) {
    throw NumericError("non-finite value produced by " + op + " (node " + std::to_string(nodes_.size()) + ")");
  }
  nodes_.push_back(Node{std::move(op), std::move(inputs), std::move(value), Tensor{}, std::move(backward)});
  return nodes_.size() - 1;
}

Tensor& Graph::grad_slot(NodeId id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

NodeId Graph::input(Tensor value) { return push("input", {}, std::move(value), nullptr); }

NodeId Graph::masked_linear(NodeId x, SparseParam& weight, SparseParam* bias) {
  const Tensor& xv = value(x);
  if (xv.rank() != 2 || weight.values.rank() != 2 || xv.dim(1) != weight.values.dim(0)) {
    throw DimensionError("masked_linear: input " + shape_str(xv.shape()) + " vs weight " +
                         shape_str(weight.values.shape()));
  }
  if (weight.mask.shape() != weight.values.shape()) {
    throw DimensionError("masked_linear: mask shape differs from weight shape for " + weight.name);
  }
  const std::size_t batch = xv.dim(0), in = xv.dim(1), out = weight.values.dim(1);
  if (bias && (bias->values.rank() != 1 || bias->values.dim(0) != out)) {
    throw DimensionError("masked_linear: bias " + shape_str(bias->values.shape()) + " for " +
                         std::to_string(out) + " outputs");
  }
  Tensor w = weight.effective();
  Tensor y({batch, out});
  const Tensor be = bias ? bias->effective() : Tensor({out});
  for (std::size_t b = 0; b < batch; ++b) {
    double* yrow = &y[b * out];
    for (std::size_t o = 0; o < out; ++o) yrow[o] = be[o];
    for (std::size_t i = 0; i < in; ++i) {
      const double xi = xv[b * in + i];
      if (xi == 0.0) continue;
      const double* wrow = w.data().data() + i * out;
      for (std::size_t o = 0; o < out; ++o) yrow[o] += xi * wrow[o];
    }
  }
  SparseParam* wp = &weight;
  return push("masked_linear", {x}, std::move(y),
              [this, x, wp, bias, w = std::move(w), batch, in, out](const Tensor& g) {
                const Tensor& xv = nodes_[x].value;
                if (wp->requires_grad) {
                  Tensor& dw = wp->dense_grad;
                  for (std::size_t b = 0; b < batch; ++b) {
                    for (std::size_t i = 0; i < in; ++i) {
                      const double xi = xv[b * in + i];
                      if (xi == 0.0) continue;
                      double* drow = &dw[i * out];
                      const double* grow = g.data().data() + b * out;
                      for (std::size_t o = 0; o < out; ++o) drow[o] += xi * grow[o];
                    }
                  }
                }
                if (bias && bias->requires_grad) {
                  for (std::size_t b = 0; b < batch; ++b) {
                    for (std::size_t o = 0; o < out; ++o) bias->dense_grad[o] += g[b * out + o];
                  }
                }
                Tensor& dx = grad_slot(x);
                for (std::size_t b = 0; b < batch; ++b) {
                  const double* grow = g.data().data() + b * out;
                  for (std::size_t i = 0; i < in; ++i) {
                    const double* wrow = w.data().data() + i * out;
                    double acc = 0.0;
                    for (std::size_t o = 0; o < out; ++o) acc += grow[o] * wrow[o];
                    dx[b * in + i] += acc;
                  }
                }
              });
}

NodeId Graph::conv2d(NodeId x, SparseParam& kernel, std::size_t padding) {
  const Tensor& xv = value(x);
  const Tensor& kv = kernel.values;
  if (xv.rank() != 4 || kv.rank() != 4 || xv.dim(1) != kv.dim(1)) {
    throw DimensionError("conv2d: input " + shape_str(xv.shape()) + " vs kernel " + shape_str(kv.shape()));
  }
  if (kernel.mask.shape() != kv.shape()) {
    throw DimensionError("conv2d: mask shape differs from kernel shape for " + kernel.name);
  }
  const std::size_t batch = xv.dim(0), cin = xv.dim(1), h = xv.dim(2), wd = xv.dim(3);
  const std::size_t cout = kv.dim(0), kh = kv.dim(2), kw = kv.dim(3);
  if (kh > h + 2 * padding || kw > wd + 2 * padding) {
    throw DimensionError("conv2d: kernel " + shape_str(kv.shape()) + " larger than padded input " +
                         shape_str(xv.shape()));
  }
  const std::size_t oh = h + 2 * padding - kh + 1, ow = wd + 2 * padding - kw + 1;
  const auto pad = static_cast<std::ptrdiff_t>(padding);
  Tensor k = kernel.effective();
  Tensor y({batch, cout, oh, ow});

  // Visits every (output, input, kernel) triple that lands inside the input.
  auto for_each_tap = [=](auto&& fn) {
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t co = 0; co < cout; ++co)
        for (std::size_t ci = 0; ci < cin; ++ci)
          for (std::size_t u = 0; u < kh; ++u)
            for (std::size_t v = 0; v < kw; ++v) {
              const std::size_t kidx = ((co * cin + ci) * kh + u) * kw + v;
              for (std::size_t r = 0; r < oh; ++r) {
                const auto ir = static_cast<std::ptrdiff_t>(r + u) - pad;
                if (ir < 0 || ir >= static_cast<std::ptrdiff_t>(h)) continue;
                for (std::size_t c = 0; c < ow; ++c) {
                  const auto ic = static_cast<std::ptrdiff_t>(c + v) - pad;
                  if (ic < 0 || ic >= static_cast<std::ptrdiff_t>(wd)) continue;
                  const std::size_t xidx = ((b * cin + ci) * h + static_cast<std::size_t>(ir)) * wd +
                                           static_cast<std::size_t>(ic);
                  const std::size_t yidx = ((b * cout + co) * oh + r) * ow + c;
                  fn(yidx, xidx, kidx);
                }
              }
            }
  };

  for_each_tap([&](std::size_t yi, std::size_t xi, std::size_t ki) { y[yi] += xv[xi] * k[ki]; });
  SparseParam* kp = &kernel;
  return push("conv2d", {x}, std::move(y), [this, x, kp, k = std::move(k), for_each_tap](const Tensor& g) {
    const Tensor& xv = nodes_[x].value;
    Tensor& dx = grad_slot(x);
    const bool want_k = kp->requires_grad;
    Tensor& dk = kp->dense_grad;
    for_each_tap([&](std::size_t yi, std::size_t xi, std::size_t ki) {
      dx[xi] += g[yi] * k[ki];
      if (want_k) dk[ki] += g[yi] * xv[xi];
    });
  });
}

NodeId Graph::unary(const char* op, NodeId x, double (*f)(double, double),
                    double (*df)(double, double, double), double arg) {
  const Tensor& xv = value(x);
  Tensor y(xv.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(xv[i], arg);
  const NodeId id = nodes_.size();
  return push(op, {x}, std::move(y), [this, x, id, df, arg](const Tensor& g) {
    const Tensor& xv = nodes_[x].value;
    const Tensor& yv = nodes_[id].value;
    Tensor& dx = grad_slot(x);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g[i] * df(xv[i], yv[i], arg);
  });
}

NodeId Graph::relu(NodeId x) {
  return unary(
      "relu", x, [](double v, double) { return v > 0.0 ? v : 0.0; },
      [](double v, double, double) { return v > 0.0 ? 1.0 : 0.0; }, 0.0);
}

NodeId Graph::leaky_relu(NodeId x, double slope) {
  return unary(
      "leaky_relu", x, [](double v, double s) { return v > 0.0 ? v : s * v; },
      [](double v, double, double s) { return v > 0.0 ? 1.0 : s; }, slope);
}

NodeId Graph::tanh(NodeId x) {
  return unary(
      "tanh", x, [](double v, double) { return std::tanh(v); },
      [](double, double y, double) { return 1.0 - y * y; }, 0.0);
}

NodeId Graph::sigmoid(NodeId x) {
  return unary(
      "sigmoid", x, [](double v, double) { return stable_sigmoid(v); },
      [](double, double y, double) { return y * (1.0 - y); }, 0.0);
}

NodeId Graph::reshape(NodeId x, Shape shape) {
  Tensor y = value(x).reshaped(std::move(shape));
  return push("reshape", {x}, std::move(y), [this, x](const Tensor& g) { accumulate(grad_slot(x), g); });
}

NodeId Graph::add(NodeId a, NodeId b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (av.shape() != bv.shape()) {
    throw DimensionError("add: " + shape_str(av.shape()) + " vs " + shape_str(bv.shape()));
  }
  Tensor y = av;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  return push("add", {a, b}, std::move(y), [this, a, b](const Tensor& g) {
    accumulate(grad_slot(a), g);
    accumulate(grad_slot(b), g);
  });
}

NodeId Graph::scale(NodeId x, double factor) {
  Tensor y = value(x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= factor;
  return push("scale", {x}, std::move(y), [this, x, factor](const Tensor& g) {
    Tensor& dx = grad_slot(x);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += factor * g[i];
  });
}

NodeId Graph::sum(NodeId x) {
  double s = 0.0;
  for (double v : value(x).data()) s += v;
  return push("sum", {x}, Tensor({1}, {s}), [this, x](const Tensor& g) {
    Tensor& dx = grad_slot(x);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g[0];
  });
}

NodeId Graph::bce_logits(NodeId logits, std::span<const double> targets) {
  const Tensor& lv = value(logits);
  const bool column = lv.rank() == 2 && lv.dim(1) == 1;
  if (!(lv.rank() == 1 || column) || lv.size() != targets.size() || lv.empty()) {
    throw DimensionError("bce_logits: logits " + shape_str(lv.shape()) + " vs " +
                         std::to_string(targets.size()) + " targets");
  }
  for (double t : targets) {
    if (t != 0.0 && t != 1.0) throw DomainError("bce_logits: target " + std::to_string(t) + " not in {0,1}");
  }
  const auto n = static_cast<double>(lv.size());
  double total = 0.0;
  for (std::size_t i = 0; i < lv.size(); ++i) {
    const double l = lv[i];
    total += std::max(l, 0.0) - l * targets[i] + std::log1p(std::exp(-std::abs(l)));
  }
  std::vector<double> t(targets.begin(), targets.end());
  return push("bce_logits", {logits}, Tensor({1}, {total / n}),
              [this, logits, t = std::move(t), n](const Tensor& g) {
                const Tensor& lv = nodes_[logits].value;
                Tensor& dl = grad_slot(logits);
                for (std::size_t i = 0; i < dl.size(); ++i) dl[i] += g[0] * (stable_sigmoid(lv[i]) - t[i]) / n;
              });
}

void Graph::backward(NodeId loss) {
  if (loss >= nodes_.size()) throw ContractError("backward: unknown loss node");
  if (nodes_[loss].value.size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " + shape_str(nodes_[loss].value.shape()));
  }
  for (auto& n : nodes_) n.grad = Tensor{};
  grad_slot(loss)[0] = 1.0;
  for (std::size_t i = loss + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty() || !n.backward) continue;
    n.backward(n.grad);
  }
}

}  // namespace sparse_evolve
