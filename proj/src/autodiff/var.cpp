#include "mbvd/autodiff/var.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>
#include <utility>

#include "mbvd/core/errors.hpp"
#include "mbvd/simd/kernels.hpp"

namespace mbvd::ad {
namespace {

thread_local bool g_grad_enabled = true;

void require(bool cond, const std::string& what) {
  if (!cond) throw UsageError(what);
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (!a.value().same_shape(b.value())) {
    throw UsageError(std::string(op) + ": shape mismatch " + a.value().shape_string() + " vs " +
                     b.value().shape_string());
  }
}

// Builds the result node; records parents and the backward closure only when
// some input needs a gradient.
Var make_result(Matrix value, std::initializer_list<Var> inputs, std::function<void(Node&)> fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (g_grad_enabled) {
    for (const Var& in : inputs) node->requires_grad = node->requires_grad || in.requires_grad();
  }
  if (node->requires_grad) {
    node->parents.reserve(inputs.size());
    for (const Var& in : inputs) node->parents.push_back(in.node());
    node->backward_fn = std::move(fn);
  }
  return Var(std::move(node));
}

Var make_result(Matrix value, std::span<const Var> inputs, std::function<void(Node&)> fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (g_grad_enabled) {
    for (const Var& in : inputs) node->requires_grad = node->requires_grad || in.requires_grad();
  }
  if (node->requires_grad) {
    node->parents.reserve(inputs.size());
    for (const Var& in : inputs) node->parents.push_back(in.node());
    node->backward_fn = std::move(fn);
  }
  return Var(std::move(node));
}

// Elementwise unary op; dfn(x, y) is dy/dx.
template <typename F, typename DF>
Var unary(const Var& a, F fn, DF dfn) {
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = fn(x[i]);
  return make_result(std::move(y), {a}, [dfn](Node& self) {
    Node& in = *self.parents[0];
    if (!in.requires_grad) return;
    Matrix g(self.grad.rows(), self.grad.cols());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = self.grad[i] * dfn(in.value[i], self.value[i]);
    in.accumulate(std::move(g));
  });
}

}  // namespace

void Node::accumulate(const Matrix& g) {
  if (grad.empty()) {
    grad = g;
  } else {
    grad += g;
  }
}

void Node::accumulate(Matrix&& g) {
  if (grad.empty()) {
    grad = std::move(g);
  } else {
    grad += g;
  }
}

double Var::item() const {
  require(value().size() == 1, "item() on non-scalar " + value().shape_string());
  return value()[0];
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Var constant(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var variable(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = g_grad_enabled;
  return Var(std::move(node));
}

Var param(Param& p) {
  auto node = std::make_shared<Node>();
  node->value = p.value;
  node->requires_grad = g_grad_enabled;
  if (node->requires_grad) node->param = &p;
  return Var(std::move(node));
}

void backward(const Var& loss) {
  require(loss.defined() && loss.value().size() == 1, "backward() needs a scalar loss");
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->accumulate(Matrix(1, 1, 1.0));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node& node = **it;
    if (node.grad.empty()) continue;
    if (node.backward_fn) node.backward_fn(node);
    if (node.param != nullptr) node.param->grad += node.grad;
  }
}

Var matmul(const Var& a, const Var& b) {
  require(a.cols() == b.rows(), "matmul: " + a.value().shape_string() + " * " + b.value().shape_string());
  return make_result(mbvd::matmul(a.value(), b.value()), {a, b}, [](Node& self) {
    Node& x = *self.parents[0];
    Node& w = *self.parents[1];
    if (x.requires_grad) x.accumulate(matmul_nt(self.grad, w.value));
    if (w.requires_grad) w.accumulate(matmul_tn(x.value, self.grad));
  });
}

Var linear(const Var& x, const Var& w, const Var& b) {
  require(x.cols() == w.rows(), "linear: input " + x.value().shape_string() + " vs weight " + w.value().shape_string());
  require(b.rows() == 1 && b.cols() == w.cols(), "linear: bias " + b.value().shape_string() + " vs weight " + w.value().shape_string());
  Matrix y(x.rows(), w.cols());
  for (std::size_t r = 0; r < y.rows(); ++r) std::copy_n(b.value().data(), y.cols(), y.data() + r * y.cols());
  simd::gemm_nn(x.rows(), w.cols(), x.cols(), x.value().data(), w.value().data(), y.data());
  return make_result(std::move(y), {x, w, b}, [](Node& self) {
    Node& in = *self.parents[0];
    Node& weight = *self.parents[1];
    Node& bias = *self.parents[2];
    if (in.requires_grad) in.accumulate(matmul_nt(self.grad, weight.value));
    if (weight.requires_grad) weight.accumulate(matmul_tn(in.value, self.grad));
    if (bias.requires_grad) {
      Matrix gb(1, self.grad.cols());
      for (std::size_t r = 0; r < self.grad.rows(); ++r) simd::axpy(1.0, self.grad.row(r).data(), gb.data(), gb.cols());
      bias.accumulate(std::move(gb));
    }
  });
}

Var rowwise_vecmat(const Var& x, const Var& w) {
  const std::size_t r = x.rows();
  const std::size_t n = x.cols();
  require(w.rows() == r && n > 0 && w.cols() % n == 0,
          "rowwise_vecmat: " + x.value().shape_string() + " with " + w.value().shape_string());
  const std::size_t m = w.cols() / n;
  Matrix y(r, m);
  for (std::size_t i = 0; i < r; ++i) {
    const double* wi = w.value().data() + i * n * m;
    for (std::size_t p = 0; p < n; ++p) simd::axpy(x.value()(i, p), wi + p * m, y.data() + i * m, m);
  }
  return make_result(std::move(y), {x, w}, [n, m](Node& self) {
    Node& xn = *self.parents[0];
    Node& wn = *self.parents[1];
    const std::size_t rows = self.grad.rows();
    if (xn.requires_grad) {
      Matrix gx(rows, n);
      for (std::size_t i = 0; i < rows; ++i) {
        const double* wi = wn.value.data() + i * n * m;
        for (std::size_t p = 0; p < n; ++p) gx(i, p) = simd::dot(self.grad.data() + i * m, wi + p * m, m);
      }
      xn.accumulate(std::move(gx));
    }
    if (wn.requires_grad) {
      Matrix gw(rows, n * m);
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t p = 0; p < n; ++p) {
          simd::axpy(xn.value(i, p), self.grad.data() + i * m, gw.data() + i * n * m + p * m, m);
        }
      }
      wn.accumulate(std::move(gw));
    }
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Matrix y = a.value();
  y += b.value();
  return make_result(std::move(y), {a, b}, [](Node& self) {
    for (auto& p : self.parents) {
      if (p->requires_grad) p->accumulate(self.grad);
    }
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Matrix y = a.value();
  y -= b.value();
  return make_result(std::move(y), {a, b}, [](Node& self) {
    if (self.parents[0]->requires_grad) self.parents[0]->accumulate(self.grad);
    if (self.parents[1]->requires_grad) {
      Matrix g = self.grad;
      g *= -1.0;
      self.parents[1]->accumulate(std::move(g));
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Matrix y(a.rows(), a.cols());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] * b.value()[i];
  return make_result(std::move(y), {a, b}, [](Node& self) {
    Node& x = *self.parents[0];
    Node& z = *self.parents[1];
    if (x.requires_grad) {
      Matrix g(self.grad.rows(), self.grad.cols());
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = self.grad[i] * z.value[i];
      x.accumulate(std::move(g));
    }
    if (z.requires_grad) {
      Matrix g(self.grad.rows(), self.grad.cols());
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = self.grad[i] * x.value[i];
      z.accumulate(std::move(g));
    }
  });
}

Var add_row(const Var& a, const Var& row) {
  require(row.rows() == 1 && row.cols() == a.cols(),
          "add_row: " + a.value().shape_string() + " + " + row.value().shape_string());
  Matrix y = a.value();
  for (std::size_t r = 0; r < y.rows(); ++r) simd::axpy(1.0, row.value().data(), y.data() + r * y.cols(), y.cols());
  return make_result(std::move(y), {a, row}, [](Node& self) {
    if (self.parents[0]->requires_grad) self.parents[0]->accumulate(self.grad);
    if (self.parents[1]->requires_grad) {
      Matrix g(1, self.grad.cols());
      for (std::size_t r = 0; r < self.grad.rows(); ++r) simd::axpy(1.0, self.grad.row(r).data(), g.data(), g.cols());
      self.parents[1]->accumulate(std::move(g));
    }
  });
}

Var mul_col(const Var& a, const Var& col) {
  require(col.cols() == 1 && col.rows() == a.rows(),
          "mul_col: " + a.value().shape_string() + " * " + col.value().shape_string());
  Matrix y = a.value();
  for (std::size_t r = 0; r < y.rows(); ++r) {
    const double s = col.value()[r];
    for (double& v : y.row(r)) v *= s;
  }
  return make_result(std::move(y), {a, col}, [](Node& self) {
    Node& x = *self.parents[0];
    Node& c = *self.parents[1];
    if (x.requires_grad) {
      Matrix g = self.grad;
      for (std::size_t r = 0; r < g.rows(); ++r) {
        const double s = c.value[r];
        for (double& v : g.row(r)) v *= s;
      }
      x.accumulate(std::move(g));
    }
    if (c.requires_grad) {
      Matrix g(c.value.rows(), 1);
      for (std::size_t r = 0; r < g.rows(); ++r) g[r] = simd::dot(self.grad.row(r).data(), x.value.row(r).data(), x.value.cols());
      c.accumulate(std::move(g));
    }
  });
}

Var scale(const Var& a, double s) {
  Matrix y = a.value();
  y *= s;
  return make_result(std::move(y), {a}, [s](Node& self) {
    Matrix g = self.grad;
    g *= s;
    self.parents[0]->accumulate(std::move(g));
  });
}

Var add_scalar(const Var& a, double s) {
  Matrix y = a.value();
  for (double& v : y.values()) v += s;
  return make_result(std::move(y), {a}, [](Node& self) { self.parents[0]->accumulate(self.grad); });
}

Var relu(const Var& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var elu(const Var& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : std::expm1(x); },
      [](double x, double y) { return x > 0.0 ? 1.0 : y + 1.0; });
}

Var tanh(const Var& a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(const Var& a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var exp(const Var& a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(const Var& a) {
  return unary(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var abs(const Var& a) {
  return unary(
      a, [](double x) { return std::abs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var square(const Var& a) {
  return unary(
      a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var clamp(const Var& a, double lo, double hi) {
  require(lo <= hi, "clamp: lo > hi");
  return unary(
      a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    require(p.rows() == rows, "concat_cols: row mismatch");
    cols += p.cols();
  }
  Matrix y(rows, cols);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(p.value().data() + r * p.cols(), p.cols(), y.data() + r * cols + offset);
    offset += p.cols();
  }
  return make_result(std::move(y), parts, [](Node& self) {
    std::size_t off = 0;
    const std::size_t total = self.grad.cols();
    for (auto& p : self.parents) {
      const std::size_t c = p->value.cols();
      if (p->requires_grad) {
        Matrix g(p->value.rows(), c);
        for (std::size_t r = 0; r < g.rows(); ++r) std::copy_n(self.grad.data() + r * total + off, c, g.data() + r * c);
        p->accumulate(std::move(g));
      }
      off += c;
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), "concat_rows: no inputs");
  const std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  for (const Var& p : parts) {
    require(p.cols() == cols, "concat_rows: column mismatch");
    rows += p.rows();
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  for (const Var& p : parts) data.insert(data.end(), p.value().values().begin(), p.value().values().end());
  return make_result(Matrix(rows, cols, std::move(data)), parts, [](Node& self) {
    std::size_t off = 0;
    for (auto& p : self.parents) {
      const std::size_t n = p->value.size();
      if (p->requires_grad) {
        Matrix g(p->value.rows(), p->value.cols());
        std::copy_n(self.grad.data() + off, n, g.data());
        p->accumulate(std::move(g));
      }
      off += n;
    }
  });
}

Var slice_cols(const Var& a, std::size_t begin, std::size_t end) {
  require(begin <= end && end <= a.cols(), "slice_cols: bad range");
  const std::size_t c = end - begin;
  Matrix y(a.rows(), c);
  for (std::size_t r = 0; r < a.rows(); ++r) std::copy_n(a.value().data() + r * a.cols() + begin, c, y.data() + r * c);
  return make_result(std::move(y), {a}, [begin, c](Node& self) {
    Node& in = *self.parents[0];
    Matrix g(in.value.rows(), in.value.cols());
    for (std::size_t r = 0; r < g.rows(); ++r) std::copy_n(self.grad.data() + r * c, c, g.data() + r * g.cols() + begin);
    in.accumulate(std::move(g));
  });
}

Var slice_rows(const Var& a, std::size_t begin, std::size_t end) {
  require(begin <= end && end <= a.rows(), "slice_rows: bad range");
  const std::size_t c = a.cols();
  std::vector<double> data(a.value().data() + begin * c, a.value().data() + end * c);
  return make_result(Matrix(end - begin, c, std::move(data)), {a}, [begin](Node& self) {
    Node& in = *self.parents[0];
    Matrix g(in.value.rows(), in.value.cols());
    std::copy_n(self.grad.data(), self.grad.size(), g.data() + begin * g.cols());
    in.accumulate(std::move(g));
  });
}

Var reshape(const Var& a, std::size_t rows, std::size_t cols) {
  require(rows * cols == a.value().size(), "reshape: element count mismatch");
  Matrix y = a.value();
  y.reshape(rows, cols);
  return make_result(std::move(y), {a}, [](Node& self) {
    Node& in = *self.parents[0];
    Matrix g = self.grad;
    g.reshape(in.value.rows(), in.value.cols());
    in.accumulate(std::move(g));
  });
}

Var gather_cols(const Var& a, std::span<const int> index) {
  require(index.size() == a.rows(), "gather_cols: index count != rows");
  Matrix y(a.rows(), 1);
  std::vector<int> idx(index.begin(), index.end());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    require(idx[r] >= 0 && static_cast<std::size_t>(idx[r]) < a.cols(), "gather_cols: index out of range");
    y[r] = a.value()(r, idx[r]);
  }
  return make_result(std::move(y), {a}, [idx = std::move(idx)](Node& self) {
    Node& in = *self.parents[0];
    Matrix g(in.value.rows(), in.value.cols());
    for (std::size_t r = 0; r < g.rows(); ++r) g(r, idx[r]) = self.grad[r];
    in.accumulate(std::move(g));
  });
}

Var gather_rows(const Var& a, std::span<const std::size_t> index) {
  const std::size_t c = a.cols();
  Matrix y(index.size(), c);
  std::vector<std::size_t> idx(index.begin(), index.end());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    require(idx[r] < a.rows(), "gather_rows: index out of range");
    std::copy_n(a.value().data() + idx[r] * c, c, y.data() + r * c);
  }
  return make_result(std::move(y), {a}, [idx = std::move(idx)](Node& self) {
    Node& in = *self.parents[0];
    const std::size_t cols = in.value.cols();
    Matrix g(in.value.rows(), cols);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      double* dst = g.data() + idx[r] * cols;
      const double* src = self.grad.data() + r * cols;
      for (std::size_t j = 0; j < cols; ++j) dst[j] += src[j];
    }
    in.accumulate(std::move(g));
  });
}

Var detach(const Var& a) { return constant(a.value()); }

Var sum(const Var& a) {
  return make_result(Matrix(1, 1, a.value().sum()), {a}, [](Node& self) {
    Node& in = *self.parents[0];
    in.accumulate(Matrix(in.value.rows(), in.value.cols(), self.grad[0]));
  });
}

Var mean(const Var& a) {
  require(a.value().size() > 0, "mean of empty matrix");
  const double n = static_cast<double>(a.value().size());
  return make_result(Matrix(1, 1, a.value().sum() / n), {a}, [n](Node& self) {
    Node& in = *self.parents[0];
    in.accumulate(Matrix(in.value.rows(), in.value.cols(), self.grad[0] / n));
  });
}

Var row_sum(const Var& a) {
  Matrix y(a.rows(), 1);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double s = 0.0;
    for (double v : a.value().row(r)) s += v;
    y[r] = s;
  }
  return make_result(std::move(y), {a}, [](Node& self) {
    Node& in = *self.parents[0];
    Matrix g(in.value.rows(), in.value.cols());
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (double& v : g.row(r)) v = self.grad[r];
    }
    in.accumulate(std::move(g));
  });
}

}  // namespace mbvd::ad
