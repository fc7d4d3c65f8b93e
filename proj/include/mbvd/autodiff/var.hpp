#pragma once
// Reverse-mode automatic differentiation over dense double matrices.
//
// A Var is a handle to a node of a dynamically built expression graph. Ops
// record a backward closure only when grad mode is on and at least one input
// requires a gradient, so inference passes build no graph. Calling backward()
// on a 1x1 result accumulates d(result)/d(param) into every Param reached.

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mbvd/core/matrix.hpp"

namespace mbvd::ad {

// A trainable tensor: value plus accumulated gradient of the same shape.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;

  Param() = default;
  Param(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}
  void zero_grad() { grad.fill(0.0); }
};

struct Node {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;
  Param* param = nullptr;

  // Adds g into grad, allocating on first use.
  void accumulate(const Matrix& g);
  void accumulate(Matrix&& g);
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const Matrix& value() const { return node_->value; }
  // Empty matrix when no gradient reached this node.
  const Matrix& grad() const { return node_->grad; }
  std::size_t rows() const { return node_->value.rows(); }
  std::size_t cols() const { return node_->value.cols(); }
  bool requires_grad() const { return node_->requires_grad; }
  bool defined() const { return node_ != nullptr; }
  // Scalar value of a 1x1 Var.
  double item() const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

bool grad_enabled();

// Disables graph recording for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

Var constant(Matrix value);
// Free-standing differentiable input (tests, finite-difference probes).
Var variable(Matrix value);
// Leaf bound to a Param; backward() adds into param.grad.
Var param(Param& p);

void backward(const Var& loss);

// Linear algebra
Var matmul(const Var& a, const Var& b);
// x[r x in] * w[in x out] + b[1 x out]
Var linear(const Var& x, const Var& w, const Var& b);
// x[r x n] row i times W_i where W_i is row i of w[r x (n*m)] viewed as n x m.
Var rowwise_vecmat(const Var& x, const Var& w);

// Elementwise binary (equal shapes)
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
// a[r x c] + row[1 x c] broadcast over rows
Var add_row(const Var& a, const Var& row);
// a[r x c] * col[r x 1] broadcast over columns
Var mul_col(const Var& a, const Var& col);

Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);

// Elementwise unary
Var relu(const Var& a);
Var elu(const Var& a);
Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var abs(const Var& a);
Var square(const Var& a);
Var clamp(const Var& a, double lo, double hi);

// Structure
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(const Var& a, std::size_t begin, std::size_t end);
Var slice_rows(const Var& a, std::size_t begin, std::size_t end);
Var reshape(const Var& a, std::size_t rows, std::size_t cols);
// out[i] = a(i, index[i]); result is r x 1
Var gather_cols(const Var& a, std::span<const int> index);
// out row r = a row index[r]; indices may repeat.
Var gather_rows(const Var& a, std::span<const std::size_t> index);
Var detach(const Var& a);

// Reductions
Var sum(const Var& a);
Var mean(const Var& a);
// r x c -> r x 1
Var row_sum(const Var& a);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator*(double s, const Var& a) { return scale(a, s); }

}  // namespace mbvd::ad
