#pragma once

// Minimal dense reverse-mode automatic differentiation.
//
// A Tape records every primitive executed on it in topological order. Values are
// immutable once recorded; Tape::backward walks the record in reverse and pushes
// adjoints into the inputs of each op. Model parameters live outside the tape as
// Tensors and are bound per step with Tape::parameter; their gradients accumulate
// into Tensor::grad across backward passes until zero_grad is called.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nesua/matrix.hpp"

namespace nesua::ad {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

/// Dense float64 array of rank 0, 1 or 2 with an optional gradient buffer.
class Tensor {
 public:
  Tensor() : shape_{}, values_(1, 0.0) {}
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double v) { return Tensor(Shape{}, std::vector<double>{v}); }
  static Tensor from_matrix(const MatrixD& m);
  MatrixD to_matrix() const;

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t numel() const noexcept { return values_.size(); }
  /// Rank-2 view: rank 1 is a row vector, rank 0 is 1x1.
  std::size_t rows() const noexcept { return shape_.size() == 2 ? shape_[0] : 1; }
  std::size_t cols() const noexcept { return shape_.empty() ? 1 : shape_.back(); }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double& at(std::size_t r, std::size_t c) noexcept { return values_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const noexcept { return values_[r * cols() + c]; }
  double item() const;

  /// Empty until the first backward pass that reaches this tensor.
  std::vector<double> grad;
  bool requires_grad = false;

  bool has_grad() const noexcept { return grad.size() == values_.size(); }
  void zero_grad() { grad.assign(values_.size(), 0.0); }

 private:
  Shape shape_;
  std::vector<double> values_;
};

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while its Tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  double item() const { return value().item(); }
  /// Adjoint after Tape::backward; empty if the node did not receive one.
  std::span<const double> grad() const;
  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// The computation record. Single writer: one training step builds and consumes it.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives a gradient.
  Var constant(Tensor value);
  /// Tape-owned leaf that receives a gradient.
  Var variable(Tensor value);
  /// Leaf bound to an external parameter; backward accumulates into param.grad.
  Var parameter(Tensor& param);

  /// Reverse sweep from a scalar. Adjoints of interior nodes are recomputed on every
  /// call; tape-owned leaves and bound parameters accumulate.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }

  /// Branch taken by every piecewise op (relu, leaky_relu, clamp) in recording order.
  /// Two evaluations with equal signatures lie on the same smooth piece.
  const std::vector<std::uint8_t>& branch_signature() const noexcept { return branches_; }
  void note_branch(std::uint8_t b) { branches_.push_back(b); }

  // Op-author interface.
  Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn fn);
  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Adjoint buffer of node id, allocated (zeroed) on first access.
  std::vector<double>& grad_buffer(std::size_t id);
  const std::vector<double>& grad_view(std::size_t id) const { return nodes_[id].grad; }

 private:
  struct Node {
    Tensor value;
    std::vector<double> grad;
    bool requires_grad = false;
    bool leaf = false;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    Tensor* sink = nullptr;
  };

  Var push_leaf(Tensor value, bool requires_grad, Tensor* sink);

  std::vector<Node> nodes_;
  std::vector<std::uint8_t> branches_;
};

// ---- primitives ---------------------------------------------------------------
// Every op checks shapes and throws ContractError naming both operands on mismatch.

Var matmul(Var a, Var b);                       // (m x k)(k x n)
Var transpose(Var a);                           // rank 2
Var add(Var a, Var b);                          // same shape
Var add_row_broadcast(Var x, Var row);          // (m x n) + (1 x n)
Var subtract(Var a, Var b);
Var multiply(Var a, Var b);                     // elementwise
Var scale(Var x, double c);
Var add_scalar(Var x, double c);
Var concat_cols(Var a, Var b);                  // along the last axis
Var slice_rows(Var x, std::size_t begin, std::size_t end);
Var outer_sum(Var col_a, Var col_b);            // (m x 1),(m x 1) -> out[u][v] = a[u] + b[v]
Var leaky_relu(Var x, double negative_slope);
Var relu(Var x);
Var exp(Var x);
/// Softmax along each row restricted to entries with mask(r, c) != 0. Masked entries
/// are exactly 0 and pass back exactly 0. A row with no unmasked entry is a
/// ContractError. A null mask means every entry participates.
Var row_softmax_masked(Var x, const MaskMatrix* mask);
inline Var row_softmax(Var x) { return row_softmax_masked(x, nullptr); }
Var sum(Var x);                                 // -> scalar
Var row_sums(Var x);                            // (m x n) -> (m x 1)
Var column_sums(Var x);                         // (m x n) -> (1 x n)
/// Per column n: 1 - prod_k (1 - x[k][n]), shape (1 x n).
Var complement_product_gate(Var x);
/// Tr(X X^T) computed as the sum of squared entries.
Var trace_of_gram(Var x);
Var l2_norm(Var x);                             // -> scalar; subgradient 0 at the origin
/// Pass-through gradient on [lo, hi] (boundaries inclusive), zero outside.
Var clamp(Var x, double lo, double hi);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return subtract(a, b); }
inline Var operator*(Var a, Var b) { return multiply(a, b); }
inline Var operator*(double c, Var x) { return scale(x, c); }
inline Var operator+(Var x, double c) { return add_scalar(x, c); }

// ---- optimizer ------------------------------------------------------------------

struct AdamConfig {
  double lr = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  /// Zeroed moments shaped like params.
  static AdamState init(std::span<Tensor* const> params, AdamConfig config);
};

/// One bias-corrected Adam update using each parameter's accumulated grad (missing
/// grads count as zero). Throws ContractError when state and params disagree.
void adam_step(std::span<Tensor* const> params, AdamState& state);

void zero_grad(std::span<Tensor* const> params);

}  // namespace nesua::ad
