#include "nesua/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "nesua/errors.hpp"

namespace nesua::ad {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {

std::size_t product(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw ContractError(std::string(op) + ": incompatible shapes " + shape_string(a) + " and " +
                      shape_string(b));
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const std::string& why) {
  throw ContractError(std::string(op) + ": operand " + shape_string(a) + " " + why);
}

void require_rank2(const char* op, const Tensor& t) {
  if (t.rank() != 2) shape_error(op, t.shape(), "must be rank 2");
}

void require_same_tape(const char* op, Var a, Var b) {
  if (!a.valid() || !b.valid() || a.tape() != b.tape()) {
    throw ContractError(std::string(op) + ": operands are not recorded on the same tape");
  }
}

Tape& tape_of(const char* op, Var a) {
  if (!a.valid()) throw ContractError(std::string(op) + ": operand is not recorded on a tape");
  return *a.tape();
}

// C (m x n) += A (m x k) * B (k x n)
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      if (aip == 0.0) continue;
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

// C (m x k) += G (m x n) * B^T, with B (k x n)
void gemm_nt(const double* g, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* gi = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b + p * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += gi[j] * bp[j];
      c[i * k + p] += acc;
    }
  }
}

// C (k x n) += A^T * G, with A (m x k), G (m x n)
void gemm_tn(const double* a, const double* g, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* gi = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      if (aip == 0.0) continue;
      double* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += aip * gi[j];
    }
  }
}

}  // namespace

// ---- Tensor -----------------------------------------------------------------------

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), values_(product(shape_), fill) {
  if (shape_.size() > 2) throw ContractError("Tensor: rank " + std::to_string(shape_.size()) + " unsupported");
}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_.size() > 2) throw ContractError("Tensor: rank " + std::to_string(shape_.size()) + " unsupported");
  if (values_.size() != product(shape_)) {
    throw ContractError("Tensor: " + std::to_string(values_.size()) + " values do not fill shape " +
                        shape_string(shape_));
  }
}

Tensor Tensor::from_matrix(const MatrixD& m) { return Tensor({m.rows(), m.cols()}, m.data()); }

MatrixD Tensor::to_matrix() const { return MatrixD(rows(), cols(), values_); }

double Tensor::item() const {
  if (values_.size() != 1) throw ContractError("Tensor::item: shape " + shape_string(shape_) + " is not a scalar");
  return values_[0];
}

// ---- Var / Tape -------------------------------------------------------------------

const Tensor& Var::value() const {
  if (!tape_) throw ContractError("Var: not recorded on a tape");
  return tape_->value(id_);
}

std::span<const double> Var::grad() const {
  if (!tape_) throw ContractError("Var: not recorded on a tape");
  return tape_->grad_view(id_);
}

Var Tape::push_leaf(Tensor value, bool requires_grad, Tensor* sink) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.leaf = true;
  n.sink = sink;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) { return push_leaf(std::move(value), false, nullptr); }

Var Tape::variable(Tensor value) { return push_leaf(std::move(value), true, nullptr); }

Var Tape::parameter(Tensor& param) {
  Tensor copy(param.shape(), std::vector<double>(param.values().begin(), param.values().end()));
  return push_leaf(std::move(copy), true, &param);
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = std::any_of(inputs.begin(), inputs.end(),
                                [this](std::size_t i) { return nodes_[i].requires_grad; });
  if (n.requires_grad) n.backward = std::move(fn);
  n.inputs = std::move(inputs);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

std::vector<double>& Tape::grad_buffer(std::size_t id) {
  auto& n = nodes_[id];
  if (n.grad.size() != n.value.numel()) n.grad.assign(n.value.numel(), 0.0);
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw ContractError("Tape::backward: loss was recorded on another tape");
  if (value(loss.id()).numel() != 1) {
    throw ContractError("Tape::backward: loss must be scalar, got shape " +
                        shape_string(value(loss.id()).shape()));
  }
  for (auto& n : nodes_) {
    if (!n.leaf || n.sink) n.grad.clear();
  }
  if (!nodes_[loss.id()].requires_grad) return;
  grad_buffer(loss.id())[0] += 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, i);
  }
  for (auto& n : nodes_) {
    if (!n.sink || n.grad.empty()) continue;
    if (!n.sink->has_grad()) n.sink->zero_grad();
    for (std::size_t j = 0; j < n.grad.size(); ++j) n.sink->grad[j] += n.grad[j];
  }
}

// ---- primitives -------------------------------------------------------------------

Var matmul(Var a, Var b) {
  require_same_tape("matmul", a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require_rank2("matmul", A);
  require_rank2("matmul", B);
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  if (B.rows() != k) shape_error("matmul", A.shape(), B.shape());
  Tensor out({m, n});
  gemm_nn(A.values().data(), B.values().data(), out.values().data(), m, k, n);
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(out), {ia, ib}, [ia, ib, m, k, n](Tape& t, std::size_t self) {
    const auto& g = t.grad_view(self);
    if (t.requires_grad(ia)) gemm_nt(g.data(), t.value(ib).values().data(), t.grad_buffer(ia).data(), m, k, n);
    if (t.requires_grad(ib)) gemm_tn(t.value(ia).values().data(), g.data(), t.grad_buffer(ib).data(), m, k, n);
  });
}

Var transpose(Var a) {
  Tape& tape = tape_of("transpose", a);
  const Tensor& A = a.value();
  require_rank2("transpose", A);
  const std::size_t m = A.rows(), n = A.cols();
  Tensor out({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(j, i) = A.at(i, j);
  const std::size_t ia = a.id();
  return tape.record(std::move(out), {ia}, [ia, m, n](Tape& t, std::size_t self) {
    const auto& g = t.grad_view(self);
    auto& ga = t.grad_buffer(ia);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[j * m + i];
  });
}

namespace {

template <typename Fwd>
Var binary_elementwise(const char* op, Var a, Var b, Fwd fwd, double sign_b, bool product_rule) {
  require_same_tape(op, a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.shape() != B.shape()) shape_error(op, A.shape(), B.shape());
  Tensor out(A.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = fwd(A[i], B[i]);
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(out), {ia, ib}, [ia, ib, sign_b, product_rule](Tape& t, std::size_t self) {
    const auto& g = t.grad_view(self);
    if (t.requires_grad(ia)) {
      auto& ga = t.grad_buffer(ia);
      if (product_rule) {
        const auto vb = t.value(ib).values();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
    }
    if (t.requires_grad(ib)) {
      auto& gb = t.grad_buffer(ib);
      if (product_rule) {
        const auto va = t.value(ia).values();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += sign_b * g[i];
      }
    }
  });
}

}  // namespace

Var add(Var a, Var b) {
  return binary_elementwise("add", a, b, [](double x, double y) { return x + y; }, 1.0, false);
}

Var subtract(Var a, Var b) {
  return binary_elementwise("subtract", a, b, [](double x, double y) { return x - y; }, -1.0, false);
}

Var multiply(Var a, Var b) {
  return binary_elementwise("multiply", a, b, [](double x, double y) { return x * y; }, 1.0, true);
}

Var add_row_broadcast(Var x, Var row) {
  require_same_tape("add_row_broadcast", x, row);
  const Tensor& X = x.value();
  const Tensor& R = row.value();
  require_rank2("add_row_broadcast", X);
  if (R.numel() != X.cols() || R.rows() != 1) shape_error("add_row_broadcast", X.shape(), R.shape());
  const std::size_t m = X.rows(), n = X.cols();
  Tensor out(X.shape());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) = X.at(i, j) + R[j];
  const std::size_t ix = x.id(), ir = row.id();
  return x.tape()->record(std::move(out), {ix, ir}, [ix, ir, m, n](Tape& t, std::size_t self) {
    const auto& g = t.grad_view(self);
    if (t.requires_grad(ix)) {
      auto& gx = t.grad_buffer(ix);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
    if (t.requires_grad(ir)) {
      auto& gr = t.grad_buffer(ir);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gr[j] += g[i * n + j];
    }
  });
}

Var scale(Var x, double c) {
  Tape& tape = tape_of("scale", x);
  Tensor out(x.shape());
  const auto& X = x.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = c * X[i];
  const std::size_t ix = x.id();
  return tape.record(std::move(out), {ix}, [ix, c](Tape& t, std::size_t self) {
    const auto& g = t.grad_view(self);
    auto& gx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += c * g[i];
  });
}

Var add_scalar(Var x, double c) {
  Tape& tape = tape_of("add_scalar", x);
  Tensor out(x.shape());
  const auto& X = x.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = X[i] + c;
  const std::size_t ix = x.id();
  return tape.record(std::move(out), {ix}, [ix](Tape& t, std::size_t self) {
    const auto& g = t.grad_view(self);
    auto& gx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Var concat_cols(Var a, Var b) {
  require_same_tape("concat_cols", a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rank() == 0 || B.rank() == 0 || A.rank() != B.rank() || A.rows() != B.rows()) {
    shape_error("concat_cols", A.shape(), B.shape());
  }
  const std::size_t m = A.rows(), p = A.cols(), q = B.cols();
  Shape shape = A.rank() == 1 ? Shape{p + q} : Shape{m, p + q};
  Tensor out(shape);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < p; ++j) out[i * (p + q) + j] = A[i * p + j];
    for (std::size_t j = 0; j < q; ++j) out[i * (p + q) + p + j] = B[i * q + j];
  }
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(out), {ia, ib}, [ia, ib, m, p, q](Tape& t, std::size_t self) {
    const auto& g = t.grad_view(self);
    if (t.requires_grad(ia)) {
      auto& ga = t.grad_buffer(ia);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < p; ++j) ga[i * p + j] += g[i * (p + q) + j];
    }
    if (t.requires_grad(ib)) {
      auto& gb = t.grad_buffer(ib);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < q; ++j) gb[i * q + j] += g[i * (p + q) + p + j];
    }
  });
}

Var slice_rows(Var x, std::size_t begin, std::size_t end) {
  Tape& tape = tape_of("slice_rows", x);
  const Tensor& X = x.value();
  require_rank2("slice_rows", X);
  if (begin > end || end > X.rows()) {
    shape_error("slice_rows", X.shape(),
                "cannot be sliced to rows [" + std::to_string(begin) + ", " + std::to_string(end) + ")");
  }
  const std::size_t n = X.cols();
  Tensor out({end - begin, n});
  std::copy(X.values().begin() + static_cast<std::ptrdiff_t>(begin * n),
            X.values().begin() + static_cast<std::ptrdiff_t>(end * n), out.values().begin());
  const std::size_t ix = x.id();
  return tape.record(std::move(out), {ix}, [ix, begin, n](Tape& t, std::size_t self) {
    const auto& g = t.grad_view(self);
    auto& gx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[begin * n + i] += g[i];
  });
}

Var outer_sum(Var col_a, Var col_b) {
  require_same_tape("outer_sum", col_a, col_b);
  const Tensor& A = col_a.value();
  const Tensor& B = col_b.value();
  require_rank2("outer_sum", A);
  require_rank2("outer_sum", B);
  if (A.cols() != 1 || B.cols() != 1) shape_error("outer_sum", A.shape(), B.shape());
  const std::size_t m = A.rows(), n = B.rows();
  Tensor out({m, n});
  for (std::size_t u = 0; u < m; ++u)
    for (std::size_t v = 0; v < n; ++v) out.at(u, v) = A[u] + B[v];
  const std::size_t ia = col_a.id(), ib = col_b.id();
  return col_a.tape()->record(std::move(out), {ia, ib}, [ia, ib, m, n](Tape& t, std::size_t self) {
    const auto& g = t.grad_view(self);
    if (t.requires_grad(ia)) {
      auto& ga = t.grad_buffer(ia);
      for (std::size_t u = 0; u < m; ++u)
        for (std::size_t v = 0; v < n; ++v) ga[u] += g[u * n + v];
    }
    if (t.requires_grad(ib)) {
      auto& gb = t.grad_buffer(ib);
      for (std::size_t u = 0; u < m; ++u)
        for (std::size_t v = 0; v < n; ++v) gb[v] += g[u * n + v];
    }
  });
}

Var leaky_relu(Var x, double negative_slope) {
  Tape& tape = tape_of("leaky_relu", x);
  const Tensor& X = x.value();
  Tensor out(X.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) {
    const bool pos = X[i] > 0.0;
    tape.note_branch(pos ? 1 : 0);
    out[i] = pos ? X[i] : negative_slope * X[i];
  }
  const std::size_t ix = x.id();
  return tape.record(std::move(out), {ix}, [ix, negative_slope](Tape& t, std::size_t self) {
    const auto& g = t.grad_view(self);
    const auto xv = t.value(ix).values();
    auto& gx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += xv[i] > 0.0 ? g[i] : negative_slope * g[i];
  });
}

Var relu(Var x) {
  Tape& tape = tape_of("relu", x);
  const Tensor& X = x.value();
  Tensor out(X.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) {
    const bool pos = X[i] > 0.0;
    tape.note_branch(pos ? 1 : 0);
    // NaN passes through so a corrupted input still surfaces as a non-finite loss.
    out[i] = pos || std::isnan(X[i]) ? X[i] : 0.0;
  }
  const std::size_t ix = x.id();
  return tape.record(std::move(out), {ix}, [ix](Tape& t, std::size_t self) {
    const auto& g = t.grad_view(self);
    const auto xv = t.value(ix).values();
    auto& gx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (xv[i] > 0.0) gx[i] += g[i];
    }
  });
}

Var exp(Var x) {
  Tape& tape = tape_of("exp", x);
  const Tensor& X = x.value();
  Tensor out(X.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::exp(X[i]);
  const std::size_t ix = x.id();
  return tape.record(std::move(out), {ix}, [ix](Tape& t, std::size_t self) {
    const auto& g = t.grad_view(self);
    const auto y = t.value(self).values();
    auto& gx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i];
  });
}

Var row_softmax_masked(Var x, const MaskMatrix* mask) {
  Tape& tape = tape_of("row_softmax_masked", x);
  const Tensor& X = x.value();
  require_rank2("row_softmax_masked", X);
  const std::size_t m = X.rows(), n = X.cols();
  if (mask && (mask->rows() != m || mask->cols() != n)) {
    shape_error("row_softmax_masked", X.shape(), Shape{mask->rows(), mask->cols()});
  }
  auto on = [mask](std::size_t i, std::size_t j) { return !mask || (*mask)(i, j) != 0; };
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    // A NaN input is not skipped by std::max but reaches exp below, so it propagates to
    // the loss instead of being mistaken for an empty row.
    double mx = -std::numeric_limits<double>::infinity();
    std::size_t active = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (on(i, j)) {
        mx = std::max(mx, X.at(i, j));
        ++active;
      }
    }
    if (active == 0) {
      throw ContractError("row_softmax_masked: row " + std::to_string(i) + " has no unmasked entry");
    }
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (on(i, j)) {
        out.at(i, j) = std::exp(X.at(i, j) - mx);
        z += out.at(i, j);
      }
    }
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) /= z;
  }
  const std::size_t ix = x.id();
  // Masked outputs are exactly zero, so y * (g - <y, g>) already yields exact zeros there.
  return tape.record(std::move(out), {ix}, [ix, m, n](Tape& t, std::size_t self) {
    const auto& g = t.grad_view(self);
    const auto y = t.value(self).values();
    auto& gx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += y[i * n + j] * g[i * n + j];
      for (std::size_t j = 0; j < n; ++j) {
        const double yij = y[i * n + j];
        if (yij != 0.0) gx[i * n + j] += yij * (g[i * n + j] - dot);
      }
    }
  });
}

Var sum(Var x) {
  Tape& tape = tape_of("sum", x);
  const auto v = x.value().values();
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  const std::size_t ix = x.id();
  return tape.record(Tensor::scalar(s), {ix}, [ix](Tape& t, std::size_t self) {
    const double g = t.grad_view(self)[0];
    auto& gx = t.grad_buffer(ix);
    for (auto& e : gx) e += g;
  });
}

Var row_sums(Var x) {
  Tape& tape = tape_of("row_sums", x);
  const Tensor& X = x.value();
  require_rank2("row_sums", X);
  const std::size_t m = X.rows(), n = X.cols();
  Tensor out({m, 1});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i] += X.at(i, j);
  const std::size_t ix = x.id();
  return tape.record(std::move(out), {ix}, [ix, m, n](Tape& t, std::size_t self) {
    const auto& g = t.grad_view(self);
    auto& gx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += g[i];
  });
}

Var column_sums(Var x) {
  Tape& tape = tape_of("column_sums", x);
  const Tensor& X = x.value();
  require_rank2("column_sums", X);
  const std::size_t m = X.rows(), n = X.cols();
  Tensor out({1, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += X.at(i, j);
  const std::size_t ix = x.id();
  return tape.record(std::move(out), {ix}, [ix, m, n](Tape& t, std::size_t self) {
    const auto& g = t.grad_view(self);
    auto& gx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += g[j];
  });
}

Var complement_product_gate(Var x) {
  Tape& tape = tape_of("complement_product_gate", x);
  const Tensor& X = x.value();
  require_rank2("complement_product_gate", X);
  const std::size_t m = X.rows(), n = X.cols();
  Tensor out({1, n});
  for (std::size_t j = 0; j < n; ++j) {
    double prod = 1.0;
    for (std::size_t i = 0; i < m; ++i) prod *= 1.0 - X.at(i, j);
    out[j] = 1.0 - prod;
  }
  const std::size_t ix = x.id();
  // d gate_j / d x_ij = prod_{l != i} (1 - x_lj), via prefix/suffix products (no division).
  return tape.record(std::move(out), {ix}, [ix, m, n](Tape& t, std::size_t self) {
    const auto& g = t.grad_view(self);
    const auto xv = t.value(ix).values();
    auto& gx = t.grad_buffer(ix);
    std::vector<double> suffix(m + 1);
    for (std::size_t j = 0; j < n; ++j) {
      suffix[m] = 1.0;
      for (std::size_t i = m; i-- > 0;) suffix[i] = suffix[i + 1] * (1.0 - xv[i * n + j]);
      double prefix = 1.0;
      for (std::size_t i = 0; i < m; ++i) {
        gx[i * n + j] += g[j] * prefix * suffix[i + 1];
        prefix *= 1.0 - xv[i * n + j];
      }
    }
  });
}

Var trace_of_gram(Var x) {
  Tape& tape = tape_of("trace_of_gram", x);
  const auto v = x.value().values();
  double s = 0.0;
  for (const double e : v) s += e * e;
  const std::size_t ix = x.id();
  return tape.record(Tensor::scalar(s), {ix}, [ix](Tape& t, std::size_t self) {
    const double g = t.grad_view(self)[0];
    const auto xv = t.value(ix).values();
    auto& gx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += 2.0 * xv[i] * g;
  });
}

Var l2_norm(Var x) {
  Tape& tape = tape_of("l2_norm", x);
  const auto v = x.value().values();
  double s = 0.0;
  for (const double e : v) s += e * e;
  const double norm = std::sqrt(s);
  const std::size_t ix = x.id();
  return tape.record(Tensor::scalar(norm), {ix}, [ix](Tape& t, std::size_t self) {
    const double norm = t.value(self)[0];
    if (norm == 0.0) return;
    const double g = t.grad_view(self)[0];
    const auto xv = t.value(ix).values();
    auto& gx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g * xv[i] / norm;
  });
}

Var clamp(Var x, double lo, double hi) {
  Tape& tape = tape_of("clamp", x);
  if (!(lo <= hi)) throw ContractError("clamp: lower bound exceeds upper bound");
  const Tensor& X = x.value();
  Tensor out(X.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) {
    const double v = X[i];
    tape.note_branch(v < lo ? 0 : (v > hi ? 2 : 1));
    out[i] = std::clamp(v, lo, hi);
  }
  const std::size_t ix = x.id();
  return tape.record(std::move(out), {ix}, [ix, lo, hi](Tape& t, std::size_t self) {
    const auto& g = t.grad_view(self);
    const auto xv = t.value(ix).values();
    auto& gx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (xv[i] >= lo && xv[i] <= hi) gx[i] += g[i];
    }
  });
}

}  // namespace nesua::ad
