#include "madirl/numerics/tape.hpp"

#include "madirl/common/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace madirl::numerics {

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kConstant: return "constant";
    case OpKind::kParameter: return "parameter";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kAddScalar: return "add_scalar";
    case OpKind::kLeakyRelu: return "leaky_relu";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kLogSigmoid: return "log_sigmoid";
    case OpKind::kLog: return "log";
    case OpKind::kExp: return "exp";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kLogSoftmax: return "log_softmax";
    case OpKind::kGather: return "gather";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kRowSum: return "row_sum";
    case OpKind::kConcat: return "concat_cols";
    case OpKind::kSlice: return "slice_cols";
    case OpKind::kHuber: return "huber";
  }
  return "unknown";
}

namespace {

template <typename T>
std::string dims(const Matrix<T>& m) {
  std::ostringstream os;
  os << '(' << m.rows() << ", " << m.cols() << ')';
  return os.str();
}

template <typename T>
[[noreturn]] void shape_fail(OpKind kind, const Matrix<T>& a, const Matrix<T>& b) {
  throw ShapeError(std::string(op_name(kind)) + ": incompatible shapes " + dims(a) + " and " + dims(b));
}

Eigen::Index broadcast_dim(Eigen::Index x, Eigen::Index y, bool& ok) {
  if (x == y) return x;
  if (x == 1) return y;
  if (y == 1) return x;
  ok = false;
  return 0;
}

template <typename T>
Matrix<T> expand(const Matrix<T>& m, Eigen::Index rows, Eigen::Index cols) {
  if (m.rows() == rows && m.cols() == cols) return m;
  return m.replicate(rows / m.rows(), cols / m.cols());
}

// Elementwise a (op) b where b may be a row vector, a column vector or a
// scalar broadcast against a full-shaped a, without materialising b.
template <typename T>
Matrix<T> broadcast_apply(OpKind kind, const Matrix<T>& a, const Matrix<T>& b) {
  const bool full = a.rows() == b.rows() && a.cols() == b.cols();
  if (full) {
    if (kind == OpKind::kAdd) return a + b;
    if (kind == OpKind::kSub) return a - b;
    return a.cwiseProduct(b);
  }
  if (b.rows() == 1 && b.cols() == a.cols()) {
    const auto row = b.row(0).array();
    if (kind == OpKind::kAdd) return (a.array().rowwise() + row).matrix();
    if (kind == OpKind::kSub) return (a.array().rowwise() - row).matrix();
    return (a.array().rowwise() * row).matrix();
  }
  if (b.cols() == 1 && b.rows() == a.rows()) {
    const auto col = b.col(0).array();
    if (kind == OpKind::kAdd) return (a.array().colwise() + col).matrix();
    if (kind == OpKind::kSub) return (a.array().colwise() - col).matrix();
    return (a.array().colwise() * col).matrix();
  }
  Matrix<T> eb = expand(b, a.rows(), a.cols());
  if (kind == OpKind::kAdd) return a + eb;
  if (kind == OpKind::kSub) return a - eb;
  return a.cwiseProduct(eb);
}

// g has the broadcast output shape; m is either that shape or broadcastable to it.
template <typename T>
Matrix<T> broadcast_mul(const Matrix<T>& g, const Matrix<T>& m) {
  if ((m.rows() == g.rows() || m.rows() == 1) && (m.cols() == g.cols() || m.cols() == 1)) {
    return broadcast_apply(OpKind::kMul, g, m);
  }
  return g.cwiseProduct(expand(m, g.rows(), g.cols()));
}

// Sums a broadcast gradient back down to the operand's shape.
template <typename T>
Matrix<T> reduce_to(const Matrix<T>& g, Eigen::Index rows, Eigen::Index cols) {
  if (g.rows() == rows && g.cols() == cols) return g;
  if (rows == 1 && cols == 1) return Matrix<T>::Constant(1, 1, g.sum());
  if (rows == 1) return g.colwise().sum();
  return g.rowwise().sum();
}

template <typename T>
void accumulate(Matrix<T>& dst, const Matrix<T>& src) {
  if (dst.size() == 0) {
    dst = src;
  } else {
    dst += src;
  }
}

template <typename T>
T log_sigmoid_scalar(T x) {
  // log(1 / (1 + e^-x)) = -softplus(-x)
  return x >= T(0) ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

template <typename T>
T sigmoid_scalar(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <typename T>
Matrix<T> row_softmax(const Matrix<T>& a) {
  Matrix<T> out(a.rows(), a.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const T m = a.row(r).maxCoeff();
    out.row(r) = (a.row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

}  // namespace

template <typename T>
T Var<T>::item() const {
  const auto& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw ShapeError("item: expected a 1x1 value, got " + dims(v));
  return v(0, 0);
}

template <typename T>
void Tape<T>::check(Var<T> v, const char* op) const {
  if (v.tape_ != this || v.generation_ != generation_ || v.index_ < 0 ||
      static_cast<std::size_t>(v.index_) >= nodes_.size()) {
    throw UsageError(std::string(op) + ": variable does not belong to the current tape");
  }
}

template <typename T>
Var<T> Tape<T>::push(TapeNode<T> node) {
  if (consumed_) throw UsageError("tape: cannot record new ops after backward; reset the tape first");
  // A NaN or infinity anywhere makes the sum non-finite; one reduction is much
  // cheaper than an elementwise test.
  if (!std::isfinite(static_cast<double>(node.value.sum()))) {
    throw NumericError(std::string(op_name(node.kind)) + ": non-finite result (numeric overflow)");
  }
  for (int in : node.inputs) node.needs_grad = node.needs_grad || nodes_[static_cast<std::size_t>(in)].needs_grad;
  nodes_.push_back(std::move(node));
  return Var<T>(this, static_cast<int>(nodes_.size() - 1), generation_);
}

template <typename T>
Var<T> Tape<T>::constant(Matrix<T> value) {
  TapeNode<T> n;
  n.kind = OpKind::kConstant;
  n.value = std::move(value);
  return push(std::move(n));
}

template <typename T>
Var<T> Tape<T>::param(ParamArray<T>& p) {
  TapeNode<T> n;
  n.kind = OpKind::kParameter;
  n.value = p.values;
  n.param = &p;
  n.needs_grad = true;
  return push(std::move(n));
}

template <typename T>
void Tape<T>::reset() {
  nodes_.clear();
  ++generation_;
  consumed_ = false;
}

template <typename T>
void Tape<T>::backward(Var<T> out) {
  check(out, "backward");
  if (out.rows() != 1 || out.cols() != 1) {
    throw ShapeError("backward: implicit seed needs a 1x1 output, got " + dims(out.value()));
  }
  backward(out, Matrix<T>::Ones(1, 1));
}

template <typename T>
void Tape<T>::backward(Var<T> out, const Matrix<T>& seed) {
  if (nodes_.empty()) throw UsageError("backward: tape has not been evaluated");
  check(out, "backward");
  if (consumed_) throw UsageError("backward: tape already consumed by a previous backward pass");
  auto& root = nodes_[static_cast<std::size_t>(out.index())];
  if (seed.rows() != root.value.rows() || seed.cols() != root.value.cols()) {
    throw ShapeError("backward: seed shape " + dims(seed) + " does not match output " + dims(root.value));
  }
  consumed_ = true;
  root.grad = seed;
  for (int i = out.index(); i >= 0; --i) {
    auto& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    propagate(n);
  }
}

template <typename T>
Matrix<T> Tape<T>::grad_of(Var<T> v) const {
  check(v, "grad_of");
  const auto& n = nodes_[static_cast<std::size_t>(v.index())];
  if (n.grad.size() == 0) return Matrix<T>::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

template <typename T>
void Tape<T>::propagate(TapeNode<T>& n) {
  auto in = [&](std::size_t k) -> TapeNode<T>& { return nodes_[static_cast<std::size_t>(n.inputs[k])]; };
  const Matrix<T>& g = n.grad;
  switch (n.kind) {
    case OpKind::kConstant:
      break;
    case OpKind::kParameter:
      if (!n.param->has_grad()) n.param->zero_grad();
      n.param->grad += g;
      break;
    case OpKind::kMatMul: {
      auto& a = in(0);
      auto& b = in(1);
      if (a.needs_grad) {
        if (a.grad.size() == 0) {
          a.grad.noalias() = g * b.value.transpose();
        } else {
          a.grad.noalias() += g * b.value.transpose();
        }
      }
      if (b.needs_grad) {
        if (b.grad.size() == 0) {
          b.grad.noalias() = a.value.transpose() * g;
        } else {
          b.grad.noalias() += a.value.transpose() * g;
        }
      }
      break;
    }
    case OpKind::kAdd:
    case OpKind::kSub: {
      auto& a = in(0);
      auto& b = in(1);
      if (a.needs_grad) accumulate<T>(a.grad, reduce_to(g, a.value.rows(), a.value.cols()));
      if (b.needs_grad) {
        Matrix<T> gb = reduce_to(g, b.value.rows(), b.value.cols());
        if (n.kind == OpKind::kSub) gb = -gb;
        accumulate<T>(b.grad, gb);
      }
      break;
    }
    case OpKind::kMul: {
      auto& a = in(0);
      auto& b = in(1);
      if (a.needs_grad) accumulate<T>(a.grad, reduce_to(broadcast_mul(g, b.value), a.value.rows(), a.value.cols()));
      if (b.needs_grad) accumulate<T>(b.grad, reduce_to(broadcast_mul(g, a.value), b.value.rows(), b.value.cols()));
      break;
    }
    case OpKind::kScale: {
      auto& a = in(0);
      if (a.needs_grad) accumulate<T>(a.grad, g * n.scalar);
      break;
    }
    case OpKind::kAddScalar: {
      auto& a = in(0);
      if (a.needs_grad) accumulate<T>(a.grad, g);
      break;
    }
    case OpKind::kLeakyRelu: {
      auto& a = in(0);
      if (a.needs_grad) {
        Matrix<T> d = (a.value.array() > T(0)).select(g.array(), g.array() * n.scalar).matrix();
        accumulate<T>(a.grad, d);
      }
      break;
    }
    case OpKind::kSigmoid: {
      auto& a = in(0);
      if (a.needs_grad) {
        Matrix<T> d = n.value.array() * (T(1) - n.value.array());
        accumulate<T>(a.grad, g.cwiseProduct(d));
      }
      break;
    }
    case OpKind::kLogSigmoid: {
      auto& a = in(0);
      if (a.needs_grad) {
        // d/dx log sigmoid(x) = sigmoid(-x)
        Matrix<T> d = a.value.unaryExpr([](T x) { return sigmoid_scalar(-x); });
        accumulate<T>(a.grad, g.cwiseProduct(d));
      }
      break;
    }
    case OpKind::kLog: {
      auto& a = in(0);
      if (a.needs_grad) accumulate<T>(a.grad, g.cwiseQuotient(a.value));
      break;
    }
    case OpKind::kExp: {
      auto& a = in(0);
      if (a.needs_grad) accumulate<T>(a.grad, g.cwiseProduct(n.value));
      break;
    }
    case OpKind::kSoftmax: {
      auto& a = in(0);
      if (a.needs_grad) {
        const Matrix<T>& y = n.value;
        Matrix<T> dot = g.cwiseProduct(y).rowwise().sum();
        Matrix<T> d = y.cwiseProduct(g - dot.replicate(1, g.cols()));
        accumulate<T>(a.grad, d);
      }
      break;
    }
    case OpKind::kLogSoftmax: {
      auto& a = in(0);
      if (a.needs_grad) {
        Matrix<T> p = n.value.array().exp();
        Matrix<T> gs = g.rowwise().sum();
        Matrix<T> d = g - p.cwiseProduct(gs.replicate(1, g.cols()));
        accumulate<T>(a.grad, d);
      }
      break;
    }
    case OpKind::kGather: {
      auto& a = in(0);
      if (a.needs_grad) {
        Matrix<T> d = Matrix<T>::Zero(a.value.rows(), a.value.cols());
        for (Eigen::Index r = 0; r < d.rows(); ++r) d(r, n.indices[static_cast<std::size_t>(r)]) = g(r, 0);
        accumulate<T>(a.grad, d);
      }
      break;
    }
    case OpKind::kSum:
    case OpKind::kMean: {
      auto& a = in(0);
      if (a.needs_grad) {
        T v = g(0, 0);
        if (n.kind == OpKind::kMean) v /= static_cast<T>(a.value.size());
        accumulate<T>(a.grad, Matrix<T>::Constant(a.value.rows(), a.value.cols(), v));
      }
      break;
    }
    case OpKind::kRowSum: {
      auto& a = in(0);
      if (a.needs_grad) accumulate<T>(a.grad, g.replicate(1, a.value.cols()));
      break;
    }
    case OpKind::kConcat: {
      Eigen::Index col = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        auto& a = in(k);
        const Eigen::Index w = n.indices[k];
        if (a.needs_grad) accumulate<T>(a.grad, g.middleCols(col, w));
        col += w;
      }
      break;
    }
    case OpKind::kSlice: {
      auto& a = in(0);
      if (a.needs_grad) {
        Matrix<T> d = Matrix<T>::Zero(a.value.rows(), a.value.cols());
        d.middleCols(n.offset, g.cols()) = g;
        accumulate<T>(a.grad, d);
      }
      break;
    }
    case OpKind::kHuber: {
      auto& p = in(0);
      auto& t = in(1);
      const T delta = n.scalar;
      const T scale_factor = g(0, 0) / static_cast<T>(p.value.size());
      Matrix<T> d = (p.value - t.value).unaryExpr([delta](T x) { return std::clamp(x, -delta, delta); });
      d *= scale_factor;
      if (p.needs_grad) accumulate<T>(p.grad, d);
      if (t.needs_grad) accumulate<T>(t.grad, -d);
      break;
    }
  }
}

// --- op implementations ------------------------------------------------------

namespace {

template <typename T>
Tape<T>& tape_of(Var<T> a, const char* op) {
  if (a.tape() == nullptr) throw UsageError(std::string(op) + ": uninitialised variable");
  a.tape()->check(a, op);
  return *a.tape();
}

template <typename T>
Tape<T>& tape_of(Var<T> a, Var<T> b, const char* op) {
  auto& t = tape_of(a, op);
  if (b.tape() != &t) throw UsageError(std::string(op) + ": operands live on different tapes");
  t.check(b, op);
  return t;
}

template <typename T>
Var<T> unary(OpKind kind, Var<T> a, Matrix<T> value, T scalar = T{}) {
  auto& t = tape_of(a, op_name(kind));
  TapeNode<T> n;
  n.kind = kind;
  n.inputs = {a.index()};
  n.value = std::move(value);
  n.scalar = scalar;
  return t.push(std::move(n));
}

template <typename T>
Var<T> elementwise(OpKind kind, Var<T> a, Var<T> b) {
  auto& t = tape_of(a, b, op_name(kind));
  const auto& av = a.value();
  const auto& bv = b.value();
  bool ok = true;
  const auto rows = broadcast_dim(av.rows(), bv.rows(), ok);
  const auto cols = broadcast_dim(av.cols(), bv.cols(), ok);
  if (!ok) shape_fail(kind, av, bv);
  TapeNode<T> n;
  n.kind = kind;
  n.inputs = {a.index(), b.index()};
  if (av.rows() == rows && av.cols() == cols) {
    n.value = broadcast_apply(kind, av, bv);
  } else if (bv.rows() == rows && bv.cols() == cols && kind != OpKind::kSub) {
    n.value = broadcast_apply(kind, bv, av);
  } else {
    n.value = broadcast_apply(kind, expand(av, rows, cols), bv);
  }
  return t.push(std::move(n));
}

}  // namespace

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  auto& t = tape_of(a, b, "matmul");
  if (a.cols() != b.rows()) shape_fail(OpKind::kMatMul, a.value(), b.value());
  TapeNode<T> n;
  n.kind = OpKind::kMatMul;
  n.inputs = {a.index(), b.index()};
  n.value.noalias() = a.value() * b.value();
  return t.push(std::move(n));
}

template <typename T> Var<T> operator+(Var<T> a, Var<T> b) { return elementwise(OpKind::kAdd, a, b); }
template <typename T> Var<T> operator-(Var<T> a, Var<T> b) { return elementwise(OpKind::kSub, a, b); }
template <typename T> Var<T> operator*(Var<T> a, Var<T> b) { return elementwise(OpKind::kMul, a, b); }

template <typename T>
Var<T> scale(Var<T> a, T factor) {
  return unary<T>(OpKind::kScale, a, a.value() * factor, factor);
}

template <typename T>
Var<T> add_scalar(Var<T> a, T c) {
  return unary<T>(OpKind::kAddScalar, a, (a.value().array() + c).matrix(), c);
}

template <typename T>
Var<T> leaky_relu(Var<T> a, T slope) {
  // max(x, slope x) equals the branch form for 0 <= slope < 1 and vectorizes.
  Matrix<T> v = slope >= T(0) && slope < T(1)
                    ? Matrix<T>(a.value().array().max(a.value().array() * slope).matrix())
                    : Matrix<T>(a.value().unaryExpr([slope](T x) { return x > T(0) ? x : slope * x; }));
  return unary<T>(OpKind::kLeakyRelu, a, std::move(v), slope);
}

template <typename T>
Var<T> sigmoid(Var<T> a) {
  return unary<T>(OpKind::kSigmoid, a, a.value().unaryExpr([](T x) { return sigmoid_scalar(x); }));
}

template <typename T>
Var<T> log_sigmoid(Var<T> a) {
  return unary<T>(OpKind::kLogSigmoid, a, a.value().unaryExpr([](T x) { return log_sigmoid_scalar(x); }));
}

template <typename T>
Var<T> log(Var<T> a) {
  if ((a.value().array() <= T(0)).any()) throw NumericError("log: non-positive input");
  return unary<T>(OpKind::kLog, a, a.value().array().log().matrix());
}

template <typename T>
Var<T> exp(Var<T> a) {
  return unary<T>(OpKind::kExp, a, a.value().array().exp().matrix());
}

template <typename T>
Var<T> softmax(Var<T> a) {
  return unary<T>(OpKind::kSoftmax, a, row_softmax(a.value()));
}

template <typename T>
Var<T> log_softmax(Var<T> a) {
  const auto& v = a.value();
  Matrix<T> out(v.rows(), v.cols());
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    const T m = v.row(r).maxCoeff();
    const T lse = m + std::log((v.row(r).array() - m).exp().sum());
    out.row(r) = v.row(r).array() - lse;
  }
  return unary<T>(OpKind::kLogSoftmax, a, std::move(out));
}

template <typename T>
Var<T> gather(Var<T> a, std::span<const int> index) {
  auto& t = tape_of(a, "gather");
  const auto& v = a.value();
  if (static_cast<Eigen::Index>(index.size()) != v.rows()) {
    throw ShapeError("gather: " + std::to_string(index.size()) + " indices for input " + dims(v));
  }
  TapeNode<T> n;
  n.kind = OpKind::kGather;
  n.inputs = {a.index()};
  n.value.resize(v.rows(), 1);
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    const int c = index[static_cast<std::size_t>(r)];
    if (c < 0 || c >= v.cols()) {
      throw ShapeError("gather: index " + std::to_string(c) + " out of range for input " + dims(v));
    }
    n.value(r, 0) = v(r, c);
  }
  n.indices.assign(index.begin(), index.end());
  return t.push(std::move(n));
}

template <typename T>
Var<T> sum(Var<T> a) {
  return unary<T>(OpKind::kSum, a, Matrix<T>::Constant(1, 1, a.value().sum()));
}

template <typename T>
Var<T> mean(Var<T> a) {
  return unary<T>(OpKind::kMean, a, Matrix<T>::Constant(1, 1, a.value().mean()));
}

template <typename T>
Var<T> row_sum(Var<T> a) {
  return unary<T>(OpKind::kRowSum, a, Matrix<T>(a.value().rowwise().sum()));
}

template <typename T>
Var<T> concat_cols(std::span<const Var<T>> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  auto& t = tape_of(parts[0], "concat_cols");
  const auto rows = parts[0].rows();
  Eigen::Index total = 0;
  for (const auto& p : parts) {
    if (p.tape() != &t) throw UsageError("concat_cols: operands live on different tapes");
    if (p.rows() != rows) shape_fail(OpKind::kConcat, parts[0].value(), p.value());
    total += p.cols();
  }
  TapeNode<T> n;
  n.kind = OpKind::kConcat;
  n.value.resize(rows, total);
  Eigen::Index col = 0;
  for (const auto& p : parts) {
    n.value.middleCols(col, p.cols()) = p.value();
    col += p.cols();
    n.inputs.push_back(p.index());
    n.indices.push_back(static_cast<int>(p.cols()));
  }
  return t.push(std::move(n));
}

template <typename T>
Var<T> slice_cols(Var<T> a, int start, int count) {
  auto& t = tape_of(a, "slice_cols");
  if (start < 0 || count <= 0 || start + count > a.cols()) {
    throw ShapeError("slice_cols: columns [" + std::to_string(start) + ", " + std::to_string(start + count) +
                     ") out of range for " + dims(a.value()));
  }
  TapeNode<T> n;
  n.kind = OpKind::kSlice;
  n.inputs = {a.index()};
  n.value = a.value().middleCols(start, count);
  n.offset = start;
  return t.push(std::move(n));
}

template <typename T>
Var<T> huber(Var<T> pred, Var<T> target, T delta) {
  auto& t = tape_of(pred, target, "huber");
  if (!(delta > T(0))) throw ConfigError("huber: delta must be positive");
  const auto& p = pred.value();
  const auto& y = target.value();
  if (p.rows() != y.rows() || p.cols() != y.cols()) shape_fail(OpKind::kHuber, p, y);
  const T loss = (p - y)
                     .unaryExpr([delta](T d) {
                       const T ad = std::abs(d);
                       return ad <= delta ? T(0.5) * d * d : delta * (ad - T(0.5) * delta);
                     })
                     .mean();
  TapeNode<T> n;
  n.kind = OpKind::kHuber;
  n.inputs = {pred.index(), target.index()};
  n.value = Matrix<T>::Constant(1, 1, loss);
  n.scalar = delta;
  return t.push(std::move(n));
}

#define MADIRL_INSTANTIATE_OPS(T)                                          \
  template class Var<T>;                                                   \
  template class Tape<T>;                                                  \
  template Var<T> matmul(Var<T>, Var<T>);                                  \
  template Var<T> operator+(Var<T>, Var<T>);                               \
  template Var<T> operator-(Var<T>, Var<T>);                               \
  template Var<T> operator*(Var<T>, Var<T>);                               \
  template Var<T> scale(Var<T>, T);                                        \
  template Var<T> add_scalar(Var<T>, T);                                   \
  template Var<T> leaky_relu(Var<T>, T);                                   \
  template Var<T> sigmoid(Var<T>);                                         \
  template Var<T> log_sigmoid(Var<T>);                                     \
  template Var<T> log(Var<T>);                                             \
  template Var<T> exp(Var<T>);                                             \
  template Var<T> softmax(Var<T>);                                         \
  template Var<T> log_softmax(Var<T>);                                     \
  template Var<T> gather(Var<T>, std::span<const int>);                    \
  template Var<T> sum(Var<T>);                                             \
  template Var<T> mean(Var<T>);                                            \
  template Var<T> row_sum(Var<T>);                                         \
  template Var<T> concat_cols(std::span<const Var<T>>);                    \
  template Var<T> slice_cols(Var<T>, int, int);                            \
  template Var<T> huber(Var<T>, Var<T>, T);

MADIRL_INSTANTIATE_OPS(float)
MADIRL_INSTANTIATE_OPS(double)

#undef MADIRL_INSTANTIATE_OPS

}  // namespace madirl::numerics
