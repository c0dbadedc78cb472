#pragma once

#include "madirl/numerics/array.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace madirl::numerics {

// Define-by-run reverse-mode engine over 2-D row-major arrays. Every op
// evaluates immediately and appends a node; backward walks the nodes in
// reverse creation order, which is a topological order of the DAG.

enum class OpKind : std::uint8_t {
  kConstant,
  kParameter,
  kMatMul,
  kAdd,
  kSub,
  kMul,
  kScale,
  kAddScalar,
  kLeakyRelu,
  kSigmoid,
  kLogSigmoid,
  kLog,
  kExp,
  kSoftmax,
  kLogSoftmax,
  kGather,
  kSum,
  kMean,
  kRowSum,
  kConcat,
  kSlice,
  kHuber,
};

const char* op_name(OpKind kind);

template <typename T>
struct TapeNode {
  OpKind kind = OpKind::kConstant;
  std::vector<int> inputs;
  Matrix<T> value;
  Matrix<T> grad;
  ParamArray<T>* param = nullptr;
  std::vector<int> indices;  // gather targets or concat widths
  T scalar{};                // slope, scale factor or Huber delta
  int offset = 0;            // slice start column
  bool needs_grad = false;
};

template <typename T>
class Tape;

/// Handle to a node on a tape. Cheap to copy; invalid once the tape is reset.
template <typename T>
class Var {
 public:
  Var() = default;

  [[nodiscard]] Tape<T>* tape() const { return tape_; }
  [[nodiscard]] int index() const { return index_; }
  [[nodiscard]] const Matrix<T>& value() const;
  [[nodiscard]] Eigen::Index rows() const { return value().rows(); }
  [[nodiscard]] Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  [[nodiscard]] T item() const;

 private:
  friend class Tape<T>;
  Var(Tape<T>* tape, int index, std::uint64_t generation)
      : tape_(tape), index_(index), generation_(generation) {}

  Tape<T>* tape_ = nullptr;
  int index_ = -1;
  std::uint64_t generation_ = 0;
};

template <typename T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(Matrix<T> value);
  /// Leaf bound to a parameter; backward accumulates into param.grad.
  Var<T> param(ParamArray<T>& p);

  /// Seeds d(out)/d(out) = 1 for a 1x1 output and propagates to every leaf.
  void backward(Var<T> out);
  void backward(Var<T> out, const Matrix<T>& seed);

  /// Gradient of the last backward output w.r.t. an arbitrary node.
  [[nodiscard]] Matrix<T> grad_of(Var<T> v) const;

  [[nodiscard]] std::size_t size() const { return nodes_.size(); }
  [[nodiscard]] const TapeNode<T>& node(int i) const { return nodes_.at(static_cast<std::size_t>(i)); }

  /// Drops all nodes; outstanding Vars become stale.
  void reset();

  // Used by the op functions below.
  Var<T> push(TapeNode<T> node);
  void check(Var<T> v, const char* op) const;

 private:
  void propagate(TapeNode<T>& n);

  std::vector<TapeNode<T>> nodes_;
  std::uint64_t generation_ = 1;
  bool consumed_ = false;
};

template <typename T>
const Matrix<T>& Var<T>::value() const {
  tape_->check(*this, "value");
  return tape_->node(index_).value;
}

// --- ops -------------------------------------------------------------------

template <typename T> Var<T> matmul(Var<T> a, Var<T> b);
/// Elementwise with broadcasting along any unit dimension of either side.
template <typename T> Var<T> operator+(Var<T> a, Var<T> b);
template <typename T> Var<T> operator-(Var<T> a, Var<T> b);
template <typename T> Var<T> operator*(Var<T> a, Var<T> b);
template <typename T> Var<T> scale(Var<T> a, T factor);
template <typename T> Var<T> add_scalar(Var<T> a, T c);
template <typename T> Var<T> leaky_relu(Var<T> a, T slope = T(0.01));
template <typename T> Var<T> sigmoid(Var<T> a);
/// log(sigmoid(a)), evaluated without forming sigmoid(a).
template <typename T> Var<T> log_sigmoid(Var<T> a);
template <typename T> Var<T> log(Var<T> a);
template <typename T> Var<T> exp(Var<T> a);
/// Row-wise softmax with max subtraction.
template <typename T> Var<T> softmax(Var<T> a);
template <typename T> Var<T> log_softmax(Var<T> a);
/// out(r, 0) = a(r, index[r]).
template <typename T> Var<T> gather(Var<T> a, std::span<const int> index);
template <typename T> Var<T> sum(Var<T> a);
template <typename T> Var<T> mean(Var<T> a);
/// r x c -> r x 1.
template <typename T> Var<T> row_sum(Var<T> a);
template <typename T> Var<T> concat_cols(std::span<const Var<T>> parts);
template <typename T> Var<T> slice_cols(Var<T> a, int start, int count);
/// Mean elementwise Huber loss, 1x1.
template <typename T> Var<T> huber(Var<T> pred, Var<T> target, T delta);

template <typename T> Var<T> operator-(Var<T> a) { return scale(a, T(-1)); }

/// Copies the value into a fresh constant (no gradient flows back).
template <typename T> Var<T> detach(Var<T> a) { return a.tape()->constant(a.value()); }

}  // namespace madirl::numerics
