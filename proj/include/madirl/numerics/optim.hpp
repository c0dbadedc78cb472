#pragma once

#include "madirl/numerics/array.hpp"

#include <span>
#include <vector>

namespace madirl::numerics {

template <typename T>
struct AdamState {
  Matrix<T> m;
  Matrix<T> v;
  std::int64_t t = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update of `param` using `grad`.
template <typename T>
void adam_step(ParamArray<T>& param, const Matrix<T>& grad, AdamState<T>& state);

/// Adam over every parameter of a store, reading each array's grad slot.
/// Parameters whose grad slot is absent are treated as having zero gradient.
template <typename T>
class Adam {
 public:
  Adam() = default;
  Adam(const ParamStore<T>& store, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(ParamStore<T>& store);

  [[nodiscard]] double lr() const { return lr_; }
  [[nodiscard]] const std::vector<AdamState<T>>& states() const { return states_; }

 private:
  double lr_ = 1e-3;
  std::vector<AdamState<T>> states_;
};

/// Scales every array so the global L2 norm is at most max_norm.
/// Returns the norm before clipping.
template <typename T>
double clip_grad_norm(std::span<Matrix<T>* const> grads, double max_norm);

/// Convenience overload over all grad slots of a store.
template <typename T>
double clip_grad_norm(ParamStore<T>& store, double max_norm);

/// Mean elementwise Huber loss on plain arrays (no tape).
template <typename T>
T huber_loss(const Matrix<T>& pred, const Matrix<T>& target, T delta);

}  // namespace madirl::numerics
