#include "madirl/numerics/optim.hpp"

#include "madirl/common/errors.hpp"

#include <cmath>

namespace madirl::numerics {

template <typename T>
void adam_step(ParamArray<T>& param, const Matrix<T>& grad, AdamState<T>& state) {
  if (grad.rows() != param.values.rows() || grad.cols() != param.values.cols()) {
    throw ShapeError("adam_step: gradient shape does not match parameter " + shape_string(param.shape));
  }
  if (state.t < 0) throw UsageError("adam_step: negative step counter");
  if (state.m.size() == 0) {
    state.m = Matrix<T>::Zero(grad.rows(), grad.cols());
    state.v = Matrix<T>::Zero(grad.rows(), grad.cols());
  }
  state.t += 1;
  const T b1 = static_cast<T>(state.beta1);
  const T b2 = static_cast<T>(state.beta2);
  state.m = b1 * state.m + (T(1) - b1) * grad;
  state.v = b2 * state.v + (T(1) - b2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  const T step = static_cast<T>(state.lr / c1);
  const T inv_c2 = static_cast<T>(1.0 / c2);
  const T eps = static_cast<T>(state.eps);
  param.values.array() -= step * state.m.array() / ((state.v.array() * inv_c2).sqrt() + eps);
}

template <typename T>
Adam<T>::Adam(const ParamStore<T>& store, double lr, double beta1, double beta2, double eps) : lr_(lr) {
  if (!(lr > 0.0)) throw ConfigError("Adam: learning rate must be positive");
  states_.resize(store.size());
  for (auto& s : states_) {
    s.lr = lr;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.eps = eps;
  }
}

template <typename T>
void Adam<T>::step(ParamStore<T>& store) {
  if (store.size() != states_.size()) throw UsageError("Adam::step: store does not match optimiser state");
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto& p = store.at(i);
    if (!p.has_grad()) p.zero_grad();
    adam_step(p, p.grad, states_[i]);
  }
}

template <typename T>
double clip_grad_norm(std::span<Matrix<T>* const> grads, double max_norm) {
  if (!(max_norm > 0.0)) throw ConfigError("clip_grad_norm: max_norm must be positive");
  double sq = 0.0;
  for (const auto* g : grads) sq += g->template cast<double>().squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const T factor = static_cast<T>(max_norm / norm);
    for (auto* g : grads) *g *= factor;
  }
  return norm;
}

template <typename T>
double clip_grad_norm(ParamStore<T>& store, double max_norm) {
  std::vector<Matrix<T>*> grads;
  grads.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto& p = store.at(i);
    if (!p.has_grad()) p.zero_grad();
    grads.push_back(&p.grad);
  }
  return clip_grad_norm<T>(std::span<Matrix<T>* const>(grads), max_norm);
}

template <typename T>
T huber_loss(const Matrix<T>& pred, const Matrix<T>& target, T delta) {
  if (!(delta > T(0))) throw ConfigError("huber_loss: delta must be positive");
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw ShapeError("huber_loss: prediction and target shapes differ");
  }
  return (pred - target)
      .unaryExpr([delta](T d) {
        const T ad = std::abs(d);
        return ad <= delta ? T(0.5) * d * d : delta * (ad - T(0.5) * delta);
      })
      .mean();
}

template void adam_step(ParamArray<float>&, const Matrix<float>&, AdamState<float>&);
template void adam_step(ParamArray<double>&, const Matrix<double>&, AdamState<double>&);
template class Adam<float>;
template class Adam<double>;
template double clip_grad_norm(std::span<Matrix<float>* const>, double);
template double clip_grad_norm(std::span<Matrix<double>* const>, double);
template double clip_grad_norm(ParamStore<float>&, double);
template double clip_grad_norm(ParamStore<double>&, double);
template float huber_loss(const Matrix<float>&, const Matrix<float>&, float);
template double huber_loss(const Matrix<double>&, const Matrix<double>&, double);

}  // namespace madirl::numerics
