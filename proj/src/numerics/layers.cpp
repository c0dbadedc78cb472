#include "madirl/numerics/layers.hpp"

#include "madirl/common/errors.hpp"

#include <cmath>

namespace madirl::numerics {

template <typename T>
Linear<T>::Linear(ParamStore<T>& store, const std::string& prefix, int in, int out, bool bias,
                  std::mt19937_64& rng)
    : in_(in), out_(out) {
  if (in <= 0 || out <= 0) throw ShapeError("Linear '" + prefix + "': dimensions must be positive");
  const T bound = static_cast<T>(1.0 / std::sqrt(static_cast<double>(in)));
  weight_ = store.add_uniform(prefix + "/weight", {in, out}, bound, rng);
  if (bias) bias_ = store.add_uniform(prefix + "/bias", {out}, bound, rng);
}

template <typename T>
Var<T> Linear<T>::forward(Tape<T>& tape, ParamStore<T>& store, Var<T> x) const {
  auto y = matmul(x, tape.param(store.at(weight_)));
  if (bias_) y = y + tape.param(store.at(*bias_));
  return y;
}

template <typename T>
Matrix<T> Linear<T>::infer(const ParamStore<T>& store, const Matrix<T>& x) const {
  const auto& w = store.at(weight_).values;
  if (x.cols() != w.rows()) {
    throw ShapeError("Linear::infer: input has " + std::to_string(x.cols()) + " columns, expected " +
                     std::to_string(w.rows()));
  }
  Matrix<T> y;
  y.noalias() = x * w;
  if (bias_) y.rowwise() += store.at(*bias_).values.row(0);
  return y;
}

template <typename T>
Mlp<T>::Mlp(ParamStore<T>& store, const std::string& prefix, const std::vector<int>& sizes, std::mt19937_64& rng) {
  if (sizes.size() < 2) throw ShapeError("Mlp '" + prefix + "': need at least input and output sizes");
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    layers_.emplace_back(store, prefix + "/fc" + std::to_string(k + 1), sizes[k], sizes[k + 1], true, rng);
  }
}

template <typename T>
Var<T> Mlp<T>::forward(Tape<T>& tape, ParamStore<T>& store, Var<T> x) const {
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    x = layers_[k].forward(tape, store, x);
    if (k + 1 < layers_.size()) x = leaky_relu(x, static_cast<T>(kLeakySlope));
  }
  return x;
}

template <typename T>
Matrix<T> Mlp<T>::infer(const ParamStore<T>& store, const Matrix<T>& x) const {
  Matrix<T> h = x;
  const T slope = static_cast<T>(kLeakySlope);
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    h = layers_[k].infer(store, h);
    if (k + 1 < layers_.size()) h = h.array().max(h.array() * slope).matrix();
  }
  return h;
}

template class Linear<float>;
template class Linear<double>;
template class Mlp<float>;
template class Mlp<double>;

}  // namespace madirl::numerics
