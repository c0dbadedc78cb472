#pragma once

#include "madirl/numerics/array.hpp"
#include "madirl/numerics/tape.hpp"

#include <optional>
#include <random>
#include <string>
#include <vector>

namespace madirl::numerics {

inline constexpr double kLeakySlope = 0.01;

/// Affine map x W + b. Weights are (in, out); the bias is optional.
/// Initialised from U(-1/sqrt(in), 1/sqrt(in)).
template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(ParamStore<T>& store, const std::string& prefix, int in, int out, bool bias, std::mt19937_64& rng);

  Var<T> forward(Tape<T>& tape, ParamStore<T>& store, Var<T> x) const;
  /// Tape-free evaluation of the same map.
  Matrix<T> infer(const ParamStore<T>& store, const Matrix<T>& x) const;

  [[nodiscard]] std::size_t weight() const { return weight_; }
  [[nodiscard]] std::optional<std::size_t> bias() const { return bias_; }
  [[nodiscard]] int in() const { return in_; }
  [[nodiscard]] int out() const { return out_; }

 private:
  std::size_t weight_ = 0;
  std::optional<std::size_t> bias_;
  int in_ = 0;
  int out_ = 0;
};

/// Fully connected stack with LeakyReLU between layers and a linear output.
template <typename T>
class Mlp {
 public:
  Mlp() = default;
  /// sizes = {in, hidden..., out}
  Mlp(ParamStore<T>& store, const std::string& prefix, const std::vector<int>& sizes, std::mt19937_64& rng);

  Var<T> forward(Tape<T>& tape, ParamStore<T>& store, Var<T> x) const;
  Matrix<T> infer(const ParamStore<T>& store, const Matrix<T>& x) const;

  [[nodiscard]] const std::vector<Linear<T>>& layers() const { return layers_; }
  [[nodiscard]] int in() const { return layers_.front().in(); }
  [[nodiscard]] int out() const { return layers_.back().out(); }

 private:
  std::vector<Linear<T>> layers_;
};

extern template class Linear<float>;
extern template class Linear<double>;
extern template class Mlp<float>;
extern template class Mlp<double>;

}  // namespace madirl::numerics
