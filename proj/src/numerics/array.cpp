#include "madirl/numerics/array.hpp"

#include "madirl/common/errors.hpp"

#include <numeric>
#include <sstream>

namespace madirl::numerics {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

template <typename T>
ParamArray<T>::ParamArray(Shape s) : shape(std::move(s)) {
  if (shape.empty()) throw ShapeError("ParamArray: empty shape");
  for (auto d : shape) {
    if (d <= 0) throw ShapeError("ParamArray: non-positive dimension in " + shape_string(shape));
  }
  const std::int64_t rows = shape.size() == 1 ? 1 : shape[0];
  const std::int64_t cols = shape.size() == 1
                                ? shape[0]
                                : std::accumulate(shape.begin() + 1, shape.end(), std::int64_t{1},
                                                  std::multiplies<>());
  values = Matrix<T>::Zero(rows, cols);
}

template <typename T>
void ParamArray<T>::zero_grad() {
  if (grad.rows() != values.rows() || grad.cols() != values.cols()) {
    grad = Matrix<T>::Zero(values.rows(), values.cols());
  } else {
    grad.setZero();
  }
}

template <typename T>
std::size_t ParamStore<T>::add(std::string name, Shape shape) {
  if (find(name) != size()) throw UsageError("ParamStore: duplicate parameter name '" + name + "'");
  arrays_.emplace_back(std::move(shape));
  names_.push_back(std::move(name));
  return arrays_.size() - 1;
}

template <typename T>
std::size_t ParamStore<T>::add_uniform(std::string name, Shape shape, T bound, std::mt19937_64& rng) {
  const auto idx = add(std::move(name), std::move(shape));
  std::uniform_real_distribution<double> dist(-static_cast<double>(bound), static_cast<double>(bound));
  auto& v = arrays_[idx].values;
  for (Eigen::Index k = 0; k < v.size(); ++k) v.data()[k] = static_cast<T>(dist(rng));
  return idx;
}

template <typename T>
std::size_t ParamStore<T>::find(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return names_.size();
}

template <typename T>
std::int64_t ParamStore<T>::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& a : arrays_) n += a.numel();
  return n;
}

template <typename T>
void ParamStore<T>::zero_grad() {
  for (auto& a : arrays_) a.zero_grad();
}

template <typename T>
void ParamStore<T>::copy_values_from(const ParamStore& other) {
  if (other.size() != size()) throw ShapeError("ParamStore::copy_values_from: parameter count differs");
  for (std::size_t i = 0; i < arrays_.size(); ++i) {
    if (other.arrays_[i].shape != arrays_[i].shape) {
      throw ShapeError("ParamStore::copy_values_from: shape mismatch for '" + names_[i] + "' " +
                       shape_string(arrays_[i].shape) + " vs " + shape_string(other.arrays_[i].shape));
    }
    arrays_[i].values = other.arrays_[i].values;
  }
}

template struct ParamArray<float>;
template struct ParamArray<double>;
template class ParamStore<float>;
template class ParamStore<double>;

}  // namespace madirl::numerics
