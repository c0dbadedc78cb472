#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace madirl::numerics {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Shape = std::vector<std::int64_t>;

std::string shape_string(const Shape& shape);

/// Dense parameter array. Values are held as a row-major 2-D view:
/// a 1-D shape {n} maps to 1 x n, {r, c, ...} maps to r x (c * ...).
/// The gradient slot is empty until the first backward pass touches it.
template <typename T>
struct ParamArray {
  Shape shape;
  Matrix<T> values;
  Matrix<T> grad;

  ParamArray() = default;
  explicit ParamArray(Shape s);

  [[nodiscard]] std::int64_t numel() const { return values.size(); }
  [[nodiscard]] bool has_grad() const { return grad.size() != 0; }

  /// Allocates the gradient slot if needed and sets it to zero.
  void zero_grad();
};

/// Ordered, named collection of parameters owned by one network.
/// Networks keep indices into the store, so copying a store (e.g. to build
/// a target network) yields an independent, fully functional copy.
template <typename T>
class ParamStore {
 public:
  std::size_t add(std::string name, Shape shape);

  /// Adds a parameter and fills it from U(-bound, bound).
  std::size_t add_uniform(std::string name, Shape shape, T bound, std::mt19937_64& rng);

  [[nodiscard]] ParamArray<T>& at(std::size_t i) { return arrays_.at(i); }
  [[nodiscard]] const ParamArray<T>& at(std::size_t i) const { return arrays_.at(i); }
  [[nodiscard]] const std::string& name(std::size_t i) const { return names_.at(i); }
  [[nodiscard]] std::size_t size() const { return arrays_.size(); }

  /// Index of the named parameter, or size() when absent.
  [[nodiscard]] std::size_t find(std::string_view name) const;

  [[nodiscard]] std::int64_t parameter_count() const;

  void zero_grad();

  /// Copies values from another store with identical names and shapes.
  void copy_values_from(const ParamStore& other);

  template <typename U>
  [[nodiscard]] ParamStore<U> cast() const {
    ParamStore<U> out;
    for (std::size_t i = 0; i < arrays_.size(); ++i) {
      out.add(names_[i], arrays_[i].shape);
      out.at(i).values = arrays_[i].values.template cast<U>();
    }
    return out;
  }

 private:
  std::vector<ParamArray<T>> arrays_;
  std::vector<std::string> names_;
};

extern template struct ParamArray<float>;
extern template struct ParamArray<double>;
extern template class ParamStore<float>;
extern template class ParamStore<double>;

}  // namespace madirl::numerics
