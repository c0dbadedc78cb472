#pragma once

#include "madirl/numerics/array.hpp"
#include "madirl/numerics/tape.hpp"

#include <functional>
#include <string>

namespace madirl::numerics {

/// Central differences: (f(x + eps e_k) - f(x - eps e_k)) / (2 eps) per coordinate.
Matrix<double> finite_difference_gradient(const std::function<double(const Matrix<double>&)>& f,
                                          const Matrix<double>& point, double eps);

struct GradcheckReport {
  double max_error = 0.0;  // |analytic - numeric| / max(1, |numeric|)
  std::string worst_param;
  Eigen::Index worst_index = -1;
  std::size_t coordinates = 0;
};

/// Compares backprop against central differences for every coordinate of
/// every parameter in `store`. `objective` must build a deterministic scalar
/// on the tape it is given, reading the store's current values.
GradcheckReport gradcheck(ParamStore<double>& store,
                          const std::function<Var<double>(Tape<double>&)>& objective, double eps = 1e-3);

/// Smallest distance of any LeakyReLU input from 0, or of any Huber residual
/// magnitude from its delta, over the nodes of an evaluated tape. Central
/// differences are only meaningful when this exceeds the perturbation's effect.
double kink_margin(const Tape<double>& tape);

}  // namespace madirl::numerics
