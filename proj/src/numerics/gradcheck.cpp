#include "madirl/numerics/gradcheck.hpp"

#include "madirl/common/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace madirl::numerics {

Matrix<double> finite_difference_gradient(const std::function<double(const Matrix<double>&)>& f,
                                          const Matrix<double>& point, double eps) {
  if (!(eps > 0.0)) throw ConfigError("finite_difference_gradient: eps must be positive");
  Matrix<double> grad(point.rows(), point.cols());
  Matrix<double> x = point;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double orig = x.data()[k];
    x.data()[k] = orig + eps;
    const double up = f(x);
    x.data()[k] = orig - eps;
    const double down = f(x);
    x.data()[k] = orig;
    grad.data()[k] = (up - down) / (2.0 * eps);
  }
  return grad;
}

GradcheckReport gradcheck(ParamStore<double>& store,
                          const std::function<Var<double>(Tape<double>&)>& objective, double eps) {
  store.zero_grad();
  {
    Tape<double> tape;
    auto loss = objective(tape);
    tape.backward(loss);
  }
  GradcheckReport report;
  for (std::size_t p = 0; p < store.size(); ++p) {
    auto& arr = store.at(p);
    const Matrix<double> analytic = arr.grad;
    const Matrix<double> saved = arr.values;
    auto f = [&](const Matrix<double>& x) {
      arr.values = x;
      Tape<double> tape;
      return objective(tape).item();
    };
    const Matrix<double> numeric = finite_difference_gradient(f, saved, eps);
    arr.values = saved;
    for (Eigen::Index k = 0; k < numeric.size(); ++k) {
      const double fd = numeric.data()[k];
      const double err = std::abs(analytic.data()[k] - fd) / std::max(1.0, std::abs(fd));
      ++report.coordinates;
      if (err > report.max_error || report.worst_index < 0) {
        report.max_error = std::max(report.max_error, err);
        if (err >= report.max_error) {
          report.worst_param = store.name(p);
          report.worst_index = k;
        }
      }
    }
  }
  return report;
}

double kink_margin(const Tape<double>& tape) {
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < tape.size(); ++i) {
    const auto& n = tape.node(static_cast<int>(i));
    if (n.kind == OpKind::kLeakyRelu) {
      margin = std::min(margin, tape.node(n.inputs[0]).value.cwiseAbs().minCoeff());
    } else if (n.kind == OpKind::kHuber) {
      const auto& pred = tape.node(n.inputs[0]).value;
      const auto& target = tape.node(n.inputs[1]).value;
      const double d = ((pred - target).cwiseAbs().array() - n.scalar).abs().minCoeff();
      margin = std::min(margin, d);
    }
  }
  return margin;
}

}  // namespace madirl::numerics
