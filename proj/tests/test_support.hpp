#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <vector>

#include "bayesic/nn/graph.hpp"

namespace test_support {

/// Central finite-difference gradient of `loss` with respect to every
/// parameter coordinate, compared against the analytic gradient already
/// accumulated in Parameter::grad. Returns the worst relative error.
///
/// The loss function must evaluate forward-only (no backward) from the
/// current parameter values.
inline double max_grad_relative_error(
    const bayesic::nn::ParamList& params,
    const std::function<double()>& loss_value, double step = 1e-5) {
  double worst = 0.0;
  // Floor the relative-error denominator at the finite-difference noise
  // scale, which grows with the loss magnitude (roundoff of L dominates).
  const double floor = 1e-6 * std::max(1.0, std::abs(loss_value()));
  for (bayesic::nn::Parameter* p : params) {
    for (Eigen::Index i = 0; i < p->value.rows(); ++i) {
      for (Eigen::Index j = 0; j < p->value.cols(); ++j) {
        const double saved = p->value(i, j);
        p->value(i, j) = saved + step;
        const double up = loss_value();
        p->value(i, j) = saved - step;
        const double down = loss_value();
        p->value(i, j) = saved;
        const double fd = (up - down) / (2.0 * step);
        const double analytic = p->grad(i, j);
        const double denom = std::max({std::abs(fd), std::abs(analytic), floor});
        worst = std::max(worst, std::abs(fd - analytic) / denom);
      }
    }
  }
  return worst;
}

}  // namespace test_support
