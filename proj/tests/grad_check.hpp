#pragma once

// Central-difference gradient checking. The builder closes over shared input
// tensors and reconstructs the graph on every call, so nudging an input value
// in place re-evaluates the whole function.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "ecan/rng.hpp"
#include "ecan/tensor.hpp"

namespace testutil {

inline double rel_err(double a, double b) {
  const double denom = std::max({1e-6, std::fabs(a), std::fabs(b)});
  return std::fabs(a - b) / denom;
}

/// Worst relative error between analytic and finite-difference gradients of
/// fn with respect to every element of every input.
inline double max_grad_rel_err(const std::function<ecan::Tensor(ecan::Tape&)>& fn,
                               std::vector<ecan::Tensor> inputs,
                               double h = 1e-5) {
  ecan::Tape tape;
  const ecan::Tensor loss = fn(tape);
  for (auto& t : inputs) t.zero_grad();
  tape.backward(loss);

  double worst = 0.0;
  for (auto& t : inputs) {
    std::vector<double> analytic(t.numel(), 0.0);
    if (t.has_grad()) analytic = t.grad();
    for (std::size_t i = 0; i < t.numel(); ++i) {
      const double x0 = t.values()[i];
      t.values()[i] = x0 + h;
      ecan::Tape tp;
      const double fp = fn(tp).item();
      t.values()[i] = x0 - h;
      ecan::Tape tm;
      const double fm = fn(tm).item();
      t.values()[i] = x0;
      const double fd = (fp - fm) / (2.0 * h);
      worst = std::max(worst, rel_err(analytic[i], fd));
    }
  }
  return worst;
}

/// Values in +/-[0.2, 2.0]: random but clear of the relu/clamp kinks at 0, so
/// a +/-1e-5 nudge cannot cross a non-differentiable point.
inline std::vector<double> kink_free_values(std::size_t n, ecan::Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) {
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    x = sign * rng.uniform(0.2, 2.0);
  }
  return v;
}

/// Strictly positive values in [0.2, 2.0] for log-safe inputs.
inline std::vector<double> positive_values(std::size_t n, ecan::Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(0.2, 2.0);
  return v;
}

/// Fixed random weights, bounded away from zero, for collapsing a non-scalar
/// op output into a scalar: loss = sum(out * w).
inline ecan::Tensor weights_like(const std::vector<std::size_t>& shape,
                                 ecan::Rng& rng) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  std::vector<double> w(n);
  for (double& x : w) {
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    x = sign * rng.uniform(0.5, 1.5);
  }
  return ecan::Tensor::from(shape, std::move(w));
}

inline ecan::Tensor scalarize(ecan::Tape& tape, const ecan::Tensor& out,
                              const ecan::Tensor& w) {
  return tape.sum(tape.mul(out, w));
}

}  // namespace testutil
