#pragma once

// Limited-memory BFGS with the standard two-loop recursion and a backtracking
// Armijo line search.  The objective callback evaluates f and writes the
// gradient in place.  Non-finite objective values during the line search
// reject the step and halve it; if the step underflows the solver returns the
// best point seen with converged = false.

#include <cmath>
#include <deque>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "adasketch/common.hpp"

namespace adasketch {

struct LbfgsOptions {
  int memory = 5;
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;  // stop when ||g|| <= tol * (1 + |f|)
  double armijo_c1 = 1e-4;
  double min_step = 1e-20;
};

template <typename Scalar>
struct LbfgsResult {
  Vector<Scalar> x;
  Scalar f = 0;
  Scalar gradient_norm = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<Scalar> objective_trace;  // f after every accepted step
  std::string message;
};

/// Minimizes fg(x, grad_out) -> f starting from x0.
template <typename Scalar, typename Objective>
LbfgsResult<Scalar> lbfgs_minimize(Objective&& fg, Vector<Scalar> x0,
                                   const LbfgsOptions& options) {
  require(options.memory >= 1, "lbfgs: memory must be >= 1");
  require(options.max_iterations >= 1, "lbfgs: max_iterations must be >= 1");
  require(options.gradient_tolerance > 0, "lbfgs: gradient tolerance must be positive");

  const Index n = x0.size();
  LbfgsResult<Scalar> result;
  result.x = std::move(x0);

  Vector<Scalar> grad(n);
  Scalar f = fg(result.x, grad);
  result.objective_trace.push_back(f);

  std::deque<std::pair<Vector<Scalar>, Vector<Scalar>>> pairs;  // (s, y)
  Vector<Scalar> direction(n), x_new(n), grad_new(n);

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    result.iterations = iter;
    const Scalar gnorm = grad.norm();
    if (gnorm <= options.gradient_tolerance * (Scalar(1) + std::abs(f))) {
      result.converged = true;
      result.message = "gradient tolerance reached";
      break;
    }

    // Two-loop recursion.
    direction = -grad;
    std::vector<Scalar> alpha(pairs.size());
    for (std::size_t m = pairs.size(); m-- > 0;) {
      const auto& [s, y] = pairs[m];
      const Scalar rho = Scalar(1) / y.dot(s);
      alpha[m] = rho * s.dot(direction);
      direction -= alpha[m] * y;
    }
    if (!pairs.empty()) {
      const auto& [s, y] = pairs.back();
      direction *= s.dot(y) / y.dot(y);
    }
    for (std::size_t m = 0; m < pairs.size(); ++m) {
      const auto& [s, y] = pairs[m];
      const Scalar rho = Scalar(1) / y.dot(s);
      const Scalar beta = rho * y.dot(direction);
      direction += (alpha[m] - beta) * s;
    }

    Scalar dg = direction.dot(grad);
    if (!(dg < 0)) {
      // Not a descent direction; restart from steepest descent.
      pairs.clear();
      direction = -grad;
      dg = -gnorm * gnorm;
    }

    // Backtracking line search with sufficient decrease.
    Scalar step = iter == 0 ? std::min(Scalar(1), Scalar(1) / std::max(Scalar(1), gnorm))
                            : Scalar(1);
    bool accepted = false;
    Scalar f_new = f;
    while (step >= options.min_step) {
      x_new = result.x + step * direction;
      f_new = fg(x_new, grad_new);
      if (std::isfinite(static_cast<double>(f_new)) &&
          f_new <= f + options.armijo_c1 * step * dg) {
        accepted = true;
        break;
      }
      step /= 2;
    }
    if (!accepted) {
      result.message = "line search step underflow";
      break;
    }

    Vector<Scalar> s = x_new - result.x;
    Vector<Scalar> y = grad_new - grad;
    const Scalar sy = s.dot(y);
    if (sy > Scalar(1e-10) * s.norm() * y.norm()) {
      pairs.emplace_back(std::move(s), std::move(y));
      if (static_cast<int>(pairs.size()) > options.memory) pairs.pop_front();
    }

    result.x.swap(x_new);
    grad.swap(grad_new);
    f = f_new;
    result.objective_trace.push_back(f);
    result.iterations = iter + 1;
  }

  if (result.message.empty()) result.message = "iteration limit reached";
  result.f = f;
  result.gradient_norm = grad.norm();
  return result;
}

}  // namespace adasketch
