#include "medtext/lbfgs.hpp"

#include <cmath>
#include <deque>

#include "medtext/errors.hpp"

namespace medtext {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& objective, std::vector<double>& x,
                           const LbfgsOptions& options) {
  const std::size_t n = x.size();
  std::vector<double> grad(n, 0.0);
  double value = objective(x, grad);
  if (!std::isfinite(value)) throw Error("lbfgs: non-finite objective at start");

  LbfgsResult result;
  result.value = value;
  result.gradient_norm = norm2(grad);

  struct Pair {
    std::vector<double> s, y;
    double rho;
  };
  std::deque<Pair> memory;

  std::vector<double> direction(n), x_new(n), grad_new(n);

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    if (result.gradient_norm <= options.tolerance) {
      result.converged = true;
      break;
    }

    // Two-loop recursion.
    direction = grad;
    std::vector<double> alpha(memory.size());
    for (std::size_t i = memory.size(); i-- > 0;) {
      alpha[i] = memory[i].rho * dot(memory[i].s, direction);
      for (std::size_t k = 0; k < n; ++k) direction[k] -= alpha[i] * memory[i].y[k];
    }
    if (!memory.empty()) {
      const Pair& last = memory.back();
      const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
      for (double& d : direction) d *= gamma;
    }
    for (std::size_t i = 0; i < memory.size(); ++i) {
      const double beta = memory[i].rho * dot(memory[i].y, direction);
      for (std::size_t k = 0; k < n; ++k)
        direction[k] += (alpha[i] - beta) * memory[i].s[k];
    }
    for (double& d : direction) d = -d;

    double dir_deriv = dot(grad, direction);
    if (dir_deriv >= 0.0) {
      // Not a descent direction; fall back to steepest descent.
      for (std::size_t k = 0; k < n; ++k) direction[k] = -grad[k];
      dir_deriv = -dot(grad, grad);
      memory.clear();
    }

    double step = (iter == 0 && memory.empty())
                      ? 1.0 / std::max(1.0, result.gradient_norm)
                      : 1.0;
    const double c1 = 1e-4;
    double value_new = value;
    bool accepted = false;
    for (int ls = 0; ls < options.max_line_search; ++ls) {
      for (std::size_t k = 0; k < n; ++k) x_new[k] = x[k] + step * direction[k];
      value_new = objective(x_new, grad_new);
      if (std::isfinite(value_new) && value_new <= value + c1 * step * dir_deriv) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no further progress possible at machine precision

    Pair pair;
    pair.s.resize(n);
    pair.y.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      pair.s[k] = x_new[k] - x[k];
      pair.y[k] = grad_new[k] - grad[k];
    }
    const double sy = dot(pair.s, pair.y);
    if (sy > 1e-10 * norm2(pair.s) * norm2(pair.y)) {
      pair.rho = 1.0 / sy;
      memory.push_back(std::move(pair));
      if (static_cast<int>(memory.size()) > options.history) memory.pop_front();
    }

    x.swap(x_new);
    grad.swap(grad_new);
    value = value_new;
    result.iterations = iter + 1;
    result.value = value;
    result.gradient_norm = norm2(grad);
  }

  if (result.gradient_norm <= options.tolerance) result.converged = true;
  return result;
}

}  // namespace medtext
