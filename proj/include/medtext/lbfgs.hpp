#pragma once

#include <functional>
#include <vector>

namespace medtext {

struct LbfgsOptions {
  int history = 10;
  int max_iterations = 100;
  double tolerance = 1e-4;  // stop when the gradient L2 norm drops below this
  int max_line_search = 40;
};

struct LbfgsResult {
  int iterations = 0;
  double value = 0.0;
  double gradient_norm = 0.0;
  bool converged = false;
};

/// Value-and-gradient callback: fills grad (same size as x) and returns f(x).
using Objective = std::function<double(const std::vector<double>&, std::vector<double>&)>;

/// Limited-memory BFGS minimization with Armijo backtracking. Accepted steps
/// never increase the objective. Deterministic for a given objective and
/// starting point.
LbfgsResult lbfgs_minimize(const Objective& objective, std::vector<double>& x,
                           const LbfgsOptions& options = {});

}  // namespace medtext
