#pragma once

// Local minimizers over real parameter vectors, shared by the functional,
// walk and automaton optimizers. Every evaluation goes through a Budget so
// callers can cap the total work and record best-so-far traces.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

namespace qot::opt {

using Params = std::vector<double>;
using Objective = std::function<double(const Params&)>;

/// Counts evaluations against a hard cap and remembers the best point seen.
class Budget {
 public:
  explicit Budget(std::size_t max_evaluations) : max_(max_evaluations) {}

  /// A refused request marks the budget exhausted even if a few evaluations remain.
  bool can_spend(std::size_t n = 1) const {
    if (used_ + n <= max_) return true;
    refused_ = true;
    return false;
  }
  std::size_t used() const { return used_; }
  std::size_t limit() const { return max_; }
  bool exhausted() const { return refused_ || used_ >= max_; }

  double evaluate(const Objective& f, const Params& x);

  const Params& best_point() const { return best_x_; }
  double best_value() const { return best_; }

  struct Improvement {
    std::size_t evaluation;  // 1-based index of the evaluation that improved
    double value;
  };
  const std::vector<Improvement>& improvements() const { return improvements_; }

 private:
  std::size_t max_;
  std::size_t used_ = 0;
  mutable bool refused_ = false;
  double best_ = std::numeric_limits<double>::infinity();
  Params best_x_;
  std::vector<Improvement> improvements_;
};

struct BfgsOptions {
  double fd_step = 1e-6;
  double first_step = 0.5;  // length of the first steepest-descent trial step
  double grad_tol = 1e-10;
  std::size_t max_backtracks = 40;
};

/// Quasi-Newton descent with central finite-difference gradients and Armijo
/// backtracking (halving on failure). Stops on convergence, stall or budget.
void minimize_bfgs(const Objective& f, Params x0, Budget& budget, const BfgsOptions& options = {});

/// Compass (coordinate pattern) search for non-smooth objectives: try +/- step
/// along each coordinate, halve the step when no move improves.
void minimize_compass(const Objective& f, Params x0, Budget& budget, double initial_step,
                      double min_step = 1e-10);

}  // namespace qot::opt
