#include "qot/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace qot::opt {

double Budget::evaluate(const Objective& f, const Params& x) {
  ++used_;
  const double v = f(x);
  if (std::isfinite(v) && v < best_) {
    best_ = v;
    best_x_ = x;
    improvements_.push_back({used_, v});
  }
  return v;
}

namespace {

bool gradient(const Objective& f, const Params& x, Budget& budget, double h, Eigen::VectorXd& g) {
  const std::size_t n = x.size();
  if (!budget.can_spend(2 * n)) return false;
  g.resize(static_cast<Eigen::Index>(n));
  Params probe = x;
  for (std::size_t i = 0; i < n; ++i) {
    probe[i] = x[i] + h;
    const double up = budget.evaluate(f, probe);
    probe[i] = x[i] - h;
    const double down = budget.evaluate(f, probe);
    probe[i] = x[i];
    g(static_cast<Eigen::Index>(i)) = (up - down) / (2.0 * h);
  }
  return true;
}

Params step_from(const Params& x, const Eigen::VectorXd& p, double alpha) {
  Params out = x;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] += alpha * p(static_cast<Eigen::Index>(i));
  return out;
}

}  // namespace

void minimize_bfgs(const Objective& f, Params x, Budget& budget, const BfgsOptions& options) {
  const auto n = static_cast<Eigen::Index>(x.size());
  if (n == 0 || !budget.can_spend()) return;
  double fx = budget.evaluate(f, x);
  Eigen::VectorXd g;
  if (!gradient(f, x, budget, options.fd_step, g)) return;

  Eigen::MatrixXd inv_hessian = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;
  std::size_t stalls = 0;
  while (g.lpNorm<Eigen::Infinity>() > options.grad_tol) {
    Eigen::VectorXd p = -inv_hessian * g;
    if (p.dot(g) >= 0.0 || !p.allFinite()) {
      inv_hessian.setIdentity();
      scaled = false;
      p = -g;
    }
    if (!scaled) p *= options.first_step / std::max(p.norm(), 1e-300);

    double alpha = 1.0;
    const double slope = p.dot(g);
    bool accepted = false;
    Params trial;
    double f_trial = fx;
    for (std::size_t k = 0; k <= options.max_backtracks; ++k) {
      if (!budget.can_spend()) return;
      trial = step_from(x, p, alpha);
      f_trial = budget.evaluate(f, trial);
      if (std::isfinite(f_trial) && f_trial <= fx + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // Line search failed along the quasi-Newton direction: retry once from steepest descent.
      if (scaled) {
        inv_hessian.setIdentity();
        scaled = false;
        continue;
      }
      return;
    }

    Eigen::VectorXd g_new;
    if (!gradient(f, trial, budget, options.fd_step, g_new)) return;
    const Eigen::VectorXd s = alpha * p;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-300) {
      if (!scaled) {
        inv_hessian = Eigen::MatrixXd::Identity(n, n) * (sy / y.squaredNorm());
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      inv_hessian = (I - rho * s * y.transpose()) * inv_hessian * (I - rho * y * s.transpose()) +
                    rho * s * s.transpose();
    }

    const double decrease = fx - f_trial;
    stalls = decrease <= 1e-16 * (1.0 + std::abs(fx)) ? stalls + 1 : 0;
    x = std::move(trial);
    fx = f_trial;
    g = std::move(g_new);
    if (stalls >= 3) return;
  }
}

void minimize_compass(const Objective& f, Params x, Budget& budget, double initial_step, double min_step) {
  if (!budget.can_spend()) return;
  double fx = budget.evaluate(f, x);
  double step = initial_step;
  while (step >= min_step) {
    bool moved = false;
    for (std::size_t i = 0; i < x.size() && !moved; ++i) {
      for (double dir : {+1.0, -1.0}) {
        if (!budget.can_spend()) return;
        Params trial = x;
        trial[i] += dir * step;
        const double ft = budget.evaluate(f, trial);
        if (ft < fx) {
          x = std::move(trial);
          fx = ft;
          moved = true;
          break;
        }
      }
    }
    if (!moved) step *= 0.5;
  }
}

}  // namespace qot::opt
