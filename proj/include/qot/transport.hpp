#pragma once

// Classical discrete Monge-Kantorovich transport posed as a binary penalty
// Hamiltonian (Hitchcock problem), with exhaustive and annealing solvers.
//
//   H(q) = sum_{x,y} c(x,y) mu(x) q(x,y)
//        + w * sum_x (sum_y mu(x) q(x,y) - mu(x))^2
//        + w * sum_y (sum_x mu(x) q(x,y) - nu(y))^2

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qot/linalg.hpp"

namespace qot::transport {

inline constexpr double kMassTol = 1e-9;
inline constexpr std::size_t kDefaultExhaustiveCap = 20;

class TransportInstance {
 public:
  /// penalty_weight defaults to 1 + max|c| * max mu when not given.
  TransportInstance(std::vector<double> mu, std::vector<double> nu, RMatrix cost,
                    std::optional<double> penalty_weight = std::nullopt);

  std::size_t n_source() const { return mu_.size(); }
  std::size_t n_target() const { return nu_.size(); }
  const std::vector<double>& mu() const { return mu_; }
  const std::vector<double>& nu() const { return nu_; }
  const RMatrix& cost() const { return cost_; }
  double penalty_weight() const { return penalty_weight_; }
  bool penalty_weight_defaulted() const { return penalty_defaulted_; }

  static double default_penalty_weight(const std::vector<double>& mu, const RMatrix& cost);

 private:
  std::vector<double> mu_;
  std::vector<double> nu_;
  RMatrix cost_;
  double penalty_weight_;
  bool penalty_defaulted_;
};

class TransportPlan {
 public:
  TransportPlan(RMatrix q, bool binary_mode);
  static TransportPlan from_bits(std::size_t rows, std::size_t cols, const std::vector<std::uint8_t>& bits);

  const RMatrix& q() const { return q_; }
  bool binary_mode() const { return binary_; }
  /// Row-major 0/1 vector; only meaningful in binary mode.
  std::vector<std::uint8_t> bits() const;

  friend bool operator==(const TransportPlan& a, const TransportPlan& b) {
    return a.binary_ == b.binary_ && a.q_ == b.q_;
  }

 private:
  RMatrix q_;
  bool binary_;
};

struct Marginals {
  std::vector<double> row_masses;
  std::vector<double> col_masses;
};

struct EnergyTerms {
  double cost = 0.0;
  double row_penalty = 0.0;  // already multiplied by w
  double col_penalty = 0.0;
  double total() const { return cost + row_penalty + col_penalty; }
};

Marginals marginals(const TransportInstance& inst, const TransportPlan& plan);
EnergyTerms energy_terms(const TransportInstance& inst, const TransportPlan& plan);
double hamiltonian_energy(const TransportInstance& inst, const TransportPlan& plan);

struct SolveResult {
  TransportPlan plan;
  double energy;
};

/// Global minimum over all binary plans; ties go to the lexicographically
/// smallest row-major bit vector.
SolveResult solve_exhaustive(const TransportInstance& inst,
                             std::size_t max_bits = kDefaultExhaustiveCap);

/// Geometric Metropolis schedule. Temperatures are in units of the instance
/// energy scale w * max(mu)^2, which is the size of a single-bit penalty move.
struct AnnealSchedule {
  double t_initial = 2.0;
  double t_final = 1e-3;
  std::size_t sweeps = 400;
  std::size_t restarts = 10;
};

struct AnnealResult {
  TransportPlan plan;
  double energy;
  std::size_t best_restart;
};

AnnealResult solve_annealing(const TransportInstance& inst, const AnnealSchedule& schedule,
                             std::uint64_t seed);

}  // namespace qot::transport
