#include "qot/transport.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "qot/errors.hpp"
#include "qot/parallel.hpp"
#include "qot/rng.hpp"

namespace qot::transport {
namespace {

void check_dims(const TransportInstance& inst, const TransportPlan& plan) {
  if (static_cast<std::size_t>(plan.q().rows()) != inst.n_source() ||
      static_cast<std::size_t>(plan.q().cols()) != inst.n_target()) {
    std::ostringstream msg;
    msg << "plan is " << plan.q().rows() << "x" << plan.q().cols() << " but instance is "
        << inst.n_source() << "x" << inst.n_target();
    throw DimensionError(msg.str());
  }
}

// Row/column masses and current energy of a binary configuration, kept
// incrementally so a single flip costs O(1).
class FlipState {
 public:
  FlipState(const TransportInstance& inst, std::vector<std::uint8_t> bits)
      : inst_(inst), bits_(std::move(bits)), rows_(inst.n_source(), 0.0), cols_(inst.n_target(), 0.0) {
    const std::size_t nt = inst.n_target();
    for (std::size_t x = 0; x < inst.n_source(); ++x) {
      for (std::size_t y = 0; y < nt; ++y) {
        if (bits_[x * nt + y]) {
          const double m = inst.mu()[x];
          rows_[x] += m;
          cols_[y] += m;
          cost_ += inst.cost()(x, y) * m;
        }
      }
    }
  }

  double energy() const {
    const double w = inst_.penalty_weight();
    double e = cost_;
    for (std::size_t x = 0; x < rows_.size(); ++x) e += w * sq(rows_[x] - inst_.mu()[x]);
    for (std::size_t y = 0; y < cols_.size(); ++y) e += w * sq(cols_[y] - inst_.nu()[y]);
    return e;
  }

  double flip_delta(std::size_t x, std::size_t y) const {
    const double w = inst_.penalty_weight();
    const double m = inst_.mu()[x];
    const double s = bits_[x * inst_.n_target() + y] ? -m : m;
    const double r = rows_[x] - inst_.mu()[x];
    const double c = cols_[y] - inst_.nu()[y];
    return inst_.cost()(x, y) * s + w * (sq(r + s) - sq(r)) + w * (sq(c + s) - sq(c));
  }

  void flip(std::size_t x, std::size_t y) {
    auto& b = bits_[x * inst_.n_target() + y];
    const double m = inst_.mu()[x];
    const double s = b ? -m : m;
    rows_[x] += s;
    cols_[y] += s;
    cost_ += inst_.cost()(x, y) * s;
    b ^= 1U;
  }

  const std::vector<std::uint8_t>& bits() const { return bits_; }

 private:
  static double sq(double v) { return v * v; }

  const TransportInstance& inst_;
  std::vector<std::uint8_t> bits_;
  std::vector<double> rows_;
  std::vector<double> cols_;
  double cost_ = 0.0;
};

bool better(double e, const std::vector<std::uint8_t>& bits, double best_e,
            const std::vector<std::uint8_t>& best_bits) {
  if (e < best_e) return true;
  return e == best_e && bits < best_bits;
}

}  // namespace

TransportInstance::TransportInstance(std::vector<double> mu, std::vector<double> nu, RMatrix cost,
                                     std::optional<double> penalty_weight)
    : mu_(std::move(mu)), nu_(std::move(nu)), cost_(std::move(cost)) {
  if (mu_.empty() || nu_.empty()) throw DimensionError("mu and nu must be non-empty");
  if (static_cast<std::size_t>(cost_.rows()) != mu_.size() ||
      static_cast<std::size_t>(cost_.cols()) != nu_.size()) {
    throw DimensionError("cost matrix must be n_source x n_target");
  }
  for (double m : mu_) {
    if (!(m >= 0.0) || !std::isfinite(m)) throw ContractError("mu entries must be finite and >= 0");
  }
  for (double m : nu_) {
    if (!(m >= 0.0) || !std::isfinite(m)) throw ContractError("nu entries must be finite and >= 0");
  }
  if (!cost_.allFinite()) throw ContractError("cost entries must be finite");
  const double smu = std::accumulate(mu_.begin(), mu_.end(), 0.0);
  const double snu = std::accumulate(nu_.begin(), nu_.end(), 0.0);
  if (std::abs(smu - snu) > kMassTol) {
    std::ostringstream msg;
    msg << "mass conservation violated: sum(mu)=" << smu << " sum(nu)=" << snu;
    throw ContractError(msg.str());
  }
  if (penalty_weight) {
    if (!(*penalty_weight > 0.0) || !std::isfinite(*penalty_weight)) {
      throw ContractError("penalty_weight must be positive");
    }
    penalty_weight_ = *penalty_weight;
    penalty_defaulted_ = false;
  } else {
    penalty_weight_ = default_penalty_weight(mu_, cost_);
    penalty_defaulted_ = true;
  }
}

double TransportInstance::default_penalty_weight(const std::vector<double>& mu, const RMatrix& cost) {
  const double max_mu = *std::max_element(mu.begin(), mu.end());
  return 1.0 + cost.cwiseAbs().maxCoeff() * max_mu;
}

TransportPlan::TransportPlan(RMatrix q, bool binary_mode) : q_(std::move(q)), binary_(binary_mode) {
  for (Eigen::Index i = 0; i < q_.size(); ++i) {
    const double v = q_.data()[i];
    if (!(v >= 0.0 && v <= 1.0)) throw ContractError("plan entries must lie in [0,1]");
    if (binary_ && v != 0.0 && v != 1.0) throw ContractError("binary plan entries must be 0 or 1");
  }
}

TransportPlan TransportPlan::from_bits(std::size_t rows, std::size_t cols,
                                       const std::vector<std::uint8_t>& bits) {
  if (bits.size() != rows * cols) throw DimensionError("bit vector length mismatch");
  RMatrix q(rows, cols);
  for (std::size_t x = 0; x < rows; ++x) {
    for (std::size_t y = 0; y < cols; ++y) q(x, y) = bits[x * cols + y] ? 1.0 : 0.0;
  }
  return TransportPlan(std::move(q), true);
}

std::vector<std::uint8_t> TransportPlan::bits() const {
  std::vector<std::uint8_t> out;
  out.reserve(q_.size());
  for (Eigen::Index x = 0; x < q_.rows(); ++x) {
    for (Eigen::Index y = 0; y < q_.cols(); ++y) out.push_back(q_(x, y) != 0.0 ? 1 : 0);
  }
  return out;
}

Marginals marginals(const TransportInstance& inst, const TransportPlan& plan) {
  check_dims(inst, plan);
  Marginals m{std::vector<double>(inst.n_source(), 0.0), std::vector<double>(inst.n_target(), 0.0)};
  for (std::size_t x = 0; x < inst.n_source(); ++x) {
    for (std::size_t y = 0; y < inst.n_target(); ++y) {
      const double moved = inst.mu()[x] * plan.q()(x, y);
      m.row_masses[x] += moved;
      m.col_masses[y] += moved;
    }
  }
  return m;
}

EnergyTerms energy_terms(const TransportInstance& inst, const TransportPlan& plan) {
  const Marginals m = marginals(inst, plan);
  EnergyTerms e;
  for (std::size_t x = 0; x < inst.n_source(); ++x) {
    for (std::size_t y = 0; y < inst.n_target(); ++y) {
      e.cost += inst.cost()(x, y) * inst.mu()[x] * plan.q()(x, y);
    }
  }
  const double w = inst.penalty_weight();
  for (std::size_t x = 0; x < inst.n_source(); ++x) {
    const double r = m.row_masses[x] - inst.mu()[x];
    e.row_penalty += w * r * r;
  }
  for (std::size_t y = 0; y < inst.n_target(); ++y) {
    const double r = m.col_masses[y] - inst.nu()[y];
    e.col_penalty += w * r * r;
  }
  return e;
}

double hamiltonian_energy(const TransportInstance& inst, const TransportPlan& plan) {
  return energy_terms(inst, plan).total();
}

SolveResult solve_exhaustive(const TransportInstance& inst, std::size_t max_bits) {
  const std::size_t rows = inst.n_source();
  const std::size_t cols = inst.n_target();
  const std::size_t n = rows * cols;
  if (n > max_bits || n >= 63) {
    std::ostringstream msg;
    msg << "exhaustive search over " << n << " bits exceeds cap of " << max_bits;
    throw SizeError(msg.str());
  }
  // k ascending enumerates bit vectors in lexicographic order (cell 0 is the MSB),
  // so keeping the first strict minimum implements the tie-break.
  std::vector<std::uint8_t> bits(n, 0), best_bits;
  double best = 0.0;
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t k = 0; k < total; ++k) {
    for (std::size_t i = 0; i < n; ++i) bits[i] = static_cast<std::uint8_t>((k >> (n - 1 - i)) & 1U);
    const double e = FlipState(inst, bits).energy();
    if (best_bits.empty() || e < best) {
      best = e;
      best_bits = bits;
    }
  }
  TransportPlan plan = TransportPlan::from_bits(rows, cols, best_bits);
  const double energy = hamiltonian_energy(inst, plan);
  return {std::move(plan), energy};
}

AnnealResult solve_annealing(const TransportInstance& inst, const AnnealSchedule& schedule,
                             std::uint64_t seed) {
  if (schedule.restarts == 0 || schedule.sweeps == 0) throw ContractError("schedule needs restarts and sweeps");
  if (!(schedule.t_initial > 0.0) || !(schedule.t_final > 0.0)) throw ContractError("temperatures must be positive");
  const std::size_t rows = inst.n_source();
  const std::size_t cols = inst.n_target();
  const double max_mu = *std::max_element(inst.mu().begin(), inst.mu().end());
  const double scale = std::max(inst.penalty_weight() * max_mu * max_mu, 1e-300);

  struct Run {
    std::vector<std::uint8_t> bits;
    double energy;
  };

  auto run_one = [&](std::size_t restart) -> Run {
    Rng rng(derive_seed(seed, "transport.anneal", restart));
    std::bernoulli_distribution coin(0.5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::uint8_t> init(rows * cols);
    for (auto& b : init) b = coin(rng) ? 1 : 0;
    FlipState state(inst, std::move(init));
    double current = state.energy();
    Run best{state.bits(), current};

    const double ratio = schedule.sweeps > 1
                             ? std::pow(schedule.t_final / schedule.t_initial, 1.0 / double(schedule.sweeps - 1))
                             : 1.0;
    double temperature = schedule.t_initial * scale;
    for (std::size_t sweep = 0; sweep < schedule.sweeps; ++sweep) {
      for (std::size_t x = 0; x < rows; ++x) {
        for (std::size_t y = 0; y < cols; ++y) {
          const double d = state.flip_delta(x, y);
          if (d <= 0.0 || unit(rng) < std::exp(-d / temperature)) {
            state.flip(x, y);
            current += d;
            if (current <= best.energy + 1e-12) {
              const double exact = state.energy();
              current = exact;
              if (better(exact, state.bits(), best.energy, best.bits)) best = {state.bits(), exact};
            }
          }
        }
      }
      temperature *= ratio;
    }
    return best;
  };

  const auto runs = parallel_map(schedule.restarts, run_one);
  std::size_t pick = 0;
  for (std::size_t i = 1; i < runs.size(); ++i) {
    if (better(runs[i].energy, runs[i].bits, runs[pick].energy, runs[pick].bits)) pick = i;
  }
  TransportPlan plan = TransportPlan::from_bits(rows, cols, runs[pick].bits);
  const double energy = hamiltonian_energy(inst, plan);
  return {std::move(plan), energy, pick};
}

}  // namespace qot::transport
