#pragma once

// Quantum transport cost functionals on finite grids: the baseline costed
// norm, its decohered (classical) reduction, the relaxed variants and the
// dynamical families, plus a seeded optimizer over unitaries.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qot/linalg.hpp"
#include "qot/optimizer.hpp"
#include "qot/state_space.hpp"

namespace qot::functionals {

enum class Variant {
  baseline,
  classical_strict,
  v1_distribution,
  v1_classical,
  v2_fidelity,
  v3_amplitude,
  v3_integrated_initial,
  v3_integrated_final,
  v4_quantum,
  v4_classical,
  v5_amplitude,
  v5_dynamical,
};

enum class Sense { minimize, maximize };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);
std::string to_string(Sense s);
/// Reward-type variants (v3 amplitude, v5) maximize; all others minimize.
Sense default_sense(Variant v);
/// v4 functionals have no optimization mode.
bool is_evaluation_only(Variant v);
bool needs_target_state(Variant v);

enum class ConstraintKind { none, state, distribution };
/// Which residual the variant constrains during optimization.
ConstraintKind constraint_kind(Variant v);

class TransportProblem {
 public:
  /// Throws ContractError when the variant's required fields are missing or
  /// the target distribution is not normalized (1e-9).
  TransportProblem(Variant variant, PureState source, CostKernel kernel,
                   std::optional<PureState> target = std::nullopt,
                   std::optional<std::vector<double>> target_distribution = std::nullopt,
                   std::vector<double> multiplier = {});

  Variant variant() const { return variant_; }
  const PureState& source() const { return source_; }
  const CostKernel& kernel() const { return kernel_; }
  const std::optional<PureState>& target() const { return target_; }
  /// Explicit nu, or |psi_1|^2 when only a target state was given.
  std::optional<RVector> target_distribution() const;
  const std::vector<double>& multiplier() const { return multiplier_; }
  /// mu(x) = |psi_0(x)|^2.
  RVector source_distribution() const { return source_.probabilities(); }

  TransportProblem with_variant(Variant v) const;

 private:
  Variant variant_;
  PureState source_;
  CostKernel kernel_;
  std::optional<PureState> target_;
  std::optional<std::vector<double>> target_distribution_;
  std::vector<double> multiplier_;
};

/// Time-ordered operators T_1..T_n on one grid, dt = 1/n.
class OpFamily {
 public:
  explicit OpFamily(std::vector<LinearOp> steps);

  const std::vector<LinearOp>& steps() const { return steps_; }
  std::size_t size() const { return steps_.size(); }
  double dt() const { return 1.0 / static_cast<double>(steps_.size()); }

 private:
  std::vector<LinearOp> steps_;
};

/// ||C T psi_0||^2 with C T the sqrt-costed operator.
double quantum_cost(const TransportProblem& problem, const LinearOp& op);
/// The same quantity written as sum_y |sum_x sqrt(c(x,y)) T(x,y) psi_0(x)|^2.
double quantum_cost_integral_form(const TransportProblem& problem, const LinearOp& op);
/// sum_x sum_y c(x,y) |T(x,y)|^2 mu(x). Kernel must be real.
double classical_cost(const TransportProblem& problem, const LinearOp& op);

/// Residual of the variant's constraint (see constraint_kind); state
/// residuals are returned as magnitudes |<y|T psi_0> - psi_1(y)|,
/// distribution residuals as nu(y) - |<y|T psi_0>|^2.
RVector constraint_residual(const TransportProblem& problem, const LinearOp& op);
RVector constraint_residual(const TransportProblem& problem, const LinearOp& op, ConstraintKind kind);

/// Cost part of the variant's functional, without the multiplier term.
double cost_term(const TransportProblem& problem, const LinearOp& op);
/// Full functional: cost term plus sum_y lambda(y) * residual(y) where the
/// variant carries a constraint.
double variant_objective(const TransportProblem& problem, const LinearOp& op);

struct OptimizeOptions {
  std::size_t budget = 20000;  // total objective evaluations over all restarts
  std::size_t restarts = 4;
  std::uint64_t seed = 0;
  std::optional<Sense> sense;  // sup-vs-inf override
  bool enforce_constraint = true;
  std::size_t penalty_stages = 5;
  double initial_penalty = 1.0;
  double penalty_growth = 10.0;
  opt::BfgsOptions local;
};

struct TraceEntry {
  std::size_t evaluation;  // global evaluation index
  double merit;            // best-so-far penalized objective (final-stage weight)
  double objective;        // cost term at that point
  double residual_norm;
};

struct OptimizeResult {
  LinearOp op;
  double objective;  // variant_objective of op
  double cost;       // cost_term of op
  double residual_norm;
  Sense sense;
  std::vector<TraceEntry> trace;
  std::size_t evaluations;
  bool budget_exhausted;
};

/// Search over unitaries exp(iH), H Hermitian with dim^2 real parameters.
/// Constraints are enforced by a quadratic penalty with weights |lambda(y)|
/// (1 when no multiplier is given), escalated over a fixed number of stages.
OptimizeResult optimize(const TransportProblem& problem, const OptimizeOptions& options);

struct PushForward {
  std::vector<RVector> distributions;  // mu_t for t = 1..n
  std::vector<double> masses;
  std::optional<double> final_mismatch;  // max |mu_1 - nu| when a target is given
};

/// mu_t(y) = sum_x |T_t(x,y)|^2 mu(x).
PushForward push_forward(const OpFamily& family, const RVector& mu,
                         const std::optional<RVector>& target = std::nullopt);

struct StepTrace {
  double trace;         // sum_y |T_t(x,y)|^2
  double costed_trace;  // sum_y |sqrt(c) T_t(x,y)|^2
};

std::vector<StepTrace> trace_conservation_check(const OpFamily& family, std::size_t site,
                                                const std::optional<CostKernel>& kernel = std::nullopt);

enum class DynamicalMode { quantum, classical, amplitude };
std::string to_string(DynamicalMode m);

struct DynamicalOptions {
  DynamicalMode mode = DynamicalMode::quantum;
  CostForm form = CostForm::sqrt_cost;
  bool check_boundary = false;  // report ||T_n psi_0 - psi_1||
};

struct DynamicalCost {
  double value;
  std::vector<double> per_step;
  std::optional<double> boundary_residual;
};

/// dt-weighted sum over the family of the per-step functional selected by
/// mode. quantum pairs with baseline/v1_distribution, classical with
/// classical_strict/v1_classical, amplitude with v5_*.
DynamicalCost dynamical_cost(const OpFamily& family, const TransportProblem& problem,
                             const DynamicalOptions& options = {});

}  // namespace qot::functionals
