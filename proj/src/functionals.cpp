#include "qot/functionals.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "qot/errors.hpp"
#include "qot/parallel.hpp"
#include "qot/rng.hpp"

namespace qot::functionals {
namespace {

using Idx = Eigen::Index;

constexpr std::array<std::pair<Variant, const char*>, 12> kVariantNames{{
    {Variant::baseline, "baseline"},
    {Variant::classical_strict, "classical_strict"},
    {Variant::v1_distribution, "v1_distribution"},
    {Variant::v1_classical, "v1_classical"},
    {Variant::v2_fidelity, "v2_fidelity"},
    {Variant::v3_amplitude, "v3_amplitude"},
    {Variant::v3_integrated_initial, "v3_integrated_initial"},
    {Variant::v3_integrated_final, "v3_integrated_final"},
    {Variant::v4_quantum, "v4_quantum"},
    {Variant::v4_classical, "v4_classical"},
    {Variant::v5_amplitude, "v5_amplitude"},
    {Variant::v5_dynamical, "v5_dynamical"},
}};

void require_transport_op(const LinearOp& op) {
  if (op.contract() == OpContract::none) {
    check_contract(op.matrix(), OpContract::row_normalized);
  }
}

void require_shapes(const TransportProblem& problem, const LinearOp& op) {
  if (op.domain().size() != problem.source().dim()) throw DimensionError("operator domain does not match source state");
  if (op.codomain().size() != problem.kernel().codomain().size() ||
      op.domain().size() != problem.kernel().domain().size()) {
    throw DimensionError("operator grids do not match kernel grids");
  }
}

const PureState& require_target(const TransportProblem& problem) {
  if (!problem.target()) throw ContractError("variant " + to_string(problem.variant()) + " needs a target state");
  if (problem.target()->dim() != problem.kernel().codomain().size()) {
    throw DimensionError("target state does not live on the kernel codomain");
  }
  return *problem.target();
}

CVector costed_image(const TransportProblem& problem, const LinearOp& op, CostForm form = CostForm::sqrt_cost) {
  return costed_op(op, problem.kernel(), form).matrix() * problem.source().amplitudes();
}

// sum_x sum_y |f(c(x,y))|^2 |T(x,y)|^2 mu(x)
double decohered_cost(const LinearOp& op, const CostKernel& kernel, const RVector& mu, CostForm form) {
  double s = 0.0;
  for (std::size_t x = 0; x < op.domain().size(); ++x) {
    for (std::size_t y = 0; y < op.codomain().size(); ++y) {
      s += std::norm(kernel.factor(x, y, form)) * std::norm(op.entry(x, y)) * mu(static_cast<Idx>(x));
    }
  }
  return s;
}

double penalty_weight(const std::vector<double>& multiplier, std::size_t y) {
  return multiplier.empty() ? 1.0 : std::abs(multiplier[y]);
}

}  // namespace

std::string to_string(Variant v) {
  for (const auto& [variant, name] : kVariantNames) {
    if (variant == v) return name;
  }
  return "unknown";
}

Variant variant_from_string(const std::string& s) {
  for (const auto& [variant, name] : kVariantNames) {
    if (s == name) return variant;
  }
  throw ContractError("unknown variant '" + s + "'");
}

std::string to_string(Sense s) { return s == Sense::minimize ? "minimize" : "maximize"; }

Sense default_sense(Variant v) {
  switch (v) {
    case Variant::v3_amplitude:
    case Variant::v5_amplitude:
    case Variant::v5_dynamical:
      return Sense::maximize;
    default:
      return Sense::minimize;
  }
}

bool is_evaluation_only(Variant v) { return v == Variant::v4_quantum || v == Variant::v4_classical; }

bool needs_target_state(Variant v) {
  switch (v) {
    case Variant::v2_fidelity:
    case Variant::v3_amplitude:
    case Variant::v3_integrated_initial:
    case Variant::v4_quantum:
    case Variant::v4_classical:
    case Variant::v5_amplitude:
    case Variant::v5_dynamical:
      return true;
    default:
      return false;
  }
}

ConstraintKind constraint_kind(Variant v) {
  switch (v) {
    case Variant::baseline:
    case Variant::classical_strict:
      return ConstraintKind::state;
    case Variant::v1_distribution:
    case Variant::v1_classical:
      return ConstraintKind::distribution;
    default:
      return ConstraintKind::none;
  }
}

std::string to_string(DynamicalMode m) {
  switch (m) {
    case DynamicalMode::quantum: return "quantum";
    case DynamicalMode::classical: return "classical";
    case DynamicalMode::amplitude: return "amplitude";
  }
  return "quantum";
}

TransportProblem::TransportProblem(Variant variant, PureState source, CostKernel kernel,
                                   std::optional<PureState> target,
                                   std::optional<std::vector<double>> target_distribution,
                                   std::vector<double> multiplier)
    : variant_(variant),
      source_(std::move(source)),
      kernel_(std::move(kernel)),
      target_(std::move(target)),
      target_distribution_(std::move(target_distribution)),
      multiplier_(std::move(multiplier)) {
  const std::size_t ny = kernel_.codomain().size();
  if (kernel_.domain().size() != source_.dim()) throw DimensionError("kernel domain does not match source state");
  if (needs_target_state(variant_) && !target_) {
    throw ContractError("variant " + to_string(variant_) + " requires a target state");
  }
  if (constraint_kind(variant_) == ConstraintKind::distribution && !target_ && !target_distribution_) {
    throw ContractError("variant " + to_string(variant_) + " requires a target distribution or state");
  }
  if (target_ && target_->dim() != ny) throw DimensionError("target state does not match kernel codomain");
  if (target_distribution_) {
    if (target_distribution_->size() != ny) throw DimensionError("target distribution length mismatch");
    double total = 0.0;
    for (double v : *target_distribution_) {
      if (!(v >= 0.0)) throw ContractError("target distribution entries must be >= 0");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ContractError("target distribution must sum to 1");
  }
  if (!multiplier_.empty() && multiplier_.size() != ny) throw DimensionError("multiplier length mismatch");
}

std::optional<RVector> TransportProblem::target_distribution() const {
  if (target_distribution_) {
    return Eigen::Map<const RVector>(target_distribution_->data(), static_cast<Idx>(target_distribution_->size()));
  }
  if (target_) return target_->probabilities();
  return std::nullopt;
}

TransportProblem TransportProblem::with_variant(Variant v) const {
  return TransportProblem(v, source_, kernel_, target_, target_distribution_, multiplier_);
}

OpFamily::OpFamily(std::vector<LinearOp> steps) : steps_(std::move(steps)) {
  if (steps_.empty()) throw DegenerateInputError("operator family must have at least one step");
  const SiteGrid& grid = steps_.front().domain();
  for (const auto& op : steps_) {
    if (!(op.domain() == grid) || !(op.codomain() == grid)) {
      throw DimensionError("family steps must all act on the same grid");
    }
  }
}

double quantum_cost(const TransportProblem& problem, const LinearOp& op) {
  require_transport_op(op);
  require_shapes(problem, op);
  return costed_image(problem, op).squaredNorm();
}

double quantum_cost_integral_form(const TransportProblem& problem, const LinearOp& op) {
  require_transport_op(op);
  require_shapes(problem, op);
  const CostKernel& k = problem.kernel();
  double total = 0.0;
  for (std::size_t y = 0; y < op.codomain().size(); ++y) {
    Complex inner = 0.0;
    for (std::size_t x = 0; x < op.domain().size(); ++x) inner += k.root(x, y) * op.entry(x, y) * problem.source()[x];
    total += std::norm(inner);
  }
  return total;
}

double classical_cost(const TransportProblem& problem, const LinearOp& op) {
  if (!problem.kernel().is_real(1e-12)) {
    throw ContractError("classical cost needs a real kernel; complex c has no decohered convention");
  }
  require_transport_op(op);
  require_shapes(problem, op);
  const RVector mu = problem.source_distribution();
  double s = 0.0;
  for (std::size_t x = 0; x < op.domain().size(); ++x) {
    for (std::size_t y = 0; y < op.codomain().size(); ++y) {
      s += problem.kernel().value(x, y).real() * std::norm(op.entry(x, y)) * mu(static_cast<Idx>(x));
    }
  }
  return s;
}

RVector constraint_residual(const TransportProblem& problem, const LinearOp& op, ConstraintKind kind) {
  require_shapes(problem, op);
  const CVector mapped = op.matrix() * problem.source().amplitudes();
  switch (kind) {
    case ConstraintKind::state: {
      const PureState& target = require_target(problem);
      return (mapped - target.amplitudes()).cwiseAbs();
    }
    case ConstraintKind::distribution: {
      const auto nu = problem.target_distribution();
      if (!nu) throw ContractError("distribution residual needs a target distribution");
      return *nu - mapped.cwiseAbs2();
    }
    case ConstraintKind::none:
      break;
  }
  throw ContractError("variant " + to_string(problem.variant()) + " carries no constraint");
}

RVector constraint_residual(const TransportProblem& problem, const LinearOp& op) {
  return constraint_residual(problem, op, constraint_kind(problem.variant()));
}

double cost_term(const TransportProblem& problem, const LinearOp& op) {
  require_transport_op(op);
  require_shapes(problem, op);
  const CVector& psi0 = problem.source().amplitudes();
  switch (problem.variant()) {
    case Variant::baseline:
    case Variant::v1_distribution:
      return quantum_cost(problem, op);
    case Variant::classical_strict:
    case Variant::v1_classical:
      return classical_cost(problem, op);
    case Variant::v2_fidelity: {
      const PureState& target = require_target(problem);
      const double cost = costed_image(problem, op, CostForm::bare_cost).squaredNorm();
      const PureState mapped(op.codomain(), op.matrix() * psi0, false);
      return cost + fidelity_distance(target, mapped);
    }
    case Variant::v3_amplitude: {
      const PureState& target = require_target(problem);
      const CMatrix c = problem.kernel().as_operator();
      return std::norm(target.amplitudes().dot(c * (op.matrix() * psi0)));
    }
    case Variant::v3_integrated_initial: {
      // Resolution of identity over initial states: sum_k |<psi_1|C T|k>|^2.
      const PureState& target = require_target(problem);
      const CMatrix ct = problem.kernel().as_operator() * op.matrix();
      return (ct.adjoint() * target.amplitudes()).squaredNorm();
    }
    case Variant::v3_integrated_final: {
      const CMatrix c = problem.kernel().as_operator();
      return (c * (op.matrix() * psi0)).squaredNorm();
    }
    case Variant::v4_quantum: {
      const PureState& target = require_target(problem);
      const CVector image = problem.kernel().as_operator() * (op.matrix() * psi0);
      return (target.probabilities().array() * image.cwiseAbs2().array()).sum();
    }
    case Variant::v4_classical: {
      const PureState& target = require_target(problem);
      const RMatrix c2 = problem.kernel().as_operator().cwiseAbs2();
      const RVector mapped = (op.matrix() * psi0).cwiseAbs2();
      return target.probabilities().dot(c2 * mapped);
    }
    case Variant::v5_amplitude:
    case Variant::v5_dynamical: {
      const PureState& target = require_target(problem);
      return std::norm(target.amplitudes().dot(costed_image(problem, op)));
    }
  }
  throw ContractError("unknown variant");
}

double variant_objective(const TransportProblem& problem, const LinearOp& op) {
  double value = cost_term(problem, op);
  const ConstraintKind kind = constraint_kind(problem.variant());
  if (kind == ConstraintKind::none || problem.multiplier().empty()) return value;
  if (kind == ConstraintKind::state && !problem.target()) return value;
  const RVector r = constraint_residual(problem, op, kind);
  for (Idx y = 0; y < r.size(); ++y) value += problem.multiplier()[static_cast<std::size_t>(y)] * r(y);
  return value;
}

OptimizeResult optimize(const TransportProblem& problem, const OptimizeOptions& options) {
  if (is_evaluation_only(problem.variant())) {
    throw ContractError("variant " + to_string(problem.variant()) + " is evaluation-only");
  }
  const std::size_t dim = problem.source().dim();
  if (problem.kernel().codomain().size() != dim) throw DimensionError("optimizer needs a square transport problem");
  if (options.restarts == 0 || options.budget < options.restarts) throw ContractError("budget must cover every restart");

  const Sense sense = options.sense.value_or(default_sense(problem.variant()));
  const double sign = sense == Sense::minimize ? 1.0 : -1.0;
  ConstraintKind kind = options.enforce_constraint ? constraint_kind(problem.variant()) : ConstraintKind::none;
  if (kind == ConstraintKind::state && !problem.target()) kind = ConstraintKind::none;
  const std::size_t stages = kind == ConstraintKind::none ? 1 : std::max<std::size_t>(1, options.penalty_stages);
  const double final_penalty = options.initial_penalty * std::pow(options.penalty_growth, double(stages - 1));

  const SiteGrid domain = problem.source().grid();
  const SiteGrid codomain = problem.target() ? problem.target()->grid() : problem.kernel().codomain();

  struct Point {
    double cost;
    double residual_sq;  // weighted
    double residual_norm;
  };
  auto evaluate = [&](const opt::Params& p) -> Point {
    const LinearOp op(domain, codomain, unitary_from_generator(p, dim), OpContract::unitary);
    Point pt{cost_term(problem, op), 0.0, 0.0};
    if (kind != ConstraintKind::none) {
      const RVector r = constraint_residual(problem, op, kind);
      for (Idx y = 0; y < r.size(); ++y) pt.residual_sq += penalty_weight(problem.multiplier(), std::size_t(y)) * r(y) * r(y);
      pt.residual_norm = r.norm();
    }
    return pt;
  };

  struct RestartOutcome {
    opt::Params best;
    double merit = std::numeric_limits<double>::infinity();
    std::vector<TraceEntry> trace;  // local evaluation indices
    std::size_t used = 0;
    bool exhausted = false;
  };

  auto run_restart = [&](std::size_t r) -> RestartOutcome {
    const std::size_t share = options.budget / options.restarts + (r + 1 == options.restarts ? options.budget % options.restarts : 0);
    Rng rng(derive_seed(options.seed, "qot.optimize", r));
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    opt::Params x(dim * dim);
    for (double& v : x) v = angle(rng);

    RestartOutcome out;
    std::size_t used = 0;
    for (std::size_t s = 0; s < stages; ++s) {
      const double penalty = options.initial_penalty * std::pow(options.penalty_growth, double(s));
      const std::size_t stage_budget = (share - used) / (stages - s);
      opt::Budget budget(stage_budget);
      const std::size_t offset = used;
      auto stage_objective = [&](const opt::Params& p) {
        const Point pt = evaluate(p);
        const double merit = sign * pt.cost + final_penalty * pt.residual_sq;
        if (merit < out.merit) {
          out.merit = merit;
          out.best = p;
          out.trace.push_back({offset + budget.used(), merit, pt.cost, pt.residual_norm});
        }
        return sign * pt.cost + penalty * pt.residual_sq;
      };
      opt::minimize_bfgs(stage_objective, x, budget, options.local);
      used += budget.used();
      if (!budget.best_point().empty()) x = budget.best_point();
      if (budget.exhausted()) out.exhausted = true;
    }
    out.used = used;
    return out;
  };

  const auto outcomes = parallel_map(options.restarts, run_restart);

  std::size_t pick = 0;
  for (std::size_t r = 1; r < outcomes.size(); ++r) {
    if (outcomes[r].merit < outcomes[pick].merit) pick = r;
  }
  std::vector<TraceEntry> trace;
  std::size_t offset = 0;
  double best = std::numeric_limits<double>::infinity();
  bool exhausted = false;
  for (const auto& o : outcomes) {
    for (const TraceEntry& e : o.trace) {
      if (e.merit < best) {
        best = e.merit;
        trace.push_back({offset + e.evaluation, e.merit, e.objective, e.residual_norm});
      }
    }
    offset += o.used;
    exhausted = exhausted || o.exhausted;
  }
  if (outcomes[pick].best.empty()) throw DegenerateInputError("optimizer produced no finite evaluation");

  LinearOp op(domain, codomain, unitary_from_generator(outcomes[pick].best, dim), OpContract::unitary);
  const double cost = cost_term(problem, op);
  const double objective = variant_objective(problem, op);
  double residual_norm = 0.0;
  if (kind != ConstraintKind::none) residual_norm = constraint_residual(problem, op, kind).norm();
  return OptimizeResult{std::move(op), objective, cost, residual_norm, sense, std::move(trace), offset, exhausted};
}

PushForward push_forward(const OpFamily& family, const RVector& mu, const std::optional<RVector>& target) {
  const std::size_t n = family.steps().front().domain().size();
  if (static_cast<std::size_t>(mu.size()) != n) throw DimensionError("mu length does not match family grid");
  PushForward out;
  for (const LinearOp& op : family.steps()) {
    require_transport_op(op);
    // |T(x,y)|^2 is entry (y, x) of the stored matrix.
    RVector next = op.matrix().cwiseAbs2() * mu;
    out.masses.push_back(next.sum());
    out.distributions.push_back(std::move(next));
  }
  if (target) {
    if (target->size() != out.distributions.back().size()) throw DimensionError("target length mismatch");
    out.final_mismatch = (out.distributions.back() - *target).cwiseAbs().maxCoeff();
  }
  return out;
}

std::vector<StepTrace> trace_conservation_check(const OpFamily& family, std::size_t site,
                                                const std::optional<CostKernel>& kernel) {
  const std::size_t n = family.steps().front().domain().size();
  if (site >= n) throw DimensionError("site index out of range");
  std::vector<StepTrace> out;
  for (const LinearOp& op : family.steps()) {
    require_transport_op(op);
    StepTrace st{0.0, 0.0};
    for (std::size_t y = 0; y < n; ++y) {
      const double t2 = std::norm(op.entry(site, y));
      st.trace += t2;
      st.costed_trace += kernel ? std::norm(kernel->root(site, y)) * t2 : t2;
    }
    out.push_back(st);
  }
  return out;
}

DynamicalCost dynamical_cost(const OpFamily& family, const TransportProblem& problem, const DynamicalOptions& options) {
  const Variant v = problem.variant();
  bool ok = false;
  switch (options.mode) {
    case DynamicalMode::quantum: ok = v == Variant::baseline || v == Variant::v1_distribution; break;
    case DynamicalMode::classical: ok = v == Variant::classical_strict || v == Variant::v1_classical; break;
    case DynamicalMode::amplitude: ok = v == Variant::v5_amplitude || v == Variant::v5_dynamical; break;
  }
  if (!ok) {
    throw ContractError("dynamical mode " + to_string(options.mode) + " does not apply to variant " + to_string(v));
  }
  DynamicalCost out{0.0, {}, std::nullopt};
  const RVector mu = problem.source_distribution();
  for (const LinearOp& op : family.steps()) {
    require_transport_op(op);
    require_shapes(problem, op);
    double step = 0.0;
    switch (options.mode) {
      case DynamicalMode::quantum:
        step = costed_image(problem, op, options.form).squaredNorm();
        break;
      case DynamicalMode::classical:
        step = decohered_cost(op, problem.kernel(), mu, options.form);
        break;
      case DynamicalMode::amplitude:
        step = std::norm(require_target(problem).amplitudes().dot(costed_image(problem, op, options.form)));
        break;
    }
    out.per_step.push_back(step);
    out.value += family.dt() * step;
  }
  if (options.check_boundary) {
    const PureState& target = require_target(problem);
    out.boundary_residual = (family.steps().back().matrix() * problem.source().amplitudes() - target.amplitudes()).norm();
  }
  return out;
}

}  // namespace qot::functionals
