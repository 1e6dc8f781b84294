#include "qot/state_space.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "qot/errors.hpp"

namespace qot {

SiteGrid::SiteGrid(std::vector<SiteLabel> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw ContractError("site grid must have at least one site");
  std::set<SiteLabel> seen(labels_.begin(), labels_.end());
  if (seen.size() != labels_.size()) throw ContractError("site labels must be distinct");
}

SiteGrid SiteGrid::range(std::size_t n) {
  std::vector<SiteLabel> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i].first = static_cast<int>(i);
  return SiteGrid(std::move(labels));
}

SiteGrid SiteGrid::line(int lo, int hi) {
  if (hi < lo) throw ContractError("empty site range");
  std::vector<SiteLabel> labels;
  for (int x = lo; x <= hi; ++x) labels.push_back({x, std::nullopt});
  return SiteGrid(std::move(labels));
}

std::optional<std::size_t> SiteGrid::index_of(const SiteLabel& label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels_.begin());
}

PureState::PureState(SiteGrid grid, CVector amplitudes, bool normalized)
    : grid_(std::move(grid)), amps_(std::move(amplitudes)), normalized_(normalized) {
  if (static_cast<std::size_t>(amps_.size()) != grid_.size()) {
    throw DimensionError("amplitude vector length does not match grid size");
  }
  if (!amps_.allFinite()) throw ContractError("amplitudes must be finite");
  if (normalized_ && std::abs(amps_.squaredNorm() - 1.0) > kContractTol) {
    std::ostringstream msg;
    msg << "state flagged normalized has squared norm " << amps_.squaredNorm();
    throw ContractError(msg.str());
  }
}

PureState PureState::basis(const SiteGrid& grid, std::size_t index) {
  if (index >= grid.size()) throw DimensionError("basis index out of range");
  CVector v = CVector::Zero(static_cast<Eigen::Index>(grid.size()));
  v(static_cast<Eigen::Index>(index)) = 1.0;
  return PureState(grid, std::move(v), true);
}

double row_normalization_defect(const CMatrix& m) {
  // Column x of the stored matrix holds T(x, .).
  return (m.colwise().squaredNorm().array() - 1.0).abs().maxCoeff();
}

void check_contract(const CMatrix& m, OpContract contract) {
  switch (contract) {
    case OpContract::none:
      return;
    case OpContract::row_normalized: {
      const double d = row_normalization_defect(m);
      if (d > kContractTol) {
        std::ostringstream msg;
        msg << "row-normalization violated: max |sum_y |T(x,y)|^2 - 1| = " << d;
        throw ContractError(msg.str());
      }
      return;
    }
    case OpContract::unitary: {
      if (m.rows() != m.cols()) throw ContractError("unitary operator must be square");
      const double d = unitarity_defect(m);
      if (d > kContractTol) {
        std::ostringstream msg;
        msg << "unitarity violated: max |U^dagger U - I| = " << d;
        throw ContractError(msg.str());
      }
      return;
    }
  }
}

LinearOp::LinearOp(SiteGrid domain, SiteGrid codomain, CMatrix matrix, OpContract contract)
    : domain_(std::move(domain)), codomain_(std::move(codomain)), m_(std::move(matrix)), contract_(contract) {
  if (static_cast<std::size_t>(m_.cols()) != domain_.size() ||
      static_cast<std::size_t>(m_.rows()) != codomain_.size()) {
    throw DimensionError("operator matrix shape does not match its grids");
  }
  if (!m_.allFinite()) throw ContractError("operator entries must be finite");
  check_contract(m_, contract_);
}

LinearOp::LinearOp(SiteGrid grid, CMatrix matrix, OpContract contract)
    : LinearOp(grid, grid, std::move(matrix), contract) {}

LinearOp LinearOp::identity(const SiteGrid& grid) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  return LinearOp(grid, CMatrix::Identity(n, n), OpContract::unitary);
}

LinearOp LinearOp::adjoint() const {
  const OpContract c = contract_ == OpContract::unitary ? OpContract::unitary : OpContract::none;
  return LinearOp(codomain_, domain_, m_.adjoint(), c);
}

LinearOp LinearOp::compose(const LinearOp& first) const {
  if (!(first.codomain() == domain_)) throw DimensionError("composition grids do not chain");
  const bool unitary = contract_ == OpContract::unitary && first.contract() == OpContract::unitary;
  return LinearOp(first.domain(), codomain_, m_ * first.matrix(), unitary ? OpContract::unitary : OpContract::none);
}

CostKernel::CostKernel(SiteGrid domain, SiteGrid codomain, CMatrix values, SqrtConvention convention,
                       bool bounded)
    : domain_(std::move(domain)),
      codomain_(std::move(codomain)),
      values_(std::move(values)),
      convention_(convention),
      bounded_(bounded) {
  if (static_cast<std::size_t>(values_.rows()) != domain_.size() ||
      static_cast<std::size_t>(values_.cols()) != codomain_.size()) {
    throw DimensionError("kernel values must be domain x codomain");
  }
  if (!values_.allFinite()) throw ContractError("kernel values must be finite");
  if (bounded_ && values_.cwiseAbs().maxCoeff() > 1.0 + kContractTol) {
    throw ContractError("bounded kernel requires |c(x,y)| <= 1");
  }
}

CostKernel CostKernel::constant(const SiteGrid& grid, Complex value, SqrtConvention convention) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  return CostKernel(grid, grid, CMatrix::Constant(n, n, value), convention);
}

bool CostKernel::is_real(double tol) const { return values_.imag().cwiseAbs().maxCoeff() <= tol; }

Complex CostKernel::root(std::size_t x, std::size_t y) const {
  const Complex c = value(x, y);
  if (convention_ == SqrtConvention::abs_sqrt) return {std::sqrt(std::abs(c)), 0.0};
  return std::sqrt(c);
}

Complex CostKernel::factor(std::size_t x, std::size_t y, CostForm form) const {
  return form == CostForm::sqrt_cost ? root(x, y) : value(x, y);
}

CMatrix CostKernel::as_operator(CostForm form) const {
  CMatrix c(values_.cols(), values_.rows());
  for (std::size_t x = 0; x < domain_.size(); ++x) {
    for (std::size_t y = 0; y < codomain_.size(); ++y) {
      c(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x)) = factor(x, y, form);
    }
  }
  return c;
}

DensityOp::DensityOp(SiteGrid grid, CMatrix rho) : grid_(std::move(grid)), rho_(std::move(rho)) {
  if (rho_.rows() != rho_.cols() || static_cast<std::size_t>(rho_.rows()) != grid_.size()) {
    throw DimensionError("density matrix must be square over its grid");
  }
  if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > kContractTol) {
    throw ContractError("density matrix must be Hermitian");
  }
}

DensityOp DensityOp::from_state(const PureState& psi) {
  return DensityOp(psi.grid(), psi.amplitudes() * psi.amplitudes().adjoint());
}

PureState apply(const LinearOp& op, const PureState& state) {
  if (!(op.domain() == state.grid())) throw DimensionError("state grid does not match operator domain");
  const bool keeps_norm = op.contract() == OpContract::unitary && state.normalized();
  CVector out = op.matrix() * state.amplitudes();
  if (keeps_norm) out /= std::sqrt(out.squaredNorm());  // absorb rounding only
  return PureState(op.codomain(), std::move(out), keeps_norm);
}

LinearOp costed_op(const LinearOp& op, const CostKernel& kernel, CostForm form) {
  if (kernel.domain().size() != op.domain().size() || kernel.codomain().size() != op.codomain().size()) {
    throw DimensionError("kernel grids do not match operator grids");
  }
  CMatrix m = op.matrix();
  for (std::size_t x = 0; x < op.domain().size(); ++x) {
    for (std::size_t y = 0; y < op.codomain().size(); ++y) {
      m(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x)) *= kernel.factor(x, y, form);
    }
  }
  return LinearOp(op.domain(), op.codomain(), std::move(m), OpContract::none);
}

double fidelity(const PureState& target, const PureState& mapped) {
  if (target.dim() != mapped.dim()) throw DimensionError("fidelity of states on different grids");
  const double nm = mapped.norm_squared();
  const double nt = target.norm_squared();
  if (nm <= 0.0 || nt <= 0.0) throw DegenerateInputError("fidelity of a zero-norm state");
  const double f = std::norm(target.amplitudes().dot(mapped.amplitudes())) / (nm * nt);
  return std::clamp(f, 0.0, 1.0);
}

double von_neumann_entropy(const DensityOp& rho) {
  if (std::abs(rho.trace() - 1.0) > 1e-6) throw ContractError("density operator must have unit trace");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho.matrix(), Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double lambda = es.eigenvalues()(i);
    if (lambda < -1e-6) {
      std::ostringstream msg;
      msg << "invalid density operator: eigenvalue " << lambda;
      throw ContractError(msg.str());
    }
    if (lambda > 1e-12) s -= lambda * std::log(lambda);
  }
  return s;
}

CMatrix unitary_from_generator(const std::vector<double>& params, std::size_t dim) {
  if (params.size() != dim * dim) throw DimensionError("generator needs dim^2 parameters");
  const auto n = static_cast<Eigen::Index>(dim);
  CMatrix h = CMatrix::Zero(n, n);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < n; ++i) h(i, i) = params[k++];
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Complex v(params[k], params[k + 1]);
      k += 2;
      h(i, j) = v;
      h(j, i) = std::conj(v);
    }
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  const CVector phases = (Complex(0.0, 1.0) * es.eigenvalues().cast<Complex>()).array().exp();
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

std::string to_string(OpContract c) {
  switch (c) {
    case OpContract::none: return "none";
    case OpContract::row_normalized: return "row_normalized";
    case OpContract::unitary: return "unitary";
  }
  return "none";
}

std::string to_string(SqrtConvention c) {
  return c == SqrtConvention::principal_sqrt ? "principal_sqrt" : "abs_sqrt";
}

std::string to_string(CostForm f) { return f == CostForm::sqrt_cost ? "sqrt" : "bare"; }

}  // namespace qot
