#pragma once

// Finite-dimensional complex states and operators shared by the transport
// functionals, the walk and the automaton code.
//
// Operator convention: a LinearOp stores its matrix in the usual
// codomain x domain layout, M(y, x) = <y|T|x>, so applying it to a state is a
// plain matrix-vector product. The transport amplitude T(x, y) = <y|T|x> is
// therefore M(y, x); entry(x, y) hides the transpose.

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "qot/linalg.hpp"

namespace qot {

/// Integer site identifier, or an integer pair on 2-D grids.
struct SiteLabel {
  int first = 0;
  std::optional<int> second;

  auto operator<=>(const SiteLabel&) const = default;
};

class SiteGrid {
 public:
  explicit SiteGrid(std::vector<SiteLabel> labels);

  /// Sites 0, 1, ..., n-1.
  static SiteGrid range(std::size_t n);
  /// Sites lo, lo+1, ..., hi.
  static SiteGrid line(int lo, int hi);

  std::size_t size() const { return labels_.size(); }
  const std::vector<SiteLabel>& labels() const { return labels_; }
  std::optional<std::size_t> index_of(const SiteLabel& label) const;

  bool operator==(const SiteGrid&) const = default;

 private:
  std::vector<SiteLabel> labels_;
};

class PureState {
 public:
  /// With normalized = true the amplitudes must have unit 2-norm (1e-9).
  PureState(SiteGrid grid, CVector amplitudes, bool normalized = true);

  static PureState basis(const SiteGrid& grid, std::size_t index);

  const SiteGrid& grid() const { return grid_; }
  const CVector& amplitudes() const { return amps_; }
  Complex operator[](std::size_t i) const { return amps_(static_cast<Eigen::Index>(i)); }
  std::size_t dim() const { return grid_.size(); }
  bool normalized() const { return normalized_; }
  double norm_squared() const { return amps_.squaredNorm(); }
  /// |psi(x)|^2 for every site.
  RVector probabilities() const { return amps_.cwiseAbs2(); }

 private:
  SiteGrid grid_;
  CVector amps_;
  bool normalized_;
};

enum class OpContract { none, row_normalized, unitary };

class LinearOp {
 public:
  /// matrix is codomain x domain. The contract is verified at 1e-9.
  LinearOp(SiteGrid domain, SiteGrid codomain, CMatrix matrix, OpContract contract);
  /// Square operator on a single grid.
  LinearOp(SiteGrid grid, CMatrix matrix, OpContract contract);

  static LinearOp identity(const SiteGrid& grid);

  const SiteGrid& domain() const { return domain_; }
  const SiteGrid& codomain() const { return codomain_; }
  const CMatrix& matrix() const { return m_; }
  OpContract contract() const { return contract_; }
  /// T(x, y) = <y|T|x>.
  Complex entry(std::size_t x, std::size_t y) const {
    return m_(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x));
  }

  LinearOp adjoint() const;
  /// (*this) after (first): the result maps first.domain() to codomain().
  LinearOp compose(const LinearOp& first) const;

 private:
  SiteGrid domain_;
  SiteGrid codomain_;
  CMatrix m_;
  OpContract contract_;
};

/// Largest deviation of sum_y |T(x,y)|^2 from 1 over all x.
double row_normalization_defect(const CMatrix& m);
void check_contract(const CMatrix& m, OpContract contract);

enum class SqrtConvention { principal_sqrt, abs_sqrt };

/// How the kernel weights operator entries: by sqrt(c) or by c itself.
enum class CostForm { sqrt_cost, bare_cost };

class CostKernel {
 public:
  /// values(x, y) = c(x, y), shape domain.size() x codomain.size().
  /// bounded = true enforces 0 <= |c| <= 1.
  CostKernel(SiteGrid domain, SiteGrid codomain, CMatrix values,
             SqrtConvention convention = SqrtConvention::principal_sqrt, bool bounded = false);

  static CostKernel constant(const SiteGrid& grid, Complex value,
                             SqrtConvention convention = SqrtConvention::principal_sqrt);

  const SiteGrid& domain() const { return domain_; }
  const SiteGrid& codomain() const { return codomain_; }
  const CMatrix& values() const { return values_; }
  SqrtConvention convention() const { return convention_; }
  bool bounded() const { return bounded_; }
  bool is_real(double tol = 0.0) const;

  Complex value(std::size_t x, std::size_t y) const {
    return values_(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
  }
  /// sqrt(c(x,y)) under the kernel's convention.
  Complex root(std::size_t x, std::size_t y) const;
  /// sqrt(c) or c depending on form.
  Complex factor(std::size_t x, std::size_t y, CostForm form) const;

  /// The cost operator C with <y|C|x> = factor(x, y), codomain x domain.
  CMatrix as_operator(CostForm form = CostForm::sqrt_cost) const;

 private:
  SiteGrid domain_;
  SiteGrid codomain_;
  CMatrix values_;
  SqrtConvention convention_;
  bool bounded_;
};

class DensityOp {
 public:
  DensityOp(SiteGrid grid, CMatrix rho);
  static DensityOp from_state(const PureState& psi);

  const SiteGrid& grid() const { return grid_; }
  const CMatrix& matrix() const { return rho_; }
  double trace() const { return rho_.trace().real(); }

 private:
  SiteGrid grid_;
  CMatrix rho_;
};

/// Matrix-vector product. The result carries the normalized flag only when
/// the operator is unitary.
PureState apply(const LinearOp& op, const PureState& state);

/// Entry (x, y) becomes factor(c(x,y)) * T(x,y). Contract of the result is none.
LinearOp costed_op(const LinearOp& op, const CostKernel& kernel, CostForm form = CostForm::sqrt_cost);

/// |<target|mapped>|^2 / (||target||^2 ||mapped||^2). Throws DegenerateInputError
/// when either state has zero norm.
double fidelity(const PureState& target, const PureState& mapped);
inline double fidelity_distance(const PureState& target, const PureState& mapped) {
  return 1.0 - fidelity(target, mapped);
}

/// -sum lambda log lambda over eigenvalues above 1e-12 (natural log).
double von_neumann_entropy(const DensityOp& rho);

/// exp(iH) for the Hermitian H packed in d*d real parameters: d diagonal
/// entries followed by (re, im) of each strictly upper entry in row order.
CMatrix unitary_from_generator(const std::vector<double>& params, std::size_t dim);

std::string to_string(OpContract c);
std::string to_string(SqrtConvention c);
std::string to_string(CostForm f);

}  // namespace qot
